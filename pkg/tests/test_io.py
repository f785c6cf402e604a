import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from varpot.errors import (
    BadTimestamp,
    EmptyLog,
    GapInLog,
    LogFormatError,
    NonAlternating,
    OverlapInLog,
    ReportFormatError,
    ZeroMu,
)
from varpot.experiment import SweepRow, run_experiment, sweep_rows
from varpot.io import (
    REPORT_SCHEMA,
    normalize_report,
    parse_event_log,
    parse_report,
    parse_sweep,
    table_row,
    write_event_log,
    write_report,
    write_sweep,
)
from varpot.model import (
    EffectEstimate,
    ExperimentReport,
    Interval,
    SeedEcho,
    SimConfig,
    State,
    TTestTriplet,
    UpDownSequence,
    Verdict,
    normalized_view,
)
from varpot.sequences import gen_iid, gen_periodic_maintenance


def hand_report(mu=2.0, ct0=13.36, verdict=Verdict.SIGNIFICANT_POSITIVE):
    effect = EffectEstimate(
        ct0_bar=ct0, sigma0=0.5, m=20, mu=mu, sigma=0.1, n=20,
        ct0_interval=Interval(ct0 - 0.2, ct0 + 0.2),
        i95=Interval(mu - 0.2, mu + 0.2),
        i95_inner=Interval(mu - 0.1, mu + 0.1),
        i95_outer=Interval(mu - 0.3, mu + 0.3),
    )
    return ExperimentReport(
        effect=effect, verdict=verdict, triplet=TTestTriplet(0, 1, 19),
        normalized=normalized_view(effect), runs_used=420, config=SimConfig(),
        seeds=SeedEcho(0, "pcg64", "ab"), mean_interarrival=1.3,
    )


@pytest.fixture(scope="module")
def real_report():
    s0 = gen_periodic_maintenance(168, 8, "exp:0.5", 0.02, 2000, 0)
    return run_experiment(s0, SimConfig(min_sequences=5, min_scenarios=5, max_budget=200), 0)


# -- event logs -------------------------------------------------------------


def test_parse_log_example():
    text = "state,start,end\nUP,0,3\nDOWN,3,5\nUP,5,10\n"
    seq = parse_event_log(text)
    assert seq == UpDownSequence(State.UP, (3.0, 2.0, 5.0))
    assert seq.availability == 0.8


def test_parse_log_iso_timestamps():
    text = ("state,start,end\n"
            "DOWN,2024-01-01T00:00:00Z,2024-01-01T01:30:00Z\n"
            "UP,2024-01-01T01:30:00Z,2024-01-02T01:30:00Z\n")
    seq = parse_event_log(text)
    assert seq.initial_state is State.DOWN
    assert seq.durations == (1.5, 24.0)


def test_parse_log_header_case_and_blank_lines():
    seq = parse_event_log("State, Start, End\nup,0,1\n\ndown,1,2\n")
    assert seq.durations == (1.0, 1.0)


@pytest.mark.parametrize("text, exc", [
    ("state,start,end\n", EmptyLog),
    ("state,start,end\nUP,0,3\nDOWN,4,5\n", GapInLog),
    ("state,start,end\nUP,0,3\nDOWN,2,5\n", OverlapInLog),
    ("state,start,end\nUP,0,3\nUP,3,5\n", NonAlternating),
    ("state,start,end\nUP,0,yesterday\n", BadTimestamp),
    ("state,start,end\nUP,3,3\n", BadTimestamp),
    ("state,start,end\nUP,0,2024-01-01T00:00:00\n", BadTimestamp),
    ("state,begin,end\nUP,0,3\n", LogFormatError),
    ("state,start,end\nIDLE,0,3\n", LogFormatError),
    ("state,start,end\nUP,0\n", LogFormatError),
    ("", LogFormatError),
])
def test_parse_log_errors(text, exc):
    with pytest.raises(exc):
        parse_event_log(text)


def test_coalesce_merges_same_state_rows():
    seq = parse_event_log("state,start,end\nUP,0,3\nUP,3,5\nDOWN,5,6\n", coalesce=True)
    assert seq.durations == (5.0, 1.0)


def test_event_log_round_trip_example():
    seq = gen_periodic_maintenance(168, 8, "exp:0.5", 0.02, 8760, 2)
    text = write_event_log(seq)
    assert text.splitlines()[0] == "state,start,end"
    back = parse_event_log(text)
    assert back.initial_state is seq.initial_state
    assert back.durations == pytest.approx(seq.durations, abs=1e-9)
    assert back.total_duration == pytest.approx(8760.0, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.floats(1, 5000))
def test_event_log_round_trip_is_exact_on_generated_sequences(seed, horizon):
    # generated spans sit on a binary grid, so cumulative times are exact
    seq = gen_iid("exp:10", "lognorm:1:1", horizon, seed)
    assert parse_event_log(write_event_log(seq)) == seq


# -- reports ----------------------------------------------------------------


def test_normalize_worked_example():
    r = normalize_report(hand_report(mu=2.0, ct0=13.36))
    assert r.effect.mu == 100.0
    assert r.normalized.ct0 == pytest.approx(668.0, rel=1e-12)
    assert r.normalized.delta_pct == pytest.approx(568.0, rel=1e-12)
    assert r.effect.ct0_bar == pytest.approx(668.0, rel=1e-12)
    assert r.verdict is Verdict.SIGNIFICANT_POSITIVE
    assert r.units == "relative"


def test_normalize_is_idempotent(real_report):
    once = normalize_report(real_report)
    assert normalize_report(once) == once
    assert once.verdict is real_report.verdict
    assert once.normalized.ct0 == pytest.approx(real_report.normalized.ct0, rel=1e-12)


def test_normalize_rejects_zero_mu():
    r = hand_report()
    bad = replace(r, effect=replace(r.effect, mu=0.0))
    with pytest.raises(ZeroMu):
        normalize_report(bad)


def test_i95_star_switches_band():
    outside = hand_report(mu=2.0, ct0=13.36).normalized
    assert outside.i95_star == pytest.approx((85.0, 115.0))
    inside = hand_report(mu=2.0, ct0=2.05, verdict=Verdict.NOT_SIGNIFICANT).normalized
    assert inside.i95_star == pytest.approx((95.0, 105.0))


def test_report_round_trip(real_report):
    text = write_report(real_report)
    doc = json.loads(text)
    assert doc["schema"] == REPORT_SCHEMA
    assert doc["seeds"]["scenario_fingerprint"] == real_report.seeds.scenario_fingerprint
    assert parse_report(text) == real_report
    norm = normalize_report(real_report)
    assert parse_report(write_report(norm)) == norm


@pytest.mark.parametrize("text", [
    "not json",
    '{"schema": "other/9"}',
    json.dumps({"schema": REPORT_SCHEMA, "verdict": "SIGNIFICANT_POSITIVE"}),
])
def test_report_parse_errors(text):
    with pytest.raises(ReportFormatError):
        parse_report(text)


def test_table_row_example():
    row = table_row(normalize_report(hand_report()), "S1")
    cells = row.split("\t")
    assert cells[:3] == ["S1", "668", "+568%"]
    assert cells[3] == "85-115"
    assert cells[5:8] == ["YES", "(0-1-19)", "SIGNIFICANT_POSITIVE"]
    assert cells[8] == "runs=420"


@pytest.mark.parametrize("verdict, col", [
    (Verdict.SIGNIFICANT_NEGATIVE, "YES"), (Verdict.NOT_SIGNIFICANT, "NO"), (Verdict.UNDECIDED, "NA"),
])
def test_table_row_significance_column(verdict, col):
    assert table_row(hand_report(verdict=verdict)).split("\t")[5] == col


# -- sweeps -----------------------------------------------------------------


def _row(u):
    return SweepRow(u, 10 * u, 9 * u, 11 * u, 12 * u, 11.5 * u, 12.5 * u, Verdict.SIGNIFICANT_POSITIVE)


def test_sweep_csv_shape():
    text = write_sweep([_row(k / 10) for k in range(1, 10)])
    lines = text.splitlines()
    assert len(lines) == 10
    assert lines[0] == "utilization,mu,i95_lo,i95_hi,ct0,ct0_lo,ct0_hi,verdict"


def test_empty_sweep_is_header_only():
    assert write_sweep([]).splitlines() == ["utilization,mu,i95_lo,i95_hi,ct0,ct0_lo,ct0_hi,verdict"]
    assert parse_sweep(write_sweep([])) == []


def test_sweep_round_trip(real_report):
    rows = [_row(k / 10) for k in range(1, 10)] + sweep_rows([real_report])
    assert parse_sweep(write_sweep(rows)) == rows


def test_sweep_parse_rejects_bad_header():
    with pytest.raises(ReportFormatError):
        parse_sweep("u,mu\n0.1,1\n")
