"""Event-log ingestion, report/sweep serialization and mu = 100 normalization.

Event logs are CSV (comma separated, UTF-8) with the header
``state,start,end``.  ``state`` is ``UP`` or ``DOWN``; ``start``/``end`` are
either decimal hours or ISO-8601 timestamps (not mixed).  Rows must be in
chronological order, contiguous and alternating.

Reports are JSON documents tagged with ``REPORT_SCHEMA``.  Sweeps are CSV
with the columns in ``SWEEP_HEADER``.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import asdict, replace
from datetime import datetime

from .errors import (
    BadTimestamp,
    EmptyLog,
    GapInLog,
    LogFormatError,
    NonAlternating,
    OverlapInLog,
    ReportFormatError,
    ZeroMu,
)
from .experiment import SweepRow
from .model import (
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
    NormalizedView,
)

REPORT_SCHEMA = "varpot.report/1"
LOG_HEADER = ("state", "start", "end")
SWEEP_HEADER = ("utilization", "mu", "i95_lo", "i95_hi", "ct0", "ct0_lo", "ct0_hi", "verdict")


# ---------------------------------------------------------------------------
# event logs


def _parse_time(text: str, lineno: int):
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text[:-1] + "+00:00" if text.endswith("Z") else text)
    except ValueError:
        raise BadTimestamp(f"line {lineno}: cannot parse timestamp {text!r}") from None


def _hours(a, b, lineno) -> float:
    """Hours from ``a`` to ``b``."""
    try:
        if isinstance(a, float):
            return b - a
        return (b - a).total_seconds() / 3600.0
    except TypeError:
        raise BadTimestamp(f"line {lineno}: mixed timestamp kinds") from None


def parse_event_log(text, coalesce: bool = False) -> UpDownSequence:
    """Parse an up/down event log into a sequence.

    ``text`` is a string or a text stream.  Consecutive rows with the same
    state raise :class:`NonAlternating` unless ``coalesce`` is set, in which
    case they are merged.
    """
    stream = _io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip().lower() for h in header) != LOG_HEADER:
        raise LogFormatError(f"expected header {','.join(LOG_HEADER)!r}, got {header!r}")

    states: list[State] = []
    durations: list[float] = []
    prev_end = None
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise LogFormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        name = row[0].strip().upper()
        if name not in ("UP", "DOWN"):
            raise LogFormatError(f"line {lineno}: unknown state {row[0]!r}")
        state = State(name)
        start, end = _parse_time(row[1], lineno), _parse_time(row[2], lineno)
        dur = _hours(start, end, lineno)
        if not dur > 0:
            raise BadTimestamp(f"line {lineno}: end must be after start")
        if prev_end is not None:
            step = _hours(prev_end, start, lineno)
            if step > 0:
                raise GapInLog(f"line {lineno}: starts {step!r} h after the previous row ends")
            if step < 0:
                raise OverlapInLog(f"line {lineno}: starts {-step!r} h before the previous row ends")
        if states and states[-1] is state:
            if not coalesce:
                raise NonAlternating(f"line {lineno}: two consecutive {state.value} rows")
            durations[-1] += dur
        else:
            states.append(state)
            durations.append(dur)
        prev_end = end
    if not durations:
        raise EmptyLog("event log has no rows")
    return UpDownSequence(states[0], tuple(durations))


def write_event_log(seq: UpDownSequence) -> str:
    """Serialize ``seq`` as an event log with decimal-hour times starting at 0."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_HEADER)
    t = 0.0
    for k, d in enumerate(seq.durations):
        end = t + d
        w.writerow((seq.state_at(k).value, repr(t), repr(end)))
        t = end
    return buf.getvalue()


# ---------------------------------------------------------------------------
# reports


def normalize_report(report: ExperimentReport) -> ExperimentReport:
    """Rescale every cycle-time figure so that mu becomes exactly 100.

    The verdict is carried over unchanged; applying this twice is the same
    as applying it once.
    """
    mu = report.effect.mu
    if not mu > 0:
        raise ZeroMu(f"cannot normalize with mu = {mu!r}")
    if mu == 100.0:
        effect = report.effect
    else:
        effect = replace(report.effect.scaled(100.0 / mu), mu=100.0)
    return replace(report, effect=effect, normalized=normalized_view(effect), units="relative")


def _interval(v) -> Interval:
    lo, hi = v
    return Interval(float(lo), float(hi))


def report_to_dict(report: ExperimentReport) -> dict:
    e = report.effect
    return {
        "schema": REPORT_SCHEMA,
        "verdict": report.verdict.value,
        "units": report.units,
        "runs_used": report.runs_used,
        "mean_interarrival": report.mean_interarrival,
        "effect": {
            "ct0_bar": e.ct0_bar,
            "sigma0": e.sigma0,
            "m": e.m,
            "mu": e.mu,
            "sigma": e.sigma,
            "n": e.n,
            "ct0_interval": list(e.ct0_interval),
            "i95": list(e.i95),
            "i95_inner": list(e.i95_inner),
            "i95_outer": list(e.i95_outer),
        },
        "triplet": asdict(report.triplet),
        "normalized": {
            "ct0": report.normalized.ct0,
            "delta_pct": report.normalized.delta_pct,
            "i95_star": list(report.normalized.i95_star),
            "ct0_interval": list(report.normalized.ct0_interval),
        },
        "config": asdict(report.config),
        "seeds": asdict(report.seeds),
    }


def report_from_dict(doc: dict) -> ExperimentReport:
    if doc.get("schema") != REPORT_SCHEMA:
        raise ReportFormatError(f"unsupported report schema {doc.get('schema')!r}")
    try:
        e = doc["effect"]
        effect = EffectEstimate(
            ct0_bar=float(e["ct0_bar"]),
            sigma0=float(e["sigma0"]),
            m=int(e["m"]),
            mu=float(e["mu"]),
            sigma=float(e["sigma"]),
            n=int(e["n"]),
            ct0_interval=_interval(e["ct0_interval"]),
            i95=_interval(e["i95"]),
            i95_inner=_interval(e["i95_inner"]),
            i95_outer=_interval(e["i95_outer"]),
        )
        nv = doc["normalized"]
        return ExperimentReport(
            effect=effect,
            verdict=Verdict(doc["verdict"]),
            triplet=TTestTriplet(**doc["triplet"]),
            normalized=NormalizedView(
                ct0=float(nv["ct0"]),
                delta_pct=float(nv["delta_pct"]),
                i95_star=_interval(nv["i95_star"]),
                ct0_interval=_interval(nv["ct0_interval"]),
            ),
            runs_used=int(doc["runs_used"]),
            config=SimConfig(**doc["config"]),
            seeds=SeedEcho(**doc["seeds"]),
            mean_interarrival=float(doc["mean_interarrival"]),
            units=doc["units"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportFormatError(f"malformed report: {exc}") from exc


def write_report(report: ExperimentReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def parse_report(text: str) -> ExperimentReport:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"report is not valid JSON: {exc}") from exc
    return report_from_dict(doc)


_SIG_COLUMN = {
    Verdict.SIGNIFICANT_NEGATIVE: "YES",
    Verdict.SIGNIFICANT_POSITIVE: "YES",
    Verdict.NOT_SIGNIFICANT: "NO",
    Verdict.UNDECIDED: "NA",
}


def table_row(report: ExperimentReport, label: str = "S0") -> str:
    """One results-table line: label, ct0, delta, I95*, [ct0], s, triplet, verdict, runs."""
    nv = report.normalized
    return (
        f"{label}\t{nv.ct0:.0f}\t{nv.delta_pct:+.0f}%\t"
        f"{nv.i95_star.lo:.0f}-{nv.i95_star.hi:.0f}\t"
        f"{nv.ct0_interval.lo:.0f}-{nv.ct0_interval.hi:.0f}\t"
        f"{_SIG_COLUMN[report.verdict]}\t{report.triplet}\t"
        f"{report.verdict.value}\truns={report.runs_used}"
    )


# ---------------------------------------------------------------------------
# sweeps


def write_sweep(rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([repr(float(getattr(r, c))) for c in SWEEP_HEADER[:-1]] + [r.verdict.value])
    return buf.getvalue()


def parse_sweep(text: str) -> list[SweepRow]:
    reader = csv.reader(_io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != SWEEP_HEADER:
        raise ReportFormatError(f"expected sweep header {','.join(SWEEP_HEADER)!r}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        vals = [float(x) for x in rec[:-1]]
        rows.append(SweepRow(*vals, verdict=Verdict(rec[-1])))
    return rows
