import math
from dataclasses import replace

import numpy as np
import pytest

from varpot.errors import InvalidConfig, ZeroAvailability
from varpot.experiment import (
    Action,
    BudgetState,
    GridExperiment,
    interarrival_for_utilization,
    next_budget_action,
    rate_seed,
    run_experiment,
    sweep,
    sweep_rows,
)
from varpot.model import SimConfig, State, UpDownSequence, Verdict
from varpot.sequences import gen_autocorrelated, gen_iid, gen_periodic_maintenance
from varpot.stats import effect_of_s0, iid_band


def with_moments(n, mean, std, seed=0):
    z = np.random.default_rng(seed).standard_normal(n)
    z = (z - z.mean()) / z.std(ddof=1)
    return mean + std * z


@pytest.fixture(scope="module")
def small_s0():
    return gen_iid("exp:20", "lognorm:1:1.2", 1500, 4)


SMALL = SimConfig(min_sequences=6, min_scenarios=5, max_budget=400)


# -- utilization ------------------------------------------------------------


def test_interarrival_uptime_basis():
    seq = UpDownSequence(State.UP, (9.0, 1.0))
    assert interarrival_for_utilization(0.8, seq, 1.0) == pytest.approx(1 / (0.8 * 0.9), rel=1e-15)
    assert interarrival_for_utilization(0.8, seq, 1.0) == pytest.approx(1.38889, abs=1e-5)


def test_interarrival_all_up_and_wallclock():
    up = UpDownSequence(State.UP, (10.0,))
    assert interarrival_for_utilization(0.8, up, 1.0) == 1.25
    seq = UpDownSequence(State.UP, (9.0, 1.0))
    assert interarrival_for_utilization(0.8, seq, 1.0, basis="wallclock") == 1.25
    assert interarrival_for_utilization(0.5, seq, 3.0, basis="wallclock") == 6.0


def test_interarrival_light_load_limit():
    up = UpDownSequence(State.UP, (10.0,))
    assert interarrival_for_utilization(0.5, up, 1.0) == 2.0


def test_interarrival_errors():
    with pytest.raises(ZeroAvailability):
        interarrival_for_utilization(0.5, UpDownSequence(State.DOWN, (10.0,)), 1.0)
    for u in (0.0, 1.0, -0.1, 1.2):
        with pytest.raises(InvalidConfig):
            interarrival_for_utilization(u, UpDownSequence(State.UP, (10.0,)), 1.0)
    with pytest.raises(InvalidConfig):
        interarrival_for_utilization(0.5, UpDownSequence(State.UP, (10.0,)), 1.0, basis="hourly")


# -- budget controller ------------------------------------------------------


def test_budget_worked_example():
    n = m = 20
    sigma = sigma0 = 10.0
    # per-run gains from the closed forms
    scen = 2 * 2 * sigma0 * (1 / math.sqrt(m) - 1 / math.sqrt(m + 1)) / (n + 1)
    e = lambda k: sigma / math.sqrt(k) + 2 * sigma / math.sqrt(2 * (k - 1))
    seq = 2 * (e(n) - e(n + 1)) / m
    assert scen == pytest.approx(0.01026, abs=1e-5)
    assert seq == pytest.approx(0.01360, abs=1e-5)
    assert next_budget_action(BudgetState(n, m, 441, 10_000), sigma, sigma0) is Action.ADD_SEQUENCE


def _band_gap(n, sigma):
    """Total uncertainty area of the i.i.d. band, from actual data."""
    _, _, _, inner, outer = iid_band(with_moments(n, 100.0, sigma))
    return outer.width - inner.width


def _ct0_width(m, sigma0):
    return effect_of_s0(with_moments(m, 100.0, sigma0))[2].width


@pytest.mark.parametrize("n, m, sigma, sigma0", [
    (20, 20, 10.0, 10.0), (20, 20, 2.0, 10.0), (40, 20, 10.0, 30.0),
    (25, 60, 5.0, 1.0), (100, 30, 1.0, 8.0), (20, 200, 3.0, 30.0),
])
def test_budget_matches_band_widths(n, m, sigma, sigma0):
    # recompute the per-run shrinkage from band widths of real samples
    gain_seq = (_band_gap(n, sigma) - _band_gap(n + 1, sigma)) / 2 / m
    gain_scen = (_ct0_width(m, sigma0) - _ct0_width(m + 1, sigma0)) / (n + 1)
    assert abs(gain_seq - gain_scen) > 1e-9 * max(gain_seq, gain_scen)
    want = Action.ADD_SEQUENCE if gain_seq >= gain_scen else Action.ADD_SCENARIO
    assert next_budget_action(BudgetState(n, m, 0, 10**9), sigma, sigma0) is want


def test_budget_zero_sigma0_prefers_sequences():
    assert next_budget_action(BudgetState(20, 20, 441, 10_000), 5.0, 0.0) is Action.ADD_SEQUENCE


def test_budget_falls_back_to_the_affordable_action():
    # ADD_SEQUENCE would be picked but costs m = 50 > 30 remaining; a scenario costs 21
    s = BudgetState(20, 50, 970, 1000)
    assert next_budget_action(BudgetState(20, 50, 0, 10**6), 10.0, 1.0) is Action.ADD_SEQUENCE
    assert next_budget_action(s, 10.0, 1.0) is Action.ADD_SCENARIO


def test_budget_stop_when_nothing_fits():
    assert next_budget_action(BudgetState(20, 20, 981, 1000), 10.0, 10.0) is Action.STOP


# -- the full procedure -----------------------------------------------------


def test_default_grid_size(small_s0):
    r = run_experiment(small_s0, SimConfig(), 1)
    assert r.effect.n >= 20 and r.effect.m >= 20
    assert r.runs_used >= 400
    assert r.runs_used == (r.effect.n + 1) * r.effect.m
    assert r.runs_used <= 10_000


def test_grid_is_complete_and_finite(small_s0):
    exp = GridExperiment(small_s0, SMALL, 3)
    exp.initialize()
    exp.add_scenario()
    exp.add_sequence()
    assert exp.grid.shape == (SMALL.min_sequences + 2, SMALL.min_scenarios + 1)
    assert np.all(np.isfinite(exp.grid)) and np.all(exp.grid >= SMALL.process_time)


def test_growing_the_grid_keeps_existing_cells(small_s0):
    a = GridExperiment(small_s0, SMALL, 3)
    a.initialize()
    before = a.grid.copy()
    a.add_sequence()
    a.add_scenario()
    np.testing.assert_array_equal(a.grid[: before.shape[0], : before.shape[1]], before)


def test_common_random_numbers(small_s0):
    exp = GridExperiment(small_s0, SMALL, 3)
    exp.initialize()
    # each column is one arrival scenario shared by all rows
    assert len({sc.fingerprint for sc in exp.scenarios}) == exp.m
    for j, sc in enumerate(exp.scenarios):
        assert sc.scenario_id == j
    r = exp.report(Verdict.UNDECIDED)
    assert r.seeds.scenario_fingerprint == exp.scenario_fingerprint()
    other = GridExperiment(small_s0, SMALL, 4)
    other.initialize()
    assert other.scenario_fingerprint() != exp.scenario_fingerprint()


def test_determinism_and_jobs_invariance(small_s0):
    a = run_experiment(small_s0, SMALL, 7)
    b = run_experiment(small_s0, SMALL, 7)
    c = run_experiment(small_s0, SMALL, 7, jobs=2)
    assert a == b == c
    assert run_experiment(small_s0, SMALL, 8) != a


def test_progress_callback(small_s0):
    seen = []
    run_experiment(small_s0, SMALL, 7, progress=lambda done, budget: seen.append((done, budget)))
    assert seen[0] == ((SMALL.min_sequences + 1) * SMALL.min_scenarios, SMALL.max_budget)
    assert [d for d, _ in seen] == sorted(d for d, _ in seen)


def test_budget_exhaustion_yields_undecided():
    # an i.i.d. sequence with a tiny budget cannot leave the grey zone in time
    s0 = gen_iid("exp:50", "lognorm:2:1", 3000, 0)
    cfg = SimConfig(min_sequences=3, min_scenarios=3, max_budget=12)
    undecided = 0
    for seed in range(6):
        r = run_experiment(s0, cfg, seed)
        assert r.runs_used <= cfg.max_budget
        undecided += r.verdict is Verdict.UNDECIDED
    assert undecided > 0


def test_config_rejects_budget_below_minimum_grid():
    with pytest.raises(InvalidConfig):
        SimConfig(min_sequences=20, min_scenarios=20, max_budget=419)


@pytest.mark.slow
@pytest.mark.parametrize("s0, expected", [
    (gen_autocorrelated("exp:20", "lognorm:1:1.2", 8, 8760, 1), Verdict.SIGNIFICANT_POSITIVE),
    (gen_periodic_maintenance(168, 8, "exp:0.5", 0.02, 8760, 1), Verdict.SIGNIFICANT_NEGATIVE),
])
def test_significant_verdict_is_stable_at_larger_grid(s0, expected):
    base = run_experiment(s0, SimConfig(), 2)
    big = run_experiment(s0, SimConfig(min_sequences=30, min_scenarios=30), 2)
    assert base.verdict is expected
    assert big.verdict is expected


# -- sweeps -----------------------------------------------------------------


def test_sweep_single_rate_matches_run_experiment(small_s0):
    (r,) = sweep(small_s0, [0.5], SMALL, 11)
    assert r == run_experiment(small_s0, replace(SMALL, utilization=0.5), rate_seed(11, 0.5))


def test_sweep_rates_independent_of_position(small_s0):
    a = sweep(small_s0, [0.3, 0.6], SMALL, 5)
    b = sweep(small_s0, [0.6], SMALL, 5)
    assert a[1] == b[0]


def test_sweep_rows_and_validation(small_s0):
    rows = sweep_rows(sweep(small_s0, [0.2, 0.7], SMALL, 5))
    assert [r.utilization for r in rows] == [0.2, 0.7]
    assert rows[0].mu < rows[1].mu
    with pytest.raises(InvalidConfig):
        sweep(small_s0, [0.5, 1.2], SMALL, 5)
