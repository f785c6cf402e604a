"""Full test of one historical sequence against its permuted copies.

The grid has one row per sequence (row 0 is the historical one, rows
1..n are shuffles) and one column per arrival scenario.  Every row is run
on the same scenario objects, so differences between rows come only from
the up/down ordering.  Seeds are derived per row and per column from the
master seed, which means growing the grid never changes existing cells.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from hashlib import sha256
from typing import Callable, Optional, Sequence

import numpy as np

from .engine import simulate_run
from .errors import InvalidConfig, ZeroAvailability
from .model import (
    ArrivalScenario,
    ExperimentReport,
    SeedEcho,
    SimConfig,
    UpDownSequence,
    Verdict,
    normalized_view,
)
from .rng import SEED_SCHEME, derive_seed
from .sequences import shuffle
from .stats import band_error, classify_effect, estimate_effect, grid_triplet

log = logging.getLogger(__name__)

DEFAULT_RATES = tuple(round(0.1 * k, 1) for k in range(1, 10))

Progress = Callable[[int, int], None]


def interarrival_for_utilization(u: float, seq: UpDownSequence, p: float, basis: str = "uptime") -> float:
    """Mean inter-arrival time giving utilization ``u``.

    On the ``uptime`` basis, ``u`` is the share of UP capacity consumed
    (u = lambda * p / A); on the ``wallclock`` basis it is lambda * p.
    """
    if not 0.0 < u < 1.0:
        raise InvalidConfig(f"utilization must lie in (0, 1), got {u!r}")
    if basis == "wallclock":
        return p / u
    if basis != "uptime":
        raise InvalidConfig(f"unknown utilization basis {basis!r}")
    if not seq.availability > 0:
        raise ZeroAvailability("sequence has no UP time")
    return p / (u * seq.availability)


class Action(str, enum.Enum):
    ADD_SCENARIO = "ADD_SCENARIO"
    ADD_SEQUENCE = "ADD_SEQUENCE"
    STOP = "STOP"


@dataclass(frozen=True)
class BudgetState:
    n: int
    m: int
    runs_used: int
    max_budget: int

    @property
    def remaining(self) -> int:
        return self.max_budget - self.runs_used


def next_budget_action(state: BudgetState, sigma: float, sigma0: float, scale: float = 2.0) -> Action:
    """Pick the grid extension that shrinks the uncertainty area most per run.

    A new scenario costs n + 1 runs and narrows the historical interval; a
    new sequence costs m runs and narrows the gap between the inner and
    outer bands.  Falls back to the other action when the better one does
    not fit the remaining budget.
    """
    n, m = state.n, state.m
    cost_scenario, cost_sequence = n + 1, m
    gain_scenario = 2.0 * scale * sigma0 * (1.0 / math.sqrt(m) - 1.0 / math.sqrt(m + 1))
    gain_sequence = 2.0 * (band_error(sigma, n, scale) - band_error(sigma, n + 1, scale))
    options = [
        (gain_sequence / cost_sequence, cost_sequence, Action.ADD_SEQUENCE),
        (gain_scenario / cost_scenario, cost_scenario, Action.ADD_SCENARIO),
    ]
    # stable sort: ties go to ADD_SEQUENCE
    options.sort(key=lambda o: -o[0])
    for _, cost, action in options:
        if cost <= state.remaining:
            return action
    return Action.STOP


def _simulate_block(sequences, scenarios, process_time):
    out = np.empty((len(sequences), len(scenarios)))
    for r, (sid, seq) in enumerate(sequences):
        for c, sc in enumerate(scenarios):
            out[r, c] = simulate_run(seq, sc, process_time, sequence_id=sid).mean_cycle_time
    return out


def _chunks(items, k):
    k = max(1, min(k, len(items)))
    size = math.ceil(len(items) / k)
    return [items[i : i + size] for i in range(0, len(items), size)]


def default_jobs() -> int:
    return max(1, int(os.environ.get("VARPOT_JOBS", "1")))


class GridExperiment:
    """Growable simulation grid for one historical sequence.

    Use :func:`run_experiment` for the complete procedure; this class is the
    state it drives and is handy for inspecting individual cells.
    """

    def __init__(self, s0: UpDownSequence, config: SimConfig, master_seed: int, jobs: int = 1,
                 progress: Optional[Progress] = None):
        self.s0 = s0
        self.config = config
        self.master_seed = int(master_seed)
        self.jobs = max(1, int(jobs))
        self.progress = progress
        self.mean_interarrival = interarrival_for_utilization(
            config.utilization, s0, config.process_time, config.utilization_basis
        )
        self.sequences: list[UpDownSequence] = [s0]
        self.scenarios: list[ArrivalScenario] = []
        self.grid = np.empty((1, 0))
        self._pool = None

    # -- cell evaluation ---------------------------------------------------
    def _evaluate(self, rows, cols):
        """Simulate the block ``rows x cols`` (lists of indices)."""
        seqs = [(i, self.sequences[i]) for i in rows]
        scens = [self.scenarios[j] for j in cols]
        p = self.config.process_time
        if self.jobs == 1 or len(seqs) * len(scens) < 2:
            return _simulate_block(seqs, scens, p)
        if self._pool is None:
            self._pool = ProcessPoolExecutor(max_workers=self.jobs)
        # split along the longer side; reassembly order is fixed
        if len(seqs) >= len(scens):
            parts = [self._pool.submit(_simulate_block, c, scens, p) for c in _chunks(seqs, self.jobs)]
            return np.vstack([f.result() for f in parts])
        parts = [self._pool.submit(_simulate_block, seqs, c, p) for c in _chunks(scens, self.jobs)]
        return np.hstack([f.result() for f in parts])

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    # -- grid growth -------------------------------------------------------
    def _new_scenario(self) -> ArrivalScenario:
        j = len(self.scenarios)
        return ArrivalScenario(
            scenario_id=j,
            seed=derive_seed(self.master_seed, "arrival", j),
            mean_interarrival=self.mean_interarrival,
            horizon=self.s0.total_duration,
        )

    def _new_sequence(self) -> UpDownSequence:
        i = len(self.sequences)
        return shuffle(self.s0, derive_seed(self.master_seed, "perm", i), paired=self.config.paired_shuffle)

    def initialize(self):
        while self.n < self.config.min_sequences:
            self.sequences.append(self._new_sequence())
        while self.m < self.config.min_scenarios:
            self.scenarios.append(self._new_scenario())
        self.grid = self._evaluate(range(len(self.sequences)), range(len(self.scenarios)))
        self._report_progress()

    def add_scenario(self):
        self.scenarios.append(self._new_scenario())
        col = self._evaluate(range(len(self.sequences)), [len(self.scenarios) - 1])
        self.grid = np.hstack([self.grid, col])
        self._report_progress()

    def add_sequence(self):
        self.sequences.append(self._new_sequence())
        row = self._evaluate([len(self.sequences) - 1], range(len(self.scenarios)))
        self.grid = np.vstack([self.grid, row])
        self._report_progress()

    def _report_progress(self):
        if self.progress is not None:
            self.progress(self.runs_used, self.config.max_budget)

    # -- bookkeeping -------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.sequences) - 1

    @property
    def m(self) -> int:
        return len(self.scenarios)

    @property
    def runs_used(self) -> int:
        return int(self.grid.size)

    @property
    def budget(self) -> BudgetState:
        return BudgetState(self.n, self.m, self.runs_used, self.config.max_budget)

    def scenario_fingerprint(self) -> str:
        h = sha256()
        for sc in self.scenarios:
            h.update(sc.fingerprint.encode())
        return h.hexdigest()

    def estimate(self):
        return estimate_effect(self.grid, self.config.alpha_scale)

    def report(self, verdict: Verdict) -> ExperimentReport:
        effect = self.estimate()
        return ExperimentReport(
            effect=effect,
            verdict=verdict,
            triplet=grid_triplet(self.grid, self.config.ttest_alpha),
            normalized=normalized_view(effect),
            runs_used=self.runs_used,
            config=self.config,
            seeds=SeedEcho(self.master_seed, SEED_SCHEME, self.scenario_fingerprint()),
            mean_interarrival=self.mean_interarrival,
        )

    def run(self) -> ExperimentReport:
        self.initialize()
        effect = self.estimate()
        verdict = classify_effect(effect)
        while verdict is Verdict.UNDECIDED:
            action = next_budget_action(self.budget, effect.sigma, effect.sigma0, self.config.alpha_scale)
            if action is Action.STOP:
                break
            if action is Action.ADD_SCENARIO:
                self.add_scenario()
            else:
                self.add_sequence()
            effect = self.estimate()
            verdict = classify_effect(effect)
        log.info("verdict %s after %d runs (n=%d, m=%d)", verdict.value, self.runs_used, self.n, self.m)
        return self.report(verdict)


def run_experiment(s0: UpDownSequence, config: SimConfig, master_seed: int, jobs: int = 1,
                   progress: Optional[Progress] = None) -> ExperimentReport:
    """Test ``s0`` against its shuffles and return the report.

    The grid starts at ``min_sequences`` shuffles by ``min_scenarios``
    scenarios and grows one row or column at a time while the verdict is
    UNDECIDED and the budget allows it.  The result depends only on
    ``(s0, config, master_seed)``, not on ``jobs``.
    """
    exp = GridExperiment(s0, config, master_seed, jobs=jobs, progress=progress)
    try:
        return exp.run()
    finally:
        exp.close()


# ---------------------------------------------------------------------------
# utilization sweeps


@dataclass(frozen=True)
class SweepRow:
    utilization: float
    mu: float
    i95_lo: float
    i95_hi: float
    ct0: float
    ct0_lo: float
    ct0_hi: float
    verdict: Verdict


def rate_seed(master_seed: int, rate: float) -> int:
    """Seed of the experiment at ``rate``; keyed on the rate value, not its position."""
    return derive_seed(master_seed, "rate", round(rate * 1_000_000))


def sweep(s0: UpDownSequence, rates: Sequence[float], config: SimConfig, master_seed: int, jobs: int = 1,
          progress: Optional[Progress] = None) -> list[ExperimentReport]:
    """One full experiment per utilization rate."""
    for u in rates:
        if not 0.0 < u < 1.0:
            raise InvalidConfig(f"utilization rate must lie in (0, 1), got {u!r}")
    return [
        run_experiment(s0, replace(config, utilization=float(u)), rate_seed(master_seed, u), jobs, progress)
        for u in rates
    ]


def sweep_rows(reports: Sequence[ExperimentReport]) -> list[SweepRow]:
    rows = []
    for r in reports:
        e = r.effect
        rows.append(SweepRow(
            utilization=r.config.utilization,
            mu=e.mu,
            i95_lo=e.i95.lo,
            i95_hi=e.i95.hi,
            ct0=e.ct0_bar,
            ct0_lo=e.ct0_interval.lo,
            ct0_hi=e.ct0_interval.hi,
            verdict=r.verdict,
        ))
    return rows
