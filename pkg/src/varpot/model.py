"""Domain types shared by the engine, the statistics and the experiment driver.

Time is measured in hours everywhere and stored as float64.
"""

from __future__ import annotations

import enum
import math
from dataclasses import InitVar, dataclass, field
from functools import cached_property
from hashlib import sha256
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidConfig, InvalidSequence, ZeroMu
from .rng import make_rng


class State(str, enum.Enum):
    UP = "UP"
    DOWN = "DOWN"

    def flip(self) -> "State":
        return State.DOWN if self is State.UP else State.UP


class Verdict(str, enum.Enum):
    SIGNIFICANT_NEGATIVE = "SIGNIFICANT_NEGATIVE"
    NOT_SIGNIFICANT = "NOT_SIGNIFICANT"
    SIGNIFICANT_POSITIVE = "SIGNIFICANT_POSITIVE"
    UNDECIDED = "UNDECIDED"

    @property
    def resolved(self) -> bool:
        return self is not Verdict.UNDECIDED

    @property
    def significant(self) -> bool:
        return self in (Verdict.SIGNIFICANT_NEGATIVE, Verdict.SIGNIFICANT_POSITIVE)


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def scaled(self, factor: float) -> "Interval":
        return Interval(self.lo * factor, self.hi * factor)


@dataclass(frozen=True)
class UpDownSequence:
    """Alternating up/down spans of one tool, starting in ``initial_state``.

    ``total_duration`` is the correctly rounded sum of the spans
    (``math.fsum``), so it does not depend on the order of the spans and is
    preserved exactly by any permutation.
    """

    initial_state: State
    durations: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "initial_state", State(self.initial_state))
        durs = tuple(float(d) for d in self.durations)
        if not durs:
            raise InvalidSequence("a sequence needs at least one span")
        for d in durs:
            if not (math.isfinite(d) and d > 0.0):
                raise InvalidSequence(f"span durations must be finite and > 0, got {d!r}")
        object.__setattr__(self, "durations", durs)

    @classmethod
    def from_spans(cls, initial_state, up, down) -> "UpDownSequence":
        """Interleave ``up`` and ``down`` spans, starting with ``initial_state``."""
        first, second = (up, down) if State(initial_state) is State.UP else (down, up)
        first, second = list(first), list(second)
        if not (len(first) == len(second) or len(first) == len(second) + 1):
            raise InvalidSequence("span counts do not alternate")
        durs = []
        for k, d in enumerate(first):
            durs.append(d)
            if k < len(second):
                durs.append(second[k])
        return cls(State(initial_state), tuple(durs))

    def __len__(self):
        return len(self.durations)

    def state_at(self, k: int) -> State:
        return self.initial_state if k % 2 == 0 else self.initial_state.flip()

    @property
    def states(self) -> tuple[State, ...]:
        return tuple(self.state_at(k) for k in range(len(self.durations)))

    @property
    def up_durations(self) -> tuple[float, ...]:
        start = 0 if self.initial_state is State.UP else 1
        return self.durations[start::2]

    @property
    def down_durations(self) -> tuple[float, ...]:
        start = 1 if self.initial_state is State.UP else 0
        return self.durations[start::2]

    @cached_property
    def total_duration(self) -> float:
        return math.fsum(self.durations)

    @cached_property
    def availability(self) -> float:
        return math.fsum(self.up_durations) / self.total_duration

    @cached_property
    def calendar(self) -> tuple[np.ndarray, np.ndarray]:
        """Span boundaries and cumulative uptime at each boundary.

        Returns ``(times, uptime)``, both of length ``len(self) + 1`` with
        ``times[0] == uptime[0] == 0`` and ``times[-1] == total_duration``.
        """
        durs = np.asarray(self.durations, dtype=np.float64)
        up_mask = np.zeros(len(durs), dtype=bool)
        up_mask[0 if self.initial_state is State.UP else 1 :: 2] = True
        times = np.concatenate(([0.0], np.cumsum(durs)))
        times[-1] = max(self.total_duration, times[-2]) if len(durs) > 1 else self.total_duration
        uptime = np.concatenate(([0.0], np.cumsum(np.where(up_mask, durs, 0.0))))
        times.flags.writeable = False
        uptime.flags.writeable = False
        return times, uptime


def _draw_arrivals(seed: int, mean: float, horizon: float) -> np.ndarray:
    rng = make_rng(seed)
    chunk = int(1.1 * horizon / mean) + 64
    parts = []
    last = 0.0
    while last < horizon:
        t = last + np.cumsum(rng.exponential(mean, chunk))
        parts.append(t)
        last = float(t[-1])
    times = np.concatenate(parts)
    times = times[times < horizon]
    # a zero gap would break strict ordering; vanishingly rare but cheap to rule out
    if times.size > 1 and np.any(np.diff(times) <= 0.0):
        times = np.unique(times)
    times.flags.writeable = False
    return times


@dataclass(frozen=True, eq=False)
class ArrivalScenario:
    """Poisson arrivals on ``[0, horizon)``, fully determined by ``seed``.

    ``ArrivalScenario.fixed`` builds one from explicit times instead (for
    hand-made fixtures); such a scenario has ``seed=None``.
    """

    scenario_id: int
    seed: Optional[int]
    mean_interarrival: float
    horizon: float
    times: InitVar[Optional[Sequence[float]]] = None
    arrival_times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self, times):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidConfig(f"horizon must be > 0, got {self.horizon!r}")
        if times is not None:
            arr = np.array(times, dtype=np.float64)
            if arr.size and (arr[0] < 0 or arr[-1] >= self.horizon or np.any(np.diff(arr) <= 0)):
                raise InvalidConfig("arrival times must be strictly increasing within [0, horizon)")
            arr.flags.writeable = False
            object.__setattr__(self, "arrival_times", arr)
            return
        if not (self.mean_interarrival > 0 and math.isfinite(self.mean_interarrival)):
            raise InvalidConfig(f"mean_interarrival must be > 0, got {self.mean_interarrival!r}")
        object.__setattr__(
            self, "arrival_times", _draw_arrivals(self.seed, self.mean_interarrival, self.horizon)
        )

    @classmethod
    def fixed(cls, times, horizon: float, scenario_id: int = 0) -> "ArrivalScenario":
        times = list(times)
        mean = horizon / len(times) if times else math.inf
        return cls(scenario_id, None, mean, horizon, times=times)

    def __len__(self):
        return int(self.arrival_times.size)

    @cached_property
    def fingerprint(self) -> str:
        return sha256(self.arrival_times.tobytes()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, ArrivalScenario):
            return NotImplemented
        return (
            (self.scenario_id, self.seed, self.mean_interarrival, self.horizon)
            == (other.scenario_id, other.seed, other.mean_interarrival, other.horizon)
            and np.array_equal(self.arrival_times, other.arrival_times)
        )

    __hash__ = None


UTILIZATION_BASES = ("uptime", "wallclock")


@dataclass(frozen=True)
class SimConfig:
    process_time: float = 1.0
    utilization: float = 0.8
    max_budget: int = 10_000
    min_sequences: int = 20
    min_scenarios: int = 20
    alpha_scale: float = 2.0
    ttest_alpha: float = 0.05
    paired_shuffle: bool = False
    utilization_basis: str = "uptime"

    def __post_init__(self):
        if not (self.process_time > 0 and math.isfinite(self.process_time)):
            raise InvalidConfig(f"process_time must be > 0, got {self.process_time!r}")
        if not (0.0 < self.utilization < 1.0):
            raise InvalidConfig(f"utilization must lie in (0, 1), got {self.utilization!r}")
        if self.min_sequences < 2 or self.min_scenarios < 2:
            raise InvalidConfig("min_sequences and min_scenarios must both be >= 2")
        if self.max_budget < (self.min_sequences + 1) * self.min_scenarios:
            raise InvalidConfig(
                f"max_budget {self.max_budget} cannot cover the initial "
                f"{self.min_sequences + 1}x{self.min_scenarios} grid"
            )
        if not self.alpha_scale > 0:
            raise InvalidConfig("alpha_scale must be > 0")
        if not (0.0 < self.ttest_alpha < 1.0):
            raise InvalidConfig("ttest_alpha must lie in (0, 1)")
        if self.utilization_basis not in UTILIZATION_BASES:
            raise InvalidConfig(f"utilization_basis must be one of {UTILIZATION_BASES}")


@dataclass(frozen=True)
class RunResult:
    sequence_id: int
    scenario_id: int
    mean_cycle_time: float
    agent_count: int


@dataclass(frozen=True)
class EffectEstimate:
    ct0_bar: float
    sigma0: float
    m: int
    mu: float
    sigma: float
    n: int
    ct0_interval: Interval
    i95: Interval
    i95_inner: Interval
    i95_outer: Interval

    def scaled(self, factor: float) -> "EffectEstimate":
        return EffectEstimate(
            ct0_bar=self.ct0_bar * factor,
            sigma0=self.sigma0 * factor,
            m=self.m,
            mu=self.mu * factor,
            sigma=self.sigma * factor,
            n=self.n,
            ct0_interval=self.ct0_interval.scaled(factor),
            i95=self.i95.scaled(factor),
            i95_inner=self.i95_inner.scaled(factor),
            i95_outer=self.i95_outer.scaled(factor),
        )


@dataclass(frozen=True)
class TTestTriplet:
    lower: int
    nondiff: int
    higher: int

    @property
    def m(self) -> int:
        return self.lower + self.nondiff + self.higher

    def __str__(self):
        return f"({self.lower}-{self.nondiff}-{self.higher})"


@dataclass(frozen=True)
class NormalizedView:
    """Cycle-time figures rescaled so that the i.i.d. mean is 100."""

    ct0: float
    delta_pct: float
    i95_star: Interval
    ct0_interval: Interval


def normalized_view(effect: EffectEstimate) -> NormalizedView:
    """Rescale ``effect`` to the mu = 100 convention.

    ``i95_star`` is the outer band when the historical mean falls outside
    it, the inner band otherwise.
    """
    if not effect.mu > 0:
        raise ZeroMu(f"cannot normalize with mu = {effect.mu!r}")
    factor = 100.0 / effect.mu
    ct0 = 100.0 * effect.ct0_bar / effect.mu
    outer = effect.i95_outer
    outside = effect.ct0_bar < outer.lo or effect.ct0_bar > outer.hi
    star = outer if outside else effect.i95_inner
    return NormalizedView(
        ct0=ct0,
        delta_pct=ct0 - 100.0,
        i95_star=star.scaled(factor),
        ct0_interval=effect.ct0_interval.scaled(factor),
    )


@dataclass(frozen=True)
class SeedEcho:
    master_seed: int
    scheme: str
    scenario_fingerprint: str


@dataclass(frozen=True)
class ExperimentReport:
    effect: EffectEstimate
    verdict: Verdict
    triplet: TTestTriplet
    normalized: NormalizedView
    runs_used: int
    config: SimConfig
    seeds: SeedEcho
    mean_interarrival: float
    units: str = "hours"
