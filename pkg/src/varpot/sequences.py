"""Permutations of up/down sequences and synthetic sequence generators.

Generated span boundaries are snapped to a grid of ``TICK`` hours
(2**-20 h, about 3.4 ms).  Sums of grid values are exact in float64, which
is what lets every generator hit ``total_duration == horizon`` exactly and
keeps shuffled copies on the very same calendar length.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidLawParams
from .model import State, UpDownSequence
from .rng import derive_seed, make_rng

TICK = 2.0**-20


@dataclass(frozen=True)
class Law:
    """A positive duration distribution: ``exp(mean)``, ``lognorm(median, shape)`` or ``fixed(value)``."""

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        arity = {"exp": 1, "lognorm": 2, "fixed": 1}
        if self.kind not in arity:
            raise InvalidLawParams(f"unknown law {self.kind!r}")
        if len(self.params) != arity[self.kind]:
            raise InvalidLawParams(f"{self.kind} takes {arity[self.kind]} parameter(s)")
        if not all(math.isfinite(p) and p > 0 for p in self.params):
            raise InvalidLawParams(f"{self.kind} parameters must be finite and > 0: {self.params}")

    @property
    def mean(self) -> float:
        if self.kind == "lognorm":
            median, shape = self.params
            return median * math.exp(0.5 * shape * shape)
        return self.params[0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exp":
            return rng.exponential(self.params[0], size)
        if self.kind == "lognorm":
            median, shape = self.params
            return rng.lognormal(math.log(median), shape, size)
        return np.full(size, self.params[0])

    def __str__(self):
        return ":".join([self.kind, *(repr(p) for p in self.params)])


_LAW_NAMES = ("lognorm", "exp", "fixed")
_COMPACT = re.compile(r"^(lognorm|exp|fixed)([0-9.eE+-]+)$")


def _number(tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise InvalidLawParams(f"not a number: {tok!r}") from None


def _take_law(tokens: list[str], pos: int) -> tuple[Law, int]:
    """Parse one law starting at ``tokens[pos]``; return it and the next position."""
    if pos >= len(tokens):
        raise InvalidLawParams("missing distribution")
    tok = tokens[pos]
    m = _COMPACT.match(tok)
    if m:
        kind, first = m.group(1), _number(m.group(2))
        if kind == "lognorm":
            if pos + 1 >= len(tokens):
                raise InvalidLawParams("lognorm needs a shape parameter")
            return Law(kind, (first, _number(tokens[pos + 1]))), pos + 2
        return Law(kind, (first,)), pos + 1
    if tok not in _LAW_NAMES:
        raise InvalidLawParams(f"unknown law {tok!r}")
    arity = 2 if tok == "lognorm" else 1
    vals = tokens[pos + 1 : pos + 1 + arity]
    if len(vals) != arity:
        raise InvalidLawParams(f"{tok} takes {arity} parameter(s)")
    return Law(tok, tuple(_number(v) for v in vals)), pos + 1 + arity


def parse_law(text: str) -> Law:
    """Parse ``"exp:10"``, ``"lognorm:5:0.8"``, ``"fixed:3"`` (or compact ``"exp10"``)."""
    tokens = text.strip().split(":")
    law, pos = _take_law(tokens, 0)
    if pos != len(tokens):
        raise InvalidLawParams(f"trailing fields in law {text!r}")
    return law


def _as_law(law) -> Law:
    return law if isinstance(law, Law) else parse_law(law)


def _grid(x) -> np.ndarray:
    return np.rint(np.asarray(x, dtype=np.float64) / TICK) * TICK


def _snap(x) -> np.ndarray:
    """Round durations to the grid, never below one tick."""
    return np.maximum(_grid(x), TICK)


def _check_horizon(horizon: float):
    if not (math.isfinite(horizon) and horizon > 0):
        raise InvalidLawParams(f"horizon must be > 0, got {horizon!r}")


# ---------------------------------------------------------------------------
# permutation


def _permute(values, rng: np.random.Generator) -> list[float]:
    # Generator.permutation is a Fisher-Yates shuffle
    return [values[k] for k in rng.permutation(len(values))]


def shuffle(seq: UpDownSequence, seed: int, paired: bool = False) -> UpDownSequence:
    """Uniformly permute the spans of ``seq`` while keeping the alternation.

    By default UP and DOWN durations are permuted independently (UP spans
    first, then DOWN spans, from the same stream).  With ``paired`` the
    consecutive (first-state, second-state) pairs are permuted as units; an
    unpaired trailing span stays last.
    """
    rng = make_rng(seed)
    if paired:
        d = seq.durations
        pairs = [d[k : k + 2] for k in range(0, len(d) - 1, 2)]
        tail = d[len(pairs) * 2 :]
        out = [x for pair in _permute(pairs, rng) for x in pair]
        return UpDownSequence(seq.initial_state, tuple(out) + tuple(tail))
    up = _permute(seq.up_durations, rng)
    down = _permute(seq.down_durations, rng)
    return UpDownSequence.from_spans(seq.initial_state, up, down)


# ---------------------------------------------------------------------------
# generators


def _alternating_draws(up_law: Law, down_law: Law, horizon: float, rng, initial_state: State):
    """Alternate draws until they cover ``horizon``; truncate the last span to fit."""
    first, second = (up_law, down_law) if initial_state is State.UP else (down_law, up_law)
    mean_pair = first.mean + second.mean
    chunk = int(1.2 * horizon / mean_pair) + 8
    spans: list[np.ndarray] = []
    covered = 0.0
    while covered < horizon:
        a = _snap(first.sample(rng, chunk))
        b = _snap(second.sample(rng, chunk))
        block = np.empty(2 * chunk)
        block[0::2], block[1::2] = a, b
        spans.append(block)
        covered += float(block.sum())
    durs = np.concatenate(spans)
    ends = np.cumsum(durs)
    last = int(np.searchsorted(ends, horizon, side="left"))
    durs = durs[: last + 1]
    head = math.fsum(durs[:last])
    # exact: head is a sum of grid values strictly below horizon
    durs[last] = horizon - head
    return durs


def gen_iid(up_law, down_law, horizon: float, seed: int, initial_state=State.UP) -> UpDownSequence:
    """Alternating i.i.d. UP/DOWN spans covering exactly ``horizon`` hours."""
    up_law, down_law = _as_law(up_law), _as_law(down_law)
    _check_horizon(horizon)
    initial_state = State(initial_state)
    durs = _alternating_draws(up_law, down_law, horizon, make_rng(seed), initial_state)
    return UpDownSequence(initial_state, tuple(durs.tolist()))


def arrange_blocks(values, block_size: int, rng=None) -> list[float]:
    """Sort ``values`` and cut them into runs of ``block_size`` neighbours.

    Runs keep ascending order internally.  With ``rng`` the order of the runs
    is a uniform permutation; without it the runs stay ascending, i.e. the
    result is simply sorted.
    """
    if block_size < 1:
        raise InvalidLawParams(f"block_size must be >= 1, got {block_size!r}")
    ordered = sorted(values)
    blocks = [ordered[k : k + block_size] for k in range(0, len(ordered), block_size)]
    if rng is not None:
        blocks = _permute(blocks, rng)
    return [v for b in blocks for v in b]


def gen_autocorrelated(
    up_law,
    down_law,
    block_size: int,
    horizon: float,
    seed: int,
    initial_state=State.UP,
    block_order: str = "ascending",
) -> UpDownSequence:
    """Same spans as :func:`gen_iid`, with DOWN durations clustered by size.

    DOWN durations are sorted and grouped into runs of ``block_size`` similar
    values.  With ``block_order="ascending"`` the runs follow each other in
    increasing order, so the result is fully sorted and ``block_size`` has
    no visible effect; ``"shuffled"`` places the runs in random order,
    giving many short clusters instead of one trend.  Marginal multisets
    are untouched either way.
    """
    if block_order not in ("shuffled", "ascending"):
        raise InvalidLawParams(f"block_order must be 'shuffled' or 'ascending', got {block_order!r}")
    if int(block_size) != block_size or block_size < 1:
        raise InvalidLawParams(f"block_size must be a positive integer, got {block_size!r}")
    base = gen_iid(up_law, down_law, horizon, seed, initial_state)
    rng = make_rng(derive_seed(seed, "blocks")) if block_order == "shuffled" else None
    down = arrange_blocks(base.down_durations, int(block_size), rng)
    return UpDownSequence.from_spans(base.initial_state, base.up_durations, down)


def _merge(intervals):
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def gen_periodic_maintenance(
    period: float,
    maint_duration: float,
    noise_down_law,
    noise_rate: float,
    horizon: float,
    seed: int,
) -> UpDownSequence:
    """Regular maintenance plus randomly placed short failures.

    A maintenance DOWN span of ``maint_duration`` closes every period, i.e.
    occupies ``[k*period - maint_duration, k*period)``.  Failures start at
    the points of a Poisson process of rate ``noise_rate`` per hour and last
    a draw from ``noise_down_law``.  Overlapping or touching DOWN spans are
    merged and everything is clipped to ``[0, horizon)``.
    """
    noise_down_law = _as_law(noise_down_law)
    _check_horizon(horizon)
    if not (math.isfinite(period) and math.isfinite(maint_duration) and period > maint_duration > 0):
        raise InvalidLawParams(f"need period > maint_duration > 0, got {period!r}, {maint_duration!r}")
    if not (math.isfinite(noise_rate) and noise_rate >= 0):
        raise InvalidLawParams(f"noise_rate must be >= 0, got {noise_rate!r}")
    period, maint = float(_snap(period)), float(_snap(maint_duration))
    horizon = float(horizon)

    downs = []
    k = 1
    while k * period - maint < horizon:
        downs.append((k * period - maint, min(k * period, horizon)))
        k += 1
    if noise_rate > 0:
        rng = make_rng(seed)
        count = rng.poisson(noise_rate * horizon)
        starts = _grid(np.sort(rng.uniform(0.0, horizon, count)))
        lens = _snap(noise_down_law.sample(rng, count))
        for s, d in zip(starts.tolist(), lens.tolist()):
            if s < horizon:
                downs.append((s, min(s + d, horizon)))

    merged = _merge(downs)
    cuts = [0.0]
    for lo, hi in merged:
        cuts.extend((lo, hi))
    cuts.append(horizon)
    durs = np.diff(np.asarray(cuts))
    # boundary pairs alternate UP, DOWN, UP, ...; zero-length UP gaps mark a DOWN at an edge
    states = [State.UP if k % 2 == 0 else State.DOWN for k in range(len(durs))]
    keep = durs > 0
    spans = [(s, float(d)) for s, d, ok in zip(states, durs, keep) if ok]
    return UpDownSequence(spans[0][0], tuple(d for _, d in spans))


# ---------------------------------------------------------------------------
# command-line synthetic specs


def parse_synth(spec: str, horizon: float, seed: int) -> UpDownSequence:
    """Build a sequence from a colon-separated synthetic spec.

    Grammar (laws as in :func:`parse_law`, compact ``exp0.5`` also accepted)::

        iid:<up law>:<down law>
        autocorr:<up law>:<down law>:<block size>
        periodic:<period>:<maintenance>:<noise down law>:<noise rate>
    """
    tokens = spec.strip().split(":")
    kind, rest = tokens[0], tokens[1:]
    if kind == "iid":
        up, pos = _take_law(rest, 0)
        down, pos = _take_law(rest, pos)
        if pos != len(rest):
            raise InvalidLawParams(f"trailing fields in {spec!r}")
        return gen_iid(up, down, horizon, seed)
    if kind == "autocorr":
        up, pos = _take_law(rest, 0)
        down, pos = _take_law(rest, pos)
        if pos != len(rest) - 1:
            raise InvalidLawParams(f"autocorr spec needs a trailing block size: {spec!r}")
        block = _number(rest[pos])
        return gen_autocorrelated(up, down, block, horizon, seed)
    if kind == "periodic":
        if len(rest) < 4:
            raise InvalidLawParams(f"periodic spec too short: {spec!r}")
        period, maint = _number(rest[0]), _number(rest[1])
        law, pos = _take_law(rest, 2)
        if pos != len(rest) - 1:
            raise InvalidLawParams(f"periodic spec needs a trailing noise rate: {spec!r}")
        return gen_periodic_maintenance(period, maint, law, _number(rest[pos]), horizon, seed)
    raise InvalidLawParams(f"unknown synthetic kind {kind!r} (expected iid, autocorr or periodic)")
