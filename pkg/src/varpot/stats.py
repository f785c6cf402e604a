"""Estimators, uncertainty bands, verdicts and the per-scenario t-tests.

Standard deviations are sample standard deviations (``ddof=1``).  The band
multiplier ``scale`` defaults to 2, i.e. the i.i.d. band is mu -/+ 2 sigma.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc

from .errors import MalformedInterval, TooFewSamples
from .model import EffectEstimate, Interval, TTestTriplet, Verdict


def se_mean(sigma: float, n: int) -> float:
    """Standard error of a sample mean of ``n`` Gaussian draws."""
    return sigma / math.sqrt(n)


def se_std(sigma: float, n: int) -> float:
    """Large-sample standard error of a sample standard deviation."""
    return sigma / math.sqrt(2.0 * (n - 1))


def _sample(values, what: str) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 2:
        raise TooFewSamples(f"{what} needs at least 2 values, got {x.size}")
    return x


def effect_of_s0(ct0_by_scenario, scale: float = 2.0) -> tuple[float, float, Interval]:
    """Mean and sample std of the historical runs, and the interval on their mean."""
    x = _sample(ct0_by_scenario, "effect_of_s0")
    bar = float(x.mean())
    s0 = float(x.std(ddof=1))
    half = scale * s0 / math.sqrt(x.size)
    return bar, s0, Interval(bar - half, bar + half)


def band_error(sigma: float, n: int, scale: float = 2.0) -> float:
    """Uncertainty on each edge of mu -/+ scale*sigma: one SE of mu plus ``scale`` SEs of sigma."""
    return se_mean(sigma, n) + scale * se_std(sigma, n)


def iid_band(ct_bars, scale: float = 2.0):
    """Return ``(mu, sigma, i95, i95_inner, i95_outer)`` for the permuted-sequence effects.

    The inner half-width is clipped at zero (it would go negative for n = 2).
    """
    x = _sample(ct_bars, "iid_band")
    n = x.size
    mu = float(x.mean())
    sigma = float(x.std(ddof=1))
    half = scale * sigma
    e = band_error(sigma, n, scale)
    inner = max(half - e, 0.0)
    outer = half + e
    return (
        mu,
        sigma,
        Interval(mu - half, mu + half),
        Interval(mu - inner, mu + inner),
        Interval(mu - outer, mu + outer),
    )


def estimate_effect(grid, scale: float = 2.0) -> EffectEstimate:
    """Effect estimate from a ``(n + 1) x m`` grid whose row 0 holds the historical runs."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < 3 or g.shape[1] < 2:
        raise TooFewSamples(f"grid must be at least 3 x 2, got shape {g.shape}")
    ct0_bar, sigma0, ct0_interval = effect_of_s0(g[0], scale)
    mu, sigma, i95, inner, outer = iid_band(g[1:].mean(axis=1), scale)
    return EffectEstimate(
        ct0_bar=ct0_bar,
        sigma0=sigma0,
        m=g.shape[1],
        mu=mu,
        sigma=sigma,
        n=g.shape[0] - 1,
        ct0_interval=ct0_interval,
        i95=i95,
        i95_inner=inner,
        i95_outer=outer,
    )


def _check_interval(iv, name):
    lo, hi = iv
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise MalformedInterval(f"{name} = {tuple(iv)!r} is not a finite interval with lo <= hi")


def classify(ct0_interval, i95_inner, i95_outer) -> Verdict:
    """Three-way verdict, or UNDECIDED while the uncertainty areas overlap.

    Significant when the historical interval lies strictly outside the
    outer band; not significant when it sits inside the inner band.
    """
    for iv, name in ((ct0_interval, "ct0_interval"), (i95_inner, "i95_inner"), (i95_outer, "i95_outer")):
        _check_interval(iv, name)
    c, inner, outer = Interval(*ct0_interval), Interval(*i95_inner), Interval(*i95_outer)
    if c.hi < outer.lo:
        return Verdict.SIGNIFICANT_NEGATIVE
    if c.lo > outer.hi:
        return Verdict.SIGNIFICANT_POSITIVE
    if inner.contains(c):
        return Verdict.NOT_SIGNIFICANT
    return Verdict.UNDECIDED


def classify_effect(effect: EffectEstimate) -> Verdict:
    return classify(effect.ct0_interval, effect.i95_inner, effect.i95_outer)


# ---------------------------------------------------------------------------
# Student t


def t_cdf(t: float, df: float) -> float:
    """Student t CDF through the regularized incomplete beta function."""
    tail = 0.5 * float(betainc(0.5 * df, 0.5, df / (df + t * t)))
    return 1.0 - tail if t >= 0 else tail


@lru_cache(maxsize=256)
def t_critical(q: float, df: float) -> float:
    """Quantile ``t_q`` of the Student t distribution, for ``q`` in (0.5, 1)."""
    if not 0.5 < q < 1.0:
        raise ValueError(f"q must lie in (0.5, 1), got {q!r}")
    hi = 1.0
    while t_cdf(hi, df) < q:
        hi *= 2.0
    return brentq(lambda t: t_cdf(t, df) - q, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def ttest_side(population, value: float, alpha: float = 0.05) -> int:
    """Two-sided one-sample t-test of ``mean(population) == value``.

    Returns -1 when ``value`` is significantly below the population mean,
    +1 when significantly above, 0 otherwise.  A population with zero
    spread is compared exactly.
    """
    x = _sample(population, "t-test population")
    mean = float(x.mean())
    s = float(x.std(ddof=1))
    if s == 0.0:
        return 0 if value == mean else (-1 if value < mean else 1)
    t = (value - mean) / (s / math.sqrt(x.size))
    crit = t_critical(1.0 - alpha / 2.0, x.size - 1)
    if t < -crit:
        return -1
    if t > crit:
        return 1
    return 0


def ttest_triplet(populations, ct0_values, alpha: float = 0.05) -> TTestTriplet:
    """Count scenarios where the historical run is lower / not different / higher.

    ``populations[j]`` holds the permuted-sequence results of scenario ``j``
    and ``ct0_values[j]`` the historical result on that scenario.
    """
    pops = list(populations)
    ct0 = list(ct0_values)
    if len(pops) != len(ct0):
        raise ValueError(f"{len(pops)} populations but {len(ct0)} historical values")
    counts = {-1: 0, 0: 0, 1: 0}
    for pop, v in zip(pops, ct0):
        counts[ttest_side(pop, float(v), alpha)] += 1
    return TTestTriplet(lower=counts[-1], nondiff=counts[0], higher=counts[1])


def grid_triplet(grid, alpha: float = 0.05) -> TTestTriplet:
    g = np.asarray(grid, dtype=np.float64)
    return ttest_triplet(g[1:].T, g[0], alpha)


def family_false_positive(num_tests: int, threshold: int, p: float) -> float:
    """P(X >= threshold) for X ~ Binomial(num_tests, p), summed term by term."""
    if not 0 <= threshold <= num_tests:
        raise ValueError(f"need 0 <= threshold <= num_tests, got {threshold}, {num_tests}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if threshold == 0:
        return 1.0
    return math.fsum(
        math.comb(num_tests, k) * p**k * (1.0 - p) ** (num_tests - k)
        for k in range(threshold, num_tests + 1)
    )
