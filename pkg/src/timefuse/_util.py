"""Small numerical helpers shared across modules."""

from __future__ import annotations

import math
from statistics import NormalDist
from typing import Sequence

_STD_NORMAL = NormalDist()


def logistic(t: float) -> float:
    """Numerically stable standard logistic 1 / (1 + exp(-t))."""
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def norm_quantile(p: float) -> float:
    """Quantile (inverse CDF) of the standard normal distribution."""
    return _STD_NORMAL.inv_cdf(p)


def norm_cdf(t: float) -> float:
    """CDF of the standard normal distribution."""
    return _STD_NORMAL.cdf(t)


def ols_slope(ts: Sequence[float], xs: Sequence[float]) -> float:
    """Ordinary least-squares slope of ``xs`` against ``ts``.

    Requires at least two points and a non-degenerate time axis.
    """
    n = len(ts)
    if n < 2 or n != len(xs):
        raise ValueError("need at least two (t, x) pairs of equal length")
    t_mean = math.fsum(ts) / n
    x_mean = math.fsum(xs) / n
    sxy = 0.0
    sxx = 0.0
    for t, x in zip(ts, xs):
        dt = t - t_mean
        sxy += dt * (x - x_mean)
        sxx += dt * dt
    if sxx == 0.0:
        raise ValueError("degenerate time axis: all timestamps identical")
    return sxy / sxx
