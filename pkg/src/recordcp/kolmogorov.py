"""Kolmogorov distribution, the law of sup |B(v)| for a Brownian bridge.

Two series for the survival function are implemented:

    P(K >= x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)                (alternating)
              = 1 - sqrt(2 pi)/x sum_{k>=1} exp(-((2k-1) pi / (2 sqrt(2) x))^2)   (theta)

The alternating form converges fast for large x, the theta form for small x.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import OutOfDomain

SWITCH_X = 1.0
TERM_TOL = 1e-14
MAX_TERMS = 200


class Series(str, enum.Enum):
    ALTERNATING = "alternating"
    THETA = "theta"


@dataclass(frozen=True)
class KolmogorovEval:
    x: float
    survival: float
    terms_used: int
    series_id: Series


def _alternating(x: float) -> tuple[float, int]:
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        total += sign * math.exp(-2.0 * (k * x) ** 2)
        nxt = math.exp(-2.0 * ((k + 1) * x) ** 2)
        if nxt < TERM_TOL or k >= MAX_TERMS:
            return 2.0 * total, k
        sign = -sign
        k += 1


def _theta(x: float) -> tuple[float, int]:
    c = math.pi / (2.0 * math.sqrt(2.0) * x)
    total = 0.0
    k = 1
    while True:
        total += math.exp(-(((2 * k - 1) * c) ** 2))
        nxt = math.exp(-(((2 * k + 1) * c) ** 2))
        if nxt < TERM_TOL or k >= MAX_TERMS:
            return 1.0 - math.sqrt(2.0 * math.pi) / x * total, k
        k += 1


def evaluate(x: float, series: Series | str | None = None) -> KolmogorovEval:
    """Survival function with bookkeeping; ``series`` forces one expansion."""
    x = float(x)
    if x <= 0.0:
        return KolmogorovEval(x, 1.0, 0, Series.THETA)
    if series is None:
        series = Series.ALTERNATING if x >= SWITCH_X else Series.THETA
    series = Series(series)
    value, terms = _alternating(x) if series is Series.ALTERNATING else _theta(x)
    return KolmogorovEval(x, min(1.0, max(0.0, value)), terms, series)


def survival(x: float) -> float:
    """P(K >= x); equals 1 for x <= 0."""
    return evaluate(x).survival


def cdf(x: float) -> float:
    return 1.0 - survival(x)


def quantile(p: float) -> float:
    """x with P(K <= x) = p, for 0 < p < 1."""
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"quantile needs 0 < p < 1, got {p}")
    target = 1.0 - p
    lo, hi = 1e-3, 1.0
    while survival(lo) < target:
        lo /= 2.0
    while survival(hi) > target:
        hi *= 2.0
    return brentq(lambda x: survival(x) - target, lo, hi, xtol=1e-13, maxiter=500)
