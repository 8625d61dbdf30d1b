"""Standardised record process, its bridge and the K_T statistic.

The increments ``xi_t = w_t (I_t - E I_t) / sigma_T`` are accumulated into
``S_t``; with ``nu_t = sigma_t^2 / sigma_T^2`` the bridge is
``B_t = S_t - nu_t S_T`` and ``K_T = max_t |B_t|``.  Only the grid points
``(nu_t, B_t)`` are materialised: the broken line between them is linear, so
the maximum of its absolute value is attained on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVariance, OutOfDomain, TooShort
from .records import (
    IndicatorKind,
    IndicatorSequence,
    WeightScheme,
    null_moments,
    realize_weights,
    record_indicators,
)

# Relative slack when locating the first t attaining max |B|.
ARGMAX_RTOL = 1e-12


@dataclass
class BridgeSample:
    nu: np.ndarray
    B: np.ndarray
    K: float
    that_index: int  # 1-based
    kind: IndicatorKind
    scheme: WeightScheme
    xi: np.ndarray | None = None
    M: int = 1

    @property
    def T(self) -> int:
        return len(self.nu)


@dataclass(frozen=True)
class StatisticValue:
    raw: float
    fisher: float
    T: int


def cumulative_variance(weights, var0, M: int = 1) -> np.ndarray:
    """sigma_t^2 = sum_{k<=t} w_k^2 Var_k / M, by forward cumulative sum."""
    s2 = np.cumsum(np.asarray(weights, dtype=float) ** 2 * var0) / M
    if not s2[-1] > 0:
        raise DegenerateVariance("sigma_T is zero: weights annihilate every random term")
    return s2


def centered_values(values, mean0) -> np.ndarray:
    """Per-t indicator mean across subseries (last axis when 2-D) minus its null mean."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values.mean(axis=1)
    return values - mean0


def standardize(ind: IndicatorSequence, weights) -> np.ndarray:
    """Standardised increments xi_t.

    ``ind.values`` may be a (T, M) array of indicators from M independent
    subseries; they are averaged at each t and the variance divided by M.
    """
    values = np.asarray(ind.values)
    M = values.shape[1] if values.ndim == 2 else 1
    s2 = cumulative_variance(weights, ind.var0, M)
    return np.asarray(weights, dtype=float) * centered_values(values, ind.mean0) / math.sqrt(s2[-1])


def first_argmax(absB: np.ndarray, axis: int = -1) -> np.ndarray:
    K = absB.max(axis=axis, keepdims=True)
    hit = absB >= K - ARGMAX_RTOL * np.maximum(K, 1.0)
    return np.argmax(hit, axis=axis)


def bridge_arrays(xi: np.ndarray, nu: np.ndarray):
    """Vectorised bridge over the last axis: returns (B, K, 0-based argmax)."""
    S = np.cumsum(xi, axis=-1)
    B = S - nu * S[..., -1:]
    absB = np.abs(B)
    return B, absB.max(axis=-1), first_argmax(absB)


def bridge(xi, weights, ind: IndicatorSequence, scheme: WeightScheme | None = None) -> BridgeSample:
    values = np.asarray(ind.values)
    M = values.shape[1] if values.ndim == 2 else 1
    s2 = cumulative_variance(weights, ind.var0, M)
    nu = s2 / s2[-1]
    xi = np.asarray(xi, dtype=float)
    B, K, idx = bridge_arrays(xi, nu)
    return BridgeSample(
        nu=nu, B=B, K=float(K), that_index=int(idx) + 1, kind=ind.kind,
        scheme=WeightScheme.parse(scheme), xi=xi, M=M,
    )


def record_bridge(x, kind="upper", scheme=None, *, ties: str = "error", missing: str = "error") -> BridgeSample:
    """Indicators, standardisation and bridge for a single series in one call."""
    scheme = WeightScheme.parse(scheme)
    ind = record_indicators(x, kind, ties=ties, missing=missing)
    w = realize_weights(scheme, ind.kind, ind.T)
    return bridge(standardize(ind, w), w, ind, scheme)


def dense_bridge(sample: BridgeSample, per_segment: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Sample the broken-line process between grid points, for plotting only."""
    grid = np.unique(np.concatenate([
        np.linspace(a, b, per_segment + 1) for a, b in zip(sample.nu[:-1], sample.nu[1:])
    ]))
    # Zero-length segments collapse; keep the last B value at a repeated nu.
    nu, keep = np.unique(sample.nu[::-1], return_index=True)
    B = sample.B[::-1][keep]
    return grid, np.interp(grid, nu, B)


def fisher_transform(K: float, T: int) -> float:
    """-sqrt(T) log(1 - K / sqrt(T)).  Experimental; reference law assumed Kolmogorov."""
    root = math.sqrt(T)
    if K < 0 or K >= root:
        raise OutOfDomain(f"fisher transform needs 0 <= K < sqrt(T) = {root:.6g}, got {K}")
    return -root * math.log1p(-K / root)


def statistic_value(sample: BridgeSample) -> StatisticValue:
    return StatisticValue(sample.K, fisher_transform(sample.K, sample.T), sample.T)


def bridge_variance_curve(kind, scheme, T: int) -> np.ndarray:
    """Var(B_T(nu_t)) = nu_t (1 - nu_t) under H0."""
    if T < 2:
        raise TooShort(f"need T >= 2, got {T}")
    _, var0 = null_moments(kind, T)
    w = realize_weights(scheme, kind, T)
    s2 = cumulative_variance(w, var0)
    nu = s2 / s2[-1]
    return nu * (1.0 - nu)


def weighted_sum_skewness(n: float, T: int) -> float:
    """Skewness of sum_t t^n I_t for IID data, from its exact central moments.

    Tends to (2/3) sqrt(2 n) as T grows, so the weighted statistics are not
    asymptotically Gaussian for n > 0.
    """
    if T < 3:
        raise TooShort(f"need T >= 3, got {T}")
    t = np.arange(1, T + 1, dtype=float)
    w = t**n
    var = np.sum(w**2 * (t - 1.0) / t**2)
    mu3 = np.sum(w**3 * ((t - 1.0) * (t - 2.0)) / t**3)
    return float(mu3 / var**1.5)
