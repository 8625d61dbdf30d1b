"""Pettitt's rank test for a single change in location."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import MissingData, TooShort


@dataclass
class PettittResult:
    U: np.ndarray
    K_P: float
    that_index: int  # 1-based, last index of the first segment
    pvalue: float


def pettitt(series) -> PettittResult:
    """U_t = 2 sum_{i<=t} r_i - t (T + 1) on mid-ranks, K_P = max |U_t|.

    The p-value is the usual approximation min(1, 2 exp(-6 K^2 / (T^3 + T^2))).
    """
    x = np.asarray(series, dtype=float).ravel()
    if len(x) < 2:
        raise TooShort(f"need at least 2 observations, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise MissingData("Pettitt test needs a complete series")
    T = len(x)
    r = rankdata(x)  # mid-ranks for ties
    t = np.arange(1, T + 1)
    # 2 * cumsum of half-integer mid-ranks is an exact integer
    U = 2.0 * np.cumsum(r) - t * (T + 1.0)
    absU = np.abs(U)
    K = float(absU.max())
    idx = int(np.argmax(absU)) + 1
    p = min(1.0, 2.0 * math.exp(-6.0 * K * K / (T**3 + T**2)))
    return PettittResult(U, K, idx, p)
