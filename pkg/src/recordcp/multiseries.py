"""Pooled statistic over M independent subseries and subseries selection.

Records are computed separately in each column; at each t the indicators are
averaged over columns, so the null variance of the increment is divided by M.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bridge import BridgeSample, bridge, cumulative_variance, standardize
from .errors import ConfigurationError, InsufficientYears, InvalidIndices, MissingData
from .records import (
    IndicatorSequence,
    SeriesMatrix,
    WeightScheme,
    null_moments,
    realize_weights,
    record_indicators,
)

DAYS = 365
MIN_YEARS = 10


@dataclass
class PooledIncrement:
    xi: np.ndarray
    sigma2: np.ndarray


class SelectionMethod(str, enum.Enum):
    FIXED_SPACING = "spacing"
    GREEDY_CORRELATION = "greedy"
    USER_PROVIDED = "user"


@dataclass
class SubseriesSelection:
    selected: list[int]  # 1-based day-of-year indices
    threshold: float | None
    method: SelectionMethod
    max_correlation: float | None = None

    def __post_init__(self):
        sel = list(self.selected)
        if not sel:
            raise InvalidIndices("empty subseries selection")
        if any(b <= a for a, b in zip(sel, sel[1:])):
            raise InvalidIndices("subseries indices must be strictly increasing")
        if sel[0] < 1 or sel[-1] > DAYS:
            raise InvalidIndices(f"subseries indices must lie in [1, {DAYS}]")


def pooled_indicators(matrix: SeriesMatrix, kind, *, ties: str = "error") -> IndicatorSequence:
    """Per-column indicators stacked into a (T, M) IndicatorSequence."""
    if matrix.missing.any():
        bad = np.flatnonzero(matrix.missing.any(axis=0))
        raise MissingData(f"{len(bad)} column(s) contain missing values; pooling needs complete columns")
    cols = [record_indicators(matrix.column(m), kind, ties=ties) for m in range(matrix.M)]
    values = np.stack([c.values for c in cols], axis=1)
    return IndicatorSequence(cols[0].kind, values, cols[0].mean0, cols[0].var0)


def pooled_increment(ind: IndicatorSequence, weights) -> PooledIncrement:
    values = np.asarray(ind.values)
    M = values.shape[1] if values.ndim == 2 else 1
    return PooledIncrement(standardize(ind, weights), cumulative_variance(weights, ind.var0, M))


def pooled_bridge(matrix: SeriesMatrix, kind="upper", scheme=None, *, ties: str = "error") -> BridgeSample:
    """Bridge and K_T joining the records of every column of ``matrix``."""
    scheme = WeightScheme.parse(scheme)
    ind = pooled_indicators(matrix, kind, ties=ties)
    w = realize_weights(scheme, ind.kind, matrix.T)
    if matrix.M == 1:
        ind = IndicatorSequence(ind.kind, ind.values[:, 0], ind.mean0, ind.var0)
    return bridge(standardize(ind, w), w, ind, scheme)


def pooled_sigma2(kind, scheme, T: int, M: int) -> float:
    _, var0 = null_moments(kind, T)
    return float(cumulative_variance(realize_weights(scheme, kind, T), var0, M)[-1])


def _day_positions(matrix: SeriesMatrix) -> np.ndarray:
    if matrix.columns is not None:
        return np.asarray(matrix.columns, dtype=int)
    return np.arange(1, matrix.M + 1)


def correlation_cutoff(alpha: float, n_years: int) -> float:
    """Largest rank correlation not significant at two-sided level ``alpha``.

    Uses the t approximation r = t / sqrt(n - 2 + t^2).
    """
    t = stats.t.ppf(1.0 - alpha / 2.0, n_years - 2)
    return float(t / math.sqrt(n_years - 2 + t * t))


def select_subseries(
    matrix365: SeriesMatrix,
    method: str | SelectionMethod = SelectionMethod.GREEDY_CORRELATION,
    threshold: float = 0.05,
    *,
    m_target: int | None = None,
    step: int | None = None,
    indices=None,
) -> SubseriesSelection:
    """Choose approximately independent day-of-year columns.

    ``spacing``: every ``step``-th day starting at day 1, with
    ``step = ceil(365 / m_target)`` unless given directly.
    ``greedy``: walk the days in order and keep a day when its Spearman
    correlation with the last kept day is not significant at level
    ``threshold`` (two-sided), i.e. below ``correlation_cutoff``.
    ``user``: validate and echo ``indices``.

    Days with a missing value in any year are never selected by the
    automatic methods.
    """
    method = SelectionMethod(method)
    days = _day_positions(matrix365)
    complete = ~matrix365.missing.any(axis=0)

    if method is SelectionMethod.USER_PROVIDED:
        if indices is None:
            raise InvalidIndices("user selection needs explicit indices")
        sel = [int(i) for i in indices]
        SubseriesSelection(sel, None, method)  # validates
        missing = sorted(set(sel) - set(days.tolist()))
        if missing:
            raise InvalidIndices(f"days {missing[:10]} are not columns of the matrix")
        return SubseriesSelection(sel, None, method)

    if method is SelectionMethod.FIXED_SPACING:
        if step is None:
            if not m_target or m_target < 1:
                raise ConfigurationError("fixed spacing needs m_target >= 1 or a step")
            step = math.ceil(DAYS / m_target)
        if step < 1:
            raise ConfigurationError("spacing step must be >= 1")
        wanted = set(range(1, DAYS + 1, step))
        sel = [int(d) for d, ok in zip(days, complete) if ok and d in wanted]
        return SubseriesSelection(sel, None, method)

    if not 0.0 < threshold < 1.0:
        raise ConfigurationError("threshold must lie in (0, 1)")
    if matrix365.T < MIN_YEARS:
        raise InsufficientYears(f"need at least {MIN_YEARS} years to estimate correlations, got {matrix365.T}")
    cutoff = correlation_cutoff(threshold, matrix365.T)
    ranks = stats.rankdata(matrix365.values, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ranks = (ranks - ranks.mean(axis=0)) / ranks.std(axis=0)
    sel: list[int] = []
    last = None
    for pos in np.flatnonzero(complete):
        if last is not None:
            r = float(np.mean(ranks[:, pos] * ranks[:, last]))
            if not r < cutoff:
                continue
        sel.append(int(days[pos]))
        last = pos
    return SubseriesSelection(sel, threshold, method, max_correlation=cutoff)


def apply_selection(matrix365: SeriesMatrix, selection: SubseriesSelection) -> SeriesMatrix:
    days = _day_positions(matrix365).tolist()
    where = {d: i for i, d in enumerate(days)}
    return matrix365.select_columns([where[d] for d in selection.selected])
