"""Record indicators, their exact null moments and weight schemes.

For a series of IID continuous observations the upper record indicators
``I_t`` are independent Bernoulli(1/t) variables, and the same holds for the
lower indicators.  At ``t >= 2`` an observation cannot be both an upper and a
lower record, so the difference ``d_t = I_t - I^L_t`` and the sum
``s_t = I_t + I^L_t`` are functions of the relative rank of ``X_t`` among the
first ``t`` observations and are again independent over ``t``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AllZeroWeights, ConfigurationError, MissingData, TiesDetected, TooShort

log = logging.getLogger(__name__)


class IndicatorKind(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    DIFF = "diff"
    SUM = "sum"

    @classmethod
    def parse(cls, value: str | IndicatorKind) -> IndicatorKind:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        try:
            return _KIND_ALIASES[key]
        except KeyError:
            raise ConfigurationError(f"unknown indicator kind {value!r}") from None

    @property
    def first_value(self) -> int:
        """Value taken at t = 1, where the observation is both records."""
        return {"upper": 1, "lower": 1, "diff": 0, "sum": 2}[self.value]


_KIND_ALIASES = {
    "upper": IndicatorKind.UPPER, "u": IndicatorKind.UPPER, "n": IndicatorKind.UPPER,
    "lower": IndicatorKind.LOWER, "l": IndicatorKind.LOWER,
    "diff": IndicatorKind.DIFF, "d": IndicatorKind.DIFF,
    "sum": IndicatorKind.SUM, "s": IndicatorKind.SUM,
}


class WeightRule(str, enum.Enum):
    NONE = "none"
    INVSD = "invsd"
    LINEAR = "linear"
    CUSTOM = "custom"


@dataclass(frozen=True)
class WeightScheme:
    rule: WeightRule = WeightRule.NONE
    custom: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rule", WeightRule(self.rule))
        if self.rule is WeightRule.CUSTOM and self.custom is None:
            raise ConfigurationError("custom weight scheme needs a weight vector")

    @classmethod
    def parse(cls, value: str | WeightScheme | None) -> WeightScheme:
        if value is None:
            return cls()
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"": "none", "var": "invsd", "inverse-sd": "invsd", "inversesd": "invsd"}
        key = aliases.get(key, key)
        try:
            rule = WeightRule(key)
        except ValueError:
            raise ConfigurationError(f"unknown weight scheme {value!r}") from None
        return cls(rule)

    @property
    def label(self) -> str:
        return self.rule.value


NONE = WeightScheme()
INVSD = WeightScheme(WeightRule.INVSD)
LINEAR = WeightScheme(WeightRule.LINEAR)

# Names used for the nine record statistics in reports.
STATISTICS: dict[str, tuple[IndicatorKind, WeightScheme]] = {
    "N": (IndicatorKind.UPPER, NONE),
    "N^var": (IndicatorKind.UPPER, INVSD),
    "N^linear": (IndicatorKind.UPPER, LINEAR),
    "d": (IndicatorKind.DIFF, NONE),
    "d^var": (IndicatorKind.DIFF, INVSD),
    "d^linear": (IndicatorKind.DIFF, LINEAR),
    "s": (IndicatorKind.SUM, NONE),
    "s^var": (IndicatorKind.SUM, INVSD),
    "s^linear": (IndicatorKind.SUM, LINEAR),
}


def statistic_label(kind: IndicatorKind, scheme: WeightScheme) -> str:
    base = {"upper": "N", "lower": "L", "diff": "d", "sum": "s"}[IndicatorKind.parse(kind).value]
    suffix = {"none": "", "invsd": "^var", "linear": "^linear", "custom": "^custom"}[scheme.rule.value]
    return base + suffix


def parse_statistic(label: str) -> tuple[IndicatorKind, WeightScheme]:
    try:
        return STATISTICS[label]
    except KeyError:
        raise ConfigurationError(
            f"unknown statistic {label!r}; expected one of {', '.join(STATISTICS)}"
        ) from None


@dataclass
class SeriesMatrix:
    """T x M grid of observations, rows are time and columns are subseries.

    ``index`` optionally labels the rows (calendar years) and ``columns`` the
    subseries (day of year).
    """

    values: np.ndarray
    missing: np.ndarray | None = None
    index: np.ndarray | None = None
    columns: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ConfigurationError("series matrix must be two-dimensional")
        if self.missing is None:
            missing = ~np.isfinite(values)
        else:
            missing = np.asarray(self.missing, dtype=bool).reshape(values.shape)
            if not np.all(np.isfinite(values[~missing])):
                raise MissingData("non-finite value not flagged as missing")
        self.values = np.where(missing, np.nan, values)
        self.missing = missing
        if values.shape[0] < 2:
            raise TooShort(f"need at least 2 time points, got {values.shape[0]}")
        if values.shape[1] < 1:
            raise ConfigurationError("series matrix has no columns")
        if self.index is not None:
            self.index = np.asarray(self.index)
            if len(self.index) != values.shape[0]:
                raise ConfigurationError("index length does not match number of rows")
        if self.columns is not None:
            self.columns = np.asarray(self.columns)
            if len(self.columns) != values.shape[1]:
                raise ConfigurationError("columns length does not match number of columns")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]

    def column(self, m: int) -> np.ndarray:
        return self.values[:, m]

    def select_columns(self, positions) -> SeriesMatrix:
        positions = np.asarray(positions, dtype=int)
        return SeriesMatrix(
            self.values[:, positions],
            self.missing[:, positions],
            index=self.index,
            columns=None if self.columns is None else self.columns[positions],
        )


@dataclass
class IndicatorSequence:
    kind: IndicatorKind
    values: np.ndarray
    mean0: np.ndarray
    var0: np.ndarray

    @property
    def T(self) -> int:
        return len(self.mean0)


def null_moments(kind, T: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact mean and variance of the indicators at t = 1..T under H0.

    The t = 1 entries are the degenerate values (variance 0).
    """
    kind = IndicatorKind.parse(kind)
    if T < 2:
        raise TooShort(f"need T >= 2, got {T}")
    t = np.arange(1, T + 1, dtype=float)
    if kind in (IndicatorKind.UPPER, IndicatorKind.LOWER):
        mean = 1.0 / t
        var = mean * (1.0 - mean)
    elif kind is IndicatorKind.DIFF:
        mean = np.zeros(T)
        var = 2.0 / t
    else:
        mean = 2.0 / t
        var = mean * (1.0 - mean)
    mean[0] = kind.first_value
    var[0] = 0.0
    if kind is IndicatorKind.SUM:
        var[1] = 0.0  # (2/2)(1 - 2/2), kept exact
    return mean, var


def indicator_values(x: np.ndarray, kind, axis: int = 0) -> np.ndarray:
    """Vectorised record indicators along ``axis`` (no tie or NaN checks).

    Used by the simulation paths; ``record_indicators`` is the checked
    single-column entry point.
    """
    kind = IndicatorKind.parse(kind)
    x = np.moveaxis(np.asarray(x), axis, 0)
    out = np.zeros(x.shape, dtype=np.int8)
    if kind in (IndicatorKind.UPPER, IndicatorKind.DIFF, IndicatorKind.SUM):
        upper = np.empty(x.shape, dtype=bool)
        upper[0] = True
        upper[1:] = x[1:] > np.maximum.accumulate(x, axis=0)[:-1]
        out += upper
    if kind in (IndicatorKind.LOWER, IndicatorKind.DIFF, IndicatorKind.SUM):
        lower = np.empty(x.shape, dtype=bool)
        lower[0] = True
        lower[1:] = x[1:] < np.minimum.accumulate(x, axis=0)[:-1]
        if kind is IndicatorKind.DIFF:
            out -= lower
        else:
            out += lower
    return np.moveaxis(out, 0, axis)


def _prepare_column(x, missing: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    bad = ~np.isfinite(x)
    if bad.any():
        if missing == "error":
            raise MissingData(f"{int(bad.sum())} missing value(s) in series")
        if missing != "compress":
            raise ConfigurationError(f"unknown missing-data policy {missing!r}")
        x = x[~bad]
    if len(x) < 2:
        raise TooShort(f"need at least 2 observations, got {len(x)}")
    return x


def _check_ties(x: np.ndarray, kind: IndicatorKind, ties: str) -> None:
    if ties not in ("error", "not-a-record"):
        raise ConfigurationError(f"unknown tie policy {ties!r}")
    hits = np.zeros(len(x) - 1, dtype=bool)
    if kind is not IndicatorKind.LOWER:
        hits |= x[1:] == np.maximum.accumulate(x)[:-1]
    if kind is not IndicatorKind.UPPER:
        hits |= x[1:] == np.minimum.accumulate(x)[:-1]
    if hits.any():
        where = np.flatnonzero(hits) + 2
        if ties == "error":
            raise TiesDetected(f"observation ties the running extremum at t = {where.tolist()[:10]}")
        log.warning("ties with the running extremum at t = %s counted as non-records", where.tolist()[:10])


def record_indicators(x, kind, *, ties: str = "error", missing: str = "error") -> IndicatorSequence:
    """Record indicators of one column with their null moments.

    ``ties``: ``"error"`` (default) or ``"not-a-record"``.
    ``missing``: ``"error"`` (default) or ``"compress"``, which drops missing
    entries and re-indexes time.
    """
    kind = IndicatorKind.parse(kind)
    x = _prepare_column(x, missing)
    _check_ties(x, kind, ties)
    values = indicator_values(x, kind)
    mean0, var0 = null_moments(kind, len(x))
    return IndicatorSequence(kind, values, mean0, var0)


def realize_weights(scheme, kind, T: int) -> np.ndarray:
    """Weight vector omega_1..omega_T for the given scheme and indicator kind."""
    scheme = WeightScheme.parse(scheme)
    kind = IndicatorKind.parse(kind)
    if T < 2:
        raise TooShort(f"need T >= 2, got {T}")
    t = np.arange(1, T + 1, dtype=float)
    rule = scheme.rule
    if rule is WeightRule.NONE:
        w = np.ones(T)
    elif rule is WeightRule.LINEAR:
        w = t - 1.0
    elif rule is WeightRule.INVSD:
        w = np.zeros(T)
        if kind is IndicatorKind.DIFF:
            w[1:] = np.sqrt(t[1:])
        elif kind is IndicatorKind.SUM:
            w[2:] = t[2:] / np.sqrt(t[2:] - 2.0)
        else:
            w[1:] = t[1:] / np.sqrt(t[1:] - 1.0)
    else:
        w = np.asarray(scheme.custom, dtype=float).ravel()
        if len(w) != T:
            raise ConfigurationError(f"custom weights have length {len(w)}, expected {T}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ConfigurationError("custom weights must be finite and nonnegative")
    _, var0 = null_moments(kind, T)
    if not np.any((w > 0) & (var0 > 0)):
        raise AllZeroWeights("weights vanish on every positive-variance time point")
    return w
