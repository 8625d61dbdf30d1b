"""Distribution-free changepoint tests based on record-breaking events."""

from .api import PValueMode, TestRequest, TestResult, run_test
from .bridge import (
    BridgeSample,
    StatisticValue,
    bridge,
    bridge_variance_curve,
    fisher_transform,
    record_bridge,
    standardize,
    weighted_sum_skewness,
)
from .kolmogorov import quantile as kolmogorov_quantile
from .kolmogorov import survival as kolmogorov_survival
from .montecarlo import MonteCarloConfig, NullSample, mc_pvalue, simulate_null_statistic
from .multiseries import SubseriesSelection, pooled_bridge, select_subseries
from .pettitt import PettittResult, pettitt
from .records import (
    IndicatorKind,
    IndicatorSequence,
    SeriesMatrix,
    WeightRule,
    WeightScheme,
    null_moments,
    realize_weights,
    record_indicators,
)

__version__ = "0.1.0"
