"""Test orchestration: configure, run and report a record (or Pettitt) test."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import kolmogorov
from .bridge import BridgeSample, fisher_transform
from .errors import ConfigurationError, MissingData
from .montecarlo import MonteCarloConfig, mc_pvalue, simulate_null_statistic
from .multiseries import pooled_bridge
from .pettitt import pettitt
from .records import IndicatorKind, SeriesMatrix, WeightRule, WeightScheme, statistic_label
from .stationio import Pipeline


class PValueMode(str, enum.Enum):
    ASYMPTOTIC = "asymptotic"
    MONTECARLO = "mc"


@dataclass
class TestRequest:
    kind: IndicatorKind | str = IndicatorKind.UPPER
    scheme: WeightScheme | str | None = None
    pipeline: Pipeline | str = Pipeline.RAW
    pvalue_mode: PValueMode | str | None = None  # None: asymptotic if unweighted, else MC
    mc: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    method: str = "records"
    ties: str = "error"
    missing: str = "error"
    fisher: bool = False

    __test__ = False  # not a pytest class

    def __post_init__(self):
        self.kind = IndicatorKind.parse(self.kind)
        self.scheme = WeightScheme.parse(self.scheme)
        self.pipeline = Pipeline.parse(self.pipeline)
        if self.method not in ("records", "pettitt"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        weighted = self.scheme.rule is not WeightRule.NONE
        if self.pvalue_mode is None:
            self.pvalue_mode = PValueMode.MONTECARLO if weighted else PValueMode.ASYMPTOTIC
        else:
            key = str(getattr(self.pvalue_mode, "value", self.pvalue_mode)).lower()
            try:
                self.pvalue_mode = PValueMode({"montecarlo": "mc", "monte-carlo": "mc"}.get(key, key))
            except ValueError:
                raise ConfigurationError(f"unknown p-value mode {key!r}") from None
        if weighted and self.pvalue_mode is PValueMode.ASYMPTOTIC:
            raise ConfigurationError(
                "weighted statistics are not asymptotically Kolmogorov; use Monte Carlo p-values"
            )
        if self.fisher and self.pvalue_mode is not PValueMode.ASYMPTOTIC:
            raise ConfigurationError("the Fisher-type transform is only offered with asymptotic p-values")

    @property
    def label(self) -> str:
        if self.method == "pettitt":
            return "Pettitt"
        return statistic_label(self.kind, self.scheme)

    def echo(self) -> dict:
        return {
            "method": self.method,
            "kind": self.kind.value,
            "weights": self.scheme.label,
            "pipeline": self.pipeline.value,
            "pvalue_mode": self.pvalue_mode.value,
            "replicates": self.mc.replicates,
            "seed": self.mc.seed,
            "chunks": self.mc.parallel_chunks,
            "ties": self.ties,
            "missing": self.missing,
            "fisher": self.fisher,
        }


@dataclass
class TestResult:
    label: str
    statistic: float
    pvalue: float
    pvalue_method: str
    that_index: int
    changepoint: object  # calendar label of that_index
    T: int
    M: int
    index: np.ndarray
    process: np.ndarray  # B_T(nu_t) or Pettitt's U_t
    nu: np.ndarray | None
    threshold95: float
    fisher: float | None = None
    bridge: BridgeSample | None = None
    config: dict = field(default_factory=dict)

    __test__ = False

    def to_dict(self, with_process: bool = True) -> dict:
        out = {
            "statistic_label": self.label,
            "statistic": self.statistic,
            "fisher_statistic": self.fisher,
            "pvalue": self.pvalue,
            "pvalue_method": self.pvalue_method,
            "changepoint_index": self.that_index,
            "changepoint": _plain(self.changepoint),
            "T": self.T,
            "M": self.M,
            "threshold95": self.threshold95,
            "config": self.config,
        }
        if with_process:
            out["index"] = [_plain(v) for v in self.index]
            out["process"] = self.process.tolist()
            out["nu"] = None if self.nu is None else self.nu.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def plot_rows(self) -> list[dict]:
        """Tidy (t, year, nu, |B|, threshold) rows for |B| vs year plots."""
        rows = []
        for i in range(self.T):
            rows.append({
                "t": i + 1,
                "year": _plain(self.index[i]),
                "nu": "" if self.nu is None else float(self.nu[i]),
                "abs_B": float(abs(self.process[i])),
                "threshold": self.threshold95,
            })
        return rows


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def _complete_rows(matrix: SeriesMatrix, policy: str) -> tuple[SeriesMatrix, np.ndarray]:
    index = matrix.index if matrix.index is not None else np.arange(1, matrix.T + 1)
    if not matrix.missing.any():
        return matrix, index
    if policy == "error":
        raise MissingData(f"{int(matrix.missing.sum())} missing value(s); use the 'compress' policy to drop them")
    if policy != "compress":
        raise ConfigurationError(f"unknown missing-data policy {policy!r}")
    if matrix.M > 1:
        keep = ~matrix.missing.any(axis=0)
        if not keep.any():
            raise MissingData("every column has missing values")
        return matrix.select_columns(np.flatnonzero(keep)), index
    keep = ~matrix.missing[:, 0]
    return SeriesMatrix(matrix.values[keep], index=index[keep], columns=matrix.columns), index[keep]


def run_test(matrix: SeriesMatrix, request: TestRequest | None = None) -> TestResult:
    """Run the requested test on ``matrix``.

    Multi-column matrices use the pooled statistic; the changepoint index
    is mapped back to the row label (calendar year) of ``matrix.index``.
    """
    request = request or TestRequest()
    matrix, index = _complete_rows(matrix, request.missing)
    q95 = kolmogorov.quantile(0.95)

    if request.method == "pettitt":
        if matrix.M != 1:
            raise ConfigurationError("the Pettitt test takes a single series")
        res = pettitt(matrix.column(0))
        return TestResult(
            "Pettitt", res.K_P, res.pvalue, "approximation", res.that_index, index[res.that_index - 1],
            matrix.T, 1, index, res.U, None, q95, config=request.echo(),
        )

    sample = pooled_bridge(matrix, request.kind, request.scheme, ties=request.ties)
    fisher = None
    if request.pvalue_mode is PValueMode.ASYMPTOTIC:
        if request.fisher:
            fisher = fisher_transform(sample.K, matrix.T)
            p = kolmogorov.survival(fisher)
        else:
            p = kolmogorov.survival(sample.K)
        method = "asymptotic"
    else:
        null = simulate_null_statistic(request.kind, request.scheme, matrix.T, matrix.M, request.mc)
        p = mc_pvalue(sample.K, null)
        method = "montecarlo"
    return TestResult(
        request.label, sample.K, p, method, sample.that_index, index[sample.that_index - 1],
        matrix.T, matrix.M, index, sample.B, sample.nu, q95, fisher=fisher, bridge=sample,
        config=request.echo(),
    )
