"""Simulation studies: size, power and changepoint-estimate accuracy.

Scenarios (rows t = 1..T, columns m = 1..M, eps IID N(0, 1)):

    A  Y = mu_t + eps,     mu_t = theta (t - t0) for t > t0, else 0
    B  Y = sigma_t eps,    sigma_t = 1 + theta (t - t0) for t > t0, else 1
    C  Y = mu_t + eps,     mu_t = theta for t > t0, else 0
    D  Y = eps0 if u <= tau, else mu_t + eps1, with mu_t as in A and eps0/eps1
       N(0, 1) truncated below/above Phi^-1(tau)

Unweighted statistics are compared with Kolmogorov quantiles, weighted ones
with Monte Carlo p-values from a null sample computed once per configuration.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from . import kolmogorov
from .errors import InvalidScenario
from .montecarlo import MonteCarloConfig, StatisticEvaluator, mc_pvalue, run_blocks, simulate_null_statistic
from .records import STATISTICS, SeriesMatrix, WeightRule, parse_statistic

log = logging.getLogger(__name__)

ALL_STATISTICS = tuple(STATISTICS)
DEFAULT_MC_REPLICATES = 1000


@dataclass(frozen=True)
class Scenario:
    id: str = "A"
    T: int = 100
    M: int = 1
    t0: int = 1
    theta: float = 0.0
    tau: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id).upper())
        if self.id not in "ABCD" or len(self.id) != 1:
            raise InvalidScenario(f"unknown scenario {self.id!r}")
        if self.T < 2 or self.M < 1:
            raise InvalidScenario("need T >= 2 and M >= 1")
        if not 1 <= self.t0 < self.T:
            raise InvalidScenario(f"t0 must satisfy 1 <= t0 < T, got t0={self.t0}, T={self.T}")
        if self.id == "D" and not 0.0 < self.tau < 1.0:
            raise InvalidScenario("tau must lie in (0, 1)")
        if self.id == "B" and 1.0 + self.theta * (self.T - self.t0) <= 0.0:
            raise InvalidScenario("scale drift makes sigma_t nonpositive")

    def drift(self) -> np.ndarray:
        """mu_t (A, C, D) or sigma_t (B) for t = 1..T."""
        t = np.arange(1, self.T + 1, dtype=float)
        after = t > self.t0
        if self.id == "C":
            return np.where(after, self.theta, 0.0)
        path = np.where(after, self.theta * (t - self.t0), 0.0)
        return 1.0 + path if self.id == "B" else path

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n independent (T, M) samples, shape (n, T, M)."""
        drift = self.drift()[:, None]
        if self.id == "D":
            # Phi^-1(u) given u <= tau (resp. > tau) is eps0 (resp. eps1)
            u = rng.random((n, self.T, self.M))
            return ndtri(u) + np.where(u > self.tau, drift, 0.0)
        eps = rng.standard_normal((n, self.T, self.M))
        if self.id == "B":
            return drift * eps
        return drift + eps


def generate(scenario: Scenario, seed: int) -> SeriesMatrix:
    rng = np.random.default_rng(seed)
    return SeriesMatrix(scenario.draw(rng, 1)[0], index=np.arange(1, scenario.T + 1))


def scenario_grid(id: str, T: int = 100, Ms=(1,), t0s=(50,), thetas=(0.0,), tau: float = 0.95) -> list[Scenario]:
    return [Scenario(id, T, M, t0, float(th), tau) for M in Ms for t0 in t0s for th in thetas]


def standard_power_grid(id: str) -> list[Scenario]:
    """T = 100, M in (1, 12, 36), t0 in (25, 50, 75) over a drift grid up to |theta| = 0.1."""
    if id == "A":
        neg = [-round(0.01 * k, 2) for k in range(10, 0, -1)]
        thetas = neg + [-0.005, 0.005] + [-x for x in reversed(neg)]
    else:
        thetas = [0.005] + [round(0.01 * k, 2) for k in range(1, 11)]
    return scenario_grid(id, 100, (1, 12, 36), (25, 50, 75), thetas)


def standard_estimation_grid(id: str) -> list[Scenario]:
    """t0 = 10, 20, ..., 90 with theta = 0.1 for M = 1 and theta = 0.05 for M = 36."""
    t0s = tuple(range(10, 100, 10))
    return scenario_grid(id, 100, (1,), t0s, (0.10,)) + scenario_grid(id, 100, (36,), t0s, (0.05,))


@dataclass
class ExperimentReport:
    experiment: str
    rows: list[dict]
    trials: int
    seed: int
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable)

    def _columns(self) -> list[str]:
        # rows of different scenarios may carry different fields (tau for D)
        return list(dict.fromkeys(k for row in self.rows for k in row))

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            writer = csv.DictWriter(buf, fieldnames=self._columns(), restval="", lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)
        return buf.getvalue()

    def to_table(self) -> str:
        if not self.rows:
            return ""
        cols = self._columns()
        cells = [[_fmt(r.get(c, "")) for c in cols] for r in self.rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
        lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
        return "\n".join(lines)

    def lookup(self, **keys) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in keys.items())]


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if np.isnan(v) else f"{v:.4f}"
    return str(v)


def _sub_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, np.uint64)[0])


class _Battery:
    """Evaluates a list of statistics on shared simulated data."""

    def __init__(self, statistics, T: int, M: int, seed: int, mc_replicates: int, chunks: int, nulls: dict):
        self.labels = list(statistics)
        self.evaluators = {}
        self.nulls = {}
        for label in self.labels:
            kind, scheme = parse_statistic(label)
            self.evaluators[label] = StatisticEvaluator(kind, scheme, T, M)
            if scheme.rule is not WeightRule.NONE:
                key = (label, T, M)
                if key not in nulls:
                    nseed = _sub_seed(seed, 7, ALL_STATISTICS.index(label), T, M)
                    nulls[key] = simulate_null_statistic(
                        kind, scheme, T, M, MonteCarloConfig(mc_replicates, nseed, chunks)
                    )
                self.nulls[label] = nulls[key]

    def run(self, scenario: Scenario, trials: int, seed: int, chunks: int):
        def draw(rng, n):
            X = scenario.draw(rng, n)
            out = []
            for label in self.labels:
                K, idx = self.evaluators[label](X)
                out += [K, idx + 1]
            return tuple(out)

        res = run_blocks(draw, trials, seed, chunks)
        return {label: (res[2 * i], res[2 * i + 1]) for i, label in enumerate(self.labels)}

    def reject(self, label: str, K: np.ndarray, alpha: float) -> np.ndarray:
        if label in self.nulls:
            return mc_pvalue(K, self.nulls[label]) <= alpha
        return K >= kolmogorov.quantile(1.0 - alpha)

    def reference(self, label: str) -> str:
        return "montecarlo" if label in self.nulls else "asymptotic"


def _binomial_se(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


def run_size(
    statistics=("N", "d", "s"),
    T: int = 50,
    M: int = 1,
    alphas=(0.01, 0.05, 0.10),
    trials: int = 10_000,
    seed: int = 0,
    *,
    mc_replicates: int = DEFAULT_MC_REPLICATES,
    chunks: int = 1,
) -> ExperimentReport:
    """Empirical rejection rates under IID N(0, 1) data."""
    if trials < 1000:
        log.warning("size study with %d trials is too small for a meaningful comparison", trials)
    scenario = Scenario("A", T, M, 1, 0.0)
    battery = _Battery(statistics, T, M, seed, mc_replicates, chunks, {})
    sims = battery.run(scenario, trials, _sub_seed(seed, 0), chunks)
    rows = []
    for label in battery.labels:
        K = sims[label][0]
        for alpha in alphas:
            rej = battery.reject(label, K, alpha)
            rate = float(rej.mean())
            rows.append({
                "statistic": label, "T": T, "M": M, "alpha": float(alpha), "rate": rate,
                "se": _binomial_se(rate, trials), "rejections": int(rej.sum()),
                "reference": battery.reference(label),
            })
    cfg = {"statistics": list(statistics), "T": T, "M": M, "alphas": list(alphas), "mc_replicates": mc_replicates}
    return ExperimentReport("size", rows, trials, seed, cfg)


def _scenario_fields(sc: Scenario) -> dict:
    out = {"scenario": sc.id, "T": sc.T, "M": sc.M, "t0": sc.t0, "theta": sc.theta}
    if sc.id == "D":
        out["tau"] = sc.tau
    return out


def run_power(
    statistics,
    scenarios,
    alpha: float = 0.05,
    trials: int = 10_000,
    seed: int = 0,
    *,
    mc_replicates: int = DEFAULT_MC_REPLICATES,
    chunks: int = 1,
) -> ExperimentReport:
    """Rejection rate of each statistic for every scenario in the grid."""
    nulls: dict = {}
    rows = []
    for i, sc in enumerate(scenarios):
        battery = _Battery(statistics, sc.T, sc.M, seed, mc_replicates, chunks, nulls)
        sims = battery.run(sc, trials, _sub_seed(seed, 1, i), chunks)
        for label in battery.labels:
            rej = battery.reject(label, sims[label][0], alpha)
            rate = float(rej.mean())
            rows.append({
                "statistic": label, **_scenario_fields(sc), "alpha": float(alpha), "power": rate,
                "se": _binomial_se(rate, trials), "reference": battery.reference(label),
            })
    cfg = {"statistics": list(statistics), "alpha": alpha, "mc_replicates": mc_replicates,
           "scenarios": [asdict(s) for s in scenarios]}
    return ExperimentReport("power", rows, trials, seed, cfg)


def _quartiles(values: np.ndarray) -> tuple[float, float, float]:
    if len(values) == 0:
        return (float("nan"),) * 3
    q1, q2, q3 = np.percentile(values, [25, 50, 75])
    return float(q1), float(q2), float(q3)


def run_estimation(
    statistics,
    scenarios,
    trials: int = 10_000,
    seed: int = 0,
    *,
    alpha: float = 0.05,
    mc_replicates: int = DEFAULT_MC_REPLICATES,
    chunks: int = 1,
) -> ExperimentReport:
    """Quartiles of the changepoint estimate over all trials and over rejected trials."""
    nulls: dict = {}
    rows = []
    for i, sc in enumerate(scenarios):
        battery = _Battery(statistics, sc.T, sc.M, seed, mc_replicates, chunks, nulls)
        sims = battery.run(sc, trials, _sub_seed(seed, 2, i), chunks)
        for label in battery.labels:
            K, est = sims[label]
            rej = battery.reject(label, K, alpha)
            q = _quartiles(est)
            qr = _quartiles(est[rej])
            rows.append({
                "statistic": label, **_scenario_fields(sc),
                "q1": q[0], "median": q[1], "q3": q[2],
                "rejected": int(rej.sum()),
                "q1_rejected": qr[0], "median_rejected": qr[1], "q3_rejected": qr[2],
            })
    cfg = {"statistics": list(statistics), "alpha": alpha, "mc_replicates": mc_replicates,
           "scenarios": [asdict(s) for s in scenarios]}
    return ExperimentReport("estimate", rows, trials, seed, cfg)
