"""Monte Carlo null distributions and p-values.

Replicates are generated in fixed-size blocks; block ``b`` draws from a
generator seeded with ``SeedSequence(seed, spawn_key=(b,))``.  Chunks only
decide how blocks are grouped for the worker threads, so results do not
depend on the chunk count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bridge import bridge_arrays, cumulative_variance
from .errors import ConfigurationError, TooShort
from .records import IndicatorKind, WeightScheme, indicator_values, null_moments, realize_weights

BLOCK_SIZE = 256
P_RTOL = 1e-10


@dataclass(frozen=True)
class MonteCarloConfig:
    replicates: int = 10_000
    seed: int = 0
    parallel_chunks: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigurationError("replicates must be positive")
        if self.parallel_chunks < 1:
            raise ConfigurationError("parallel_chunks must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


@dataclass
class NullSample:
    statistic_values: np.ndarray
    kind: IndicatorKind
    scheme: WeightScheme
    T: int
    M: int
    config: MonteCarloConfig = field(default_factory=MonteCarloConfig)

    @property
    def replicates(self) -> int:
        return len(self.statistic_values)

    def critical_value(self, alpha: float) -> float:
        """Empirical (1 - alpha) quantile (type 1 / inverse ECDF)."""
        v = self.statistic_values
        k = min(len(v) - 1, max(0, math.ceil((1.0 - alpha) * len(v)) - 1))
        return float(v[k])


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def run_blocks(draw, total: int, seed: int, chunks: int = 1, block_size: int = BLOCK_SIZE):
    """Evaluate ``draw(rng, n)`` over deterministic blocks and concatenate.

    ``draw`` returns an array or a tuple of arrays with leading length ``n``.
    """
    n_blocks = max(1, math.ceil(total / block_size))
    sizes = [min(block_size, total - b * block_size) for b in range(n_blocks)]

    def work(blocks):
        return [draw(block_generator(seed, b), sizes[b]) for b in blocks]

    groups = [list(g) for g in np.array_split(np.arange(n_blocks), min(chunks, n_blocks))]
    if len(groups) == 1:
        parts = work(groups[0])
    else:
        with ThreadPoolExecutor(max_workers=len(groups)) as pool:
            parts = [p for res in pool.map(work, groups) for p in res]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(cols) for cols in zip(*parts))
    return np.concatenate(parts)


class StatisticEvaluator:
    """K_T and argmax for batches of (n, T, M) observations of one configuration."""

    def __init__(self, kind, scheme, T: int, M: int = 1):
        self.kind = IndicatorKind.parse(kind)
        self.scheme = WeightScheme.parse(scheme)
        self.T, self.M = T, M
        self.mean0, self.var0 = null_moments(self.kind, T)
        self.weights = realize_weights(self.scheme, self.kind, T)
        s2 = cumulative_variance(self.weights, self.var0, M)
        self.sigma_T = math.sqrt(s2[-1])
        self.nu = s2 / s2[-1]

    def from_indicators(self, ind: np.ndarray):
        """``ind`` has shape (n, T, M); returns (K, 0-based argmax, B)."""
        centered = ind.astype(float).mean(axis=2) - self.mean0
        xi = self.weights * centered / self.sigma_T
        B, K, idx = bridge_arrays(xi, self.nu)
        return K, idx, B

    def __call__(self, X: np.ndarray):
        X = np.asarray(X)
        if X.ndim == 2:
            X = X[:, :, None]
        K, idx, _ = self.from_indicators(indicator_values(X, self.kind, axis=1))
        return K, idx


def random_ranks(rng: np.random.Generator, n: int, T: int, M: int) -> np.ndarray:
    """n replicates of M independent random permutations of 0..T-1, shape (n, T, M)."""
    base = np.broadcast_to(np.arange(T, dtype=np.int32), (n, M, T))
    return np.swapaxes(rng.permuted(base, axis=2), 1, 2)


def simulate_null_statistic(kind, scheme, T: int, M: int = 1, config: MonteCarloConfig | None = None) -> NullSample:
    """Null distribution of the configured K_T-type statistic by permutation sampling."""
    config = config or MonteCarloConfig()
    if T < 2:
        raise TooShort(f"need T >= 2, got {T}")
    if M < 1:
        raise ConfigurationError("M must be >= 1")
    stat = StatisticEvaluator(kind, scheme, T, M)

    def draw(rng, n):
        return stat(random_ranks(rng, n, T, M))[0]

    values = run_blocks(draw, config.replicates, config.seed, config.parallel_chunks)
    return NullSample(np.sort(values), stat.kind, stat.scheme, T, M, config)


def mc_pvalue(observed, null: NullSample | np.ndarray):
    """(1 + #{replicates >= observed}) / (R + 1).

    Replicates within a relative 1e-10 of ``observed`` count as ties, so a
    statistic recomputed along a different floating-point path is not
    pushed past its own mass point.  Accepts scalars or arrays.
    """
    values = null.statistic_values if isinstance(null, NullSample) else np.sort(np.asarray(null))
    if len(values) == 0:
        raise ConfigurationError("null sample is empty")
    obs = np.asarray(observed, dtype=float)
    idx = np.searchsorted(values, obs - P_RTOL * np.maximum(np.abs(obs), 1.0), side="left")
    p = (1.0 + (len(values) - idx)) / (len(values) + 1.0)
    return float(p) if p.ndim == 0 else p
