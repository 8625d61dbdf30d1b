import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

import oracles
from recordcp import kolmogorov
from recordcp.bridge import record_bridge
from recordcp.errors import ConfigurationError, TooShort
from recordcp.montecarlo import (
    MonteCarloConfig,
    NullSample,
    StatisticEvaluator,
    mc_pvalue,
    random_ranks,
    run_blocks,
    simulate_null_statistic,
)
from recordcp.records import STATISTICS


def test_config_validation():
    with pytest.raises(ConfigurationError):
        MonteCarloConfig(replicates=0)
    with pytest.raises(ConfigurationError):
        MonteCarloConfig(parallel_chunks=0)
    with pytest.raises(ConfigurationError):
        MonteCarloConfig(seed=-1)
    with pytest.raises(TooShort):
        simulate_null_statistic("upper", "none", 1)


def test_deterministic_for_fixed_seed():
    cfg = MonteCarloConfig(replicates=3000, seed=42)
    a = simulate_null_statistic("diff", "linear", 40, 1, cfg)
    b = simulate_null_statistic("diff", "linear", 40, 1, cfg)
    assert np.array_equal(a.statistic_values, b.statistic_values)
    c = simulate_null_statistic("diff", "linear", 40, 1, MonteCarloConfig(3000, 43))
    assert not np.array_equal(a.statistic_values, c.statistic_values)


@pytest.mark.parametrize("chunks", [2, 3, 7, 64])
def test_chunk_count_does_not_change_results(chunks):
    base = simulate_null_statistic("upper", "none", 30, 3, MonteCarloConfig(2000, 5, 1))
    other = simulate_null_statistic("upper", "none", 30, 3, MonteCarloConfig(2000, 5, chunks))
    assert np.array_equal(base.statistic_values, other.statistic_values)


def test_null_sample_shape():
    s = simulate_null_statistic("sum", "invsd", 20, 2, MonteCarloConfig(777, 0))
    assert s.replicates == 777 and s.T == 20 and s.M == 2
    assert np.all(np.diff(s.statistic_values) >= 0)


def test_random_ranks_are_permutations():
    r = random_ranks(np.random.default_rng(0), 50, 12, 3)
    assert r.shape == (50, 12, 3)
    assert np.array_equal(np.sort(r, axis=1), np.broadcast_to(np.arange(12)[None, :, None], r.shape))


def test_batch_evaluator_matches_single_series_path():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((40, 25))
    for label, (kind, scheme) in STATISTICS.items():
        K, idx = StatisticEvaluator(kind, scheme, 25, 1)(X)
        for i in range(40):
            s = record_bridge(X[i], kind, scheme)
            assert K[i] == s.K
            assert idx[i] + 1 == s.that_index


def test_t3_matches_enumeration():
    exact = oracles.merge_distribution(
        [(max(abs(b) for b in oracles.bridge_counts(oracles.indicators(list(p), "upper"), "upper")), Fraction(1, 6))
         for p in itertools.permutations(range(3))]
    )
    R = 20_000
    null = simulate_null_statistic("upper", "none", 3, 1, MonteCarloConfig(R, 9))
    v = null.statistic_values
    assert sum(np.isclose(v, val, atol=1e-9).sum() for val, _ in exact) == R
    for val, p in exact:
        freq = np.isclose(v, val, atol=1e-9).mean()
        se = math.sqrt(float(p) * (1 - float(p)) / R)
        assert abs(freq - float(p)) < 3 * se


def test_pvalue_examples():
    null = np.arange(1.0, 1000.0)  # R = 999
    assert mc_pvalue(1e6, null) == pytest.approx(0.001)
    assert mc_pvalue(-1.0, null) == 1.0
    assert abs(mc_pvalue(np.median(null), null) - 0.5) <= 1 / 1000 + 1e-12
    # the replicate equal to the observation counts
    assert mc_pvalue(999.0, null) == pytest.approx(2 / 1000)
    assert mc_pvalue(999.0 * (1 + 1e-13), null) == pytest.approx(2 / 1000)
    assert np.allclose(mc_pvalue(np.array([1e6, -1.0]), null), [0.001, 1.0])
    with pytest.raises(ConfigurationError):
        mc_pvalue(1.0, np.array([]))


def test_critical_value():
    s = NullSample(np.arange(1.0, 101.0), None, None, 10, 1)
    assert s.critical_value(0.05) == 95.0
    assert mc_pvalue(s.critical_value(0.05), s) == pytest.approx(7 / 101)


@pytest.mark.parametrize("label", ["N", "d^var", "s^linear"])
def test_permutations_match_normal_draws(label):
    kind, scheme = STATISTICS[label]
    T, R = 40, 10_000
    perm = simulate_null_statistic(kind, scheme, T, 1, MonteCarloConfig(R, 1)).statistic_values
    ev = StatisticEvaluator(kind, scheme, T, 1)
    normal = ev(np.random.default_rng(2).standard_normal((R, T)))[0]
    assert stats.ks_2samp(perm, normal).pvalue > 0.001


def test_permutations_match_normal_draws_pooled():
    T, M, R = 30, 4, 10_000
    perm = simulate_null_statistic("upper", "none", T, M, MonteCarloConfig(R, 3)).statistic_values
    ev = StatisticEvaluator("upper", "none", T, M)
    normal = ev(np.random.default_rng(4).exponential(size=(R, T, M)))[0]
    assert stats.ks_2samp(perm, normal).pvalue > 0.001


@pytest.mark.slow
@pytest.mark.parametrize("label", list(STATISTICS))
def test_size_calibration_t50(label):
    kind, scheme = STATISTICS[label]
    T, trials = 50, 10_000
    null = simulate_null_statistic(kind, scheme, T, 1, MonteCarloConfig(100_000, 11))
    ev = StatisticEvaluator(kind, scheme, T, 1)
    K = run_blocks(lambda rng, n: ev(random_ranks(rng, n, T, 1))[0], trials, 12)
    p = mc_pvalue(K, null)
    for alpha in (0.01, 0.05, 0.10):
        se = math.sqrt(alpha * (1 - alpha) / trials)
        assert abs((p <= alpha).mean() - alpha) < 3 * se


def test_run_blocks_handles_tuples_and_partial_blocks():
    def draw(rng, n):
        u = rng.random(n)
        return u, 2 * u

    a, b = run_blocks(draw, 1000, 0, chunks=3, block_size=300)
    assert len(a) == 1000 and np.array_equal(b, 2 * a)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="null law at T=500 is still far from its Kolmogorov limit (logarithmic convergence)")
def test_quantile_near_kolmogorov_at_t500():
    null = simulate_null_statistic("upper", "none", 500, 1, MonteCarloConfig(100_000, 0))
    assert abs(null.critical_value(0.05) - kolmogorov.quantile(0.95)) <= 0.02
