import numpy as np
from scipy import stats

from graphfki import rng


def test_uniform_open_interval_and_deterministic():
    key = rng.seed_key(42)
    u = rng.uniform(key, np.arange(100_000), 0, 0)
    assert np.all(u > 0) and np.all(u < 1)
    np.testing.assert_array_equal(u, rng.uniform(key, np.arange(100_000), 0, 0))


def test_substreams_depend_only_on_index():
    key = rng.seed_key(7)
    full = rng.uniform(key, np.arange(1000), 3, 1)
    part = rng.uniform(key, np.arange(500, 1000), 3, 1)
    np.testing.assert_array_equal(full[500:], part)


def test_distinct_lanes_steps_seeds():
    idx = np.arange(1000)
    a = rng.uniform(rng.seed_key(1), idx, 0, 0)
    assert not np.array_equal(a, rng.uniform(rng.seed_key(1), idx, 0, 1))
    assert not np.array_equal(a, rng.uniform(rng.seed_key(1), idx, 1, 0))
    assert not np.array_equal(a, rng.uniform(rng.seed_key(2), idx, 0, 0))


def test_uniformity_ks():
    u = rng.uniform(rng.seed_key(3), np.arange(50_000), 5, 0)
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_adjacent_streams_uncorrelated():
    key = rng.seed_key(0)
    a = rng.uniform(key, np.arange(0, 20_000, 2), 0, 0)
    b = rng.uniform(key, np.arange(1, 20_000, 2), 0, 0)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(len(a))


def test_extreme_counter_words():
    u = rng.uniform(rng.seed_key(2**64 - 1), np.array([0, 2**62]), 10**6, 1)
    assert np.all((u > 0) & (u < 1))
