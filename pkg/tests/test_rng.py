import numpy as np
import pytest
from scipy import stats

from nilm_limits import rng


def test_chunking_does_not_change_values():
    whole = rng.normal_block(42, rng.STREAM_NOISE, 0, 1000, 4)
    parts = np.vstack([rng.normal_block(42, rng.STREAM_NOISE, s, 100, 4) for s in range(0, 1000, 100)])
    assert whole.tobytes() == parts.tobytes()


def test_single_index_matches_block():
    block = rng.normal_block(7, rng.STREAM_NOISE, 100, 5, 3)
    for i in range(5):
        assert rng.standard_normal(7, 100 + i, 3).tobytes() == block[i].tobytes()


def test_width_prefix_is_stable():
    # component j of sample i never depends on the row width
    a = rng.uniform_block(3, rng.STREAM_USER, 0, 50, 2)
    b = rng.uniform_block(3, rng.STREAM_USER, 0, 50, 7)
    assert a.tobytes() == np.ascontiguousarray(b[:, :2]).tobytes()


def test_streams_and_seeds_differ():
    a = rng.uniform_block(1, rng.STREAM_NOISE, 0, 100, 1)
    assert not np.array_equal(a, rng.uniform_block(1, rng.STREAM_SCENARIO, 0, 100, 1))
    assert not np.array_equal(a, rng.uniform_block(2, rng.STREAM_NOISE, 0, 100, 1))


def test_uniforms_open_interval_and_uniform():
    u = rng.uniform_block(11, rng.STREAM_NOISE, 0, 200_000, 1)[:, 0]
    assert u.min() > 0 and u.max() < 1
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_normals_pass_ks_and_are_uncorrelated():
    z = rng.normal_block(5, rng.STREAM_NOISE, 0, 100_000, 3)
    for j in range(3):
        assert stats.kstest(z[:, j], "norm").pvalue > 1e-3
    c = np.corrcoef(z.T)
    assert np.all(np.abs(c - np.eye(3)) < 0.02)
    # consecutive indices are independent too
    assert abs(np.corrcoef(z[:-1, 0], z[1:, 0])[0, 1]) < 0.02


def test_large_seed_accepted_and_bad_seed_rejected():
    rng.uniform_stream(2 ** 64 - 1, 0, 2)
    with pytest.raises(ValueError):
        rng.uniform_stream(2 ** 64, 0, 2)
