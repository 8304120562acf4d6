import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from qensembles import kernels


@pytest.fixture(scope="module")
def key():
    return kernels.derive_key(12345)


def test_derive_key_is_stable_and_rejects_negative():
    assert kernels.derive_key(1) == kernels.derive_key(1)
    assert kernels.derive_key(1) != kernels.derive_key(2)
    with pytest.raises(ValueError):
        kernels.derive_key(-1)


def test_backends_agree_on_uniforms(key):
    a = kernels.hash_uniforms_nb(key, 7, 100, 50, 33)
    b = kernels.hash_uniforms_np(key, 7, 100, 50, 33)
    np.testing.assert_array_equal(a, b)


def test_backends_agree_on_shuffles(key):
    base = np.repeat(np.arange(3), [5, 4, 3])
    np.testing.assert_array_equal(
        kernels.shuffled_rows_nb(key, 1, 0, 500, base), kernels.shuffled_rows_np(key, 1, 0, 500, base)
    )


def test_backends_agree_on_born_counts(key):
    idx = kernels.shuffled_rows_np(key, 1, 0, 300, np.repeat([0, 1, 2], 6))
    p = np.array([1.0, 0.5, 0.2])
    np.testing.assert_array_equal(
        kernels.born_zero_counts_nb(key, 2, 0, idx, p), kernels.born_zero_counts_np(key, 2, 0, idx, p)
    )


def test_uniforms_look_uniform(key):
    u = kernels.hash_uniforms(key, 0, 0, 200, 100).ravel()
    assert u.min() >= 0 and u.max() < 1
    assert stats.kstest(u, "uniform").pvalue > 0.001
    # neighbouring rows and columns are uncorrelated
    grid = kernels.hash_uniforms(key, 0, 0, 2000, 2)
    assert abs(np.corrcoef(grid[:, 0], grid[:, 1])[0, 1]) < 0.1


def test_rows_do_not_depend_on_batch(key):
    whole = kernels.hash_uniforms(key, 3, 0, 100, 4)
    part = kernels.hash_uniforms(key, 3, 40, 10, 4)
    np.testing.assert_array_equal(whole[40:50], part)


def test_lanes_are_distinct(key):
    assert not np.array_equal(kernels.hash_uniforms(key, 1, 0, 5, 5), kernels.hash_uniforms(key, 2, 0, 5, 5))


def test_shuffle_preserves_multiset_and_is_uniform(key):
    base = np.array([0, 1, 2])
    rows = kernels.shuffled_rows(key, 5, 0, 6000, base)
    assert np.all(np.sort(rows, axis=1) == base)
    perms, counts = np.unique(rows, axis=0, return_counts=True)
    assert len(perms) == 6
    assert stats.chisquare(counts).pvalue > 0.001


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, QENSEMBLES_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from qensembles import kernels; print(kernels.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
