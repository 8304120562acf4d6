"""Monte Carlo inner loops: counter-based uniforms, multiset shuffles, Born draws.

Every random number is a pure function of ``(key, lane, row, col)``: a
SplitMix64 finalizer chained over the four coordinates.  Rows are trials or
samples, so the stream of trial ``t`` never depends on how many trials run,
and the numba and numpy implementations agree bit for bit.

Each kernel exists twice: ``*_nb`` (numba) and ``*_np`` (vectorized numpy).
The unsuffixed names dispatch on :data:`qensembles._accel.USE_NUMBA`.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "derive_key",
    "hash_uniforms",
    "shuffled_rows",
    "born_zero_counts",
    "backend_name",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def derive_key(seed: int) -> int:
    """Map a user seed (any non-negative int) to a 64-bit stream key."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    state = np.random.SeedSequence(seed).generate_state(1, dtype=np.uint64)
    return int(state[0])


# ---------------------------------------------------------------- numba path


@njit
def _mix_nb(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def _uniform_nb(key, lane, row, col):
    h = _mix_nb(key + _GOLDEN * (lane + _ONE))
    h = _mix_nb(h + _GOLDEN * (row + _ONE))
    h = _mix_nb(h + _GOLDEN * (col + _ONE))
    return np.float64(h >> _S11) * _INV53


@njit
def _hash_uniforms_nb(key, lane, row0, n_rows, n_cols):
    out = np.empty((n_rows, n_cols), dtype=np.float64)
    k = np.uint64(key)
    ln = np.uint64(lane)
    for r in range(n_rows):
        row = np.uint64(row0 + r)
        for c in range(n_cols):
            out[r, c] = _uniform_nb(k, ln, row, np.uint64(c))
    return out


@njit
def _shuffled_rows_nb(key, lane, row0, n_rows, base):
    n = base.shape[0]
    out = np.empty((n_rows, n), dtype=np.int64)
    k = np.uint64(key)
    ln = np.uint64(lane)
    for r in range(n_rows):
        row = np.uint64(row0 + r)
        for i in range(n):
            out[r, i] = base[i]
        for j in range(n - 1, 0, -1):
            u = _uniform_nb(k, ln, row, np.uint64(j))
            s = int(u * (j + 1))
            tmp = out[r, s]
            out[r, s] = out[r, j]
            out[r, j] = tmp
    return out


@njit
def _born_zero_counts_nb(key, lane, row0, idx, p_zero):
    n_rows, m = idx.shape
    out = np.zeros(n_rows, dtype=np.int64)
    k = np.uint64(key)
    ln = np.uint64(lane)
    for r in range(n_rows):
        row = np.uint64(row0 + r)
        hits = 0
        for c in range(m):
            if _uniform_nb(k, ln, row, np.uint64(c)) < p_zero[idx[r, c]]:
                hits += 1
        out[r] = hits
    return out


def hash_uniforms_nb(key, lane, row0, n_rows, n_cols):
    return _hash_uniforms_nb(np.uint64(key), int(lane), int(row0), int(n_rows), int(n_cols))


def shuffled_rows_nb(key, lane, row0, n_rows, base):
    base = np.ascontiguousarray(base, dtype=np.int64)
    return _shuffled_rows_nb(np.uint64(key), int(lane), int(row0), int(n_rows), base)


def born_zero_counts_nb(key, lane, row0, idx, p_zero):
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    p_zero = np.ascontiguousarray(p_zero, dtype=np.float64)
    return _born_zero_counts_nb(np.uint64(key), int(lane), int(row0), idx, p_zero)


# ---------------------------------------------------------------- numpy path


def _mix_np(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def hash_uniforms_np(key, lane, row0, n_rows, n_cols):
    with np.errstate(over="ignore"):
        k = np.array([key], dtype=np.uint64)
        h = _mix_np(k + _GOLDEN * np.uint64(lane + 1))
        rows = np.arange(row0, row0 + n_rows, dtype=np.uint64)
        h = _mix_np(h + _GOLDEN * (rows + _ONE))
        cols = np.arange(n_cols, dtype=np.uint64)
        h = _mix_np(h[:, None] + _GOLDEN * (cols + _ONE)[None, :])
    return (h >> _S11).astype(np.float64) * _INV53


def shuffled_rows_np(key, lane, row0, n_rows, base):
    base = np.asarray(base, dtype=np.int64)
    n = base.shape[0]
    out = np.tile(base, (n_rows, 1))
    if n < 2:
        return out
    u = hash_uniforms_np(key, lane, row0, n_rows, n)
    rows = np.arange(n_rows)
    for j in range(n - 1, 0, -1):
        s = (u[:, j] * (j + 1)).astype(np.int64)
        tmp = out[rows, s]
        out[rows, s] = out[:, j]
        out[:, j] = tmp
    return out


def born_zero_counts_np(key, lane, row0, idx, p_zero):
    idx = np.asarray(idx, dtype=np.int64)
    p_zero = np.asarray(p_zero, dtype=np.float64)
    u = hash_uniforms_np(key, lane, row0, idx.shape[0], idx.shape[1])
    return np.count_nonzero(u < p_zero[idx], axis=1).astype(np.int64)


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    hash_uniforms = hash_uniforms_nb
    shuffled_rows = shuffled_rows_nb
    born_zero_counts = born_zero_counts_nb
else:
    hash_uniforms = hash_uniforms_np
    shuffled_rows = shuffled_rows_np
    born_zero_counts = born_zero_counts_np


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
