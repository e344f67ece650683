"""Pure numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function. Both backends produce
bit-identical sampled matrices and embeddings; see ``kernels.py`` for the
selection logic.
"""

import numpy as np

_U64 = np.uint64
GOLDEN = _U64(0x9E3779B97F4A7C15)
DERIVE_SALT = _U64(0xD1B54A32D192ED03)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_LO32 = _U64(0xFFFFFFFF)


def mix64(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=_U64)
    z = (z ^ (z >> _U64(30))) * _M1
    z = (z ^ (z >> _U64(27))) * _M2
    return z ^ (z >> _U64(31))


def _bounded(word, bound):
    # floor(word * bound / 2**64) without 128-bit integers; bound < 2**32
    b = _U64(bound)
    hi = word >> _U64(32)
    lo = word & _LO32
    return (hi * b + ((lo * b) >> _U64(32))) >> _U64(32)


def sample_columns(seed, col_start, col_stop, s, block_size):
    cols = np.arange(col_start, col_stop, dtype=_U64)
    with np.errstate(over="ignore"):
        base = mix64(np.array([seed], dtype=_U64) + GOLDEN)[0]
        colkey = mix64(base + (cols + _U64(1)) * GOLDEN)
        blocks = np.arange(s, dtype=_U64)
        lane0 = (_U64(2) * blocks + _U64(1)) * GOLDEN
        lane1 = (_U64(2) * blocks + _U64(2)) * GOLDEN
        w_row = mix64(colkey[:, None] + lane0[None, :])
        w_sign = mix64(colkey[:, None] + lane1[None, :])
    rows = _bounded(w_row, block_size).astype(np.int64)
    rows += np.arange(s, dtype=np.int64)[None, :] * block_size
    signs = np.where((w_sign >> _U64(63)) == 0, 1, -1).astype(np.int8)
    return rows, signs


def derive_seed(seed, counter):
    with np.errstate(over="ignore"):
        base = mix64(np.array([seed], dtype=_U64) ^ DERIVE_SALT)[0]
        return int(mix64(np.array([base + (_U64(counter) + _U64(1)) * GOLDEN]))[0])


def scatter_csr(indptr, indices, data, rows, signs, scale, out):
    s = rows.shape[1]
    n = indptr.shape[0] - 1
    nnz_per_row = np.diff(indptr)
    owner = np.repeat(np.arange(n), nnz_per_row)
    vals = data * scale
    for b in range(s):
        r = rows[indices, b]
        contrib = np.where(signs[indices, b] > 0, vals, -vals)
        np.add.at(out, (owner, r), contrib)
    return out


def scatter_dense(X, rows, signs, scale, out):
    s = rows.shape[1]
    vals = X * scale
    for b in range(s):
        contrib = np.where(signs[:, b, None] > 0, vals, -vals)
        np.add.at(out, rows[:, b], contrib)
    return out


def pair_sq_dists(Y, I, J, chunk=65536):
    # sequential column accumulation matches the compiled loop bit for bit
    out = np.empty(I.shape[0], dtype=np.float64)
    for lo in range(0, I.shape[0], chunk):
        hi = min(lo + chunk, I.shape[0])
        diff = Y[I[lo:hi]] - Y[J[lo:hi]]
        acc = np.zeros(hi - lo)
        for c in range(diff.shape[1]):
            acc += diff[:, c] * diff[:, c]
        out[lo:hi] = acc
    return out
