"""Block-structured sparse JL matrices.

An ``m x d`` matrix with ``s`` nonzeros per column: the rows are cut into
``s`` consecutive blocks of ``m/s`` rows and every column gets exactly one
entry ``+-1/sqrt(s)`` per block.

Randomness is counter based. For column ``j`` and block ``b`` two 64-bit
words are drawn::

    base   = mix(seed + G)
    colkey = mix(base + (j + 1) * G)
    w_row  = mix(colkey + (2b + 1) * G)
    w_sign = mix(colkey + (2b + 2) * G)

with ``mix`` the SplitMix64 finalizer, ``G = 0x9E3779B97F4A7C15`` and all
arithmetic mod 2**64. The row inside the block is
``floor(w_row * block_size / 2**64)`` and the sign is ``+1`` iff the top bit
of ``w_sign`` is clear. Any column can be regenerated on its own.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .vectors import Dataset, SparseVector

FORMAT_VERSION = 1
PRNG_ID = "splitmix64-block-v1"
MATERIALIZE_LIMIT = 10**8


class DimensionMismatch(ValueError):
    pass


def resolve_threads(threads: int | None) -> int:
    """Explicit value, else SPARSEJL_THREADS, else 1."""
    if threads is None:
        env = os.environ.get("SPARSEJL_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def _check_shape(m: int, d: int, s: int) -> None:
    if s < 1 or d < 1 or m < 1:
        raise ValueError(f"m, d, s must be positive (got m={m}, d={d}, s={s})")
    if s > m:
        raise ValueError(f"sparsity s={s} exceeds row count m={m}")
    if m % s:
        raise ValueError(f"s={s} does not divide m={m}")
    if m // s >= 2**32:
        raise ValueError("block size must be below 2**32")


@dataclass(frozen=True, eq=False)
class SparseJLMatrix:
    m: int
    d: int
    s: int
    seed: int
    rows: np.ndarray
    signs: np.ndarray
    prng_id: str = PRNG_ID

    @property
    def block_size(self) -> int:
        return self.m // self.s

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.s)

    @classmethod
    def sample(cls, m: int, d: int, s: int, seed: int = 0) -> SparseJLMatrix:
        _check_shape(m, d, s)
        rows, signs = kernels.sample_columns(seed % 2**64, 0, d, s, m // s)
        rows.setflags(write=False)
        signs.setflags(write=False)
        return cls(m, d, s, seed, rows, signs)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Regenerate column ``j`` (rows, signs) from the seed alone."""
        if not 0 <= j < self.d:
            raise IndexError(j)
        rows, signs = kernels.sample_columns(self.seed % 2**64, j, j + 1, self.s, self.block_size)
        return rows[0], signs[0]

    def __eq__(self, other):
        if not isinstance(other, SparseJLMatrix):
            return NotImplemented
        return (
            (self.m, self.d, self.s) == (other.m, other.d, other.s)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.signs, other.signs)
        )

    __hash__ = None

    # ------------------------------------------------------------- application

    def apply_sparse(self, x: SparseVector) -> np.ndarray:
        """Embed one sparse vector; touches s * nnz(x) output slots."""
        if x.dim != self.d:
            raise DimensionMismatch(f"vector has dim {x.dim}, matrix has d={self.d}")
        out = np.zeros((1, self.m))
        indptr = np.array([0, x.nnz], dtype=np.int64)
        kernels.scatter_csr(indptr, x.indices, x.values, self.rows, self.signs, self.scale, out)
        return out[0]

    def apply_dataset(self, X: Dataset | Sequence[SparseVector], threads: int | None = None) -> np.ndarray:
        """Embed every point; row ``i`` of the result is ``A @ X[i]``.

        Chunks are written to disjoint row ranges, so the output does not
        depend on ``threads``.
        """
        points = X.points if isinstance(X, Dataset) else list(X)
        for i, p in enumerate(points):
            if p.dim != self.d:
                raise DimensionMismatch(f"point {i} has dim {p.dim}, matrix has d={self.d}")
        out = np.zeros((len(points), self.m))
        if not points:
            return out
        indptr, indices, data = Dataset(self.d, points).to_csr()
        threads = resolve_threads(threads)
        n = len(points)
        if threads == 1:
            kernels.scatter_csr(indptr, indices, data, self.rows, self.signs, self.scale, out)
            return out
        step = max(1, -(-n // (4 * threads)))

        def work(lo):
            hi = min(lo + step, n)
            a, b = indptr[lo], indptr[hi]
            kernels.scatter_csr(
                np.ascontiguousarray(indptr[lo : hi + 1] - a),
                indices[a:b],
                data[a:b],
                self.rows,
                self.signs,
                self.scale,
                out[lo:hi],
            )

        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, range(0, n, step)))
        return out

    def apply_to_matrix(self, X) -> np.ndarray:
        """Dense ``A @ X`` for a ``d x c`` matrix."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.d:
            raise DimensionMismatch(f"X has {X.shape[0]} rows, matrix has d={self.d}")
        out = np.zeros((self.m, X.shape[1]))
        kernels.scatter_dense(np.ascontiguousarray(X), self.rows, self.signs, self.scale, out)
        return out

    def column_sq_norms(self) -> np.ndarray:
        """||A e_j||^2 from the stored signs: sum(sign^2) / s, exactly 1.0.

        Squaring materialized entries instead incurs one rounding of 1/sqrt(s).
        """
        return np.sum(self.signs.astype(np.int64) ** 2, axis=1) / self.s

    def materialize(self) -> np.ndarray:
        if self.m * self.d > MATERIALIZE_LIMIT:
            raise MemoryError(f"m*d = {self.m * self.d} exceeds {MATERIALIZE_LIMIT}")
        dense = np.zeros((self.m, self.d))
        cols = np.repeat(np.arange(self.d), self.s)
        dense[self.rows.ravel(), cols] = self.signs.ravel() * self.scale
        return dense

    # ----------------------------------------------------------- serialization

    def header(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "m": self.m,
            "d": self.d,
            "s": self.s,
            "seed": self.seed,
            "prng_id": self.prng_id,
        }

    def dumps(self, explicit: bool = False) -> str:
        lines = [json.dumps(self.header(), separators=(", ", ": "))]
        if explicit:
            for r, g in zip(self.rows.tolist(), self.signs.tolist()):
                lines.append(" ".join(f"{ri}:{'+' if gi > 0 else '-'}1" for ri, gi in zip(r, g)))
        return "\n".join(lines) + "\n"

    def save(self, path, explicit: bool = False) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps(explicit))

    @classmethod
    def loads(cls, text: str) -> SparseJLMatrix:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix file")
        try:
            head = json.loads(lines[0])
            m, d, s, seed = (int(head[k]) for k in ("m", "d", "s", "seed"))
            version, prng = head["format_version"], head["prng_id"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"bad matrix header: {exc}") from None
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {version}")
        body = lines[1:]
        if not body:
            if prng != PRNG_ID:
                raise ValueError(f"header-only file needs prng_id {PRNG_ID!r}, got {prng!r}")
            return cls.sample(m, d, s, seed)
        _check_shape(m, d, s)
        if len(body) != d:
            raise ValueError(f"explicit dump has {len(body)} column lines, expected {d}")
        rows = np.empty((d, s), dtype=np.int64)
        signs = np.empty((d, s), dtype=np.int8)
        bs = m // s
        for j, line in enumerate(body):
            toks = line.split()
            if len(toks) != s:
                raise ValueError(f"column {j}: expected {s} entries")
            for b, tok in enumerate(toks):
                r, g = tok.split(":")
                r = int(r)
                if not b * bs <= r < (b + 1) * bs:
                    raise ValueError(f"column {j}: row {r} outside block {b}")
                rows[j, b] = r
                signs[j, b] = 1 if int(g) > 0 else -1
        rows.setflags(write=False)
        signs.setflags(write=False)
        return cls(m, d, s, seed, rows, signs, prng)

    @classmethod
    def load(cls, path) -> SparseJLMatrix:
        with open(path) as fh:
            return cls.loads(fh.read())


sample = SparseJLMatrix.sample


def apply_sparse(A: SparseJLMatrix, x: SparseVector) -> np.ndarray:
    return A.apply_sparse(x)


def apply_dataset(A: SparseJLMatrix, X, threads: int | None = None) -> np.ndarray:
    return A.apply_dataset(X, threads)


def apply_to_matrix(A: SparseJLMatrix, X) -> np.ndarray:
    return A.apply_to_matrix(X)


def materialize(A: SparseJLMatrix) -> np.ndarray:
    return A.materialize()
