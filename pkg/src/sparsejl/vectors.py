"""Sparse vectors, datasets, and the head/tail and heavy/light splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class SparseVector:
    """A vector in R^dim stored as sorted (index, value) pairs.

    Indices are strictly increasing and every stored value is nonzero.
    """

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        val = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError(f"indices must lie in [0, {self.dim})")
            if np.any(val == 0.0):
                raise ValueError("explicit zeros are not stored")
            if not np.all(np.isfinite(val)):
                raise ValueError("values must be finite")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, x) -> SparseVector:
        x = np.asarray(x, dtype=np.float64).ravel()
        nz = np.flatnonzero(x)
        return cls(x.shape[0], nz, x[nz])

    @classmethod
    def from_pairs(cls, dim: int, pairs: Iterable[tuple[int, float]]) -> SparseVector:
        items = sorted((int(i), float(v)) for i, v in pairs if v != 0.0)
        if not items:
            return cls.zeros(dim)
        idx, val = zip(*items)
        return cls(dim, np.array(idx), np.array(val))

    @classmethod
    def zeros(cls, dim: int) -> SparseVector:
        return cls(dim, np.empty(0, dtype=np.int64), np.empty(0))

    @classmethod
    def basis(cls, dim: int, j: int) -> SparseVector:
        return cls(dim, np.array([j]), np.array([1.0]))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def scaled(self, alpha: float) -> SparseVector:
        if alpha == 0.0:
            return SparseVector.zeros(self.dim)
        return SparseVector(self.dim, self.indices, self.values * alpha)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.dim, self.indices.tobytes(), self.values.tobytes()))


@dataclass
class Dataset:
    """An ordered collection of sparse points sharing one dimension."""

    dim: int
    points: list[SparseVector] = field(default_factory=list)
    labels: list[str] | None = None

    def __post_init__(self):
        for i, p in enumerate(self.points):
            if p.dim != self.dim:
                raise ValueError(f"point {i} has dim {p.dim}, expected {self.dim}")
        if self.labels is not None and len(self.labels) != len(self.points):
            raise ValueError("labels must match points one to one")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def to_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (indptr, indices, data) for the stacked points."""
        indptr = np.zeros(len(self.points) + 1, dtype=np.int64)
        if self.points:
            np.cumsum([p.nnz for p in self.points], out=indptr[1:])
            indices = np.concatenate([p.indices for p in self.points]).astype(np.int64)
            data = np.concatenate([p.values for p in self.points]).astype(np.float64)
        else:
            indices = np.empty(0, dtype=np.int64)
            data = np.empty(0)
        return indptr, indices, data

    def to_scipy(self):
        import scipy.sparse as sp

        indptr, indices, data = self.to_csr()
        return sp.csr_matrix((data, indices, indptr), shape=(len(self.points), self.dim))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((len(self.points), self.dim))
        for i, p in enumerate(self.points):
            out[i, p.indices] = p.values
        return out

    @classmethod
    def from_dense(cls, rows, labels=None) -> Dataset:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        return cls(rows.shape[1], [SparseVector.from_dense(r) for r in rows], labels)

    def scaled(self, alpha: float) -> Dataset:
        return Dataset(self.dim, [p.scaled(alpha) for p in self.points], self.labels)


@dataclass(frozen=True)
class SplitVector:
    """Support-disjoint decomposition ``x = head + tail``.

    ``mode`` is "top" for the top-ell split and "heavy" for the 1/sqrt(ell)
    threshold split; in heavy mode ``head`` holds the heavy part.
    """

    head: SparseVector
    tail: SparseVector
    ell: int
    mode: str = "top"

    def reconstruct(self) -> SparseVector:
        idx = np.concatenate([self.head.indices, self.tail.indices])
        val = np.concatenate([self.head.values, self.tail.values])
        order = np.argsort(idx, kind="stable")
        return SparseVector(self.head.dim, idx[order], val[order])


def _partition(x: SparseVector, keep: np.ndarray, ell: int, mode: str) -> SplitVector:
    keep_mask = np.zeros(x.nnz, dtype=bool)
    keep_mask[keep] = True
    head = SparseVector(x.dim, x.indices[keep_mask], x.values[keep_mask])
    tail = SparseVector(x.dim, x.indices[~keep_mask], x.values[~keep_mask])
    return SplitVector(head, tail, ell, mode)


def split_top(x: SparseVector, ell: int) -> SplitVector:
    """Keep the ``ell`` largest-magnitude entries in the head.

    Ties in magnitude go to the smaller index.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    # lexsort: last key is primary -> descending |value|, then ascending index
    order = np.lexsort((x.indices, -np.abs(x.values)))
    return _partition(x, order[:ell], ell, "top")


def split_heavy(x: SparseVector, ell: int) -> SplitVector:
    """Head gets the entries with magnitude strictly above 1/sqrt(ell)."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    threshold = 1.0 / math.sqrt(ell)
    return _partition(x, np.flatnonzero(np.abs(x.values) > threshold), ell, "heavy")


def infty_ratio(x: SparseVector) -> float:
    """Ratio of the max-norm to the Euclidean norm."""
    if x.nnz == 0:
        raise ValueError("infty_ratio of the zero vector is undefined")
    return float(np.max(np.abs(x.values)) / x.norm())


def sparse_sub(x: SparseVector, y: SparseVector) -> SparseVector:
    if x.dim != y.dim:
        raise ValueError("dimension mismatch")
    idx = np.union1d(x.indices, y.indices)
    val = np.zeros(idx.size)
    val[np.searchsorted(idx, x.indices)] += x.values
    val[np.searchsorted(idx, y.indices)] -= y.values
    nz = val != 0.0
    return SparseVector(x.dim, idx[nz], val[nz])


@dataclass
class PairSet:
    """Output of :func:`normalize_pairs`."""

    dataset: Dataset
    pairs: list[tuple[int, int]]
    skipped: int


def normalize_pairs(X: Dataset) -> PairSet:
    """All normalized differences (x_i - x_j)/||x_i - x_j|| for i < j.

    Identical points are skipped and counted rather than rejected.
    """
    if len(X) < 2:
        raise ValueError("normalize_pairs needs at least two points")
    out, pairs, skipped = [], [], 0
    for i in range(len(X)):
        for j in range(i + 1, len(X)):
            diff = sparse_sub(X[i], X[j])
            if diff.nnz == 0:
                skipped += 1
                continue
            out.append(diff.scaled(1.0 / diff.norm()))
            pairs.append((i, j))
    return PairSet(Dataset(X.dim, out), pairs, skipped)


def random_unit_dataset(n: int, d: int, nnz: int | None = None, seed: int = 0) -> Dataset:
    """n random unit vectors in R^d with ``nnz`` nonzeros each.

    The default support size is ceil(sqrt(d)). Supports are uniform without
    replacement and values are normalized Gaussians.
    """
    if nnz is None:
        nnz = math.ceil(math.sqrt(d))
    nnz = min(nnz, d)
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(n):
        idx = np.sort(rng.choice(d, size=nnz, replace=False))
        val = rng.standard_normal(nnz)
        val /= np.linalg.norm(val)
        points.append(SparseVector(d, idx, val))
    return Dataset(d, points)


# ---------------------------------------------------------------- file formats


def read_sparse_text(path, dim: int | None = None, one_based: bool = False) -> Dataset:
    """Read one vector per line: ``[label] index:value index:value ...``.

    Indices are 0-based unless ``one_based``. When ``dim`` is omitted it is
    taken as one past the largest index seen.
    """
    rows, labels, has_label = [], [], False
    max_idx = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            label = None
            if ":" not in tokens[0]:
                label = tokens[0]
                tokens = tokens[1:]
                has_label = True
            pairs = []
            for tok in tokens:
                try:
                    i_str, v_str = tok.split(":")
                    i, v = int(i_str) - (1 if one_based else 0), float(v_str)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: malformed entry {tok!r}") from None
                if i < 0:
                    raise ValueError(f"{path}:{lineno}: negative index {tok!r}")
                pairs.append((i, v))
                max_idx = max(max_idx, i)
            rows.append(pairs)
            labels.append(label if label is not None else "")
    if dim is None:
        dim = max(max_idx + 1, 1)
    points = [SparseVector.from_pairs(dim, p) for p in rows]
    return Dataset(dim, points, labels if has_label else None)


def write_sparse_text(X: Dataset, path) -> None:
    """Write ``X`` in the sparse text format to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_sparse(X, path)
        return
    with open(path, "w") as fh:
        _write_sparse(X, fh)


def _write_sparse(X: Dataset, fh) -> None:
    for k, p in enumerate(X.points):
        parts = [X.labels[k]] if X.labels else []
        parts += [f"{i}:{v!r}" for i, v in zip(p.indices.tolist(), p.values.tolist())]
        fh.write(" ".join(parts) + "\n")


def read_dense_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: no rows")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValueError(f"{path}: ragged rows")
    return Dataset.from_dense(np.array(rows))


def read_dataset(path, fmt: str | None = None, dim: int | None = None, one_based: bool = False) -> Dataset:
    """Load a dataset, picking the format from the extension unless ``fmt`` is given."""
    if fmt is None:
        fmt = "csv" if Path(path).suffix.lower() == ".csv" else "sparse"
    if fmt == "csv":
        X = read_dense_csv(path)
        if dim is not None and dim != X.dim:
            raise ValueError(f"{path}: expected {dim} columns, found {X.dim}")
        return X
    if fmt == "sparse":
        return read_sparse_text(path, dim=dim, one_based=one_based)
    raise ValueError(f"unknown format {fmt!r}")


def write_dense_csv(rows: np.ndarray | Sequence[Sequence[float]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in np.atleast_2d(np.asarray(rows, dtype=np.float64)):
            w.writerow([repr(float(v)) for v in r])
