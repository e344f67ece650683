import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparsejl.vectors import (
    Dataset,
    SparseVector,
    infty_ratio,
    normalize_pairs,
    random_unit_dataset,
    read_dataset,
    read_sparse_text,
    split_heavy,
    split_top,
    write_dense_csv,
    write_sparse_text,
)

finite = st.floats(-10, 10, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-6)
dense_vectors = arrays(np.float64, st.integers(1, 30), elements=finite)


def unit(x):
    x = np.asarray(x, dtype=float)
    return SparseVector.from_dense(x / np.linalg.norm(x))


def test_sparse_vector_validation():
    with pytest.raises(ValueError):
        SparseVector(4, np.array([2, 1]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SparseVector(4, np.array([1, 1]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SparseVector(4, np.array([4]), np.array([1.0]))
    with pytest.raises(ValueError):
        SparseVector(4, np.array([0]), np.array([0.0]))
    with pytest.raises(ValueError):
        SparseVector(4, np.array([0]), np.array([np.nan]))
    v = SparseVector.from_pairs(5, [(3, 2.0), (1, -1.0), (2, 0.0)])
    assert v.indices.tolist() == [1, 3] and v.values.tolist() == [-1.0, 2.0]
    assert v == SparseVector.from_dense([0, -1, 0, 2, 0]) and hash(v) == hash(SparseVector.from_dense([0, -1, 0, 2, 0]))


def test_split_top_examples():
    sp = split_top(SparseVector.from_dense([0.9, 0.3, 0.1]), 1)
    assert sp.head.to_dense().tolist() == [0.9, 0, 0]
    assert sp.tail.to_dense().tolist() == [0, 0.3, 0.1]
    x = np.zeros(10)
    x[[2, 7]] = 0.5
    x[4] = 0.1
    assert split_top(SparseVector.from_dense(x), 1).head.indices.tolist() == [2]
    x[7] = -0.5
    assert split_top(SparseVector.from_dense(x), 1).head.indices.tolist() == [2]
    assert split_top(SparseVector.from_dense([1.0, 2.0]), 5).tail.nnz == 0
    with pytest.raises(ValueError):
        split_top(SparseVector.basis(3, 0), 0)


def test_split_heavy_examples():
    sp = split_heavy(SparseVector.basis(3, 0), 1)
    assert sp.head.nnz == 0 and sp.tail == SparseVector.basis(3, 0)
    sp = split_heavy(SparseVector.from_dense([0.8, 0.6]), 2)
    assert sp.head.to_dense().tolist() == [0.8, 0] and sp.tail.to_dense().tolist() == [0, 0.6]
    assert sp.mode == "heavy"


@settings(max_examples=150, deadline=None)
@given(dense_vectors, st.integers(1, 12))
def test_split_properties(x, ell):
    if not np.any(x):
        return
    v = unit(x)
    for sp in (split_top(v, ell), split_heavy(v, ell)):
        assert np.intersect1d(sp.head.indices, sp.tail.indices).size == 0
        assert sp.reconstruct() == v
    top = split_top(v, ell)
    assert top.head.nnz == min(ell, v.nnz)
    if top.tail.nnz:
        assert np.max(np.abs(top.tail.values)) <= 1 / math.sqrt(ell) + 1e-15
        assert np.min(np.abs(top.head.values)) >= np.max(np.abs(top.tail.values))
    heavy = split_heavy(v, ell)
    assert heavy.head.nnz <= ell
    assert np.all(np.abs(heavy.head.values) > 1 / math.sqrt(ell))
    assert np.all(np.abs(heavy.tail.values) <= 1 / math.sqrt(ell))


def test_infty_ratio():
    assert infty_ratio(SparseVector.basis(4, 2)) == 1.0
    assert infty_ratio(SparseVector.from_dense(np.ones(9))) == pytest.approx(1 / 3, abs=1e-15)
    assert infty_ratio(SparseVector.from_dense([0.6, 0.8])) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(ValueError):
        infty_ratio(SparseVector.zeros(3))


@settings(max_examples=100, deadline=None)
@given(dense_vectors, st.floats(0.1, 10))
def test_infty_ratio_scale_free(x, alpha):
    if not np.any(x):
        return
    v = SparseVector.from_dense(x)
    assert infty_ratio(v.scaled(alpha)) == pytest.approx(infty_ratio(v), rel=1e-12)


def test_normalize_pairs_examples():
    ps = normalize_pairs(Dataset(2, [SparseVector.basis(2, 0), SparseVector.basis(2, 1)]))
    assert len(ps.dataset) == 1
    assert np.allclose(ps.dataset[0].to_dense(), np.array([1, -1]) / math.sqrt(2), atol=1e-15)
    x = SparseVector.from_dense([1.0, 2.0])
    ps = normalize_pairs(Dataset(2, [x, x]))
    assert len(ps.dataset) == 0 and ps.skipped == 1
    ps = normalize_pairs(random_unit_dataset(4, 16, seed=0))
    assert len(ps.dataset) == 6 and ps.pairs[0] == (0, 1)
    assert all(abs(p.norm() - 1) < 1e-12 for p in ps.dataset)
    with pytest.raises(ValueError):
        normalize_pairs(Dataset(2, [x]))


def test_random_unit_dataset():
    X = random_unit_dataset(50, 100, seed=3)
    assert len(X) == 50 and all(p.nnz == 10 for p in X)
    assert all(abs(p.norm() - 1) < 1e-12 for p in X)
    assert X.to_dense().tobytes() == random_unit_dataset(50, 100, seed=3).to_dense().tobytes()


def test_dataset_views():
    X = random_unit_dataset(5, 12, seed=1)
    dense = X.to_dense()
    assert np.array_equal(X.to_scipy().toarray(), dense)
    assert np.array_equal(Dataset.from_dense(dense).to_dense(), dense)
    with pytest.raises(ValueError):
        Dataset(3, [SparseVector.basis(4, 0)])


def test_sparse_text_round_trip(tmp_path):
    X = random_unit_dataset(7, 20, seed=2)
    X = Dataset(X.dim, X.points + [SparseVector.zeros(20)], [f"p{i}" for i in range(8)])
    path = tmp_path / "x.sv"
    write_sparse_text(X, path)
    Y = read_sparse_text(path, dim=20)
    assert Y.labels == X.labels and Y.points == X.points


def test_sparse_text_parsing(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("+1 1:0.5 3:2\n# comment\n\n2:1.5\n")
    X = read_dataset(path, one_based=True)
    assert X.dim == 3
    assert X[0].to_dense().tolist() == [0.5, 0, 2] and X[1].to_dense().tolist() == [0, 1.5, 0]
    assert X.labels == ["+1", ""]
    path.write_text("0:1 x:2\n")
    with pytest.raises(ValueError, match="malformed"):
        read_sparse_text(path)


def test_dense_csv(tmp_path):
    rows = np.random.default_rng(0).standard_normal((4, 3))
    rows[1, 2] = 0
    path = tmp_path / "x.csv"
    write_dense_csv(rows, path)
    assert np.array_equal(read_dataset(path).to_dense(), rows)
    assert np.array_equal(read_dataset(path, fmt="csv").to_dense(), rows)
    path.write_text("1,2\n3\n")
    with pytest.raises(ValueError):
        read_dataset(path)
    with pytest.raises(ValueError):
        read_dataset(path, fmt="parquet")
