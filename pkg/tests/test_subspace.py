import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsejl.params import plan_subspace
from sparsejl.sketch import DimensionMismatch, SparseJLMatrix
from sparsejl.subspace import (
    MAX_NET_DIM,
    RankDeficientError,
    SubspaceBasis,
    build_half_net,
    exact_least_squares,
    expand_net,
    heavy_coordinates,
    jacobi_eigenvalues,
    orthonormalize,
    random_basis,
    sketch_solve,
    subspace_distortion,
)


def random_span_units(B, count, rng):
    c = rng.standard_normal((count, B.k))
    V = B.embed(c)
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def test_orthonormalize_examples():
    E = np.eye(5)[:3]
    assert np.array_equal(orthonormalize(E).vectors, E)
    B = orthonormalize([[1.0, 0, 0], [1.0, 1.0, 0]])
    assert np.allclose(B.vectors, [[1, 0, 0], [0, 1, 0]], atol=1e-15)
    B = random_basis(4, 16, seed=0)
    assert np.allclose(B.vectors @ B.vectors.T, np.eye(4), atol=1e-10)


def test_orthonormalize_rank_deficiency():
    with pytest.raises(RankDeficientError) as info:
        orthonormalize([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    assert info.value.rank == 1
    with pytest.raises(RankDeficientError):
        orthonormalize(np.ones((4, 3)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(8, 64), st.integers(0, 2**32))
def test_basis_invariants(k, d, seed):
    B = random_basis(k, d, seed)
    assert np.allclose(B.vectors @ B.vectors.T, np.eye(k), atol=1e-10)
    assert abs(B.coordinate_scores.sum() - k) <= 1e-8


def test_heavy_coordinate_examples():
    B = SubspaceBasis(np.eye(10)[:3])
    assert heavy_coordinates(B, 4).tolist() == [0, 1, 2]
    B = SubspaceBasis(np.full((1, 16), 0.25))
    assert heavy_coordinates(B, 8).size == 0
    with pytest.raises(ValueError):
        heavy_coordinates(B, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(4, 64), st.integers(1, 8), st.integers(0, 2**32))
def test_heavy_cover_is_exact(k, d, ell, seed):
    if k > d:
        return
    B = random_basis(k, d, seed)
    S = heavy_coordinates(B, ell)
    assert S.size <= k * ell
    off = np.ones(d, dtype=bool)
    off[S] = False
    V = random_span_units(B, 500, np.random.default_rng(seed))
    assert np.all(np.abs(V[:, off]) < 1 / math.sqrt(ell))


def test_half_net_examples():
    net = build_half_net(1, probe_budget=200, seed=0)
    assert sorted(net.points.ravel().tolist()) == [-1.0, 1.0]
    assert net.max_observed_gap == 0.0
    net = build_half_net(random_basis(3, 10, 1), probe_budget=100_000, seed=0)
    assert np.allclose(np.linalg.norm(net.points, axis=1), 1.0, atol=1e-10)
    assert net.max_observed_gap <= 0.5
    # the size is reported, not enforced
    assert len(net) > 0 and net.probe_count >= 100_000
    with pytest.raises(ValueError):
        build_half_net(MAX_NET_DIM + 1)


def test_expand_net():
    net = build_half_net(1, probe_budget=50, seed=0)
    plus = expand_net(net)
    assert len(plus) <= 9
    rows = {tuple(r) for r in plus.tolist()}
    assert (0.0,) in rows
    for x in net.points:
        assert tuple(x) in rows and tuple(2 * x) in rows
    net = build_half_net(2, probe_budget=2000, seed=3)
    assert len(expand_net(net)) <= (len(net) + 1) ** 2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32))
def test_jacobi_matches_lapack(k, seed):
    M = np.random.default_rng(seed).standard_normal((k + 3, k))
    G = M.T @ M
    assert np.allclose(jacobi_eigenvalues(G), np.linalg.eigvalsh(G), rtol=0, atol=1e-9 * max(1, np.abs(G).max()))


def test_jacobi_rejects():
    with pytest.raises(ValueError):
        jacobi_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        jacobi_eigenvalues(np.ones((2, 3)))


def test_subspace_distortion_examples():
    A = SparseJLMatrix.sample(24, 12, 4, seed=2)
    assert subspace_distortion(A, SubspaceBasis(np.eye(12)[[5]])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DimensionMismatch):
        subspace_distortion(A, random_basis(2, 13))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32))
def test_subspace_distortion_bounds_monte_carlo(k, seed):
    A = SparseJLMatrix.sample(40, 30, 5, seed)
    B = random_basis(k, 30, seed)
    sup = subspace_distortion(A, B)
    V = random_span_units(B, 2000, np.random.default_rng(seed))
    mc = np.max(np.abs(np.sum(A.apply_to_matrix(V.T) ** 2, axis=0) - 1))
    assert mc <= sup + 1e-8


def test_subspace_distortion_sup_is_attained():
    # eigen value sits within sampling slack of the Monte Carlo sup
    A = SparseJLMatrix.sample(64, 16, 4, seed=8)
    B = random_basis(2, 16, seed=8)
    sup = subspace_distortion(A, B)
    V = random_span_units(B, 100_000, np.random.default_rng(0))
    mc = np.max(np.abs(np.sum(A.apply_to_matrix(V.T) ** 2, axis=0) - 1))
    assert mc <= sup <= mc + 0.05


def test_gram_scaling():
    A = SparseJLMatrix.sample(32, 10, 4, seed=1)
    U = random_basis(3, 10, 2).vectors
    M = A.apply_to_matrix(U.T)
    for alpha in (0.5, 3.0):
        Ma = A.apply_to_matrix(alpha * U.T)
        assert np.allclose(jacobi_eigenvalues(Ma.T @ Ma), alpha**2 * jacobi_eigenvalues(M.T @ M), atol=1e-10)


def test_net_end_to_end():
    # if every expanded-net point keeps its norm, all span vectors stay within 10 eps
    eps = 0.3
    B = random_basis(2, 40, 0)
    plus = expand_net(build_half_net(B, probe_budget=5000, seed=1))
    checked = 0
    for seed in range(20):
        A = SparseJLMatrix.sample(400, 40, 20, seed)
        P = B.embed(plus)
        nrm = np.sum(P * P, axis=1)
        emb = np.sum(A.apply_to_matrix(P.T) ** 2, axis=0)
        if not np.all(np.abs(emb - nrm) <= eps * nrm):
            continue
        checked += 1
        V = random_span_units(B, 10_000, np.random.default_rng(seed))
        assert np.all(np.abs(np.sum(A.apply_to_matrix(V.T) ** 2, axis=0) - 1) <= 10 * eps)
    assert checked > 0


# ------------------------------------------------------------ regression


def test_sketch_solve_in_column_space():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((200, 5))
    y = X @ np.arange(1.0, 6.0)
    beta, plan = sketch_solve(X, y, 0.5, seed=3)
    assert plan.k == 6
    assert np.sum((X @ beta - y) ** 2) <= 1e-8
    again, _ = sketch_solve(X, y, 0.5, seed=3)
    assert again.tobytes() == beta.tobytes()


def test_sketch_solve_intercept_only():
    y = np.random.default_rng(1).standard_normal(300) + 4
    X = np.ones((300, 1))
    beta, plan = sketch_solve(X, y, 0.5, seed=0)
    exact = exact_least_squares(X, y)
    assert exact[0] == pytest.approx(y.mean(), abs=1e-12)
    best = np.sum((y - exact[0]) ** 2)
    assert np.sum((y - beta[0]) ** 2) <= (1 + 2 * plan.eps) * best


def test_sketch_solve_errors():
    X = np.ones((50, 3))
    with pytest.raises(RankDeficientError) as info:
        sketch_solve(X, np.arange(50.0), 0.5)
    assert info.value.rank == 1
    beta, _ = sketch_solve(X, np.arange(50.0), 0.5, ridge=1e-3)
    assert np.all(np.isfinite(beta))
    with pytest.raises(ValueError):
        sketch_solve(np.ones((2, 3)), np.ones(2), 0.5)
    with pytest.raises(DimensionMismatch):
        sketch_solve(np.eye(4), np.ones(3), 0.5)


def test_sketch_solve_uses_subspace_plan():
    X = np.random.default_rng(2).standard_normal((300, 4))
    _, plan = sketch_solve(X, X[:, 0], 0.5, c_m=1.0, c_s=1.0)
    assert plan == plan_subspace(5, 0.5, 1.0, 1.0)
