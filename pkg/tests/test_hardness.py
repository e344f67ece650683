import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from sparsejl.hardness import (
    LemmaViolation,
    averaging_floor,
    count_heavy_subsets,
    empirical_lower_bound,
    generate,
    heavy_subset_bound,
    signature_groups,
    solve_ell,
    suggest_t,
)
from sparsejl.sketch import SparseJLMatrix


def test_solve_ell_examples():
    assert solve_ell(1000, 1000) == 1
    # oracle fixed point 1.9020...
    assert oracles.fixed_point_ell(2**20, 2**10) == pytest.approx(1.9020145312, abs=1e-9)
    assert solve_ell(2**20, 2**10) == 2
    assert solve_ell(2048, 64) == 2
    with pytest.raises(ValueError):
        solve_ell(1, 10)
    with pytest.raises(ValueError):
        solve_ell(10**300, 4)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 2**60), st.integers(3, 2**20))
def test_solve_ell_properties(n, d):
    try:
        ell = solve_ell(n, d)
    except ValueError:
        return
    real = oracles.fixed_point_ell(n, d)
    assert ell == max(1, math.floor(real + 0.5))
    assert abs(real - math.log(n) / math.log(math.e * d / real)) <= 1e-6
    if n <= math.e * d:
        assert ell == 1


def test_generate_examples():
    inst = generate(10**6, 16, cap=10_000, ell=2)
    X = inst.to_dataset()
    assert len(X) == len(inst) == math.comb(16, 2) + 16 + 1 == 137
    assert not inst.sampled and inst.subsets[:3] == ((0, 1), (0, 2), (0, 3))
    inst = generate(100, 4, cap=100, ell=1)
    assert len(inst.to_dataset()) == len(inst) == 5
    with pytest.raises(ValueError):
        generate(100, 16, cap=16)


def test_generate_invariants():
    inst = generate(10**5, 20, cap=400, seed=3, ell=3)
    assert inst.sampled and len(inst.subsets) == 400 - 21 == len(set(inst.subsets))
    assert len(inst) <= math.comb(20, 3) + 21
    assert inst == generate(10**5, 20, cap=400, seed=3, ell=3)
    X = inst.to_dataset()
    for p in X.points[:-1]:
        assert abs(p.norm() - 1) <= 1e-12
        assert p.nnz in (1, 3)
    assert X.points[-1].nnz == 0
    # disjoint subsets are exactly orthogonal
    dense = X.to_dense()
    for a in range(30):
        for b in range(a + 1, 30):
            if not set(inst.subsets[a]) & set(inst.subsets[b]):
                assert dense[a] @ dense[b] == 0.0


def test_lemma7_examples():
    v = np.zeros(16)
    v[0] = 5.0
    count, bound = count_heavy_subsets(v, 8, 1)
    assert count >= math.comb(15, 0) and bound == 1
    v = np.zeros(40)
    v[:16] = 1.0
    count, bound = count_heavy_subsets(v, 16, 2)
    # threshold is 1: every pair touching the support qualifies
    assert bound == 1 and count == math.comb(40, 2) - math.comb(24, 2)
    v = np.zeros(16)
    v[3:11] = 0.7
    count, bound = count_heavy_subsets(v, 8, 1)
    assert count == 8 and bound == 1


def test_lemma7_random_never_violated():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = np.zeros(16)
        v[rng.choice(16, 8, replace=False)] = rng.standard_normal(8)
        count, bound = count_heavy_subsets(v, 8, 1)
        assert count == oracles.heavy_count(v, 8, 1)
        assert count >= bound


@settings(max_examples=100, deadline=None)
@given(st.integers(8, 24), st.data())
def test_lemma7_property(s, data):
    m = data.draw(st.integers(2 * s, 48))
    t = data.draw(st.integers(1, max(1, min(3, s // 8))))
    seed = data.draw(st.integers(0, 2**32))
    rng = np.random.default_rng(seed)
    v = np.zeros(m)
    nnz = data.draw(st.integers(1, s))
    v[rng.choice(m, nnz, replace=False)] = rng.standard_normal(nnz) * rng.exponential(1, nnz)
    count, bound = count_heavy_subsets(v, s, t)
    assert count >= bound == heavy_subset_bound(m, s, t)


def test_lemma7_preconditions():
    v = np.zeros(16)
    v[:8] = 1.0
    with pytest.raises(ValueError):
        count_heavy_subsets(v, 8, 2)
    count, bound = count_heavy_subsets(v, 8, 2, strict_t=False)
    assert bound == 0 and count == oracles.heavy_count(v, 8, 2)
    with pytest.raises(ValueError):
        count_heavy_subsets(v, 7, 1)
    with pytest.raises(ValueError):
        count_heavy_subsets(np.ones(10), 10, 1)
    # C(400, 5) exceeds the enumeration guard
    with pytest.raises(ValueError, match="enumeration"):
        count_heavy_subsets(np.r_[np.ones(40), np.zeros(360)], 40, 5)


def test_lemma7_violation_is_raised(monkeypatch):
    import sparsejl.hardness as hardness

    monkeypatch.setattr(hardness, "heavy_subset_bound", lambda m, s, t: 10**6)
    with pytest.raises(LemmaViolation):
        hardness.count_heavy_subsets(np.r_[np.ones(8), np.zeros(8)], 8, 1)


def test_signature_examples():
    A = SparseJLMatrix.sample(12, 30, 3, seed=1)
    groups = signature_groups(A, 3)
    assert sum(len(g.columns) for g in groups) == 30
    sizes = [len(g.columns) for g in groups]
    assert sizes == sorted(sizes, reverse=True)
    for g in groups:
        for j in g.columns:
            assert list(g.rows) == A.rows[j].tolist() and list(g.signs) == A.signs[j].tolist()
    with pytest.raises(ValueError):
        signature_groups(A, 4)


def test_identical_columns_share_signatures():
    A = SparseJLMatrix.sample(4, 32, 2, seed=0)
    key = [(tuple(r), tuple(g)) for r, g in zip(A.rows.tolist(), A.signs.tolist())]
    pairs = [(a, b) for a in range(32) for b in range(a + 1, 32) if key[a] == key[b]]
    assert pairs
    a, b = pairs[0]
    for t in (1, 2):
        for g in signature_groups(A, t):
            assert (a in g.columns) == (b in g.columns)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 60), st.data())
def test_signature_partition_and_floor(s, bs, d, data):
    t = data.draw(st.integers(1, s))
    A = SparseJLMatrix.sample(s * bs, d, s, data.draw(st.integers(0, 2**32)))
    groups = signature_groups(A, t)
    assert sum(len(g.columns) for g in groups) == d * math.comb(s, t)
    assert len(groups[0].columns) >= averaging_floor(A.m, s, d, t)
    for g in groups:
        assert list(g.rows) == sorted(g.rows)


def test_suggest_t():
    assert suggest_t(0.25, 64, 2, 976, 1) == pytest.approx(math.log(8) / math.log(976))
    assert math.isnan(suggest_t(0.25, 64, 2, 4, 4))


def test_sweep_shape_and_trend():
    rows = empirical_lower_bound(64, 2048, 0.25, [1, 2, 188], trials=20, seed=0, cap=600, c_m=8.0)
    assert [r.s for r in rows] == [1, 2, 188]
    assert all(r.m % r.s == 0 and r.trials == 20 for r in rows)
    assert rows[-1].frequency >= max(r.frequency for r in rows) - 0.1
    assert rows[0].frequency <= 0.5
    again = empirical_lower_bound(64, 2048, 0.25, [1, 2, 188], trials=20, seed=0, cap=600, c_m=8.0, threads=3)
    assert again == rows
    with pytest.raises(ValueError):
        empirical_lower_bound(64, 2048, 0.25, [0], trials=2)


def test_sweep_with_s_equal_m():
    rows = empirical_lower_bound(32, 512, 0.5, [1, 4, 40], trials=20, seed=1, cap=600, c_m=1.0)
    base_m = math.ceil(math.log(512) / 0.25)
    assert rows[2].m == 40 >= base_m
    assert rows[2].frequency >= max(r.frequency for r in rows) - 0.1
