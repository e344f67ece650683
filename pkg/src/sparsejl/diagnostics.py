"""Distortion measurement, Monte Carlo success rates and the proof-event checks.

The event checks mirror the head/tail analysis of the sparse embedding:
norm preservation of the head and tail images, the head/tail cross term,
well-behaved column sets and the head-image profile. They are diagnostic
predicates, computed exactly for one matrix at a time.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .params import EmbeddingPlan, SubspacePlan
from .sketch import SparseJLMatrix, resolve_threads
from .vectors import Dataset, SparseVector, SplitVector, normalize_pairs, split_top

MAX_ALL_PAIRS = 2_000_000
# Pairs whose squared distance is below this fraction of ||a||^2 + ||b||^2
# are recomputed from explicit differences instead of the Gram identity.
_NEAR = 0.05
_BLOCK_CELLS = 1 << 22


@dataclass(frozen=True)
class DistortionReport:
    pair_count: int
    max_rel_distortion: float
    mean_rel_distortion: float
    violations_at_eps: int
    eps: float
    mode: str
    skipped_identical: int = 0

    def record(self) -> str:
        return "\n".join(
            [
                f"mode={self.mode}",
                f"eps={self.eps!r}",
                f"pair_count={self.pair_count}",
                f"skipped_identical={self.skipped_identical}",
                f"max_rel_distortion={self.max_rel_distortion!r}",
                f"mean_rel_distortion={self.mean_rel_distortion!r}",
                f"violations_at_eps={self.violations_at_eps}",
            ]
        )


@dataclass(frozen=True)
class WellBehavedReport:
    bad_row_count: int
    threshold: float
    is_well_behaved: bool


class HeadProfile(NamedTuple):
    count: int
    max_abs: float
    well_behaved: bool
    count_bound: float
    max_bound: float
    holds: bool


# ------------------------------------------------------------ pair geometry


def _row_norms(Z) -> np.ndarray:
    if isinstance(Z, np.ndarray):
        return np.einsum("ij,ij->i", Z, Z)
    return np.asarray(Z.multiply(Z).sum(axis=1)).ravel()


def _gram_rows(Z, lo: int, hi: int) -> np.ndarray:
    if isinstance(Z, np.ndarray):
        return Z[lo:hi] @ Z.T
    return (Z[lo:hi] @ Z.T).toarray()


@dataclass
class _Pairs:
    I: np.ndarray
    J: np.ndarray
    orig: np.ndarray
    mode: str
    all_pairs: bool
    skipped: int = 0
    n: int = 0
    block_bounds: list = field(default_factory=list)


def _gram_sq_dists(Z, I, J, blocks, norms, exact) -> np.ndarray:
    """Squared distances for pairs ordered by I, via blocked Gram rows."""
    out = np.empty(I.shape[0])
    for lo, hi, a, b in blocks:
        G = _gram_rows(Z, lo, hi)
        i, j = I[a:b], J[a:b]
        dist = norms[i] + norms[j] - 2.0 * G[i - lo, j]
        near = np.flatnonzero(dist < _NEAR * (norms[i] + norms[j]))
        if near.size:
            dist[near] = exact(i[near], j[near])
        out[a:b] = dist
    return out


def _pair_blocks(n: int, I: np.ndarray) -> list:
    step = max(1, _BLOCK_CELLS // max(n, 1))
    bounds = []
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        a, b = np.searchsorted(I, [lo, hi])
        if b > a:
            bounds.append((lo, hi, int(a), int(b)))
    return bounds


def _exact_sparse(csr, chunk: int = 1 << 16):
    """Squared distances from explicit sparse row differences."""

    def exact(i, j):
        res = np.empty(i.shape[0])
        for a in range(0, i.shape[0], chunk):
            diff = csr[i[a : a + chunk]] - csr[j[a : a + chunk]]
            res[a : a + chunk] = np.asarray(diff.multiply(diff).sum(axis=1)).ravel()
        return res

    return exact


def _original_geometry(X: Dataset, pairs: int | None, seed: int) -> _Pairs:
    n = len(X)
    if n < 2:
        raise ValueError(f"distortion needs at least two points, got {n}")
    total = n * (n - 1) // 2
    if pairs is None and total > MAX_ALL_PAIRS:
        warnings.warn(f"{total} pairs exceed the all-pairs cap; sampling {MAX_ALL_PAIRS} pairs", stacklevel=3)
        pairs = MAX_ALL_PAIRS
    if pairs is None:
        I, J = np.triu_indices(n, 1)
        I, J = I.astype(np.int64), J.astype(np.int64)
        mode = "all"
        csr = X.to_scipy()
        Z = X.to_dense() if n * X.dim <= 1 << 24 else csr
        norms = _row_norms(Z)
        blocks = _pair_blocks(n, I)
        orig = _gram_sq_dists(Z, I, J, blocks, norms, _exact_sparse(csr))
    else:
        if pairs < 1:
            raise ValueError("sampled mode needs at least one pair")
        rng = np.random.default_rng(seed)
        a = rng.integers(0, n, size=pairs)
        b = rng.integers(0, n - 1, size=pairs)
        b = b + (b >= a)
        I, J = np.minimum(a, b).astype(np.int64), np.maximum(a, b).astype(np.int64)
        order = np.lexsort((J, I))
        I, J = I[order], J[order]
        mode = f"sampled(pairs={pairs},seed={seed})"
        orig = _exact_sparse(X.to_scipy())(I, J)
    keep = orig > 0.0
    skipped = int(np.count_nonzero(~keep))
    I, J, orig = I[keep], J[keep], orig[keep]
    geom = _Pairs(I, J, orig, mode, mode == "all", skipped, n)
    if geom.all_pairs:
        geom.block_bounds = _pair_blocks(n, I)
    return geom


def _embedded_sq(Y: np.ndarray, geom: _Pairs) -> np.ndarray:
    if not geom.all_pairs:
        return kernels.pair_sq_dists(Y, geom.I, geom.J)
    norms = _row_norms(Y)
    return _gram_sq_dists(Y, geom.I, geom.J, geom.block_bounds, norms, lambda i, j: kernels.pair_sq_dists(Y, i, j))


def _relative(Y: np.ndarray, geom: _Pairs) -> np.ndarray:
    emb = _embedded_sq(Y, geom)
    return np.abs(emb - geom.orig) / geom.orig


def _report(rel: np.ndarray, eps: float, geom: _Pairs) -> DistortionReport:
    if rel.size == 0:
        return DistortionReport(0, 0.0, 0.0, 0, eps, geom.mode, geom.skipped)
    return DistortionReport(
        int(rel.size),
        float(rel.max()),
        float(rel.sum() / rel.size),
        int(np.count_nonzero(rel > eps)),
        eps,
        geom.mode,
        geom.skipped,
    )


def pair_distortions(
    A: SparseJLMatrix, X: Dataset, pairs: int | None = None, seed: int = 0, threads: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair relative distortion as arrays (i, j, rel)."""
    geom = _original_geometry(X, pairs, seed)
    rel = _relative(A.apply_dataset(X, threads), geom)
    return geom.I, geom.J, rel


def distortion(
    A: SparseJLMatrix,
    X: Dataset,
    eps: float,
    pairs: int | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> DistortionReport:
    """Relative squared-distance distortion of ``A`` over pairs of ``X``.

    ``pairs=None`` evaluates every pair (capped at ``MAX_ALL_PAIRS``, beyond
    which a seeded sample is forced with a warning); an integer draws that
    many uniform pairs with replacement from ``seed``. Identical points are
    skipped.
    """
    geom = _original_geometry(X, pairs, seed)
    if geom.I.size == 0:
        return _report(np.empty(0), eps, geom)
    return _report(_relative(A.apply_dataset(X, threads), geom), eps, geom)


# -------------------------------------------------------------- Monte Carlo


def _trial_ok(plan, X, geom, seed, t) -> bool:
    A = SparseJLMatrix.sample(plan.m, X.dim, plan.s, kernels.derive_seed(seed, t))
    if geom.I.size == 0:
        return True
    return bool(_relative(A.apply_dataset(X), geom).max() <= plan.eps)


def _run_trials(plan, X, trials, seed, threads, need=None):
    geom = _original_geometry(X, None, seed)
    threads = resolve_threads(threads)
    hits = done = 0
    with ThreadPoolExecutor(threads) as pool:
        while done < trials:
            batch = range(done, min(done + threads, trials))
            hits += sum(pool.map(lambda t: _trial_ok(plan, X, geom, seed, t), batch))
            done = batch.stop
            if need is not None and (hits >= need or hits + trials - done < need):
                break
    return hits, done


def monte_carlo_success(
    plan: EmbeddingPlan, X: Dataset, trials: int, seed: int = 0, threads: int | None = None
) -> float:
    """Fraction of sampled matrices with max pairwise distortion <= plan.eps.

    Trial ``t`` samples its matrix with seed ``derive_seed(seed, t)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits, _ = _run_trials(plan, X, trials, seed, threads)
    return hits / trials


def success_count(plan, X, trials, seed=0, threads=None, need=None) -> int:
    """Number of successful trials.

    With ``need`` the loop stops once the outcome relative to ``need`` is
    settled; the count is then exact only in the sense ``>= need`` or
    ``< need``.
    """
    hits, _ = _run_trials(plan, X, trials, seed, threads, need)
    return hits


# ---------------------------------------------------------- proof events


def well_behaved(A: SparseJLMatrix, J, n: int, eps: float) -> WellBehavedReport:
    """Count rows holding >= 6 nonzeros among columns ``J``."""
    J = np.unique(np.asarray(J, dtype=np.int64))
    if J.size == 0:
        raise ValueError("column set J must be nonempty")
    if J[0] < 0 or J[-1] >= A.d:
        raise IndexError("column index out of range")
    per_row = np.bincount(A.rows[J].ravel(), minlength=A.m)
    bad = int(np.count_nonzero(per_row >= 6))
    threshold = 6.0 * math.log(n) / math.log(1.0 / eps)
    return WellBehavedReport(bad, threshold, bad <= threshold)


def well_behaved_applicable(A: SparseJLMatrix, eps: float) -> bool:
    """The well-behavedness bound is only claimed when s <= eps * m."""
    return A.s <= eps * A.m


def head_image_profile(A: SparseJLMatrix, x_head: SparseVector, n: int, eps: float) -> HeadProfile:
    """Large-entry count and max magnitude of ``A @ x_head``.

    When the support is well behaved the count must stay within
    6 ln n / ln(1/eps) and the max within sqrt(ell/s), ell = |supp|.
    """
    if x_head.norm() > 1.0 + 1e-12:
        warnings.warn("head has norm above 1; bounds assume ||x_head|| <= 1", stacklevel=2)
    threshold = 6.0 * math.log(n) / math.log(1.0 / eps)
    if x_head.nnz == 0:
        return HeadProfile(0, 0.0, True, threshold, 0.0, True)
    y = np.abs(A.apply_sparse(x_head))
    count = int(np.count_nonzero(y > math.sqrt(5.0 / A.s)))
    max_abs = float(y.max())
    max_bound = math.sqrt(x_head.nnz / A.s)
    wb = well_behaved(A, x_head.indices, n, eps).is_well_behaved
    holds = (not wb) or (count <= threshold and max_abs <= max_bound)
    return HeadProfile(count, max_abs, wb, threshold, max_bound, holds)


def cross_term(A: SparseJLMatrix, split: SplitVector) -> float:
    """Inner product of the head and tail images."""
    if np.intersect1d(split.head.indices, split.tail.indices).size:
        raise ValueError("head and tail supports overlap")
    if split.head.nnz == 0 or split.tail.nnz == 0:
        return 0.0
    return float(np.dot(A.apply_sparse(split.head), A.apply_sparse(split.tail)))


def tail_admissible(v: SparseVector, plan: EmbeddingPlan | SubspacePlan, delta: float) -> bool:
    """Max-to-Euclidean ratio condition for low-coherence vectors, constant 1.

    ratio <= sqrt(eps * s * ln(m eps^2 / ln(1/delta)) / ln(1/delta)); false
    whenever the inner logarithm is not positive.
    """
    if v.nnz == 0:
        raise ValueError("tail_admissible of the zero vector is undefined")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    log_inv_delta = math.log(1.0 / delta)
    inner = plan.m * plan.eps**2 / log_inv_delta
    if inner <= 1.0:
        return False
    bound = math.sqrt(plan.eps * plan.s * math.log(inner) / log_inv_delta)
    ratio = float(np.max(np.abs(v.values))) / v.norm()
    return ratio <= bound


def decomposition_terms(A: SparseJLMatrix, split: SplitVector) -> tuple[float, float, float]:
    """(||A head||^2, ||A tail||^2, <A head, A tail>)."""
    h = A.apply_sparse(split.head)
    t = A.apply_sparse(split.tail)
    return float(h @ h), float(t @ t), float(h @ t)


# --------------------------------------------------------------- battery


@dataclass
class DiagnoseSummary:
    vectors: int
    ell: int
    eps: float
    head_failures: int
    tail_failures: int
    cross_failures: int
    not_well_behaved: int
    well_behaved_applicable: bool
    profile_failures: int
    tail_admissible: int
    tails_checked: int
    norm_failures: int
    max_norm_distortion: float

    @property
    def bits(self) -> dict[str, bool]:
        return {
            "E1_head": self.head_failures == 0,
            "E2_tail": self.tail_failures == 0,
            "E3_cross": self.cross_failures == 0,
            "well_behaved": self.not_well_behaved == 0,
            "head_profile": self.profile_failures == 0,
            "norms": self.norm_failures == 0,
        }

    def record(self) -> str:
        lines = [
            f"vectors={self.vectors}",
            f"ell={self.ell}",
            f"eps={self.eps!r}",
            f"head_failures={self.head_failures}",
            f"tail_failures={self.tail_failures}",
            f"cross_failures={self.cross_failures}",
            f"not_well_behaved={self.not_well_behaved}",
            f"well_behaved_applicable={int(self.well_behaved_applicable)}",
            f"profile_failures={self.profile_failures}",
            f"tail_admissible={self.tail_admissible}/{self.tails_checked}",
            f"norm_failures={self.norm_failures}",
            f"max_norm_distortion={self.max_norm_distortion!r}",
        ]
        for name, ok in self.bits.items():
            if name == "well_behaved" and not self.well_behaved_applicable:
                lines.append(f"{name}=NA")
            else:
                lines.append(f"{name}={'PASS' if ok else 'FAIL'}")
        return "\n".join(lines)


def diagnose(
    A: SparseJLMatrix, X: Dataset, plan: EmbeddingPlan, pairs: bool = True, ell: int | None = None
) -> DiagnoseSummary:
    """Run every per-vector event check on the unit vectors derived from ``X``.

    With ``pairs`` the checks run on the normalized pairwise differences;
    otherwise on the nonzero points of ``X`` scaled to unit norm.
    """
    eps = plan.eps
    ell = plan.ell if ell is None else ell
    if pairs:
        unit = normalize_pairs(X).dataset.points
    else:
        unit = [p.scaled(1.0 / p.norm()) for p in X.points if p.nnz]
    n = max(plan.n, 2)
    delta = 1.0 / n**2
    applicable = well_behaved_applicable(A, eps)
    counts = dict(head=0, tail=0, cross=0, wb=0, prof=0, adm=0, tails=0, norm=0)
    worst = 0.0
    for x in unit:
        split = split_top(x, ell)
        hh, tt, ht = decomposition_terms(A, split)
        head_sq = float(split.head.values @ split.head.values)
        tail_sq = float(split.tail.values @ split.tail.values)
        if abs(hh - head_sq) > eps * head_sq:
            counts["head"] += 1
        if abs(tt - tail_sq) > eps:
            counts["tail"] += 1
        if not (hh > 2.0 or abs(ht) < eps):
            counts["cross"] += 1
        prof = head_image_profile(A, split.head, n, eps)
        if not prof.well_behaved:
            counts["wb"] += 1
        if not prof.holds:
            counts["prof"] += 1
        if split.tail.nnz:
            counts["tails"] += 1
            counts["adm"] += tail_admissible(split.tail, plan, delta)
        total = float(np.sum(A.apply_sparse(x) ** 2))
        dev = abs(total - 1.0)
        worst = max(worst, dev)
        if dev > eps:
            counts["norm"] += 1
    return DiagnoseSummary(
        len(unit),
        ell,
        eps,
        counts["head"],
        counts["tail"],
        counts["cross"],
        counts["wb"] if applicable else 0,
        applicable,
        counts["prof"],
        counts["adm"],
        counts["tails"],
        counts["norm"],
        worst,
    )
