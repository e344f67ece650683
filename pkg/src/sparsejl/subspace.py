"""Oblivious subspace embeddings and sketch-and-solve regression."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .params import CALIBRATED_C_M, CALIBRATED_C_S, SubspacePlan, plan_subspace
from .sketch import DimensionMismatch, SparseJLMatrix

MAX_NET_DIM = 12


class RankDeficientError(ValueError):
    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """k orthonormal rows spanning a subspace of R^d."""

    vectors: np.ndarray

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def coordinate_scores(self) -> np.ndarray:
        """tau_i = sum_j (v^j_i)^2; the squared max of |v_i| over unit span vectors."""
        return np.einsum("ji,ji->i", self.vectors, self.vectors)

    def embed(self, coeffs) -> np.ndarray:
        """Map basis coefficients (k or n x k) to ambient vectors."""
        return np.asarray(coeffs) @ self.vectors


def orthonormalize(raw, tol: float = 1e-10) -> SubspaceBasis:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Raises RankDeficientError when a row's residual norm drops to ``tol``.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    k, d = raw.shape
    if k > d:
        raise RankDeficientError(f"{k} vectors cannot be independent in R^{d}", rank=d)
    Q = np.zeros((k, d))
    for i in range(k):
        v = raw[i].copy()
        for _ in range(2):
            for j in range(i):
                v -= (Q[j] @ v) * Q[j]
        nrm = np.linalg.norm(v)
        if nrm <= tol:
            raise RankDeficientError(f"row {i} is dependent on earlier rows (residual {nrm:.3g})", rank=i)
        Q[i] = v / nrm
    Q.setflags(write=False)
    return SubspaceBasis(Q)


def random_basis(k: int, d: int, seed: int = 0) -> SubspaceBasis:
    rng = np.random.default_rng(seed)
    return orthonormalize(rng.standard_normal((k, d)))


def heavy_coordinates(B: SubspaceBasis, ell: int) -> np.ndarray:
    """Coordinates with score tau_i >= 1/ell, as a sorted index array.

    Every unit vector of the span has |v_i| <= sqrt(tau_i) < 1/sqrt(ell) off
    this set, and the set has at most k * ell members since sum(tau) = k.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    return np.flatnonzero(B.coordinate_scores >= 1.0 / ell)


# ---------------------------------------------------------------- nets


@dataclass(frozen=True, eq=False)
class HalfNet:
    """Greedy 1/2-net of the unit sphere in basis coordinates.

    ``probe_count`` is the total number of random probes drawn and
    ``max_observed_gap`` the largest probe-to-net distance over the final
    run of probes that added nothing. It is a Monte Carlo certificate only.
    """

    points: np.ndarray
    probe_count: int
    max_observed_gap: float

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def build_half_net(B: SubspaceBasis | int, probe_budget: int = 10_000, seed: int = 0, batch: int = 4096) -> HalfNet:
    """Grow a net until ``probe_budget`` consecutive probes find no gap above 1/2."""
    k = B if isinstance(B, int) else B.k
    if k > MAX_NET_DIM:
        raise ValueError(f"k={k} exceeds the net guard {MAX_NET_DIM}")
    if probe_budget < 1:
        raise ValueError("probe_budget must be >= 1")
    rng = np.random.default_rng(seed)
    pts: list[np.ndarray] = []
    quiet = probes = 0
    window_gap = 0.0
    while quiet < probe_budget:
        cand = rng.standard_normal((batch, k))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        if pts:
            net = np.array(pts)
            gaps = np.min(np.linalg.norm(cand[:, None, :] - net[None, :, :], axis=2), axis=1)
        else:
            gaps = np.full(batch, np.inf)
        start = 0
        while start < batch and quiet < probe_budget:
            over = np.flatnonzero(gaps[start:] > 0.5)
            stop = batch if over.size == 0 else start + over[0]
            take = min(stop - start, probe_budget - quiet)
            if take:
                window_gap = max(window_gap, float(gaps[start : start + take].max()))
                quiet += take
                probes += take
                start += take
            if quiet >= probe_budget or start >= batch or start < stop:
                continue
            new = cand[start]
            pts.append(new)
            probes += 1
            start += 1
            quiet = 0
            window_gap = 0.0
            gaps = np.minimum(gaps, np.linalg.norm(cand - new, axis=1))
    points = np.array(pts)
    points.setflags(write=False)
    return HalfNet(points, probes, window_gap)


def expand_net(N: HalfNet) -> np.ndarray:
    """All sums x + y with x, y in N or 0, deduplicated exactly."""
    base = np.vstack([np.zeros((1, N.k)), N.points])
    i, j = np.triu_indices(base.shape[0])
    return np.unique(base[i] + base[j], axis=0)


# ------------------------------------------------------------ distortion


def jacobi_eigenvalues(G, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius mass is at most
    ``tol * max(1, ||G||_F)``.
    """
    G = np.array(G, dtype=np.float64)
    n = G.shape[0]
    if G.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max(initial=0.0))):
        raise ValueError("matrix must be symmetric")
    G = (G + G.T) / 2
    limit = tol * max(1.0, np.linalg.norm(G))
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(G - np.diag(np.diag(G))))
        if off <= limit:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(G[p, q])
                if apq == 0.0:
                    continue
                theta = float(G[q, q] - G[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    # theta**2 would overflow; tan of the rotation angle is ~ 1/(2 theta)
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                gp, gq = G[:, p].copy(), G[:, q].copy()
                G[:, p] = c * gp - sn * gq
                G[:, q] = sn * gp + c * gq
                gp, gq = G[p, :].copy(), G[q, :].copy()
                G[p, :] = c * gp - sn * gq
                G[q, :] = sn * gp + c * gq
                G[p, q] = G[q, p] = 0.0
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(G))


def subspace_distortion(A: SparseJLMatrix, B: SubspaceBasis) -> float:
    """sup over unit x in span(B) of | ||Ax||^2 - 1 |, via the sketched Gram spectrum."""
    if B.d != A.d:
        raise DimensionMismatch(f"basis lives in R^{B.d}, matrix has d={A.d}")
    M = A.apply_to_matrix(B.vectors.T)
    eig = jacobi_eigenvalues(M.T @ M)
    return float(np.max(np.abs(eig - 1.0)))


# ------------------------------------------------------------ regression


def _pivoted_lstsq(M: np.ndarray, rhs: np.ndarray, rank_tol: float) -> np.ndarray:
    Q, R, perm = scipy.linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    p = M.shape[1]
    rank = int(np.count_nonzero(diag > rank_tol * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < p:
        raise RankDeficientError(f"sketched design has effective rank {rank} < {p}", rank=rank)
    beta = np.empty(p)
    beta[perm] = scipy.linalg.solve_triangular(R[:p, :p], Q[:, :p].T @ rhs)
    return beta


def sketch_solve(
    X,
    y,
    eps: float,
    seed: int = 0,
    c_m: float = CALIBRATED_C_M,
    c_s: float = CALIBRATED_C_S,
    ridge: float = 0.0,
    rank_tol: float = 1e-10,
) -> tuple[np.ndarray, SubspacePlan]:
    """Minimize ||A X b - A y|| with A a sparse embedding for span{y, cols(X)}.

    The plan is sized for dimension p + 1. ``ridge`` > 0 adds ridge * ||b||^2
    to the sketched objective; rank deficiency is otherwise an error.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise ValueError("design must be a 2-d array")
    n, p = X.shape
    if not n >= p >= 1:
        raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
    if y.shape[0] != n:
        raise DimensionMismatch(f"target has length {y.shape[0]}, design has {n} rows")
    plan = plan_subspace(p + 1, eps, c_m, c_s)
    A = SparseJLMatrix.sample(plan.m, n, plan.s, seed)
    sketched = A.apply_to_matrix(np.column_stack([X, y]))
    AX, Ay = sketched[:, :p], sketched[:, p]
    if ridge > 0:
        AX = np.vstack([AX, math.sqrt(ridge) * np.eye(p)])
        Ay = np.concatenate([Ay, np.zeros(p)])
    return _pivoted_lstsq(AX, Ay, rank_tol), plan


def exact_least_squares(X, y) -> np.ndarray:
    """Unsketched least-squares solution (SVD based)."""
    beta, *_ = np.linalg.lstsq(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64).ravel(), rcond=None)
    return beta
