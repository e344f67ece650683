"""Lower-bound experiments: the hard instance, the heavy-subset count and column signatures."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .diagnostics import _original_geometry, _relative
from .sketch import SparseJLMatrix, resolve_threads
from .vectors import Dataset, SparseVector

ENUMERATION_LIMIT = 10**7


class LemmaViolation(AssertionError):
    """A brute-force count fell below a proven lower bound."""


def solve_ell(n: int, d: int, iterations: int = 50, tol: float = 1e-9) -> int:
    """Integer solution of ell = ln n / ln(e d / ell) by fixed-point iteration from 1."""
    if n < 2 or d < 3:
        raise ValueError(f"need n >= 2 and d >= 3 (got n={n}, d={d})")
    ell = 1.0
    for _ in range(iterations):
        denom = math.log(math.e * d / ell)
        if denom <= 0:
            raise ValueError(f"fixed-point iteration diverged (ell={ell} for d={d})")
        nxt = math.log(n) / denom
        done = abs(nxt - ell) < tol
        ell = nxt
        if done:
            break
    if ell >= d:
        raise ValueError(f"fixed-point ell={ell:.3f} reaches d={d}")
    out = max(1, math.floor(ell + 0.5))
    if math.e * d / out <= 1:
        raise ValueError("e*d/ell must exceed 1")
    return out


def suggest_t(eps: float, d: int, ell: int, m: int, s: int) -> float:
    """ln(eps d / ell) / ln(m / s), the signature size with the o(1) term dropped."""
    if m <= s:
        return float("nan")
    return math.log(eps * d / ell) / math.log(m / s)


@dataclass(frozen=True)
class HardInstance:
    d: int
    ell: int
    subsets: tuple[tuple[int, ...], ...]
    includes_basis: bool = True
    includes_origin: bool = True
    sampled: bool = False

    def subset_vector(self, S) -> SparseVector:
        return SparseVector(self.d, np.array(sorted(S)), np.full(len(S), 1.0 / math.sqrt(self.ell)))

    def to_dataset(self) -> Dataset:
        points, labels = [], []
        seen = set()
        for S in self.subsets:
            v = self.subset_vector(S)
            points.append(v)
            labels.append("S" + "_".join(map(str, S)))
            seen.add(v)
        if self.includes_basis:
            for i in range(self.d):
                e = SparseVector.basis(self.d, i)
                if e not in seen:
                    points.append(e)
                    labels.append(f"e{i}")
        if self.includes_origin:
            points.append(SparseVector.zeros(self.d))
            labels.append("zero")
        return Dataset(self.d, points, labels)

    def __len__(self):
        n = len(self.subsets)
        if self.includes_basis:
            n += self.d if self.ell > 1 else 0
        return n + int(self.includes_origin)


def _sample_subsets(d: int, ell: int, count: int, seed: int) -> list[tuple[int, ...]]:
    rng = np.random.default_rng(seed)
    chosen: set[tuple[int, ...]] = set()
    while len(chosen) < count:
        chosen.add(tuple(sorted(rng.choice(d, size=ell, replace=False).tolist())))
    return sorted(chosen)


def generate(n_target: int, d: int, cap: int, seed: int = 0, ell: int | None = None) -> HardInstance:
    """Subset indicators x_S, the standard basis and the origin.

    All ell-subsets are enumerated when they fit in ``cap - d - 1`` slots,
    otherwise that many distinct subsets are sampled with ``seed``. For
    ell = 1 the indicators coincide with the basis and are not repeated.
    """
    if cap < d + 1:
        raise ValueError(f"cap={cap} cannot hold the basis and origin (needs {d + 1})")
    if ell is None:
        ell = solve_ell(n_target, d)
    if not 1 <= ell <= d:
        raise ValueError(f"ell={ell} out of range for d={d}")
    if ell == 1:
        return HardInstance(d, 1, tuple((i,) for i in range(d)), includes_basis=True)
    room = cap - d - 1
    total = math.comb(d, ell)
    if total <= room:
        subsets = list(itertools.combinations(range(d), ell))
        sampled = False
    else:
        subsets = _sample_subsets(d, ell, room, seed)
        sampled = True
    return HardInstance(d, ell, tuple(subsets), sampled=sampled)


# -------------------------------------------------------- heavy subsets


def _combination_chunks(m: int, t: int, chunk: int = 1 << 16):
    it = itertools.combinations(range(m), t)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, chunk)), dtype=np.int64)
        if block.size == 0:
            return
        yield block.reshape(-1, t)


def heavy_subset_bound(m: int, s: int, t: int) -> int:
    return math.floor(min(math.comb(m - 1, t - 1), (s / (8 * t)) ** t))


def count_heavy_subsets(v, s: int, t: int, strict_t: bool = True) -> tuple[int, int]:
    """Exhaustively count t-subsets T with sum_{i in T} v_i^2 >= t ||v||^2 / (2s).

    Returns (count, bound) with bound = floor(min(C(m-1, t-1), (s/(8t))^t)),
    raising LemmaViolation if count < bound. ``strict_t=False`` admits
    t > s/8, where the bound is below 1 and the check is vacuous.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    m = v.shape[0]
    if t < 1:
        raise ValueError("t must be >= 1")
    if np.count_nonzero(v) > s:
        raise ValueError(f"v has {np.count_nonzero(v)} nonzeros, more than s={s}")
    if 2 * s > m:
        raise ValueError(f"need s <= m/2 (s={s}, m={m})")
    if strict_t and 8 * t > s:
        raise ValueError(f"need t <= s/8 (t={t}, s={s})")
    if math.comb(m, t) > ENUMERATION_LIMIT:
        raise ValueError(f"C({m},{t}) exceeds the enumeration limit {ENUMERATION_LIMIT}")
    sq = v * v
    threshold = t * float(sq.sum()) / (2 * s)
    count = 0
    for combos in _combination_chunks(m, t):
        count += int(np.count_nonzero(sq[combos].sum(axis=1) >= threshold))
    bound = heavy_subset_bound(m, s, t)
    if count < bound:
        raise LemmaViolation(f"count {count} below bound {bound} for m={m}, s={s}, t={t}")
    return count, bound


# ------------------------------------------------------------ signatures


@dataclass(frozen=True)
class SignatureGroup:
    rows: tuple[int, ...]
    signs: tuple[int, ...]
    columns: tuple[int, ...]


def signature_groups(A: SparseJLMatrix, t: int) -> list[SignatureGroup]:
    """Group columns by shared (row subset, sign pattern) of size t.

    Every column contributes C(s, t) signatures. Groups come back largest
    first, ties ordered by signature.
    """
    if not 1 <= t <= A.s:
        raise ValueError(f"need 1 <= t <= s (t={t}, s={A.s})")
    per_col = math.comb(A.s, t)
    if A.d * per_col > ENUMERATION_LIMIT:
        raise ValueError(f"d*C(s,t) = {A.d * per_col} exceeds {ENUMERATION_LIMIT}")
    combos = np.array(list(itertools.combinations(range(A.s), t)), dtype=np.int64)
    # rows within a column increase with the block index, so T comes out sorted
    rows = A.rows[:, combos].reshape(-1, t)
    signs = A.signs[:, combos].reshape(-1, t).astype(np.int64)
    cols = np.repeat(np.arange(A.d), per_col)
    keys = np.hstack([rows, signs])
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    order = np.argsort(inverse, kind="stable")
    splits = np.cumsum(counts)[:-1]
    members = np.split(cols[order], splits)
    groups = [
        SignatureGroup(tuple(u[:t].tolist()), tuple(u[t:].tolist()), tuple(mem.tolist()))
        for u, mem in zip(uniq, members)
    ]
    groups.sort(key=lambda g: -len(g.columns))
    return groups


def averaging_floor(m: int, s: int, d: int, t: int) -> int:
    """floor(d C(s,t) / (C(m,t) 2^t)): some signature is shared by at least this many columns."""
    return (d * math.comb(s, t)) // (math.comb(m, t) * 2**t)


# ---------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepRow:
    s: int
    m: int
    successes: int
    trials: int

    @property
    def frequency(self) -> float:
        return self.successes / self.trials


def empirical_lower_bound(
    d: int,
    n_target: int,
    eps: float,
    s_values,
    trials: int,
    seed: int = 0,
    cap: int = 600,
    c_m: float = 1.0,
    threads: int | None = None,
) -> list[SweepRow]:
    """Success frequency of eps-distortion on the hard instance for each s.

    The base dimension is m = ceil(c_m ln(n_target) / eps^2), rounded up to a
    multiple of each s. Trial ``t`` of every s uses matrix seed
    ``derive_seed(seed, t)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    X = generate(n_target, d, cap, seed).to_dataset()
    geom = _original_geometry(X, None, seed)
    base_m = math.ceil(c_m * math.log(n_target) / eps**2)
    threads = resolve_threads(threads)
    table = []
    with ThreadPoolExecutor(threads) as pool:
        for s in s_values:
            if s < 1:
                raise ValueError(f"s must be positive, got {s}")
            m = -(-max(base_m, s) // s) * s

            def ok(t, m=m, s=s):
                A = SparseJLMatrix.sample(m, d, s, kernels.derive_seed(seed, t))
                return bool(_relative(A.apply_dataset(X), geom).max() <= eps)

            table.append(SweepRow(s, m, sum(pool.map(ok, range(trials))), trials))
    return table
