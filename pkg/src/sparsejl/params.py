"""Concrete (m, s, ell) from the asymptotic sparsity bounds.

All logarithms are natural. The big-O constants are explicit parameters
``c_m`` (target dimension) and ``c_s`` (column sparsity).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

DEFAULT_C_M = 1.0
DEFAULT_C_S = 1.0

#: Result of ``calibrate_constants(0.95, 200, (1000, 256, 0.25), rng_seed=0)``.
CALIBRATED_C_M = 8.0
CALIBRATED_C_S = 4.0

CALIBRATION_GRID = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


class CalibrationError(RuntimeError):
    pass


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def _check_constants(c_m: float, c_s: float) -> None:
    if not (c_m > 0 and c_s > 0):
        raise ValueError(f"constants must be positive (c_m={c_m}, c_s={c_s})")


def _round_block(m: int, s: int) -> tuple[int, int, bool]:
    clamped = s > m
    s = min(s, m)
    m = -(-m // s) * s
    return m, s, clamped


@dataclass(frozen=True)
class EmbeddingPlan:
    n: int
    d: int
    eps: float
    c_m: float
    c_s: float
    m: int
    s: int
    ell: int
    clamped: bool = False

    def __post_init__(self):
        if not 1 <= self.s <= self.m or self.m % self.s:
            raise ValueError(f"inconsistent plan: m={self.m}, s={self.s}")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")

    @property
    def block_size(self) -> int:
        return self.m // self.s

    def record(self) -> str:
        return (
            f"kind=jl n={self.n} d={self.d} eps={self.eps!r} c_m={self.c_m!r} c_s={self.c_s!r} "
            f"m={self.m} s={self.s} ell={self.ell} block_size={self.block_size} clamped={int(self.clamped)}"
        )

    def pretty(self) -> str:
        lines = [
            f"JL plan for n={self.n} points in d={self.d} dimensions at eps={self.eps}",
            f"  target dimension m = {self.m}   (c_m = {self.c_m})",
            f"  column sparsity  s = {self.s}   (c_s = {self.c_s})",
            f"  block size   m / s = {self.block_size}",
            f"  head size      ell = {self.ell}",
        ]
        if self.clamped:
            lines.append("  note: s was clamped to m")
        return "\n".join(lines)


@dataclass(frozen=True)
class SubspacePlan:
    k: int
    eps: float
    c_m: float
    c_s: float
    m: int
    s: int
    ell: int
    clamped: bool = False

    def __post_init__(self):
        if not 1 <= self.s <= self.m or self.m % self.s:
            raise ValueError(f"inconsistent plan: m={self.m}, s={self.s}")

    @property
    def block_size(self) -> int:
        return self.m // self.s

    def record(self) -> str:
        return (
            f"kind=subspace k={self.k} eps={self.eps!r} c_m={self.c_m!r} c_s={self.c_s!r} "
            f"m={self.m} s={self.s} ell={self.ell} block_size={self.block_size} clamped={int(self.clamped)}"
        )

    def pretty(self) -> str:
        lines = [
            f"Subspace plan for k={self.k} at eps={self.eps}",
            f"  target dimension m = {self.m}   (c_m = {self.c_m})",
            f"  column sparsity  s = {self.s}   (c_s = {self.c_s})",
            f"  block size   m / s = {self.block_size}",
            f"  heavy threshold ell = {self.ell}",
        ]
        if self.clamped:
            lines.append("  note: s was clamped to m")
        return "\n".join(lines)


def jl_sparsity(n: int, d: int, eps: float, c_s: float = DEFAULT_C_S) -> int:
    """Unclamped s = ceil(c_s/eps * (ln n / ln(1/eps) + ln(n)^(2/3) ln(d)^(1/3)))."""
    ln_n, ln_d = math.log(n), math.log(d)
    return math.ceil(c_s / eps * (ln_n / math.log(1.0 / eps) + ln_n ** (2 / 3) * ln_d ** (1 / 3)))


def plan_jl(n: int, d: int, eps: float, c_m: float = DEFAULT_C_M, c_s: float = DEFAULT_C_S) -> EmbeddingPlan:
    if n < 2 or d < 2:
        raise ValueError(f"need n >= 2 and d >= 2 (got n={n}, d={d})")
    _check_eps(eps)
    _check_constants(c_m, c_s)
    ln_n, ln_d = math.log(n), math.log(d)
    m = math.ceil(c_m * ln_n / eps**2)
    s = jl_sparsity(n, d, eps, c_s)
    m, s, clamped = _round_block(m, s)
    ell = math.ceil(min(eps**-0.5, (ln_n / ln_d) ** (2 / 3)))
    return EmbeddingPlan(n, d, eps, c_m, c_s, m, s, ell, clamped)


def plan_subspace(k: int, eps: float, c_m: float = DEFAULT_C_M, c_s: float = DEFAULT_C_S) -> SubspacePlan:
    """Plan for a k-dimensional subspace.

    ell uses ln|N+| ~ k ln 8 in place of ln n, N+ being the expanded 1/2-net.
    """
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    _check_eps(eps)
    _check_constants(c_m, c_s)
    ln_k = math.log(k)
    m = math.ceil(c_m * k / eps**2)
    s = math.ceil(c_s / eps * (k / math.log(1.0 / eps) + k ** (2 / 3) * ln_k ** (1 / 3)))
    m, s, clamped = _round_block(m, s)
    ell = math.ceil(min(eps**-0.5, (k * math.log(8.0) / ln_k) ** (2 / 3)))
    return SubspacePlan(k, eps, c_m, c_s, m, s, ell, clamped)


def grid_order(grid=CALIBRATION_GRID) -> list[tuple[float, float]]:
    """Grid pairs by increasing c_m * c_s, ties broken by smaller c_m."""
    return sorted(itertools.product(grid, grid), key=lambda p: (p[0] * p[1], p[0]))


def calibrate_constants(
    target_success: float,
    trial_budget: int,
    scenario: tuple[int, int, float],
    rng_seed: int = 0,
    threads: int | None = None,
    grid=CALIBRATION_GRID,
) -> tuple[float, float]:
    """Smallest grid constants whose Monte Carlo success rate reaches the target.

    The dataset is ``random_unit_dataset(n, d, seed=rng_seed)`` and trial
    ``t`` uses the matrix seed derived from ``(rng_seed, t)`` for every grid
    point (common random numbers), so a higher target never selects a pair
    with a smaller product.
    """
    from .diagnostics import success_count
    from .vectors import random_unit_dataset

    if not 0.0 < target_success < 1.0:
        raise ValueError(f"target_success must lie in (0, 1), got {target_success}")
    if trial_budget < 100:
        raise ValueError(f"trial_budget must be >= 100, got {trial_budget}")
    n, d, eps = scenario
    X = random_unit_dataset(n, d, seed=rng_seed)
    need = math.ceil(target_success * trial_budget - 1e-9)
    for c_m, c_s in grid_order(grid):
        plan = plan_jl(n, d, eps, c_m, c_s)
        hits = success_count(plan, X, trial_budget, rng_seed, threads=threads, need=need)
        if hits >= need:
            return c_m, c_s
    raise CalibrationError(f"no grid point reaches success {target_success} on {scenario}")
