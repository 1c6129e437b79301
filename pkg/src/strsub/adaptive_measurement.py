"""Adaptive measurement design with diagonal measurement matrices.

The signal x in R^2 has prior N(0, I).  Action ``e`` measures with
``A = diag(sqrt(e), sqrt(1 - e))`` under noise variance ``sigma_sq[j]`` at
stage ``j``; the objective is the entropy reduction -0.5 ln det(P_k), natural
log.  Because every A is diagonal the posterior precision is diag(S, T) and
the gain reduces to 0.5 ln(S T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import Oracle
from .task_assignment import ConditionCheck

DIM = 2
DEFAULT_GRID_POINTS = 101


def uniform_grid(count: int = DEFAULT_GRID_POINTS, lo: float = 0.5, hi: float = 1.0) -> tuple[float, ...]:
    if count < 1:
        raise ValueError("grid needs at least one point")
    if count == 1:
        return (float(lo),)
    return tuple(float(x) for x in np.linspace(lo, hi, count))


@dataclass(frozen=True)
class MeasurementInstance:
    sigma_sq: tuple[float, ...]
    e_grid: tuple[float, ...]

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigma_sq)
        grid = tuple(float(e) for e in self.e_grid)
        if not sig:
            raise ValueError("sigma_sq must list one variance per stage")
        if any(not (s > 0 and math.isfinite(s)) for s in sig):
            raise ValueError("noise variances must be positive and finite")
        if not grid:
            raise ValueError("e_grid is empty")
        if any(not 0.5 <= e <= 1.0 for e in grid):
            raise ValueError("grid points must lie in [0.5, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid points must be sorted and distinct")
        object.__setattr__(self, "sigma_sq", sig)
        object.__setattr__(self, "e_grid", grid)

    @property
    def K(self) -> int:
        return len(self.sigma_sq)

    @property
    def m(self) -> int:
        return len(self.e_grid)

    def truncated(self, K: int) -> "MeasurementInstance":
        if not 1 <= K <= self.K:
            raise ValueError(f"K={K} must lie in 1..{self.K}")
        return MeasurementInstance(self.sigma_sq[:K], self.e_grid)


@dataclass(frozen=True)
class PosteriorState:
    S: float
    T: float


class MeasurementOracle(Oracle):
    """Objective oracle; ``method`` is ``"closed"`` (S/T kernel) or ``"matrix"``."""

    def __init__(self, inst: MeasurementInstance, method: str = "closed"):
        if method not in ("closed", "matrix"):
            raise ValueError("method must be 'closed' or 'matrix'")
        self.inst = inst
        self.method = method
        self.alphabet_size = inst.m
        self.horizon = inst.K
        self._inv_var = 1.0 / np.asarray(inst.sigma_sq)
        self._grid = np.asarray(inst.e_grid)
        self._comp = 1.0 - self._grid

    def evaluate_many(self, strings: np.ndarray) -> np.ndarray:
        strings = np.ascontiguousarray(strings, dtype=np.int64)
        if self.method == "closed":
            return kernels.measurement_values(strings, self._inv_var, self._grid, self._comp)
        return np.array([_matrix_gain(self.inst, row) for row in strings], dtype=float)


def _matrix_gain(inst: MeasurementInstance, string) -> float:
    P = np.eye(DIM)
    for j, k in enumerate(string):
        e = inst.e_grid[int(k)]
        A = np.diag([math.sqrt(e), math.sqrt(1.0 - e)])
        P = np.linalg.inv(np.linalg.inv(P) + (A.T @ A) / inst.sigma_sq[j])
    sign, logdet = np.linalg.slogdet(P)
    return -0.5 * float(logdet)


def am_objective_matrix(inst: MeasurementInstance, M: Sequence[int]) -> float:
    """Information gain through the full covariance recursion."""
    return MeasurementOracle(inst, "matrix").evaluate(M)


def am_objective_closed_form(inst: MeasurementInstance, M: Sequence[int]) -> float:
    return MeasurementOracle(inst, "closed").evaluate(M)


def posterior_state(inst: MeasurementInstance, M: Sequence[int]) -> PosteriorState:
    S = T = 1.0
    for j, k in enumerate(M):
        e = inst.e_grid[int(k)]
        S += e / inst.sigma_sq[j]
        T += (1.0 - e) / inst.sigma_sq[j]
    return PosteriorState(S, T)


def am_random_instance(
    seed: int,
    K: int,
    grid_points: int = DEFAULT_GRID_POINTS,
    sigma_sq_low: float = 0.25,
    sigma_sq_high: float = 4.0,
    order: str = "increasing",
) -> MeasurementInstance:
    """Noise variances drawn uniformly from [sigma_sq_low, sigma_sq_high].

    ``order`` is ``increasing`` (non-decreasing schedule), ``decreasing``
    (strictly decreasing, violating the ordering condition when K >= 2) or
    ``random``.
    """
    if not 0.0 < sigma_sq_low <= sigma_sq_high:
        raise ValueError("need 0 < sigma_sq_low <= sigma_sq_high")
    rng = np.random.default_rng(seed)
    sig = rng.uniform(sigma_sq_low, sigma_sq_high, size=K)
    if order == "increasing":
        sig = np.sort(sig)
    elif order == "decreasing":
        sig = np.sort(sig)[::-1]
        if K >= 2 and sig[0] == sig[-1]:
            raise ValueError("cannot build a decreasing schedule from a degenerate range")
    elif order != "random":
        raise ValueError(f"unknown order {order!r}")
    return MeasurementInstance(tuple(float(s) for s in sig), uniform_grid(grid_points))


def am_check_sigma_condition(inst: MeasurementInstance) -> ConditionCheck:
    """Non-decreasing noise variances sigma_{i+1}^2 >= sigma_i^2."""
    s = inst.sigma_sq
    margins = tuple(b - a for a, b in zip(s, s[1:]))
    worst = min(margins) if margins else math.inf
    return ConditionCheck("sigma_nondecreasing", worst >= 0.0, worst, margins)


def am_check_prior_condition(inst: MeasurementInstance, a: float, b: float, K: int | None = None) -> ConditionCheck:
    """Earlier requirement b^-2 / (a^-2 - b^-2) >= ((2K-2)^2 / 4)(a^-2 + b^-2) + 1,
    where [a, b] contains every noise standard deviation.

    ``a == b`` makes the left side unbounded; reported as holding with
    infinite margin.
    """
    if not 0.0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got a={a}, b={b}")
    K = inst.K if K is None else K
    sd = [math.sqrt(s) for s in inst.sigma_sq[:K]]
    eps = 1e-12 * b
    if any(x < a - eps or x > b + eps for x in sd):
        raise ValueError(f"noise standard deviations {sd} not contained in [{a}, {b}]")
    ia, ib = a**-2, b**-2
    rhs = (2 * K - 2) ** 2 / 4 * (ia + ib) + 1.0
    if a == b:
        return ConditionCheck("prior_eq17", True, math.inf, values={"lhs": math.inf, "rhs": rhs},
                              note="a == b: left side unbounded")
    lhs = ib / (ia - ib)
    return ConditionCheck("prior_eq17", lhs >= rhs, lhs - rhs, values={"lhs": lhs, "rhs": rhs})


@dataclass(frozen=True)
class G1Check:
    equal: bool
    gap: float
    e1_greedy: float
    e1_optimal: float
    stage1_product: float  # (e1 - e1*)(1 - (e1 + e1*)), must be >= 0
    precondition: bool


def am_verify_g1_equals_o1(inst: MeasurementInstance, optimal, greedy) -> G1Check:
    """Compare the first greedy and first optimal grid values.

    When the variances are not non-decreasing the result is diagnostic only
    (``precondition`` is False).
    """
    if not optimal.argmax:
        raise ValueError("optimal string is empty")
    e1 = inst.e_grid[greedy.prefixes[0][0]]
    e1s = inst.e_grid[optimal.argmax[0]]
    return G1Check(
        equal=e1 == e1s,
        gap=abs(e1 - e1s),
        e1_greedy=e1,
        e1_optimal=e1s,
        stage1_product=(e1 - e1s) * (1.0 - (e1 + e1s)),
        precondition=am_check_sigma_condition(inst).holds and len(optimal.argmax) == inst.K,
    )


@dataclass(frozen=True)
class GOInequalityTerms:
    i: int
    S_i_star: float
    S_bar_star: float
    S_i: float
    a_i: float
    c_K: float
    lhs: float
    rhs: float
    holds: bool


def am_go_inequality_terms(
    inst: MeasurementInstance, greedy, optimal, i: int, rel_tol: float = 1e-9
) -> GOInequalityTerms:
    """Splice condition at stage ``i`` in product form:

        (S*_i + Sb*)^(K-i) (c_K - (S*_i + Sb*))^(K-i) S_i^i (a_i - S_i)^i
            <= (S_i + Sb*)^K (c_K - (S_i + Sb*))^K

    with ``Sb* = sum_{j>i} e*_j / sigma_j^2``.  ``holds`` allows ``rel_tol``
    relative slack on the right side.
    """
    o = tuple(optimal.argmax)
    K = len(o)
    if K != inst.K:
        raise ValueError(f"optimal string has length {K}, expected K={inst.K}")
    if not 1 <= i <= K - 1:
        raise IndexError(f"stage i={i} outside 1..{K - 1}")
    g = greedy.prefixes[i - 1]
    w = [1.0 / s for s in inst.sigma_sq]
    grid = inst.e_grid
    S_i_star = 1.0 + sum(w[j] * grid[o[j]] for j in range(i))
    S_bar = sum(w[j] * grid[o[j]] for j in range(i, K))
    S_i = 1.0 + sum(w[j] * grid[g[j]] for j in range(i))
    a_i = 2.0 + sum(w[:i])
    c_K = 2.0 + sum(w)
    full_star = S_i_star + S_bar
    full_g = S_i + S_bar
    lhs = (full_star ** (K - i)) * ((c_K - full_star) ** (K - i)) * (S_i**i) * ((a_i - S_i) ** i)
    rhs = (full_g**K) * ((c_K - full_g) ** K)
    return GOInequalityTerms(i, S_i_star, S_bar, S_i, a_i, c_K, lhs, rhs, lhs <= rhs * (1.0 + rel_tol))
