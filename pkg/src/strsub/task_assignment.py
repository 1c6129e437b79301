"""Task assignment model: expected fraction of subtasks accomplished.

Agent ``a`` assigned at stage ``j`` accomplishes subtask ``i`` with
probability ``p[i, j, a]``; a string assigns one agent per stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .core import Oracle


@dataclass(frozen=True)
class ConditionCheck:
    """Verdict and slack of an analytic sufficient condition (``holds`` iff all margins >= 0)."""

    name: str
    holds: bool
    margin: float
    margins: tuple[float, ...] = ()
    values: dict = field(default_factory=dict)
    note: str | None = None


@dataclass(frozen=True, eq=False)
class TaskAssignmentInstance:
    p: np.ndarray  # (n, K, m)
    L: np.ndarray  # (n, m)
    U: np.ndarray  # (n, m)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        L = np.array(self.L, dtype=float)
        U = np.array(self.U, dtype=float)
        if p.ndim != 3 or min(p.shape) < 1:
            raise ValueError(f"p must have shape (n, K, m) with positive sizes, got {p.shape}")
        n, _, m = p.shape
        if L.shape != (n, m) or U.shape != (n, m):
            raise ValueError(f"L and U must have shape {(n, m)}, got {L.shape} and {U.shape}")
        if not (np.all(L > 0) and np.all(U < 1) and np.all(L <= U)):
            raise ValueError("bounds must satisfy 0 < L <= U < 1")
        if not (np.all(p >= L[:, None, :]) and np.all(p <= U[:, None, :])):
            raise ValueError("every p[i, j, a] must lie in [L[i, a], U[i, a]]")
        for name, arr in (("p", p), ("L", L), ("U", U)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        q = 1.0 - p
        q.setflags(write=False)
        object.__setattr__(self, "_q", q)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def K(self) -> int:
        return self.p.shape[1]

    @property
    def m(self) -> int:
        return self.p.shape[2]

    def truncated(self, K: int) -> "TaskAssignmentInstance":
        if not 1 <= K <= self.K:
            raise ValueError(f"K={K} must lie in 1..{self.K}")
        return TaskAssignmentInstance(self.p[:, :K, :], self.L, self.U)

    def __eq__(self, other):
        if not isinstance(other, TaskAssignmentInstance):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("p", "L", "U"))


class TaskAssignmentOracle(Oracle):
    def __init__(self, inst: TaskAssignmentInstance):
        self.inst = inst
        self.alphabet_size = inst.m
        self.horizon = inst.K

    def evaluate_many(self, strings: np.ndarray) -> np.ndarray:
        strings = np.ascontiguousarray(strings, dtype=np.int64)
        return kernels.task_values(strings, self.inst._q)


def ta_objective(inst: TaskAssignmentInstance, M: Sequence[int]) -> float:
    return TaskAssignmentOracle(inst).evaluate(M)


def ta_random_instance(
    seed: int, n: int, m: int, K: int, p_low: float, p_high: float
) -> TaskAssignmentInstance:
    """Entries uniform in [p_low, p_high]; bounds set to the range itself."""
    if not 0.0 < p_low <= p_high < 1.0:
        raise ValueError(f"need 0 < p_low <= p_high < 1, got [{p_low}, {p_high}]")
    rng = np.random.default_rng(seed)
    p = np.clip(rng.uniform(p_low, p_high, size=(n, K, m)), p_low, p_high)
    return TaskAssignmentInstance(p, np.full((n, m), p_low), np.full((n, m), p_high))


def _extremes(inst):
    return float(inst.L.min()), float(inst.U.max())


def _extrapolated(inst):
    return "extrapolated: extrema taken over all subtasks" if inst.n > 1 else None


def ta_check_diminishing_condition(inst: TaskAssignmentInstance) -> ConditionCheck:
    """L_hat >= (1 - L_hat) U_hat; sufficient for K-diminishing."""
    lo, hi = _extremes(inst)
    margin = lo - (1.0 - lo) * hi
    return ConditionCheck("diminishing", margin >= 0.0, margin, values={"L_hat": lo, "U_hat": hi},
                          note=_extrapolated(inst))


def ta_check_half_condition(inst: TaskAssignmentInstance) -> ConditionCheck:
    """L_hat >= 1/2; sufficient for the 1 - (1 - 1/K)^K guarantee."""
    lo, _ = _extremes(inst)
    margin = lo - 0.5
    return ConditionCheck("half", margin >= 0.0, margin, values={"L_hat": lo}, note=_extrapolated(inst))


def _require_single(inst):
    if inst.n != 1:
        raise ValueError(f"n must be 1 for this condition, got n={inst.n}")


def ta_check_prior_condition(inst: TaskAssignmentInstance, greedy_first_value: float, K: int | None = None) -> ConditionCheck:
    """Earlier, stronger requirement p^1(g_1) >= 1 - c^K with
    c = min_a (1 - U(a)) / (1 - L(a)).

    ``greedy_first_value`` is p^1(g_1), i.e. f(G_1) for n = 1.
    """
    _require_single(inst)
    K = inst.K if K is None else K
    c = float(np.min((1.0 - inst.U[0]) / (1.0 - inst.L[0])))
    threshold = 1.0 - c**K
    margin = greedy_first_value - threshold
    return ConditionCheck("prior", margin >= 0.0, margin, values={"c": c, "threshold": threshold})


def ta_check_go_condition(inst: TaskAssignmentInstance, optimal, index: str = "oi") -> ConditionCheck:
    """prod_{j=i+1}^K (1 - p^j(o_i)) <= i/K for i = 1..K-1.

    ``index="oi"`` uses the agent o_i in every factor; ``index="oj"`` uses
    o_j for stage j.
    """
    _require_single(inst)
    if index not in ("oi", "oj"):
        raise ValueError("index must be 'oi' or 'oj'")
    o = tuple(optimal.argmax)
    K = len(o)
    q = inst._q[0]
    margins = []
    for i in range(1, K):
        prod = 1.0
        for j in range(i + 1, K + 1):
            agent = o[i - 1] if index == "oi" else o[j - 1]
            prod *= q[j - 1, agent]
        margins.append(i / K - prod)
    worst = min(margins) if margins else float("inf")
    return ConditionCheck(f"go_{index}", worst >= 0.0, worst, tuple(margins))
