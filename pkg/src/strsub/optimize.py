"""Greedy and exhaustive solvers for ``max f(M)`` over strings with ``|M| <= K``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import properties
from .core import DEFAULT_BUDGET, ActionString, Oracle, ValueTable


@dataclass(frozen=True)
class GreedyTrace:
    prefixes: tuple[ActionString, ...]
    values: tuple[float, ...]
    per_stage_argmax_ties: tuple[int, ...]

    @property
    def string(self) -> ActionString:
        return self.prefixes[-1]

    @property
    def value(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class OptimalResult:
    argmax: ActionString
    value: float
    num_evaluated: int


@dataclass(frozen=True)
class BoundReport:
    greedy_value: float
    optimal_value: float
    ratio: float | None
    factor_thm3: float
    eta: float | None
    factor_thm4: float | None
    sigma_hat: float | None
    factor_thm2: float | None
    satisfied_thm3: bool
    satisfied_thm4: bool


def greedy(oracle: Oracle, K: int) -> GreedyTrace:
    """Build G_1, ..., G_K by maximizing f one action at a time.

    Ties go to the smallest action index.  Uses exactly ``K * m`` evaluations.
    """
    if not 1 <= K <= oracle.horizon:
        raise ValueError(f"K={K} must lie in 1..{oracle.horizon}")
    m = oracle.alphabet_size
    prefix: ActionString = ()
    prefixes, values, ties = [], [], []
    for _ in range(K):
        cand = np.empty((m, len(prefix) + 1), dtype=np.int64)
        cand[:, :-1] = prefix
        cand[:, -1] = np.arange(m)
        vals = oracle.evaluate_many(cand)
        best = int(np.argmax(vals))
        prefix = prefix + (best,)
        prefixes.append(prefix)
        values.append(float(vals[best]))
        ties.append(int(np.count_nonzero(vals == vals[best])))
    return GreedyTrace(tuple(prefixes), tuple(values), tuple(ties))


def exhaustive_optimal(
    oracle: Oracle,
    K: int,
    *,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    table: ValueTable | None = None,
) -> OptimalResult:
    """Evaluate every string of length 1..K and return the first maximizer.

    If every non-empty string scores below zero, the empty string (value 0)
    is returned.
    """
    if not 1 <= K <= oracle.horizon:
        raise ValueError(f"K={K} must lie in 1..{oracle.horizon}")
    if table is None or table.max_len < K:
        table = ValueTable.build(oracle, K, min_len=1, threads=threads, budget=budget)
    best_len, best_rank, best_val = 0, 0, -math.inf
    num = 0
    for k in range(1, K + 1):
        vals = table.values[k]
        num += vals.size
        r = int(np.argmax(vals))
        if vals[r] > best_val:
            best_len, best_rank, best_val = k, r, float(vals[r])
    if best_val < 0.0:
        return OptimalResult((), 0.0, num)
    return OptimalResult(table.string_at(best_len, best_rank), best_val, num)


def bound_report(
    oracle: Oracle,
    K: int,
    tol: float = 1e-9,
    *,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    trace: GreedyTrace | None = None,
    optimal: OptimalResult | None = None,
    table: ValueTable | None = None,
) -> BoundReport:
    """Compare greedy against the optimum and the curvature-based factors.

    Precomputed ``trace``/``optimal``/``table`` are reused when given.
    """
    if trace is None:
        trace = greedy(oracle, K)
    if table is None:
        table = ValueTable.build(oracle, K, threads=threads, budget=budget)
    if optimal is None:
        optimal = exhaustive_optimal(oracle, K, table=table)

    g, o = trace.value, optimal.value
    ratio = g / o if o > 0 else None
    f3 = properties.factor_thm3(K)
    slack = tol * max(1.0, abs(o))

    eta = properties.compute_eta(oracle, K, trace, optimal)
    f4 = None
    if eta.applicable and 0.0 < eta.value <= 1.0:
        f4 = properties.factor_curved(eta.value, K)

    sigma = properties.compute_sigma_restricted(oracle, K, table=table)
    f2 = None
    if sigma.applicable and 0.0 < sigma.value <= 1.0:
        f2 = properties.factor_curved(sigma.value, K)

    return BoundReport(
        greedy_value=g,
        optimal_value=o,
        ratio=ratio,
        factor_thm3=f3,
        eta=eta.value if eta.applicable else None,
        factor_thm4=f4,
        sigma_hat=sigma.value if sigma.applicable else None,
        factor_thm2=f2,
        satisfied_thm3=g >= f3 * o - slack,
        satisfied_thm4=f4 is not None and g >= f4 * o - slack,
    )
