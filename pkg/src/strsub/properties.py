"""Exhaustive checks of the length-restricted submodularity conditions, curvatures
and the greedy approximation factors.

All checks enumerate strings of length at most ``K`` through a
:class:`~strsub.core.ValueTable`, so each objective value is computed once.
The worst margin over all checked inequalities is reported together with the
strings realizing it; ties resolve to the earliest inequality in the
enumeration order used by each checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .core import DEFAULT_BUDGET, Oracle, ValueTable

if TYPE_CHECKING:
    from .optimize import GreedyTrace, OptimalResult

K_MONOTONE = "K-monotone"
K_DIMINISHING = "K-diminishing"
K_SUBMODULAR = "K-submodular"
POSTFIX_RESTRICTED = "postfix-monotone-restricted"
K_GO_CONCAVE = "K-GO-concave"


@dataclass(frozen=True)
class PropertyReport:
    property_name: str
    holds: bool
    worst_margin: float
    counterexample: tuple | None
    num_checked: int
    applicable: bool = True
    reason: str | None = None
    stage_margins: tuple[float, ...] | None = None


@dataclass(frozen=True)
class CurvatureEstimate:
    value: float | None
    maximizer: Any
    applicable: bool
    reason_if_not: str | None = None
    skipped: int = 0
    terms: tuple = field(default=())


def factor_thm3(K: int) -> float:
    """Greedy guarantee 1 - (1 - 1/K)^K."""
    if K < 1:
        raise ValueError("K must be positive")
    return factor_curved(1.0, K)


def factor_curved(c: float, K: int) -> float:
    """Curvature-dependent guarantee (1/c)(1 - (1 - c/K)^K) for c in (0, 1]."""
    if not 0.0 < c <= 1.0:
        raise ValueError(f"curvature out of range: {c!r} not in (0, 1]")
    if K < 1:
        raise ValueError("K must be positive")
    return (1.0 - (1.0 - c / K) ** K) / c


def _table(oracle, K, table, threads, budget):
    if table is not None and table.max_len >= K and table.values[0] is not None:
        return table
    return ValueTable.build(oracle, K, threads=threads, budget=budget)


class _Worst:
    """Running minimum that keeps the first location on ties."""

    def __init__(self):
        self.margin = math.inf
        self.where = None
        self.count = 0

    def update(self, block: np.ndarray, locate):
        self.count += block.size
        if block.size == 0:
            return
        flat = int(np.argmin(block))
        v = float(block.reshape(-1)[flat])
        if v < self.margin:
            self.margin = v
            self.where = locate(np.unravel_index(flat, block.shape))


def _report(name, worst: _Worst, tol, **kw) -> PropertyReport:
    holds = worst.margin >= -tol
    return PropertyReport(
        property_name=name,
        holds=holds,
        worst_margin=worst.margin,
        counterexample=None if holds and worst.margin >= 0 else worst.where,
        num_checked=worst.count,
        **kw,
    )


def check_k_monotone(
    oracle: Oracle,
    K: int,
    tol: float = 1e-9,
    *,
    table: ValueTable | None = None,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> PropertyReport:
    """f(M + N) >= f(M) for all N != () with |M| + |N| <= K.

    Counterexample is ``(M, N)``.
    """
    tab = _table(oracle, K, table, threads, budget)
    m, V = tab.alphabet_size, tab.values
    worst = _Worst()
    for lm in range(K):
        for ln in range(1, K - lm + 1):
            block = V[lm + ln].reshape(m**lm, m**ln) - V[lm][:, None]
            worst.update(
                block,
                lambda ix, lm=lm, ln=ln: (tab.string_at(lm, int(ix[0])), tab.string_at(ln, int(ix[1]))),
            )
    return _report(K_MONOTONE, worst, tol)


def check_postfix_restricted(
    oracle: Oracle,
    K: int,
    tol: float = 1e-9,
    *,
    table: ValueTable | None = None,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> PropertyReport:
    """f(M + N) >= f(N) for all M != () with |M| + |N| <= K.

    Counterexample is ``(M, N)``.
    """
    tab = _table(oracle, K, table, threads, budget)
    m, V = tab.alphabet_size, tab.values
    worst = _Worst()
    for lm in range(1, K + 1):
        for ln in range(K - lm + 1):
            block = V[lm + ln].reshape(m**lm, m**ln) - V[ln][None, :]
            worst.update(
                block,
                lambda ix, lm=lm, ln=ln: (tab.string_at(lm, int(ix[0])), tab.string_at(ln, int(ix[1]))),
            )
    return _report(POSTFIX_RESTRICTED, worst, tol)


def _gains(tab: ValueTable, K: int) -> list[np.ndarray]:
    m, V = tab.alphabet_size, tab.values
    return [V[k + 1].reshape(m**k, m) - V[k][:, None] for k in range(K)]


def check_k_diminishing(
    oracle: Oracle,
    K: int,
    tol: float = 1e-9,
    *,
    table: ValueTable | None = None,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> PropertyReport:
    """Gain of ``a`` after M >= gain of ``a`` after N, for every proper prefix M of N, |N| <= K-1.

    ``M == N`` is skipped since its margin is identically zero.
    Counterexample is ``(M, N, a)``.
    """
    tab = _table(oracle, K, table, threads, budget)
    m = tab.alphabet_size
    gains = _gains(tab, K)
    worst = _Worst()
    for lm in range(K - 1):
        for ln in range(lm + 1, K):
            gn = gains[ln].reshape(m**lm, m ** (ln - lm), m)
            block = gains[lm][:, None, :] - gn

            def locate(ix, lm=lm, ln=ln):
                i, j, a = (int(v) for v in ix)
                return (tab.string_at(lm, i), tab.string_at(ln, i * m ** (ln - lm) + j), a)

            worst.update(block, locate)
    return _report(K_DIMINISHING, worst, tol)


def check_k_submodular(
    oracle: Oracle,
    K: int,
    tol: float = 1e-9,
    *,
    table: ValueTable | None = None,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> PropertyReport:
    tab = _table(oracle, K, table, threads, budget)
    mono = check_k_monotone(oracle, K, tol, table=tab)
    dim = check_k_diminishing(oracle, K, tol, table=tab)
    # the failing (or tighter) half supplies the counterexample
    src = mono if mono.worst_margin <= dim.worst_margin else dim
    return PropertyReport(
        property_name=K_SUBMODULAR,
        holds=mono.holds and dim.holds,
        worst_margin=min(mono.worst_margin, dim.worst_margin),
        counterexample=None if mono.holds and dim.holds else (src.property_name, src.counterexample),
        num_checked=mono.num_checked + dim.num_checked,
    )


def _splices(oracle, K, greedy, optimal):
    o = tuple(optimal.argmax)
    rows = np.array([greedy.prefixes[i - 1] + o[i:] for i in range(1, K)], dtype=np.int64).reshape(K - 1, K)
    return oracle.evaluate_many(rows) if K > 1 else np.zeros(0)


def check_go_concavity(
    oracle: Oracle,
    K: int,
    greedy: "GreedyTrace",
    optimal: "OptimalResult",
    tol: float = 1e-9,
) -> PropertyReport:
    """f(G_i + O[i:]) >= (i/K) f(G_i) + (1 - i/K) f(O_K) for i = 1..K-1.

    Counterexample is ``(G_i, O[i:], O_K)``.  Not applicable when the optimal
    string is shorter than ``K``.
    """
    if len(optimal.argmax) != K:
        return PropertyReport(
            K_GO_CONCAVE, False, math.nan, None, 0, applicable=False,
            reason=f"optimal string has length {len(optimal.argmax)} < K={K}",
        )
    spliced = _splices(oracle, K, greedy, optimal)
    o = tuple(optimal.argmax)
    margins = []
    worst = _Worst()
    for i in range(1, K):
        fg = greedy.values[i - 1]
        margins.append(float(spliced[i - 1] - ((i / K) * fg + (1.0 - i / K) * optimal.value)))
    worst.update(np.asarray(margins), lambda ix: (greedy.prefixes[int(ix[0])], o[int(ix[0]) + 1 :], o))
    return _report(K_GO_CONCAVE, worst, tol, stage_margins=tuple(margins))


def compute_eta(oracle: Oracle, K: int, greedy: "GreedyTrace", optimal: "OptimalResult") -> CurvatureEstimate:
    """Splice curvature: max over i of

        [K f(G_i) - (K f(G_i + O[i:]) - (K-i) f(O_K))] / [(K-i) f(G_i)]

    ``maximizer`` is the stage ``i`` (1-based).
    """
    if K < 2:
        return CurvatureEstimate(None, None, False, "max over empty index set (K=1)")
    if len(optimal.argmax) != K:
        return CurvatureEstimate(None, None, False, f"optimal string shorter than K={K}")
    bad = [i for i in range(1, K) if not greedy.values[i - 1] > 0.0]
    if bad:
        return CurvatureEstimate(None, None, False, f"f(G_{bad[0]}) <= 0")
    spliced = _splices(oracle, K, greedy, optimal)
    fo = optimal.value
    terms = []
    for i in range(1, K):
        fg = greedy.values[i - 1]
        num = K * fg - (K * float(spliced[i - 1]) - (K - i) * fo)
        terms.append(num / ((K - i) * fg))
    best = int(np.argmax(terms))
    return CurvatureEstimate(terms[best], best + 1, True, terms=tuple(terms))


def compute_sigma_restricted(
    oracle: Oracle,
    K: int,
    *,
    table: ValueTable | None = None,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> CurvatureEstimate:
    """Backward curvature restricted to 1 <= |M| <= K-1:

        max over a with f((a)) > 0 and M of [f((a)) - (f((a) + M) - f(M))] / f((a))

    This is a lower bound on the unrestricted quantity.  ``maximizer`` is
    ``(a, M)``; ``skipped`` counts actions with f((a)) <= 0.
    """
    if table is None or table.max_len < K or table.values[1] is None:
        table = ValueTable.build(oracle, K, min_len=1, threads=threads, budget=budget)
    m, V = table.alphabet_size, table.values
    single = V[1]
    ok = single > 0.0
    skipped = int(m - np.count_nonzero(ok))
    if not ok.any():
        return CurvatureEstimate(None, None, False, "no action with positive value", skipped)
    if K < 2:
        return CurvatureEstimate(None, None, False, "no string M with 1 <= |M| <= K-1 (K=1)", skipped)
    best, where = -math.inf, None
    for lm in range(1, K):
        after = V[lm + 1].reshape(m, m**lm) - V[lm][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = (single[:, None] - after) / single[:, None]
        q = np.where(ok[:, None], q, -math.inf)
        flat = int(np.argmax(q))
        a, r = np.unravel_index(flat, q.shape)
        if q[a, r] > best:
            best, where = float(q[a, r]), (int(a), table.string_at(lm, int(r)))
    return CurvatureEstimate(best, where, True, skipped=skipped)
