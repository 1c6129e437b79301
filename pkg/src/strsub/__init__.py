"""Greedy vs. optimal string optimization under length-restricted submodularity."""

from .core import (
    DEFAULT_BUDGET,
    ActionString,
    CountingOracle,
    FunctionOracle,
    InstanceTooLarge,
    InvariantViolation,
    Oracle,
    TableOracle,
    ValueTable,
    concat,
    enumerate_strings,
    is_prefix,
)
from .optimize import BoundReport, GreedyTrace, OptimalResult, bound_report, exhaustive_optimal, greedy
from .properties import (
    CurvatureEstimate,
    PropertyReport,
    check_go_concavity,
    check_k_diminishing,
    check_k_monotone,
    check_k_submodular,
    check_postfix_restricted,
    compute_eta,
    compute_sigma_restricted,
    factor_curved,
    factor_thm3,
)

__version__ = "0.1.0"
