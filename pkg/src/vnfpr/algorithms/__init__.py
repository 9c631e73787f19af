"""Exact, greedy and LP-rounding solution methods plus an independent validator."""

from .exact import solve_exact
from .greedy import ResidualState, greedy, greedy_pass
from .lp_heuristic import STUCK, chain_fits_route, lp_bound, lp_heuristic, select_path
from .validate import FAMILIES, ValidationReport, Violation, cost_of, validate

__all__ = [
    "FAMILIES",
    "ResidualState",
    "STUCK",
    "ValidationReport",
    "Violation",
    "chain_fits_route",
    "cost_of",
    "greedy",
    "greedy_pass",
    "lp_bound",
    "lp_heuristic",
    "select_path",
    "solve_exact",
    "validate",
]
