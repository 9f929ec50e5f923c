"""Exact 0-1 engine, LP relaxations and instance-level oracles."""

from .bnb import BnbReport, branch_and_bound, solve_bip
from .heuristics import exhaustive_search, greedy_heuristic
from .lp import LpSolution, simplex, solve_lp
from .lpformat import export_lp, lp_text

__all__ = [
    "BnbReport",
    "LpSolution",
    "branch_and_bound",
    "exhaustive_search",
    "export_lp",
    "greedy_heuristic",
    "lp_text",
    "simplex",
    "solve_bip",
    "solve_lp",
]
