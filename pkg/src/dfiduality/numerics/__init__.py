"""Linear programming: a deterministic simplex solver and an enumeration oracle."""
from .enumeration import EnumerationError, enumerate_vertices, solve_lp_by_enumeration
from .lp import (
    DEFAULT_TOL,
    LPProblem,
    LPSolution,
    Status,
    Tolerances,
    dual_value,
    kkt_residuals,
    solve_lp,
)

__all__ = [
    "DEFAULT_TOL",
    "EnumerationError",
    "LPProblem",
    "LPSolution",
    "Status",
    "Tolerances",
    "dual_value",
    "enumerate_vertices",
    "kkt_residuals",
    "solve_lp",
    "solve_lp_by_enumeration",
]
