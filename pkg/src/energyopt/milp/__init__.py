"""LP (bounded primal simplex) and MILP (branch-and-bound) solvers."""

from .bnb import solve_milp
from .problem import (
    Constraint,
    Integrality,
    LpProblem,
    MilpProblem,
    ModelBuilder,
    ProblemError,
    Relation,
    Sense,
    Solution,
    SolveOptions,
    Status,
    Variable,
    evaluate_objective,
    max_violation,
)
from .simplex import solve_lp
from .textio import dumps, loads

__all__ = [
    "Constraint",
    "Integrality",
    "LpProblem",
    "MilpProblem",
    "ModelBuilder",
    "ProblemError",
    "Relation",
    "Sense",
    "Solution",
    "SolveOptions",
    "Status",
    "Variable",
    "dumps",
    "evaluate_objective",
    "loads",
    "max_violation",
    "solve_lp",
    "solve_milp",
]
