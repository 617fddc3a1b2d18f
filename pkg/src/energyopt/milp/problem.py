"""Problem and solution containers for the LP / MILP solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence


class ProblemError(ValueError):
    """Raised when a problem is malformed (undeclared variable, crossed bounds, ...)."""


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Integrality(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    GAP_LIMIT = "gap-limit"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, float]
    relation: Relation
    rhs: float
    name: str = ""


@dataclass(frozen=True)
class LpProblem:
    """A linear program ``opt c.x  s.t.  rows (<=|=|>=) rhs,  lower <= x <= upper``.

    Bounds may be infinite. The objective is a sparse mapping; variables absent
    from it have a zero coefficient. ``objective_constant`` is added to the
    reported objective value.
    """

    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...] = ()
    objective: Mapping[str, float] = field(default_factory=dict)
    objective_sense: Sense = Sense.MINIMIZE
    objective_constant: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "objective_sense", Sense(self.objective_sense))

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def validate(self) -> None:
        idx: dict[str, int] = {}
        for v in self.variables:
            if v.name in idx:
                raise ProblemError(f"duplicate variable {v.name!r}")
            idx[v.name] = len(idx)
            if math.isnan(v.lower) or math.isnan(v.upper):
                raise ProblemError(f"variable {v.name!r} has a NaN bound")
            if v.lower > v.upper:
                raise ProblemError(
                    f"variable {v.name!r} has crossed bounds [{v.lower}, {v.upper}]"
                )
            if v.lower == math.inf or v.upper == -math.inf:
                raise ProblemError(f"variable {v.name!r} has an empty domain")
        for name, coef in self.objective.items():
            if name not in idx:
                raise ProblemError(f"objective references undeclared variable {name!r}")
            if not math.isfinite(coef):
                raise ProblemError(f"objective coefficient of {name!r} is not finite")
        for k, con in enumerate(self.constraints):
            label = con.name or f"#{k}"
            Relation(con.relation)
            if not math.isfinite(con.rhs):
                raise ProblemError(f"constraint {label} has a non-finite right-hand side")
            for name, coef in con.coeffs.items():
                if name not in idx:
                    raise ProblemError(
                        f"constraint {label} references undeclared variable {name!r}"
                    )
                if not math.isfinite(coef):
                    raise ProblemError(f"constraint {label} has a non-finite coefficient")


@dataclass(frozen=True)
class MilpProblem:
    base: LpProblem
    integrality: Mapping[str, Integrality] = field(default_factory=dict)

    def kind(self, name: str) -> Integrality:
        return Integrality(self.integrality.get(name, Integrality.CONTINUOUS))

    def validate(self) -> None:
        self.base.validate()
        idx = self.base.index()
        for name, kind in self.integrality.items():
            if name not in idx:
                raise ProblemError(f"integrality flag on undeclared variable {name!r}")
            if Integrality(kind) is Integrality.BINARY:
                v = self.base.variables[idx[name]]
                if v.lower < 0 or v.upper > 1:
                    raise ProblemError(
                        f"binary variable {name!r} has bounds outside [0, 1]"
                    )


@dataclass(frozen=True)
class SolveOptions:
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    rel_gap: float = 1e-6
    max_nodes: int = 1_000_000
    time_limit: float | None = None
    max_iterations: int = 200_000

    def __post_init__(self) -> None:
        for name in ("feasibility_tol", "integrality_tol", "rel_gap"):
            if not getattr(self, name) > 0:
                raise ProblemError(f"{name} must be > 0")
        if self.max_nodes < 1 or self.max_iterations < 1:
            raise ProblemError("node and iteration budgets must be positive")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ProblemError("time_limit must be > 0")


@dataclass(frozen=True)
class Solution:
    status: Status
    values: Mapping[str, float] = field(default_factory=dict)
    objective: float = math.nan
    gap: float = math.nan
    duals: tuple[float, ...] | None = None
    iterations: int = 0
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, name: str) -> float:
        return self.values[name]


class ModelBuilder:
    """Incremental construction helper used by the optimisation modules.

    >>> m = ModelBuilder()
    >>> x = m.var("x", 0, 4)
    >>> m.add({x: 1.0}, "<=", 3)
    >>> m.minimize({x: -1.0})
    >>> m.build().base.variables[0].upper
    4
    """

    def __init__(self) -> None:
        self._vars: list[Variable] = []
        self._names: set[str] = set()
        self._cons: list[Constraint] = []
        self._kinds: dict[str, Integrality] = {}
        self._obj: dict[str, float] = {}
        self._sense = Sense.MINIMIZE
        self._const = 0.0

    def var(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        kind: Integrality | str = Integrality.CONTINUOUS,
    ) -> str:
        if name in self._names:
            raise ProblemError(f"duplicate variable {name!r}")
        kind = Integrality(kind)
        if kind is Integrality.BINARY:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        self._vars.append(Variable(name, float(lower), float(upper)))
        self._names.add(name)
        if kind is not Integrality.CONTINUOUS:
            self._kinds[name] = kind
        return name

    def add(
        self,
        coeffs: Mapping[str, float],
        relation: Relation | str,
        rhs: float,
        name: str = "",
    ) -> None:
        terms: dict[str, float] = {}
        for k, v in coeffs.items():
            if v != 0.0:
                terms[k] = terms.get(k, 0.0) + float(v)
        self._cons.append(Constraint(terms, Relation(relation), float(rhs), name))

    def add_objective(self, coeffs: Mapping[str, float]) -> None:
        for k, v in coeffs.items():
            self._obj[k] = self._obj.get(k, 0.0) + float(v)

    def add_constant(self, value: float) -> None:
        self._const += float(value)

    def minimize(self, coeffs: Mapping[str, float] | None = None) -> None:
        self._sense = Sense.MINIMIZE
        if coeffs:
            self.add_objective(coeffs)

    def maximize(self, coeffs: Mapping[str, float] | None = None) -> None:
        self._sense = Sense.MAXIMIZE
        if coeffs:
            self.add_objective(coeffs)

    @property
    def n_vars(self) -> int:
        return len(self._vars)

    def build(self) -> MilpProblem:
        lp = LpProblem(
            variables=tuple(self._vars),
            constraints=tuple(self._cons),
            objective={k: v for k, v in self._obj.items() if v != 0.0},
            objective_sense=self._sense,
            objective_constant=self._const,
        )
        return MilpProblem(lp, dict(self._kinds))


def max_violation(problem: LpProblem, values: Mapping[str, float]) -> float:
    """Largest constraint or bound violation of ``values`` (independent residual check)."""
    worst = 0.0
    for v in problem.variables:
        x = values[v.name]
        worst = max(worst, v.lower - x, x - v.upper)
    for con in problem.constraints:
        lhs = math.fsum(c * values[n] for n, c in con.coeffs.items())
        r = Relation(con.relation)
        if r is Relation.LE:
            worst = max(worst, lhs - con.rhs)
        elif r is Relation.GE:
            worst = max(worst, con.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - con.rhs))
    return worst


def evaluate_objective(problem: LpProblem, values: Mapping[str, float]) -> float:
    return problem.objective_constant + math.fsum(
        c * values[n] for n, c in problem.objective.items()
    )


def as_problem(p: LpProblem | MilpProblem) -> MilpProblem:
    return p if isinstance(p, MilpProblem) else MilpProblem(p)


def variables_from(items: Sequence[tuple[str, float, float]]) -> tuple[Variable, ...]:
    return tuple(Variable(n, lo, hi) for n, lo, hi in items)
