"""Exceptions shared by the optimisation modules."""

from __future__ import annotations

from .milp import Status


class InfeasibleError(RuntimeError):
    """The scenario admits no feasible schedule; ``step`` names the first failing step if known."""

    def __init__(self, message: str, step: int | None = None) -> None:
        super().__init__(message)
        self.step = step


class SolverError(RuntimeError):
    """The solver stopped without a usable answer (limit hit or unexpected status)."""

    def __init__(self, status: Status, message: str) -> None:
        super().__init__(message)
        self.status = status
