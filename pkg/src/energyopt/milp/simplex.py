"""Bounded-variable primal simplex on a dense tableau.

Two phases (artificial variables only on rows whose slack cannot absorb the
initial residual), Dantzig pricing with a switch to Bland's rule after a run of
degenerate pivots, rows equilibrated to unit max-abs coefficient, and a light
presolve that removes fixed variables and empty rows.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dger

from .problem import (
    LpProblem,
    Relation,
    Sense,
    Solution,
    SolveOptions,
    Status,
)

_PIVOT_TOL = 1e-9
_OPT_TOL = 1e-9
_DEGENERATE_RUN = 30

# nonbasic states
_BASIC, _LOWER, _UPPER, _FREE, _FIXED = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class LpArrays:
    """Dense array form of an LpProblem, objective already in minimisation sense."""

    names: tuple[str, ...]
    c: np.ndarray
    A: np.ndarray
    rel: np.ndarray  # -1 (<=), 0 (=), +1 (>=)
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    sign: float  # +1 minimise, -1 maximise
    constant: float

    @classmethod
    def from_problem(cls, p: LpProblem) -> "LpArrays":
        p.validate()
        idx = p.index()
        n, m = len(p.variables), len(p.constraints)
        sign = 1.0 if p.objective_sense is Sense.MINIMIZE else -1.0
        c = np.zeros(n)
        for name, coef in p.objective.items():
            c[idx[name]] += sign * coef
        A = np.zeros((m, n))
        rel = np.zeros(m, dtype=np.int8)
        b = np.zeros(m)
        code = {Relation.LE: -1, Relation.EQ: 0, Relation.GE: 1}
        for i, con in enumerate(p.constraints):
            for name, coef in con.coeffs.items():
                A[i, idx[name]] += coef
            rel[i] = code[Relation(con.relation)]
            b[i] = con.rhs
        lo = np.array([v.lower for v in p.variables], dtype=float)
        hi = np.array([v.upper for v in p.variables], dtype=float)
        return cls(tuple(p.names), c, A, rel, b, lo, hi, sign, p.objective_constant)


@dataclass
class LpResult:
    status: Status
    x: np.ndarray | None
    objective: float  # minimisation sense, without constant
    duals: np.ndarray | None  # d(min objective)/d(rhs), per original row
    iterations: int


def solve_lp(p: LpProblem, opts: SolveOptions | None = None) -> Solution:
    """Solve a linear program; integrality flags, if any, are ignored by construction."""
    opts = opts or SolveOptions()
    arr = LpArrays.from_problem(p)
    res = solve_arrays(arr, arr.lo, arr.hi, opts)
    return to_solution(arr, res)


def to_solution(arr: LpArrays, res: LpResult, gap: float = 0.0, nodes: int = 0) -> Solution:
    if res.x is None:
        return Solution(status=res.status, iterations=res.iterations, nodes=nodes)
    values = dict(zip(arr.names, map(float, res.x)))
    objective = arr.sign * res.objective + arr.constant
    duals = None
    if res.duals is not None:
        duals = tuple(float(arr.sign * y) for y in res.duals)
    return Solution(
        status=res.status,
        values=values,
        objective=objective,
        gap=gap,
        duals=duals,
        iterations=res.iterations,
        nodes=nodes,
    )


def solve_arrays(
    arr: LpArrays,
    lo: np.ndarray,
    hi: np.ndarray,
    opts: SolveOptions,
    deadline: float | None = None,
) -> LpResult:
    """Solve ``min c.x`` over the rows of ``arr`` with the given variable bounds."""
    if np.any(lo > hi):
        return LpResult(Status.INFEASIBLE, None, math.nan, None, 0)
    fixed = lo == hi
    free_cols = np.flatnonzero(~fixed)
    x_fixed = np.where(fixed, lo, 0.0)

    A = arr.A[:, free_cols]
    b = arr.b - arr.A[:, fixed] @ lo[fixed] if fixed.any() else arr.b.copy()

    # empty rows: check and drop
    row_max = np.abs(A).max(axis=1) if A.shape[1] else np.zeros(A.shape[0])
    empty = row_max == 0.0
    tol = opts.feasibility_tol
    for i in np.flatnonzero(empty):
        r, v = arr.rel[i], b[i]
        if (r == -1 and v < -tol) or (r == 1 and v > tol) or (r == 0 and abs(v) > tol):
            return LpResult(Status.INFEASIBLE, None, math.nan, None, 0)
    rows = np.flatnonzero(~empty)
    A = A[rows] / row_max[rows, None]
    b = b[rows] / row_max[rows]
    rel = arr.rel[rows]

    c = arr.c[free_cols]
    c_scale = float(np.abs(c).max()) if c.size else 0.0
    if c_scale == 0.0:
        c_scale = 1.0
    c = c / c_scale

    out = _two_phase(A, b, rel, c, lo[free_cols], hi[free_cols], opts, deadline)
    if out.x is None:
        return LpResult(out.status, None, math.nan, None, out.iterations)

    x = x_fixed.copy()
    x[free_cols] = out.x
    duals = np.zeros(len(arr.b))
    if out.duals is not None:
        duals[rows] = out.duals * c_scale / row_max[rows]
    objective = float(arr.c @ x)
    return LpResult(out.status, x, objective, duals, out.iterations)


def _two_phase(
    A: np.ndarray,
    b: np.ndarray,
    rel: np.ndarray,
    c: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    opts: SolveOptions,
    deadline: float | None,
) -> LpResult:
    m, n_struct = A.shape
    # slack columns: <= rows get s in [0, inf), >= rows get s in (-inf, 0]
    ineq = np.flatnonzero(rel != 0)
    n_slack = len(ineq)
    n = n_struct + n_slack
    slack_of_row = np.full(m, -1)
    slack_of_row[ineq] = n_struct + np.arange(n_slack)

    lo_full = np.concatenate([lo, np.where(rel[ineq] == -1, 0.0, -np.inf)])
    hi_full = np.concatenate([hi, np.where(rel[ineq] == -1, np.inf, 0.0)])
    x = np.where(np.isfinite(lo_full), lo_full, np.where(np.isfinite(hi_full), hi_full, 0.0))

    A_slack = np.zeros((m, n))
    A_slack[:, :n_struct] = A
    A_slack[ineq, n_struct + np.arange(n_slack)] = 1.0

    resid = b - A_slack @ x
    basis = np.empty(m, dtype=np.int64)
    art_rows: list[int] = []
    tol = opts.feasibility_tol
    for i in range(m):
        j = slack_of_row[i]
        if j >= 0:
            v = x[j] + resid[i]
            if lo_full[j] - tol <= v <= hi_full[j] + tol:
                basis[i] = j
                x[j] = v
                continue
        art_rows.append(i)
    k = len(art_rows)
    N = n + k
    A_full = np.zeros((m, N), order="F")
    A_full[:, :n] = A_slack
    row_sign = np.ones(m)
    x = np.concatenate([x, np.zeros(k)])
    for a, i in enumerate(art_rows):
        s = 1.0 if resid[i] >= 0 else -1.0
        A_full[i, n + a] = s
        row_sign[i] = s
        basis[i] = n + a
        x[n + a] = abs(resid[i])
    lo_all = np.concatenate([lo_full, np.zeros(k)])
    hi_all = np.concatenate([hi_full, np.full(k, np.inf)])

    tab = _Tableau(A_full, b, x, basis, row_sign, lo_all, hi_all, opts, deadline)

    if k:
        cost1 = np.zeros(N)
        cost1[n:] = 1.0
        status = tab.run(cost1)
        if status is not Status.OPTIMAL:
            return LpResult(status, None, math.nan, None, tab.iterations)
        infeas = float(tab.x[n:].sum())
        if infeas > tol * (1.0 + float(np.abs(b).max(initial=0.0))):
            return LpResult(Status.INFEASIBLE, None, math.nan, None, tab.iterations)
        tab.retire_artificials(n)

    cost2 = np.zeros(N)
    cost2[:n_struct] = c
    status = tab.run(cost2)
    if status is Status.UNBOUNDED:
        return LpResult(Status.UNBOUNDED, None, math.nan, None, tab.iterations)
    if status is not Status.OPTIMAL:
        return LpResult(status, None, math.nan, None, tab.iterations)
    x_struct = np.clip(tab.x[:n_struct], lo, hi)
    y = tab.duals(cost2)
    return LpResult(Status.OPTIMAL, x_struct, math.nan, y, tab.iterations)


class _Tableau:
    """Dense tableau state: T = B^-1 A, explicit variable values, nonbasic states."""

    def __init__(self, A, b, x, basis, row_sign, lo, hi, opts: SolveOptions, deadline):
        self.A = A
        self.b = b
        self.x = x
        self.basis = basis
        self.lo = lo.copy()
        self.hi = hi.copy()
        self.opts = opts
        self.deadline = deadline
        self.T = np.asfortranarray(A * row_sign[:, None])
        self.iterations = 0
        self.state = np.empty(len(x), dtype=np.int8)
        self._reset_states()

    def _reset_states(self) -> None:
        x, lo, hi = self.x, self.lo, self.hi
        st = np.full(len(x), _FREE, dtype=np.int8)
        st[x == lo] = _LOWER
        st[x == hi] = _UPPER
        st[lo == hi] = _FIXED
        st[self.basis] = _BASIC
        self.state = st

    def refactor(self) -> None:
        if len(self.basis) == 0:
            return
        B = self.A[:, self.basis]
        self.T = np.asfortranarray(np.linalg.solve(B, self.A))
        nonbasic = self.state != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = np.linalg.solve(B, rhs)

    def duals(self, cost: np.ndarray) -> np.ndarray:
        if len(self.basis) == 0:
            return np.zeros(0)
        B = self.A[:, self.basis]
        return np.linalg.solve(B.T, cost[self.basis])

    def retire_artificials(self, n: int) -> None:
        """Pivot basic artificials out where possible and fix all artificials at 0."""
        T = self.T
        for r in range(len(self.basis)):
            if self.basis[r] < n:
                continue
            row = np.abs(T[r, :n]).copy()
            row[self.state[:n] == _BASIC] = 0.0
            q = int(np.argmax(row))
            if row[q] > 1e-7:
                leaving = self.basis[r]
                self._pivot(r, q)
                self.x[leaving] = 0.0
            # otherwise the row is redundant; the artificial stays basic at 0
        self.lo[n:] = 0.0
        self.hi[n:] = 0.0
        self.x[n:] = np.where(self.state[n:] == _BASIC, self.x[n:], 0.0)
        nb = np.flatnonzero(self.state[n:] != _BASIC) + n
        self.state[nb] = _FIXED
        self.refactor()

    def _pivot(self, r: int, q: int) -> None:
        T = self.T
        col = T[:, q].copy()
        prow = T[r, :] / col[r]
        dger(-1.0, col, prow, a=T, overwrite_a=1)
        T[r, :] = prow
        self.state[self.basis[r]] = _LOWER  # caller corrects the leaving state
        self.basis[r] = q
        self.state[q] = _BASIC

    def run(self, cost: np.ndarray) -> Status:
        opts = self.opts
        d = cost - cost[self.basis] @ self.T
        bland = False
        degenerate_run = 0
        refactor_every = max(200, len(self.basis))
        since_refactor = 0
        verified = False
        while True:
            if self.iterations >= opts.max_iterations:
                return Status.ITERATION_LIMIT
            if self.deadline is not None and (self.iterations & 63) == 0:
                if time.perf_counter() > self.deadline:
                    return Status.ITERATION_LIMIT
            if since_refactor >= refactor_every:
                self.refactor()
                d = cost - cost[self.basis] @ self.T
                since_refactor = 0

            st = self.state
            elig = ((st == _LOWER) & (d < -_OPT_TOL)) | ((st == _UPPER) & (d > _OPT_TOL)) | (
                (st == _FREE) & (np.abs(d) > _OPT_TOL)
            )
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                if verified or since_refactor == 0:
                    return Status.OPTIMAL
                # confirm optimality on a freshly factored basis
                self.refactor()
                d = cost - cost[self.basis] @ self.T
                since_refactor = 0
                verified = True
                continue
            verified = False
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.T[:, q]
            rate = direction * alpha
            xb = self.x[self.basis]
            lb = self.lo[self.basis]
            ub = self.hi[self.basis]
            lim = np.full(len(rate), np.inf)
            pos = rate > _PIVOT_TOL
            neg = rate < -_PIVOT_TOL
            lim[pos] = (xb[pos] - lb[pos]) / rate[pos]
            lim[neg] = (ub[neg] - xb[neg]) / -rate[neg]
            np.maximum(lim, 0.0, out=lim)
            t_row = float(lim.min()) if lim.size else math.inf
            t_flip = self.hi[q] - self.lo[q]

            if not math.isfinite(t_row) and not math.isfinite(t_flip):
                return Status.UNBOUNDED

            self.iterations += 1
            since_refactor += 1
            if t_flip <= t_row:
                t = t_flip
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
                self.x[self.basis] = xb - direction * t * alpha
                self.state[q] = _UPPER if direction > 0 else _LOWER
            else:
                ties = np.flatnonzero(lim <= t_row + 1e-12 * (1.0 + t_row))
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
                t = float(lim[r])
                leaving = int(self.basis[r])
                self.x[self.basis] = xb - direction * t * alpha
                self.x[q] += direction * t
                leave_state = _LOWER if rate[r] > 0 else _UPPER
                self.x[leaving] = self.lo[leaving] if leave_state == _LOWER else self.hi[leaving]
                dq = d[q]
                self._pivot(r, q)
                if self.lo[leaving] == self.hi[leaving]:
                    leave_state = _FIXED
                self.state[leaving] = leave_state
                d = d - dq * self.T[r, :]
                d[q] = 0.0
            if t <= 1e-12:
                degenerate_run += 1
                if degenerate_run > _DEGENERATE_RUN:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
