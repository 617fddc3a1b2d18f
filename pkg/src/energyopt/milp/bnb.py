"""Branch-and-bound over the LP relaxation.

Best-bound node selection (ties go to the deeper node, then creation order),
most-fractional branching with ties broken by lowest variable index. Two
heuristics find incumbents early: a feasibility-preserving rounding of every
node's LP point, and a round-fix-resolve pass at the root and periodically
thereafter. A node whose rounded point keeps the LP objective is solved
without branching. The final incumbent is polished by fixing its integer variables and
re-solving the continuous part.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import replace

import numpy as np

from .problem import Integrality, MilpProblem, Solution, SolveOptions, Status
from .simplex import LpArrays, LpResult, solve_arrays, to_solution

_HEURISTIC_EVERY = 20


def _row_violation(act: np.ndarray, b: np.ndarray, rel: np.ndarray) -> np.ndarray:
    over = np.maximum(act - b, 0.0)
    under = np.maximum(b - act, 0.0)
    return np.where(rel < 0, over, np.where(rel > 0, under, np.abs(act - b)))


def solve_milp(p: MilpProblem, opts: SolveOptions | None = None) -> Solution:
    opts = opts or SolveOptions()
    p.validate()
    arr = LpArrays.from_problem(p.base)
    kinds = [p.kind(n) for n in arr.names]
    int_idx = np.array(
        [j for j, k in enumerate(kinds) if k is not Integrality.CONTINUOUS], dtype=np.int64
    )
    lo, hi = arr.lo.copy(), arr.hi.copy()
    if int_idx.size:
        lo[int_idx] = np.ceil(lo[int_idx] - opts.integrality_tol)
        hi[int_idx] = np.floor(hi[int_idx] + opts.integrality_tol)
    return _BranchAndBound(arr, int_idx, opts).run(lo, hi)


class _BranchAndBound:
    def __init__(self, arr: LpArrays, int_idx: np.ndarray, opts: SolveOptions):
        self.arr = arr
        self.int_idx = int_idx
        self.opts = opts
        self.deadline = None if opts.time_limit is None else time.perf_counter() + opts.time_limit
        self.iterations = 0
        self.nodes = 0
        self.incumbent: np.ndarray | None = None
        self.incumbent_obj = math.inf

    def _lp(self, lo: np.ndarray, hi: np.ndarray) -> LpResult:
        res = solve_arrays(self.arr, lo, hi, self.opts, self.deadline)
        self.iterations += res.iterations
        self.nodes += 1
        return res

    def _fractional(self, x: np.ndarray) -> np.ndarray:
        vals = x[self.int_idx]
        return np.abs(vals - np.round(vals))

    def _cutoff(self) -> float:
        if not math.isfinite(self.incumbent_obj):
            return math.inf
        return self.incumbent_obj - self.opts.rel_gap * max(abs(self.incumbent_obj), 1.0)

    def _offer(self, x: np.ndarray, obj: float) -> None:
        if obj < self.incumbent_obj:
            self.incumbent, self.incumbent_obj = x.copy(), obj

    def _round_and_fix(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> None:
        r = np.clip(np.round(x[self.int_idx]), lo[self.int_idx], hi[self.int_idx])
        lo2, hi2 = lo.copy(), hi.copy()
        lo2[self.int_idx] = r
        hi2[self.int_idx] = r
        res = self._lp(lo2, hi2)
        if res.status is Status.OPTIMAL:
            self._offer(res.x, res.objective)

    def _trivial_round(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray | None:
        """Round fractional integers one at a time, keeping every row satisfied.

        Each variable goes to its nearest integer if no row it touches would
        become (more) violated, else to the other neighbour; ``None`` if both fail.
        """
        A, b, rel = self.arr.A, self.arr.b, self.arr.rel
        tol = self.opts.feasibility_tol * (1.0 + np.abs(b))
        act = A @ x
        viol = _row_violation(act, b, rel)
        r = x.copy()
        for j in self.int_idx:
            v = r[j]
            near = np.round(v)
            if abs(v - near) <= self.opts.integrality_tol:
                r[j] = near
                continue
            col = A[:, j]
            rows = np.flatnonzero(col)
            other = math.floor(v) if near > v else math.ceil(v)
            for target in (near, other):
                if not lo[j] <= target <= hi[j]:
                    continue
                new = act[rows] + col[rows] * (target - v)
                nv = _row_violation(new, b[rows], rel[rows])
                if np.all(nv <= np.maximum(viol[rows], tol[rows])):
                    act[rows] = new
                    viol[rows] = nv
                    r[j] = target
                    break
            else:
                return None
        return r

    def _limits_hit(self) -> bool:
        if self.nodes >= self.opts.max_nodes:
            return True
        return self.deadline is not None and time.perf_counter() > self.deadline

    def run(self, lo: np.ndarray, hi: np.ndarray) -> Solution:
        root = self._lp(lo, hi)
        if root.status is Status.UNBOUNDED:
            return Solution(Status.UNBOUNDED, iterations=self.iterations, nodes=self.nodes)
        if root.status is not Status.OPTIMAL:
            return Solution(root.status, iterations=self.iterations, nodes=self.nodes)
        if self.int_idx.size == 0:
            return to_solution(self.arr, root, gap=0.0, nodes=self.nodes)

        quantum = 1e-9 * max(1.0, abs(root.objective))
        counter = itertools.count()
        heap: list = []
        processed = 0
        lower_bound = math.inf  # min bound over nodes pruned by bound

        def push(res: LpResult, lo_n, hi_n, depth: int) -> None:
            key = math.floor(res.objective / quantum)
            heapq.heappush(heap, (key, -depth, next(counter), res, lo_n, hi_n))

        push(root, lo, hi, 0)
        hit_limit = False
        while heap:
            _, neg_depth, _, res, lo_n, hi_n = heap[0]
            if res.objective >= self._cutoff():
                # best-bound order: every remaining node is pruned as well
                lower_bound = min(lower_bound, res.objective)
                break
            if self._limits_hit():
                hit_limit = True
                break
            heapq.heappop(heap)
            x = res.x
            frac = self._fractional(x)
            worst = float(frac.max())
            if worst <= self.opts.integrality_tol:
                self._offer(x, res.objective)
                continue
            rounded = self._trivial_round(x, lo_n, hi_n)
            if rounded is not None:
                robj = float(self.arr.c @ rounded)
                self._offer(rounded, robj)
                if robj <= res.objective + 1e-9 * max(1.0, abs(res.objective)):
                    continue
            if processed % _HEURISTIC_EVERY == 0:
                self._round_and_fix(x, lo_n, hi_n)
            processed += 1
            if res.objective >= self._cutoff():
                lower_bound = min(lower_bound, res.objective)
                continue
            # most fractional; argmax returns the lowest index among ties
            k = int(np.argmax(np.round(frac, 12)))
            j = int(self.int_idx[k])
            v = x[j]
            depth = -neg_depth + 1
            for child_lo, child_hi in self._children(lo_n, hi_n, j, v):
                cres = self._lp(child_lo, child_hi)
                if cres.status is Status.OPTIMAL:
                    if cres.objective < self._cutoff():
                        push(cres, child_lo, child_hi, depth)
                    else:
                        lower_bound = min(lower_bound, cres.objective)
                elif cres.status is Status.ITERATION_LIMIT:
                    hit_limit = True

        if self.incumbent is None:
            if hit_limit or heap:
                return Solution(Status.GAP_LIMIT, iterations=self.iterations, nodes=self.nodes)
            return Solution(Status.INFEASIBLE, iterations=self.iterations, nodes=self.nodes)

        if heap:
            lower_bound = min(lower_bound, min(item[3].objective for item in heap))
        lb = min(lower_bound, self.incumbent_obj)
        gap = max(0.0, (self.incumbent_obj - lb) / max(abs(self.incumbent_obj), 1e-10))
        if self.incumbent_obj - lb <= 1e-12 * max(1.0, abs(self.incumbent_obj)):
            gap = 0.0
        status = Status.GAP_LIMIT if (hit_limit and gap > self.opts.rel_gap) else Status.OPTIMAL
        final = self._polish(self.incumbent, lo, hi)
        sol = to_solution(self.arr, final, gap=gap, nodes=self.nodes)
        return replace(sol, status=status, iterations=self.iterations, duals=None)

    @staticmethod
    def _children(lo, hi, j, v):
        down_hi = hi.copy()
        down_hi[j] = math.floor(v)
        up_lo = lo.copy()
        up_lo[j] = math.ceil(v)
        # explore the child on the side v is closer to first
        down = (lo, down_hi)
        up = (up_lo, hi)
        return (down, up) if v - math.floor(v) < 0.5 else (up, down)

    def _polish(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> LpResult:
        """Snap integers exactly and re-optimise the continuous variables around them."""
        r = np.round(x[self.int_idx])
        lo2, hi2 = lo.copy(), hi.copy()
        lo2[self.int_idx] = r
        hi2[self.int_idx] = r
        res = self._lp(lo2, hi2)
        self.nodes -= 1
        if res.status is Status.OPTIMAL and res.objective <= self.incumbent_obj + 1e-9 * max(
            1.0, abs(self.incumbent_obj)
        ):
            return res
        return LpResult(Status.OPTIMAL, x, self.incumbent_obj, None, 0)
