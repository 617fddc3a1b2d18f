"""Compare solve_milp with scipy's HiGHS MILP on random bounded problems.

    python3 scripts/milp_benchmark.py --count 200 --max-bin 10 --max-cont 8 --max-rows 12
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from energyopt.milp import Integrality, MilpProblem, ModelBuilder, Relation, Sense, Status, solve_milp


def random_problem(rng: np.random.Generator, max_bin: int, max_cont: int, max_rows: int) -> MilpProblem:
    b = ModelBuilder()
    names = [b.var(f"b{j}", 0, 1, "binary") for j in range(int(rng.integers(1, max_bin + 1)))]
    names += [b.var(f"c{j}", 0, float(rng.integers(1, 10))) for j in range(int(rng.integers(0, max_cont + 1)))]
    for _ in range(int(rng.integers(1, max_rows + 1))):
        cols = rng.choice(len(names), size=int(rng.integers(1, len(names) + 1)), replace=False)
        b.add({names[j]: float(rng.integers(-9, 10)) for j in cols},
              str(rng.choice(["<=", ">="], p=[0.7, 0.3])), float(rng.integers(-5, 15)))
    objective = {n: float(rng.integers(-10, 11)) for n in names}
    (b.minimize if rng.random() < 0.5 else b.maximize)(objective)
    return b.build()


def highs(p: MilpProblem) -> float | None:
    """Optimal objective from scipy's MILP interface, or None if infeasible."""
    lp = p.base
    idx = {n: i for i, n in enumerate(lp.names)}
    sign = -1.0 if Sense(lp.objective_sense) is Sense.MAXIMIZE else 1.0
    c = np.zeros(len(idx))
    for n, v in lp.objective.items():
        c[idx[n]] = sign * v
    rows, lo, hi = [], [], []
    for con in lp.constraints:
        row = np.zeros(len(idx))
        for n, v in con.coeffs.items():
            row[idx[n]] = v
        rel = Relation(con.relation)
        rows.append(row)
        lo.append(con.rhs if rel is not Relation.LE else -np.inf)
        hi.append(con.rhs if rel is not Relation.GE else np.inf)
    integrality = np.array([p.kind(n) is not Integrality.CONTINUOUS for n in lp.names], dtype=int)
    res = milp(c, constraints=LinearConstraint(np.array(rows), lo, hi) if rows else None,
               integrality=integrality,
               bounds=Bounds([v.lower for v in lp.variables], [v.upper for v in lp.variables]))
    if res.status == 2:
        return None
    return sign * res.fun + lp.objective_constant


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-bin", type=int, default=10)
    ap.add_argument("--max-cont", type=int, default=8)
    ap.add_argument("--max-rows", type=int, default=12)
    args = ap.parse_args()

    ours_s = ref_s = 0.0
    worst, mismatches, nodes = 0.0, [], []
    for k in range(args.count):
        p = random_problem(np.random.default_rng(args.seed + k), args.max_bin, args.max_cont, args.max_rows)
        t = time.perf_counter()
        s = solve_milp(p)
        ours_s += time.perf_counter() - t
        t = time.perf_counter()
        ref = highs(p)
        ref_s += time.perf_counter() - t
        nodes.append(s.nodes)
        if ref is None:
            if s.status is not Status.INFEASIBLE:
                mismatches.append(k)
            continue
        diff = abs(s.objective - ref) if s.status is Status.OPTIMAL else np.inf
        worst = max(worst, diff)
        if diff > 1e-6:
            mismatches.append(k)

    print(f"problems        {args.count}")
    print(f"mismatches      {mismatches or 'none'}")
    print(f"worst |diff|    {worst:.3e}")
    print(f"solve_milp      {ours_s:.2f} s total, {1e3 * ours_s / args.count:.2f} ms mean")
    print(f"HiGHS           {ref_s:.2f} s total")
    print(f"nodes           median {int(np.median(nodes))}, max {max(nodes)}")


if __name__ == "__main__":
    main()
