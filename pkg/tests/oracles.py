"""Independent reference computations shared by the unit and acceptance tests.

Nothing here calls the package's own solvers: LPs go through scipy's HiGHS
and discrete choices are enumerated exhaustively.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from energyopt.milp import Integrality, MilpProblem, ModelBuilder, Relation, Sense


def random_milp(rng: np.random.Generator, max_bin: int = 10, max_cont: int = 8, max_rows: int = 12):
    """Integer-coefficient MILP with 1..max_bin binaries and 0..max_cont bounded continuous vars."""
    nb = int(rng.integers(1, max_bin + 1))
    nc = int(rng.integers(0, max_cont + 1))
    m = int(rng.integers(1, max_rows + 1))
    b = ModelBuilder()
    names = [b.var(f"b{j}", 0, 1, "binary") for j in range(nb)]
    names += [b.var(f"c{j}", 0, float(rng.integers(1, 10))) for j in range(nc)]
    for _ in range(m):
        k = rng.choice(len(names), size=int(rng.integers(1, len(names) + 1)), replace=False)
        b.add(
            {names[j]: float(rng.integers(-9, 10)) for j in k},
            str(rng.choice(["<=", ">="], p=[0.7, 0.3])),
            float(rng.integers(-5, 15)),
        )
    objective = {n: float(rng.integers(-10, 11)) for n in names}
    if rng.random() < 0.5:
        b.minimize(objective)
    else:
        b.maximize(objective)
    return b.build()


def lp_arrays(p: MilpProblem):
    """Dense min-form arrays of the relaxation: (c, A_ub, b_ub, A_eq, b_eq, bounds, sign)."""
    lp = p.base
    names = lp.names
    idx = {n: i for i, n in enumerate(names)}
    sign = -1.0 if Sense(lp.objective_sense) is Sense.MAXIMIZE else 1.0
    c = np.zeros(len(names))
    for n, v in lp.objective.items():
        c[idx[n]] = sign * v
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for con in lp.constraints:
        row = np.zeros(len(names))
        for n, v in con.coeffs.items():
            row[idx[n]] = v
        rel = Relation(con.relation)
        if rel is Relation.LE:
            a_ub.append(row)
            b_ub.append(con.rhs)
        elif rel is Relation.GE:
            a_ub.append(-row)
            b_ub.append(-con.rhs)
        else:
            a_eq.append(row)
            b_eq.append(con.rhs)
    bounds = [
        (None if math.isinf(v.lower) else v.lower, None if math.isinf(v.upper) else v.upper)
        for v in lp.variables
    ]
    return c, a_ub, b_ub, a_eq, b_eq, bounds, sign


def highs_lp(c, a_ub, b_ub, a_eq, b_eq, bounds):
    """Return ('optimal', fun) / ('infeasible', None) / ('unbounded', None)."""
    r = linprog(
        c,
        A_ub=np.array(a_ub) if len(a_ub) else None,
        b_ub=np.array(b_ub) if len(b_ub) else None,
        A_eq=np.array(a_eq) if len(a_eq) else None,
        b_eq=np.array(b_eq) if len(b_eq) else None,
        bounds=bounds,
        method="highs",
    )
    if r.status == 0:
        return "optimal", float(r.fun)
    if r.status == 2:
        return "infeasible", None
    if r.status == 3:
        return "unbounded", None
    raise RuntimeError(f"reference LP solver failed: {r.message}")


def brute_force_milp(p: MilpProblem) -> float | None:
    """Optimum by enumerating every binary assignment and solving the remaining LP.

    Returns None when no assignment is feasible. Only binary integrality is supported.
    """
    lp = p.base
    names = lp.names
    binaries = [i for i, n in enumerate(names) if p.kind(n) is Integrality.BINARY]
    if any(p.kind(n) is Integrality.INTEGER for n in names):
        raise ValueError("brute force oracle handles binaries only")
    c, a_ub, b_ub, a_eq, b_eq, bounds, sign = lp_arrays(p)
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        bnd = list(bounds)
        for i, v in zip(binaries, bits):
            bnd[i] = (v, v)
        status, fun = highs_lp(c, a_ub, b_ub, a_eq, b_eq, bnd)
        if status == "unbounded":
            raise ValueError("oracle expects bounded problems")
        if status == "optimal" and (best is None or fun < best):
            best = fun
    if best is None:
        return None
    return sign * best + lp.objective_constant


def chp_enumeration(scenario, assets) -> float | None:
    """Optimal real+artificial cost of a storage-free CHP scenario by trying every
    on/off pattern; each step's dispatch is then an independent small LP."""
    n, dt = len(scenario), scenario.dt
    chp, boiler = assets.chp, assets.boiler
    Ed, Qd = scenario.E_demand.values, scenario.Q_demand.values
    gas, pimp, pexp = (scenario.P_gas.values, scenario.P_import.values, scenario.P_export.values)
    days = [t.date() for t in scenario.E_demand.times()]  # UTC calendar day
    best = None
    for pattern in itertools.product((0, 1), repeat=n):
        prev = 1 if scenario.initial_on else 0
        restarts = []
        for s in pattern:
            restarts.append(1 if s and not prev else 0)
            prev = s
        per_day: dict = {}
        for d, r in zip(days, restarts):
            per_day[d] = per_day.get(d, 0) + r
        if any(v > scenario.R_max for v in per_day.values()):
            continue
        total = 0.0
        for t, s in enumerate(pattern):
            # x = [load, import, export, boiler heat]
            c = np.array([
                (gas[t] * chp.gas_per_elec + scenario.chp_pref) * chp.elec_capacity * dt,
                (pimp[t] + scenario.import_pref) * dt,
                -pexp[t] * dt,
                (gas[t] / boiler.efficiency + scenario.boiler_pref) * dt,
            ])
            a_eq = [[chp.elec_capacity, 1.0, -1.0, 0.0], [chp.heat_capacity, 0.0, 0.0, 1.0]]
            b_eq = [Ed[t], Qd[t]]
            a_ub = [[-chp.elec_capacity, 0.0, 1.0, 0.0]]
            bounds = [(chp.min_load_fraction * s, float(s)), (0, None), (0, None),
                      (0, boiler.heat_capacity)]
            status, fun = highs_lp(c, a_ub, [0.0], a_eq, b_eq, bounds)
            if status != "optimal":
                total = None
                break
            total += fun + chp.maintenance_cost_per_hour * s * dt + scenario.restart_cost * restarts[t]
        if total is not None and (best is None or total < best):
            best = total
    return best


def ems_enumeration(pv, load, price, export_price, spec, dt=1.0, step=1.0,
                    self_consumption=False, peak_threshold=None, carbon=None, w_carbon=0.0):
    """Least dispatch cost over every per-step battery action on a grid of
    ``step`` kWh, with charge and discharge exclusive; the balance then fixes
    import and export. Returns (cost, actions) or None when nothing is feasible."""
    g, l, p = (np.asarray(a, float) for a in (pv, load, price))
    n = len(g)
    ci = np.zeros(n) if carbon is None else np.asarray(carbon, float)
    cap = spec.P_max * dt
    k = int(round(cap / step))
    levels = np.arange(-k, k + 1) * step  # negative means discharge
    acts = np.array(list(itertools.product(levels, repeat=n)))
    chg, dis = np.maximum(acts, 0.0), np.maximum(-acts, 0.0)
    ok = np.ones(len(acts), bool)
    if self_consumption:
        ok &= (chg <= np.maximum(g - l, 0.0) + 1e-12).all(axis=1)
        ok &= (dis <= np.maximum(l - g, 0.0) + 1e-12).all(axis=1)
    soc = spec.initial_soc + np.cumsum((spec.eta_c * chg - dis / spec.eta_d) * 100.0 / spec.E_cap, axis=1)
    ok &= ((soc >= spec.soc_min - 1e-9) & (soc <= spec.soc_max + 1e-9)).all(axis=1)
    net = l - g + acts
    imp, exp = np.maximum(net, 0.0), np.maximum(-net, 0.0)
    if peak_threshold is not None:
        ok &= (imp <= peak_threshold + 1e-12).all(axis=1)
    if spec.cycle_limit is not None:
        ok &= (chg + dis).sum(axis=1) <= 2.0 * spec.E_cap * spec.cycle_limit + 1e-12
    if not ok.any():
        return None
    cost = ((p + w_carbon * ci) * imp - export_price * exp).sum(axis=1)
    cost[~ok] = np.inf
    i = int(np.argmin(cost))
    return float(cost[i]), acts[i]
