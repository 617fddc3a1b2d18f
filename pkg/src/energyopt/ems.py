"""Site energy management: PV and battery twins plus three dispatch strategies.

All flows are kWh per step. ``soc[t]`` is the state of charge (percent of
``E_cap``) at the end of step ``t``. Power limits are applied per step as
energy caps ``P_max * dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InfeasibleError, SolverError
from .milp import ModelBuilder, SolveOptions, Status, solve_milp
from .timeseries import AccuracyReport, DataError, TimeSeries, hourly_index, require_aligned, score, weekday_index

_TOL = 1e-9


@dataclass(frozen=True)
class PvSpec:
    dc_rating: float
    derate_coeff: float = 0.004
    ref_temp: float = 25.0
    system_efficiency: float = 0.9
    irradiance_at_rating: float = 1000.0

    def __post_init__(self) -> None:
        if not self.dc_rating > 0:
            raise ValueError("dc_rating must be positive")
        if not 0.0 < self.system_efficiency <= 1.0:
            raise ValueError("system_efficiency must lie in (0, 1]")
        if self.derate_coeff < 0 or not self.irradiance_at_rating > 0:
            raise ValueError("derate_coeff must be >= 0 and irradiance_at_rating > 0")


@dataclass(frozen=True)
class BatterySpec:
    E_cap: float
    P_max: float
    soc_min: float = 10.0
    soc_max: float = 90.0
    eta_c: float = 0.95
    eta_d: float = 0.95
    cycle_limit: float | None = None
    initial_soc: float = 50.0

    def __post_init__(self) -> None:
        if not (self.E_cap > 0 and self.P_max >= 0):
            raise ValueError("E_cap must be positive and P_max non-negative")
        if not 0.0 <= self.soc_min <= self.initial_soc <= self.soc_max <= 100.0:
            raise ValueError("need 0 <= soc_min <= initial_soc <= soc_max <= 100")
        if not (0.0 < self.eta_c <= 1.0 and 0.0 < self.eta_d <= 1.0):
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.cycle_limit is not None and self.cycle_limit < 0:
            raise ValueError("cycle_limit must be non-negative")

    def headroom_kwh(self, soc: float) -> float:
        """Charge energy that takes ``soc`` to ``soc_max``."""
        return max(self.soc_max - soc, 0.0) * self.E_cap / (100.0 * self.eta_c)

    def available_kwh(self, soc: float) -> float:
        """Discharge energy that takes ``soc`` to ``soc_min``."""
        return max(soc - self.soc_min, 0.0) * self.E_cap * self.eta_d / 100.0


@dataclass(frozen=True)
class Tariff:
    import_price: TimeSeries
    export_price: float
    carbon_intensity: TimeSeries
    w_carbon: float = 0.0
    name: str = "tariff"

    def __post_init__(self) -> None:
        require_aligned(self.import_price, self.carbon_intensity)
        if (self.import_price.values < 0).any() or self.export_price < 0 or self.w_carbon < 0:
            raise ValueError("prices and the carbon weight must be non-negative")


@dataclass(frozen=True)
class DispatchResult:
    strategy: str
    pv: np.ndarray
    load: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    imp: np.ndarray
    exp: np.ndarray
    soc: np.ndarray
    cost: float
    carbon: float
    cycles: float
    status: str = "optimal"

    def summary(self) -> dict:
        return {"strategy": self.strategy, "cost": self.cost, "carbon": self.carbon,
                "cycles": self.cycles, "status": self.status}

    def columns(self) -> dict[str, np.ndarray]:
        return {"E_PV": self.pv, "E_Load": self.load, "E_Charge": self.charge,
                "E_Discharge": self.discharge, "E_Import": self.imp, "E_Export": self.exp,
                "SOC": self.soc}


def simulate_pv(irradiance: TimeSeries, ambient_temp: TimeSeries, spec: PvSpec) -> TimeSeries:
    """Energy per step from a linear irradiance model with temperature de-rating."""
    require_aligned(irradiance, ambient_temp)
    irr = np.maximum(np.nan_to_num(irradiance.values, nan=0.0), 0.0)
    derate = np.maximum(0.0, 1.0 - spec.derate_coeff * np.maximum(0.0, ambient_temp.values - spec.ref_temp))
    dt = irradiance.hours
    e = spec.dc_rating * (irr / spec.irradiance_at_rating) * spec.system_efficiency * derate * dt
    e = np.minimum(e, spec.dc_rating * dt)
    e = np.where(irr > 0, np.nan_to_num(e, nan=0.0), 0.0)
    return irradiance.with_values(e, "kWh")


def battery_step(soc: float, charge: float, discharge: float, spec: BatterySpec, dt: float = 1.0,
                 tol: float = _TOL) -> float:
    """Advance the state of charge by one step; violations raise instead of clamping."""
    cap = spec.P_max * dt
    if charge < -tol or discharge < -tol:
        raise ValueError("charge and discharge must be non-negative")
    if charge > cap + tol or discharge > cap + tol:
        raise ValueError(f"energy per step exceeds P_max*dt = {cap}")
    new = soc + (spec.eta_c * charge - discharge / spec.eta_d) * 100.0 / spec.E_cap
    if new < spec.soc_min - tol or new > spec.soc_max + tol:
        raise ValueError(f"state of charge {new:.6f}% leaves [{spec.soc_min}, {spec.soc_max}]")
    return new


def dispatch_cost(imp: np.ndarray, exp: np.ndarray, tariff: Tariff, n: int | None = None) -> tuple[float, float]:
    """(cost in GBP including the weighted carbon term, import carbon in g)."""
    n = len(imp) if n is None else n
    p = tariff.import_price.values[:n]
    ci = tariff.carbon_intensity.values[:n]
    carbon = math.fsum(ci * imp)
    cost = math.fsum(np.concatenate([p * imp, -tariff.export_price * exp,
                                     tariff.w_carbon * ci * imp]))
    return cost, carbon


def cycles_used(charge: np.ndarray, discharge: np.ndarray, spec: BatterySpec) -> float:
    return math.fsum(np.concatenate([charge, discharge])) / (2.0 * spec.E_cap)


def _inputs(pv: TimeSeries, load: TimeSeries, tariff: Tariff) -> tuple[np.ndarray, np.ndarray, float]:
    require_aligned(pv, load)
    if len(tariff.import_price) < len(pv):
        raise DataError("tariff is shorter than the dispatch horizon")
    g, l = np.asarray(pv.values, float), np.asarray(load.values, float)
    if np.isnan(g).any() or np.isnan(l).any():
        raise DataError("PV or load series contain missing values")
    if (g < 0).any() or (l < 0).any():
        raise DataError("PV and load must be non-negative")
    return g, l, pv.hours


def _result(strategy, pv, load, c, d, imp, exp, soc, spec, tariff, status="optimal") -> DispatchResult:
    cost, carbon = dispatch_cost(imp, exp, tariff)
    return DispatchResult(strategy, pv, load, c, d, imp, exp, soc, cost, carbon,
                          cycles_used(c, d, spec), status)


def baseline_dispatch(pv: TimeSeries, load: TimeSeries, spec: BatterySpec, tariff: Tariff) -> DispatchResult:
    """Charge from any PV surplus and discharge into any deficit, within limits."""
    g, l, dt = _inputs(pv, load, tariff)
    n = len(g)
    c, d, imp, exp, soc = (np.zeros(n) for _ in range(5))
    s = spec.initial_soc
    for t in range(n):
        net = g[t] - l[t]
        if net > 0:
            c[t] = min(net, spec.P_max * dt, spec.headroom_kwh(s))
            exp[t] = net - c[t]
        elif net < 0:
            d[t] = min(-net, spec.P_max * dt, spec.available_kwh(s))
            imp[t] = -net - d[t]
        s = battery_step(s, c[t], d[t], spec, dt)
        soc[t] = s
    return _result("baseline", g, l, c, d, imp, exp, soc, spec, tariff, "rule")


def _build(g, l, dt, spec: BatterySpec, tariff: Tariff, self_consumption: bool,
           peak_threshold: float | None, n: int) -> "ModelBuilder":
    m = ModelBuilder()
    price = tariff.import_price.values
    ci = tariff.carbon_intensity.values
    k = 100.0 / spec.E_cap
    span = (spec.soc_max - spec.soc_min) * spec.E_cap / 100.0
    for t in range(n):
        mc = min(spec.P_max * dt, span / spec.eta_c)
        md = min(spec.P_max * dt, span * spec.eta_d)
        if self_consumption:
            mc = min(mc, max(g[t] - l[t], 0.0))
            md = min(md, max(l[t] - g[t], 0.0))
        mi = l[t] + mc
        me = g[t] + md
        if peak_threshold is not None:
            mi = min(mi, peak_threshold)
        c = m.var(f"c{t}", 0.0, mc)
        d = m.var(f"d{t}", 0.0, md)
        imp = m.var(f"imp{t}", 0.0, mi)
        exp = m.var(f"exp{t}", 0.0, me)
        soc = m.var(f"soc{t}", spec.soc_min, spec.soc_max)
        bc = m.var(f"bc{t}", 0, 1, "binary")
        bi = m.var(f"bi{t}", 0, 1, "binary")
        m.add({c: 1.0, bc: -mc}, "<=", 0.0, f"charge_mode{t}")
        m.add({d: 1.0, bc: md}, "<=", md, f"discharge_mode{t}")
        m.add({imp: 1.0, bi: -mi}, "<=", 0.0, f"import_mode{t}")
        m.add({exp: 1.0, bi: me}, "<=", me, f"export_mode{t}")
        m.add({imp: 1.0, exp: -1.0, d: 1.0, c: -1.0}, "=", l[t] - g[t], f"balance{t}")
        prev = {f"soc{t - 1}": -1.0} if t > 0 else {}
        m.add({soc: 1.0, **prev, c: -spec.eta_c * k, d: k / spec.eta_d}, "=",
              spec.initial_soc if t == 0 else 0.0, f"soc{t}")
        m.add_objective({imp: price[t] + tariff.w_carbon * ci[t], exp: -tariff.export_price})
    if spec.cycle_limit is not None:
        m.add({**{f"c{t}": 1.0 for t in range(n)}, **{f"d{t}": 1.0 for t in range(n)}},
              "<=", 2.0 * spec.E_cap * spec.cycle_limit, "cycles")
    m.minimize()
    return m


def _first_infeasible_step(g, l, dt, spec, tariff, sc, threshold, n, opts) -> int:
    """Smallest ``k`` such that the first ``k+1`` steps are already infeasible."""
    lo, hi = 1, n  # prefix of length hi is infeasible
    while lo < hi:
        mid = (lo + hi) // 2
        sol = solve_milp(_build(g, l, dt, spec, tariff, sc, threshold, mid).build(), opts)
        if sol.status is Status.INFEASIBLE:
            hi = mid
        else:
            lo = mid + 1
    return hi - 1


def _optimise(strategy: str, pv: TimeSeries, load: TimeSeries, spec: BatterySpec, tariff: Tariff,
              peak_threshold: float | None, opts: SolveOptions | None) -> DispatchResult:
    g, l, dt = _inputs(pv, load, tariff)
    n = len(g)
    sc = strategy == "self_consumption"
    if peak_threshold is not None and peak_threshold < 0:
        raise ValueError("peak_threshold must be non-negative")
    problem = _build(g, l, dt, spec, tariff, sc, peak_threshold, n).build()
    sol = solve_milp(problem, opts)
    if sol.status is Status.INFEASIBLE:
        step = _first_infeasible_step(g, l, dt, spec, tariff, sc, peak_threshold, n, opts)
        raise InfeasibleError(
            f"{strategy}: import cap {peak_threshold} kWh cannot be met from step {step} "
            f"(deficit {l[step] - g[step]:.3f} kWh)", step=step)
    if not sol.ok:
        raise SolverError(sol.status, f"{strategy} dispatch returned status {sol.status.value}")
    col = lambda p: np.array([sol[f"{p}{t}"] for t in range(n)])  # noqa: E731
    c, d = np.maximum(col("c"), 0.0), np.maximum(col("d"), 0.0)
    bc = np.round(col("bc"))
    c, d = c * bc, d * (1 - bc)
    # rebuild import/export and SOC from the decisions so the balance and the twin hold exactly
    net = l - g + c - d
    imp = np.maximum(net, 0.0)
    exp = np.maximum(-net, 0.0)
    soc = np.zeros(n)
    s = spec.initial_soc
    for t in range(n):
        # solver output is feasible to its own tolerance, not to the twin's
        s = battery_step(s, c[t], d[t], spec, dt, tol=1e-6)
        soc[t] = s
    return _result(strategy, g, l, c, d, imp, exp, soc, spec, tariff)


def optimise_self_consumption(pv: TimeSeries, load: TimeSeries, spec: BatterySpec, tariff: Tariff,
                              peak_threshold: float | None = None,
                              opts: SolveOptions | None = None) -> DispatchResult:
    """Least-cost dispatch where the battery only stores local surplus and only serves local deficit."""
    return _optimise("self_consumption", pv, load, spec, tariff, peak_threshold, opts)


def optimise_cost(pv: TimeSeries, load: TimeSeries, spec: BatterySpec, tariff: Tariff,
                  peak_threshold: float | None = None,
                  opts: SolveOptions | None = None) -> DispatchResult:
    """Least-cost dispatch with grid charging allowed (price arbitrage)."""
    return _optimise("cost", pv, load, spec, tariff, peak_threshold, opts)


STRATEGIES: dict[str, Callable[..., DispatchResult]] = {
    "baseline": lambda pv, load, spec, tariff, **_: baseline_dispatch(pv, load, spec, tariff),
    "self_consumption": optimise_self_consumption,
    "cost": optimise_cost,
}


# --- tariffs -------------------------------------------------------------------

PEAK_WINDOW = (16.0, 19.0)
SHOULDER_WINDOWS = ((7.0, 16.0), (19.0, 22.0))


def _in(hod: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    return (hod >= window[0]) & (hod < window[1])


def tariff_scenarios(base_price: float, peak_multiplier: float, export_price: float,
                     carbon: TimeSeries, w_carbon: float = 0.0) -> dict[str, Tariff]:
    """Flat, peak/off-peak, three-tier and weekday-only-peak tariffs on ``carbon``'s time axis.

    Peak is 16:00-19:00 at ``base * multiplier``. The three-tier tariff adds
    shoulders 07:00-16:00 and 19:00-22:00 at the midpoint price. The weekday
    tariff prices Saturday and Sunday at base throughout.
    """
    if peak_multiplier < 1:
        raise ValueError("peak_multiplier must be >= 1")
    hod = hourly_index(carbon)
    weekday = weekday_index(carbon) < 5
    peak = _in(hod, PEAK_WINDOW)
    shoulder = _in(hod, SHOULDER_WINDOWS[0]) | _in(hod, SHOULDER_WINDOWS[1])
    hi = base_price * peak_multiplier
    mid = base_price * (1.0 + (peak_multiplier - 1.0) / 2.0)
    flat = np.full(len(carbon), base_price)
    prices = {
        "flat": flat,
        "peak_offpeak": np.where(peak, hi, base_price),
        "three_tier": np.where(peak, hi, np.where(shoulder, mid, base_price)),
        "weekday_peak": np.where(peak & weekday, hi, base_price),
    }
    return {name: Tariff(carbon.with_values(p, "GBP/kWh"), export_price, carbon, w_carbon, name)
            for name, p in prices.items()}


# --- twin evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class TwinEvaluation:
    report: AccuracyReport
    cost_predicted: float
    cost_measured: float
    cost_impact_pct: float | None

    def to_dict(self) -> dict:
        return {"report": self.report.to_dict(), "cost_predicted": self.cost_predicted,
                "cost_measured": self.cost_measured, "cost_impact_pct": self.cost_impact_pct}


def evaluate_twin(predicted: TimeSeries, measured: TimeSeries, tariff: Tariff, load: TimeSeries,
                  spec: BatterySpec, strategy: str = "baseline",
                  opts: SolveOptions | None = None) -> TwinEvaluation:
    """Score a PV twin against measurements and the dispatch cost error it causes.

    Both series drive the same strategy; the impact is the absolute cost
    difference relative to the measured-input cost (``None`` if that is 0).
    """
    report = score(measured, predicted)
    run = STRATEGIES[strategy]
    kw = {} if strategy == "baseline" else {"opts": opts}
    c_pred = run(predicted, load, spec, tariff, **kw).cost
    c_meas = run(measured, load, spec, tariff, **kw).cost
    impact = None if c_meas == 0 else 100.0 * abs(c_pred - c_meas) / abs(c_meas)
    return TwinEvaluation(report, c_pred, c_meas, impact)
