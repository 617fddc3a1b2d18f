"""Week-ahead scheduling of a CHP heat network with a boiler and a thermal store.

Per step the model carries two binaries (on/off ``S`` and restart ``R``) and
seven continuous variables (CHP load fraction, grid import, grid export,
boiler heat, store charge, store discharge, end-of-step store level).
Energies are kWh, powers kW, prices GBP per kWh. ``SOE[t]`` is the store level
at the end of step ``t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .milp import ModelBuilder, SolveOptions, Status, solve_milp
from .errors import InfeasibleError, SolverError
from .timeseries import DataError, TimeSeries, day_index, hourly_index, require_aligned


@dataclass(frozen=True)
class ChpSpec:
    elec_capacity: float
    heat_capacity: float
    gas_per_elec: float
    min_load_fraction: float = 0.5
    maintenance_cost_per_hour: float = 0.0

    def __post_init__(self) -> None:
        if not (self.elec_capacity > 0 and self.heat_capacity > 0 and self.gas_per_elec > 0):
            raise ValueError("CHP capacities and gas ratio must be positive")
        if not 0.0 <= self.min_load_fraction <= 1.0:
            raise ValueError("min_load_fraction must lie in [0, 1]")
        if self.maintenance_cost_per_hour < 0:
            raise ValueError("maintenance cost must be non-negative")


@dataclass(frozen=True)
class BoilerSpec:
    heat_capacity: float
    efficiency: float = 0.9

    def __post_init__(self) -> None:
        if self.heat_capacity < 0:
            raise ValueError("boiler capacity must be non-negative")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("boiler efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class ThermalStoreSpec:
    capacity: float
    min_level: float = 0.0
    max_charge_rate: float = math.inf
    max_discharge_rate: float = math.inf
    initial_soe: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_level <= self.initial_soe <= self.capacity:
            raise ValueError("store levels must satisfy 0 <= min_level <= initial_soe <= capacity")
        if self.max_charge_rate < 0 or self.max_discharge_rate < 0:
            raise ValueError("store rates must be non-negative")


NO_STORE = ThermalStoreSpec(capacity=0.0, max_charge_rate=0.0, max_discharge_rate=0.0)


@dataclass(frozen=True)
class SiteAssets:
    chp: ChpSpec
    boiler: BoilerSpec
    store: ThermalStoreSpec = NO_STORE


@dataclass(frozen=True)
class NetworkScenario:
    """Demands, prices and the artificial (steering) cost coefficients.

    ``import_pref``, ``chp_pref`` and ``boiler_pref`` are GBP per kWh of grid
    import, CHP electricity and boiler heat; ``restart_cost`` is GBP per
    restart. ``R_max`` caps restarts per UTC calendar day.
    """

    E_demand: TimeSeries
    Q_demand: TimeSeries
    P_gas: TimeSeries
    P_import: TimeSeries
    P_export: TimeSeries
    R_max: int = 2
    import_pref: float = 0.0
    chp_pref: float = 0.0
    boiler_pref: float = 0.0
    restart_cost: float = 0.0
    initial_on: bool = False

    def __post_init__(self) -> None:
        require_aligned(self.E_demand, self.Q_demand, self.P_gas, self.P_import, self.P_export)
        if self.R_max < 0:
            raise ValueError("R_max must be non-negative")
        for name in ("import_pref", "chp_pref", "boiler_pref", "restart_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for s in (self.E_demand, self.Q_demand, self.P_gas, self.P_import, self.P_export):
            if np.isnan(s.values).any():
                raise DataError("network scenario series contain missing values")
        if (self.E_demand.values < 0).any() or (self.Q_demand.values < 0).any():
            raise DataError("demands must be non-negative")

    def __len__(self) -> int:
        return len(self.E_demand)

    @property
    def dt(self) -> float:
        return self.E_demand.hours


@dataclass(frozen=True)
class NetworkSchedule:
    chp_on: np.ndarray
    chp_load: np.ndarray
    E_import: np.ndarray
    E_export: np.ndarray
    Q_boiler: np.ndarray
    Q_charge: np.ndarray
    Q_discharge: np.ndarray
    SOE: np.ndarray
    restarts: np.ndarray
    costs: dict
    restarts_per_day: tuple[int, ...]
    status: str = "optimal"
    start: object = None
    resolution: object = None

    def E_chp(self, chp: ChpSpec) -> np.ndarray:
        return self.chp_load * chp.elec_capacity

    def Q_chp(self, chp: ChpSpec) -> np.ndarray:
        return self.chp_load * chp.heat_capacity

    @property
    def real_cost(self) -> float:
        return self.costs["total"]

    @property
    def total_cost(self) -> float:
        return self.costs["total"] + self.costs["artificial"]

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "chp_on": self.chp_on,
            "chp_load": self.chp_load,
            "E_import": self.E_import,
            "E_export": self.E_export,
            "Q_boiler": self.Q_boiler,
            "Q_charge": self.Q_charge,
            "Q_discharge": self.Q_discharge,
            "SOE": self.SOE,
            "restart": self.restarts,
        }


def restart_flags(on: np.ndarray, initial_on: bool) -> np.ndarray:
    prev = np.concatenate([[1.0 if initial_on else 0.0], on[:-1]])
    return np.maximum(on - prev, 0.0)


def _per_day(flags: np.ndarray, days: np.ndarray) -> tuple[int, ...]:
    if len(days) == 0:
        return ()
    return tuple(int(round(flags[days == d].sum())) for d in range(int(days.max()) + 1))


def evaluate_costs(
    scenario: NetworkScenario,
    assets: SiteAssets,
    on: np.ndarray,
    load: np.ndarray,
    E_import: np.ndarray,
    E_export: np.ndarray,
    Q_boiler: np.ndarray,
    restarts: np.ndarray,
) -> dict:
    """Real cost components and the artificial penalty total, all in GBP."""
    dt = scenario.dt
    chp, boiler = assets.chp, assets.boiler
    E_chp = load * chp.elec_capacity
    gas_kwh = (E_chp * chp.gas_per_elec + Q_boiler / boiler.efficiency) * dt
    gas = math.fsum(scenario.P_gas.values * gas_kwh)
    imp = math.fsum(scenario.P_import.values * E_import * dt)
    exp = math.fsum(scenario.P_export.values * E_export * dt)
    maint = math.fsum(chp.maintenance_cost_per_hour * on * dt)
    artificial = math.fsum(np.concatenate([
        scenario.import_pref * E_import * dt,
        scenario.chp_pref * E_chp * dt,
        scenario.boiler_pref * Q_boiler * dt,
        scenario.restart_cost * restarts,
    ]))
    return {
        "gas": gas,
        "import": imp,
        "export_revenue": exp,
        "maintenance": maint,
        "artificial": artificial,
        "total": gas + imp - exp + maint,
    }


def build_problem(scenario: NetworkScenario, assets: SiteAssets):
    """MILP for the whole horizon; returns the ``MilpProblem``."""
    n, dt = len(scenario), scenario.dt
    chp, boiler, store = assets.chp, assets.boiler, assets.store
    Ed, Qd = scenario.E_demand.values, scenario.Q_demand.values
    gas, pimp, pexp = scenario.P_gas.values, scenario.P_import.values, scenario.P_export.values
    days = day_index(scenario.E_demand)
    m = ModelBuilder()
    for t in range(n):
        S = m.var(f"S{t}", 0, 1, "binary")
        R = m.var(f"R{t}", 0, 1, "binary")
        L = m.var(f"L{t}", 0.0, 1.0)
        imp = m.var(f"Eimp{t}", 0.0)
        exp = m.var(f"Eexp{t}", 0.0)
        qb = m.var(f"Qb{t}", 0.0, boiler.heat_capacity)
        chg = m.var(f"Qchg{t}", 0.0, store.max_charge_rate)
        dis = m.var(f"Qdis{t}", 0.0, store.max_discharge_rate)
        soe = m.var(f"SOE{t}", store.min_level, store.capacity)

        if t == 0:
            m.add({R: 1.0, S: -1.0}, ">=", -1.0 if scenario.initial_on else 0.0, f"restart{t}")
        else:
            m.add({R: 1.0, S: -1.0, f"S{t - 1}": 1.0}, ">=", 0.0, f"restart{t}")
        m.add({L: 1.0, S: -chp.min_load_fraction}, ">=", 0.0, f"minload{t}")
        m.add({L: 1.0, S: -1.0}, "<=", 0.0, f"maxload{t}")
        m.add({exp: 1.0, L: -chp.elec_capacity}, "<=", 0.0, f"exportcap{t}")
        m.add({L: chp.elec_capacity, imp: 1.0, exp: -1.0}, "=", Ed[t], f"elec{t}")
        m.add({L: chp.heat_capacity, qb: 1.0, dis: 1.0, chg: -1.0}, "=", Qd[t], f"heat{t}")
        prev = {f"SOE{t - 1}": -1.0} if t > 0 else {}
        m.add({soe: 1.0, **prev, chg: -dt, dis: dt}, "=",
              store.initial_soe if t == 0 else 0.0, f"soe{t}")

        m.add_objective({
            L: (gas[t] * chp.gas_per_elec + scenario.chp_pref) * chp.elec_capacity * dt,
            qb: (gas[t] / boiler.efficiency + scenario.boiler_pref) * dt,
            imp: (pimp[t] + scenario.import_pref) * dt,
            exp: -pexp[t] * dt,
            S: chp.maintenance_cost_per_hour * dt,
            R: scenario.restart_cost,
        })
    for d in np.unique(days):
        m.add({f"R{t}": 1.0 for t in np.flatnonzero(days == d)}, "<=", float(scenario.R_max), f"restarts_day{d}")
    m.minimize()
    return m.build()


def heat_shortfall(scenario: NetworkScenario, assets: SiteAssets) -> tuple[int, str] | None:
    """Describe the first aggregate heat shortfall, or ``None`` if capacity suffices.

    Checks every prefix of the horizon: demand must be coverable by CHP, boiler
    and what the store can release (rate- and level-limited).
    """
    dt = scenario.dt
    Qd = scenario.Q_demand.values
    chp, boiler, store = assets.chp, assets.boiler, assets.store
    firm = chp.heat_capacity + boiler.heat_capacity
    usable = store.initial_soe - store.min_level
    deficit = 0.0
    for t, q in enumerate(Qd):
        gap = q - firm
        if gap > store.max_discharge_rate + 1e-9:
            return t, (f"heat capacity shortfall at step {t}: demand {q:.3f} kW exceeds "
                    f"CHP+boiler {firm:.3f} kW plus store discharge {store.max_discharge_rate:.3f} kW")
        if gap > 0:
            deficit += gap * dt
        # anything released beyond the initial level must first be charged from spare capacity
        headroom = math.fsum(np.minimum(np.maximum(firm - Qd[: t + 1], 0.0),
                                        store.max_charge_rate)) * dt
        if deficit > usable + headroom + 1e-9:
            return t, (f"heat capacity shortfall by step {t}: cumulative deficit {deficit:.3f} kWh "
                    f"exceeds what the store can supply")
    return None


def optimise(scenario: NetworkScenario, assets: SiteAssets,
             opts: SolveOptions | None = None) -> NetworkSchedule:
    shortfall = heat_shortfall(scenario, assets)
    if shortfall:
        raise InfeasibleError(shortfall[1], step=shortfall[0])
    problem = build_problem(scenario, assets)
    sol = solve_milp(problem, opts)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleError(
            "heat network problem infeasible: heat balance cannot be met with the "
            "CHP minimum load, store limits and restart cap"
        )
    if not sol.ok:
        raise SolverError(sol.status, f"heat network problem returned status {sol.status.value}")
    n = len(scenario)
    col = lambda p: np.array([sol[f"{p}{t}"] for t in range(n)])  # noqa: E731
    on = np.round(col("S"))
    load = np.clip(col("L"), 0.0, 1.0) * on
    restarts = restart_flags(on, scenario.initial_on)
    chg, dis = np.maximum(col("Qchg"), 0.0), np.maximum(col("Qdis"), 0.0)
    # chain the level from the flows so the store balance holds to rounding, not solver tolerance
    soe = assets.store.initial_soe + np.cumsum((chg - dis) * scenario.dt)
    return _schedule(scenario, assets, on, load, np.maximum(col("Eimp"), 0.0),
                     np.maximum(col("Eexp"), 0.0), np.maximum(col("Qb"), 0.0),
                     chg, dis, soe, restarts,
                     "optimal" if sol.gap == 0 else f"optimal (gap {sol.gap:.2e})")


def _schedule(scenario, assets, on, load, imp, exp, qb, chg, dis, soe, restarts, status):
    costs = evaluate_costs(scenario, assets, on, load, imp, exp, qb, restarts)
    days = day_index(scenario.E_demand)
    return NetworkSchedule(
        chp_on=on, chp_load=load, E_import=imp, E_export=exp, Q_boiler=qb,
        Q_charge=chg, Q_discharge=dis, SOE=soe, restarts=restarts, costs=costs,
        restarts_per_day=_per_day(restarts, days), status=status,
        start=scenario.E_demand.start, resolution=scenario.E_demand.resolution,
    )


@dataclass(frozen=True)
class WindowRule:
    """Run the CHP at ``load`` between ``start_hour`` (inclusive) and ``end_hour`` (exclusive)."""

    start_hour: float = 7.0
    end_hour: float = 24.0
    load: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.start_hour <= self.end_hour <= 24.0:
            raise ValueError("rule window must lie within one day")
        if not 0.0 <= self.load <= 1.0:
            raise ValueError("rule load must lie in [0, 1]")


def baseline_schedule(scenario: NetworkScenario, assets: SiteAssets,
                      rule: WindowRule = WindowRule()) -> NetworkSchedule:
    """Simulate the fixed-window rule directly.

    Surplus CHP heat charges the store; what the store cannot take is removed
    by throttling the CHP (switching it off if even minimum load is surplus).
    Heat deficits draw on the store first, then the boiler.
    """
    n, dt = len(scenario), scenario.dt
    chp, boiler, store = assets.chp, assets.boiler, assets.store
    Ed, Qd = scenario.E_demand.values, scenario.Q_demand.values
    hod = hourly_index(scenario.E_demand)
    in_window = (hod >= rule.start_hour) & (hod < rule.end_hour) & (rule.load > 0)
    on = np.zeros(n)
    load = np.zeros(n)
    qb, chg, dis, soe = np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n)
    level = store.initial_soe
    for t in range(n):
        L = max(rule.load, chp.min_load_fraction) if in_window[t] else 0.0
        q_chp = L * chp.heat_capacity
        if q_chp > Qd[t]:
            room = min(store.max_charge_rate, (store.capacity - level) / dt) if dt > 0 else 0.0
            c = min(q_chp - Qd[t], max(room, 0.0))
            if q_chp - c > Qd[t] + 1e-12:
                L = (Qd[t] + c) / chp.heat_capacity
                if L < chp.min_load_fraction - 1e-12:
                    L = chp.min_load_fraction
                    c = L * chp.heat_capacity - Qd[t]
                    if c > max(room, 0.0) + 1e-12:
                        L, c = 0.0, 0.0
                q_chp = L * chp.heat_capacity
            if L > 0:
                chg[t] = c
        if q_chp < Qd[t]:
            need = Qd[t] - q_chp
            d = min(store.max_discharge_rate, (level - store.min_level) / dt, need)
            dis[t] = max(d, 0.0)
            qb[t] = need - dis[t]
            if qb[t] > boiler.heat_capacity + 1e-9:
                raise InfeasibleError(
                    f"rule leaves {qb[t] - boiler.heat_capacity:.3f} kW of heat demand unmet at step {t}",
                    step=t,
                )
        on[t] = 1.0 if L > 0 else 0.0
        load[t] = L
        level = level + (chg[t] - dis[t]) * dt
        soe[t] = level
    E_chp = load * chp.elec_capacity
    net = Ed - E_chp
    imp = np.maximum(net, 0.0)
    exp = np.maximum(-net, 0.0)
    restarts = restart_flags(on, scenario.initial_on)
    return _schedule(scenario, assets, on, load, imp, exp, qb, chg, dis, soe, restarts, "baseline")


def within_restart_cap(schedule: NetworkSchedule, scenario: NetworkScenario) -> bool:
    return all(r <= scenario.R_max for r in schedule.restarts_per_day)


@dataclass(frozen=True)
class SavingsReport:
    baseline_cost: float
    optimised_cost: float
    reduction_pct: float
    actual_cost: float | None = None
    value_realised_pct: float | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "baseline_cost": self.baseline_cost,
            "optimised_cost": self.optimised_cost,
            "reduction_pct": self.reduction_pct,
            "actual_cost": self.actual_cost,
            "value_realised_pct": self.value_realised_pct,
            "warnings": list(self.warnings),
        }


def compare_costs(baseline: float, optimised: float, actual: float | None = None) -> SavingsReport:
    notes: list[str] = []
    saving = baseline - optimised
    if saving <= 0 or baseline == 0:
        notes.append("optimised cost is not below baseline; reduction floored at 0%")
        reduction = 0.0
    else:
        reduction = 100.0 * saving / abs(baseline)
    realised = None
    if actual is not None:
        if saving <= 0:
            notes.append("value realised undefined: no baseline-to-optimised saving")
        else:
            realised = 100.0 * (baseline - actual) / saving
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=3)
    return SavingsReport(baseline, optimised, reduction, actual, realised, tuple(notes))


def compare(baseline: NetworkSchedule, optimised: NetworkSchedule,
            actual: NetworkSchedule | None = None) -> SavingsReport:
    """Real-cost reduction and, given an actual schedule, value realised."""
    return compare_costs(baseline.real_cost, optimised.real_cost,
                         None if actual is None else actual.real_cost)


def balance_residuals(schedule: NetworkSchedule, scenario: NetworkScenario,
                      assets: SiteAssets) -> tuple[np.ndarray, np.ndarray]:
    """Per-step electricity and heat balance residuals (kW)."""
    e = scenario.E_demand.values - (schedule.E_chp(assets.chp) + schedule.E_import - schedule.E_export)
    q = scenario.Q_demand.values - (schedule.Q_chp(assets.chp) + schedule.Q_boiler
                                    + schedule.Q_discharge - schedule.Q_charge)
    return e, q
