"""Grey-box 1R1C building twin and its model predictive controller.

Units: R in degC/kW, C in kWh/degC, solar gain factor p in kW per W/m2,
heating power in kW and the time step in hours. Temperatures in a schedule are
post-step values: ``T_i[k]`` is the zone temperature at the end of step ``k``,
and comfort at step ``k`` compares it with ``T_target[k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import SolverError
from .milp import ModelBuilder, SolveOptions, Status, solve_lp
from .timeseries import AccuracyReport, DataError, TimeSeries, require_aligned, score_arrays

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class RcModelParams:
    R: float
    C: float
    p: float = 0.0
    order: int = 1

    def __post_init__(self) -> None:
        if not (self.R > 0 and self.C > 0 and self.p >= 0):
            raise ValueError(f"invalid RC parameters R={self.R}, C={self.C}, p={self.p}")
        if self.order != 1:
            raise NotImplementedError("only first-order (1R1C) models are supported")

    @property
    def time_constant(self) -> float:
        """R*C in hours."""
        return self.R * self.C


@dataclass(frozen=True)
class HvacSpec:
    """Heating plant limits; cooling is enabled by ``cool_max > 0``.

    ``allowed`` is an optional per-step 0/1 mask of permitted operating steps.
    """

    q_max: float
    cop_heat: float = 1.0
    allowed: tuple[bool, ...] | None = None
    cool_max: float = 0.0
    cop_cool: float = 3.0

    def __post_init__(self) -> None:
        if self.q_max < 0 or self.cool_max < 0:
            raise ValueError("HVAC capacities must be non-negative")
        if self.cop_heat <= 0 or self.cop_cool <= 0:
            raise ValueError("conversion factors must be positive")
        if self.allowed is not None:
            object.__setattr__(self, "allowed", tuple(bool(a) for a in self.allowed))

    def mask(self, n: int, offset: int = 0) -> np.ndarray:
        if self.allowed is None:
            return np.ones(n, dtype=bool)
        m = np.asarray(self.allowed[offset:offset + n], dtype=bool)
        if len(m) < n:
            raise DataError("HVAC operating mask is shorter than the horizon")
        return m


@dataclass(frozen=True)
class ComfortSpec:
    target: TimeSeries
    occupied: tuple[bool, ...]
    band: float = 1.0

    def __post_init__(self) -> None:
        if not self.band > 0:
            raise ValueError("comfort band must be positive")
        object.__setattr__(self, "occupied", tuple(bool(o) for o in self.occupied))
        if len(self.occupied) != len(self.target):
            raise DataError("occupancy mask and target series differ in length")

    def slice(self, i: int, j: int) -> "ComfortSpec":
        return ComfortSpec(self.target.slice(i, j), self.occupied[i:j], self.band)


@dataclass(frozen=True)
class ObjectiveWeights:
    w_cost: float = 1.0
    w_carbon: float = 0.0
    w_comfort: float = 1.0

    def __post_init__(self) -> None:
        ws = (self.w_cost, self.w_carbon, self.w_comfort)
        if any(w < 0 or not math.isfinite(w) for w in ws):
            raise ValueError("weights must be finite and non-negative")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one weight must be positive")

    def scaled(self, k: float) -> "ObjectiveWeights":
        return ObjectiveWeights(self.w_cost * k, self.w_carbon * k, self.w_comfort * k)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_cost, self.w_carbon, self.w_comfort)


@dataclass(frozen=True)
class ScenarioInputs:
    T_e: TimeSeries
    I_s: TimeSeries
    C_energy: TimeSeries
    C_carbon: TimeSeries

    def __post_init__(self) -> None:
        require_aligned(self.T_e, self.I_s, self.C_energy, self.C_carbon)

    @property
    def dt(self) -> float:
        return self.T_e.hours

    def __len__(self) -> int:
        return len(self.T_e)

    def slice(self, i: int, j: int) -> "ScenarioInputs":
        return ScenarioInputs(*(s.slice(i, j) for s in (self.T_e, self.I_s, self.C_energy, self.C_carbon)))


@dataclass(frozen=True)
class BuildingSchedule:
    Q_HVAC: TimeSeries
    T_i: TimeSeries
    cost: float
    carbon: float
    comfort_criterion: float
    Q_cool: TimeSeries | None = None
    objective: float | None = None
    status: str = "optimal"

    def summary(self) -> dict:
        return {
            "cost": self.cost,
            "carbon": self.carbon,
            "comfort_criterion": self.comfort_criterion,
            "objective": self.objective,
            "status": self.status,
        }


def rc_step(T_i, T_e, Q, I_s, params: RcModelParams, dt: float):
    """One explicit Euler step of ``C dT/dt = (T_e - T_i)/R + Q + p I_s``."""
    for v in (T_i, T_e, Q, I_s, dt):
        if not np.all(np.isfinite(v)):
            raise DataError("rc_step received a non-finite input")
    return T_i + (dt / params.C) * ((T_e - T_i) / params.R + Q + params.p * I_s)


def hvac_energy(q_heat: np.ndarray, q_cool: np.ndarray | None, hvac: HvacSpec) -> np.ndarray:
    """Primary energy rate (kW) drawn by the plant."""
    e = np.asarray(q_heat, float) / hvac.cop_heat
    if q_cool is not None:
        e = e + np.asarray(q_cool, float) / hvac.cop_cool
    return e


def comfort_criterion(T_i: np.ndarray, comfort: ComfortSpec) -> float:
    """Share of occupied steps whose temperature is within the band (1.0 if none occupied)."""
    occ = np.asarray(comfort.occupied, dtype=bool)
    if not occ.any():
        return 1.0
    dev = np.abs(np.asarray(T_i) - comfort.target.values)
    return float(np.mean(dev[occ] <= comfort.band + 1e-9))


def evaluate(
    q_heat: np.ndarray,
    T_i: np.ndarray,
    hvac: HvacSpec,
    comfort: ComfortSpec | None,
    inputs: ScenarioInputs,
    q_cool: np.ndarray | None = None,
    objective: float | None = None,
    status: str = "optimal",
) -> BuildingSchedule:
    n = len(q_heat)
    dt = inputs.dt
    e = hvac_energy(q_heat, q_cool, hvac)
    cost = float(np.sum(inputs.C_energy.values[:n] * e) * dt)
    carbon = float(np.sum(inputs.C_carbon.values[:n] * e) * dt)
    crit = comfort_criterion(T_i, comfort) if comfort is not None else math.nan
    base = inputs.T_e.slice(0, n)
    return BuildingSchedule(
        Q_HVAC=base.with_values(q_heat, "kW"),
        T_i=base.with_values(T_i, "degC"),
        cost=cost,
        carbon=carbon,
        comfort_criterion=crit,
        Q_cool=None if q_cool is None else base.with_values(q_cool, "kW"),
        objective=objective,
        status=status,
    )


Policy = Callable[[int, float], float]


def zero_policy(k: int, T_i: float) -> float:
    return 0.0


def replay_policy(q: Sequence[float]) -> Policy:
    arr = np.asarray(q, float)
    return lambda k, T_i: float(arr[k])


class ThermostatPolicy:
    """Bang-bang heating with a hysteresis deadband inside active steps.

    Heats at ``q_max`` once the zone falls below ``target - deadband/2`` and
    stops above ``target + deadband/2``; outside ``active`` steps it is off.
    """

    def __init__(self, target: Sequence[float], q_max: float, active: Sequence[bool],
                 deadband: float = 1.0) -> None:
        self.target = np.asarray(target, float)
        self.q_max = q_max
        self.active = np.asarray(active, dtype=bool)
        self.deadband = deadband
        self.on = False

    def __call__(self, k: int, T_i: float) -> float:
        if not self.active[k]:
            self.on = False
            return 0.0
        lo = self.target[k] - self.deadband / 2
        hi = self.target[k] + self.deadband / 2
        if T_i < lo:
            self.on = True
        elif T_i > hi:
            self.on = False
        return self.q_max if self.on else 0.0


def simulate(
    params: RcModelParams,
    policy: Policy,
    inputs: ScenarioInputs,
    T_i0: float,
    steps: int | None = None,
    hvac: HvacSpec | None = None,
    comfort: ComfortSpec | None = None,
) -> BuildingSchedule:
    """Drive the twin with ``policy(k, T_i) -> Q`` (negative values mean cooling)."""
    n = len(inputs) if steps is None else steps
    if n > len(inputs):
        raise DataError("not enough input steps to simulate")
    hvac = hvac or HvacSpec(q_max=math.inf)
    dt = inputs.dt
    Te, Is = inputs.T_e.values, inputs.I_s.values
    mask = hvac.mask(n) if hvac.allowed is not None else np.ones(n, dtype=bool)
    q_heat = np.zeros(n)
    q_cool = np.zeros(n)
    temps = np.zeros(n)
    T = float(T_i0)
    for k in range(n):
        q = float(policy(k, T))
        heat_cap = hvac.q_max if mask[k] else 0.0
        cool_cap = hvac.cool_max if mask[k] else 0.0
        if not (-cool_cap - _BOUND_TOL <= q <= heat_cap + _BOUND_TOL):
            raise DataError(f"policy output {q} kW at step {k} is outside [{-cool_cap}, {heat_cap}]")
        q_heat[k] = max(q, 0.0)
        q_cool[k] = max(-q, 0.0)
        T = rc_step(T, Te[k], q, Is[k], params, dt)
        temps[k] = T
    has_cool = hvac.cool_max > 0
    return evaluate(q_heat, temps, hvac, comfort.slice(0, n) if comfort else None,
                    inputs, q_cool if has_cool else None, status="simulated")


def _one_step_design(T_i, T_e, I_s, Q):
    y = T_i[1:] - T_i[:-1]
    u = T_e[:-1] - T_i[:-1]
    return y, u, Q[:-1], I_s[:-1]


def fit_parameters(
    T_i: TimeSeries, T_e: TimeSeries, I_s: TimeSeries, Q_HVAC: TimeSeries
) -> tuple[RcModelParams, AccuracyReport]:
    """Fit (R, C, p) by minimising the one-step-ahead squared error.

    The search is coordinate-wise golden section over log time constant and
    log capacitance, with the solar factor solved in closed form (clipped at 0)
    for every trial pair. The search is started from the unconstrained
    least-squares solution of the equivalent linear regression. The returned
    report scores the in-sample one-step-ahead temperature predictions.
    """
    require_aligned(T_i, T_e, I_s, Q_HVAC)
    if len(T_i) < 48:
        raise DataError("fitting needs at least 48 aligned steps")
    ti, te, irr, q = (np.asarray(s.values, float) for s in (T_i, T_e, I_s, Q_HVAC))
    if any(np.isnan(a).any() for a in (ti, te, irr, q)):
        raise DataError("fit data contain missing values")
    if np.ptp(ti) == 0 and np.ptp(te) == 0:
        raise DataError("unidentifiable: indoor and outdoor temperatures are constant")
    if np.ptp(ti) == 0:
        raise DataError("unidentifiable: indoor temperature has no variance")
    dt = T_i.hours
    y, u, qq, ss = _one_step_design(ti, te, irr, q)
    use_solar = bool(np.any(ss != 0))
    cols = [u, qq] + ([ss] if use_solar else [])
    X = np.column_stack(cols)
    if np.linalg.matrix_rank(X / np.maximum(np.linalg.norm(X, axis=0), 1e-300)) < X.shape[1]:
        raise DataError("unidentifiable: heat input, temperature difference and solar gain are collinear")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a, b = coef[0], coef[1]
    if not (a > 0 and b > 0):
        raise DataError("unidentifiable: data imply a non-physical (non-positive) R or C")

    def solar_for(tau: float, C: float) -> tuple[float, float]:
        r = y - (dt / tau) * u - (dt / C) * qq
        if not use_solar:
            return 0.0, float(r @ r)
        g = (dt / C) * ss
        p = max(float(g @ r) / float(g @ g), 0.0)
        res = r - p * g
        return p, float(res @ res)

    log_tau, log_c = math.log(dt / a), math.log(dt / b)

    def sse(lt: float, lc: float) -> float:
        return solar_for(math.exp(lt), math.exp(lc))[1]

    best = sse(log_tau, log_c)
    for _ in range(100):
        log_tau = _golden_min(lambda v: sse(v, log_c), log_tau - 0.5, log_tau + 0.5)
        log_c = _golden_min(lambda v: sse(log_tau, v), log_c - 0.5, log_c + 0.5)
        cur = sse(log_tau, log_c)
        if best - cur <= 1e-15 * max(best, 1e-300):
            best = min(best, cur)
            break
        best = cur
    tau, C = math.exp(log_tau), math.exp(log_c)
    p, _ = solar_for(tau, C)
    params = RcModelParams(R=tau / C, C=C, p=p)

    pred = ti[:-1] + (dt / C) * (u / params.R + qq + p * ss)
    report = score_arrays(ti[1:], pred)
    return params, report


def _golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section search; the bracket is widened until it holds an interior minimum."""
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        fl, fm, fh = f(lo), f(mid), f(hi)
        if fm <= fl and fm <= fh:
            break
        width = hi - lo
        if fl < fh:
            lo, hi = lo - width, hi - 0.5 * width
        else:
            lo, hi = lo + 0.5 * width, hi + width
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


# --- Kalman filter on the scalar zone temperature -----------------------------

def kalman_predict(mean: float, var: float, params: RcModelParams, T_e: float, Q: float,
                   I_s: float, dt: float, process_var: float) -> tuple[float, float]:
    a = 1.0 - dt / (params.R * params.C)
    return float(rc_step(mean, T_e, Q, I_s, params, dt)), a * a * var + process_var


def kalman_update(mean: float, var: float, z: float, meas_var: float) -> tuple[float, float]:
    if math.isnan(z):
        return mean, var
    gain = var / (var + meas_var)
    # var * r / (var + r) equals (1 - gain) * var but keeps precision as r -> 0
    return mean + gain * (z - mean), var * meas_var / (var + meas_var)


@dataclass(frozen=True)
class KalmanResult:
    mean: TimeSeries
    variance: np.ndarray


def _check_variances(*vs: float) -> None:
    for v in vs:
        if not v > 0:
            raise ValueError(f"noise variances must be positive, got {v}")


def kalman_estimate(
    params: RcModelParams,
    inputs: ScenarioInputs,
    Q_HVAC: Sequence[float],
    measurements: TimeSeries,
    process_var: float,
    meas_var: float,
    mean0: float,
    var0: float = 1.0,
) -> KalmanResult:
    """Filtered zone temperature for each measurement step.

    Step ``k`` updates the prior with measurement ``k`` (NaN means none, so the
    prior is kept), then predicts step ``k+1`` with the twin driven by
    ``Q_HVAC[k]`` and the inputs at ``k``.
    """
    _check_variances(process_var, meas_var, var0)
    n = len(measurements)
    if len(inputs) < n or len(Q_HVAC) < n:
        raise DataError("inputs and HVAC series must cover the measurements")
    dt = inputs.dt
    z = measurements.values
    m, v = float(mean0), float(var0)
    means, variances = np.zeros(n), np.zeros(n)
    for k in range(n):
        m, v = kalman_update(m, v, z[k], meas_var)
        means[k], variances[k] = m, v
        m, v = kalman_predict(m, v, params, inputs.T_e.values[k], float(Q_HVAC[k]),
                              inputs.I_s.values[k], dt, process_var)
    return KalmanResult(measurements.with_values(means, "degC"), variances)


# --- MPC ----------------------------------------------------------------------

def optimise_horizon(
    params: RcModelParams,
    hvac: HvacSpec,
    comfort: ComfortSpec,
    weights: ObjectiveWeights,
    inputs: ScenarioInputs,
    T_i0: float,
    opts: SolveOptions | None = None,
    mask_offset: int = 0,
) -> BuildingSchedule:
    """Optimal heating plan over the whole input horizon (a linear program).

    Absolute comfort deviation on occupied steps is linearised with slack
    variables ``d >= |T_i - T_target|``.
    """
    n = len(inputs)
    if len(comfort.target) != n:
        raise DataError("comfort target and inputs differ in length")
    dt = inputs.dt
    Te, Is = inputs.T_e.values, inputs.I_s.values
    price = weights.w_cost * inputs.C_energy.values + weights.w_carbon * inputs.C_carbon.values
    mask = hvac.mask(n, mask_offset)
    keep = 1.0 - dt / (params.R * params.C)
    gain = dt / params.C
    cooling = hvac.cool_max > 0
    target = comfort.target.values
    occ = np.asarray(comfort.occupied, dtype=bool)

    m = ModelBuilder()
    for t in range(n):
        q = m.var(f"Q{t}", 0.0, hvac.q_max if mask[t] else 0.0)
        m.add_objective({q: price[t] * dt / hvac.cop_heat})
        if cooling:
            qc = m.var(f"Qc{t}", 0.0, hvac.cool_max if mask[t] else 0.0)
            m.add_objective({qc: price[t] * dt / hvac.cop_cool})
        T = m.var(f"T{t}", -math.inf, math.inf)
        # T_{t+1} = keep*T_t + gain*(Q - Qc + T_e/R + p*I_s)
        coeffs = {T: 1.0, q: -gain}
        if cooling:
            coeffs[f"Qc{t}"] = gain
        rhs = gain * (Te[t] / params.R + params.p * Is[t])
        if t == 0:
            rhs += keep * T_i0
        else:
            coeffs[f"T{t - 1}"] = -keep
        m.add(coeffs, "=", rhs, name=f"dyn{t}")
        if occ[t] and weights.w_comfort > 0:
            d = m.var(f"d{t}", 0.0)
            m.add({d: 1.0, T: -1.0}, ">=", -target[t], name=f"above{t}")
            m.add({d: 1.0, T: 1.0}, ">=", target[t], name=f"below{t}")
            m.add_objective({d: weights.w_comfort})
    m.minimize()
    sol = solve_lp(m.build().base, opts)
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, f"building MPC problem returned status {sol.status.value}")
    qh = np.array([min(max(sol[f"Q{t}"], 0.0), hvac.q_max if mask[t] else 0.0) for t in range(n)])
    qc = None
    if cooling:
        qc = np.array([min(max(sol[f"Qc{t}"], 0.0), hvac.cool_max if mask[t] else 0.0) for t in range(n)])
    temps = np.array([sol[f"T{t}"] for t in range(n)])
    return evaluate(qh, temps, hvac, comfort, inputs, qc, objective=sol.objective)


def replay(params: RcModelParams, schedule: BuildingSchedule, inputs: ScenarioInputs,
           T_i0: float, hvac: HvacSpec, comfort: ComfortSpec | None = None) -> BuildingSchedule:
    net = schedule.Q_HVAC.values - (schedule.Q_cool.values if schedule.Q_cool is not None else 0.0)
    return simulate(params, replay_policy(net), inputs, T_i0, len(net), hvac, comfort)


def rolling_mpc(
    plant_params: RcModelParams,
    controller_params: RcModelParams,
    hvac: HvacSpec,
    comfort: ComfortSpec,
    weights: ObjectiveWeights,
    inputs: ScenarioInputs,
    T_i0: float,
    horizon: int,
    total_steps: int,
    *,
    measurement_noise: float = 0.0,
    feedback: bool = True,
    process_var: float = 0.01,
    meas_var: float | None = None,
    seed: int = 0,
    opts: SolveOptions | None = None,
) -> BuildingSchedule:
    """Receding-horizon control of a simulated plant.

    Each step the controller plans over ``min(horizon, remaining inputs)``
    steps from its state estimate and applies only the first action. With
    ``feedback`` the estimate is Kalman-filtered from noisy plant readings;
    without it the controller trusts its own open-loop prediction.
    """
    if horizon < 1 or horizon > total_steps:
        raise ValueError("horizon must be in [1, total_steps]")
    if total_steps > len(inputs):
        raise DataError("inputs shorter than total_steps")
    rng = np.random.default_rng(seed)
    meas_var = meas_var if meas_var is not None else max(measurement_noise**2, 1e-6)
    _check_variances(process_var, meas_var)
    dt = inputs.dt
    Te, Is = inputs.T_e.values, inputs.I_s.values
    T_plant = float(T_i0)
    est, var = float(T_i0), meas_var
    q_heat = np.zeros(total_steps)
    q_cool = np.zeros(total_steps)
    temps = np.zeros(total_steps)
    cooling = hvac.cool_max > 0
    for k in range(total_steps):
        if feedback:
            z = T_plant + (rng.normal(0.0, measurement_noise) if measurement_noise > 0 else 0.0)
            est, var = kalman_update(est, var, z, meas_var)
        H = min(horizon, len(inputs) - k)
        plan = optimise_horizon(controller_params, hvac, comfort.slice(k, k + H), weights,
                                inputs.slice(k, k + H), est, opts, mask_offset=k)
        qh = float(plan.Q_HVAC.values[0])
        qc = float(plan.Q_cool.values[0]) if plan.Q_cool is not None else 0.0
        q_heat[k], q_cool[k] = qh, qc
        T_plant = float(rc_step(T_plant, Te[k], qh - qc, Is[k], plant_params, dt))
        temps[k] = T_plant
        est, var = kalman_predict(est, var, controller_params, Te[k], qh - qc, Is[k], dt, process_var)
    sched = evaluate(q_heat, temps, hvac, comfort.slice(0, total_steps),
                     inputs.slice(0, total_steps), q_cool if cooling else None, status="closed-loop")
    return replace(sched, objective=closed_loop_objective(sched, comfort, weights, inputs))


def closed_loop_objective(s: BuildingSchedule, comfort: ComfortSpec, weights: ObjectiveWeights,
                          inputs: ScenarioInputs) -> float:
    """The MPC objective evaluated on a realised trajectory."""
    n = len(s.Q_HVAC)
    occ = np.asarray(comfort.occupied[:n], dtype=bool)
    dev = np.abs(s.T_i.values - comfort.target.values[:n])
    return float(weights.w_cost * s.cost + weights.w_carbon * s.carbon
                 + weights.w_comfort * np.sum(dev[occ]))


# --- Pareto sweep -------------------------------------------------------------

@dataclass(frozen=True)
class BuildingScenario:
    params: RcModelParams
    hvac: HvacSpec
    comfort: ComfortSpec
    inputs: ScenarioInputs
    T_i0: float


@dataclass(frozen=True)
class ParetoPoint:
    weights: ObjectiveWeights
    cost: float
    carbon: float
    comfort: float


@dataclass
class ParetoResult:
    points: list[ParetoPoint]
    front: list[int] = field(default_factory=list)

    def front_points(self) -> list[ParetoPoint]:
        return [self.points[i] for i in self.front]


def default_weight_grid() -> list[ObjectiveWeights]:
    return [
        ObjectiveWeights(1.0, w_carbon, w_comfort)
        for w_carbon in (0.0, 2e-4, 1e-3)
        for w_comfort in (0.003, 0.01, 0.03, 0.1, 0.3, 1.0)
    ]


def dominates(a: tuple[float, float, float], b: tuple[float, float, float]) -> bool:
    """``a`` dominates ``b`` on (cost min, carbon min, comfort max)."""
    no_worse = a[0] <= b[0] and a[1] <= b[1] and a[2] >= b[2]
    better = a[0] < b[0] or a[1] < b[1] or a[2] > b[2]
    return no_worse and better


def non_dominated(objs: Sequence[tuple[float, float, float]]) -> list[int]:
    return [i for i, p in enumerate(objs)
            if not any(dominates(q, p) for j, q in enumerate(objs) if j != i)]


def pareto_sweep(grid: Sequence[ObjectiveWeights], scenario: BuildingScenario,
                 opts: SolveOptions | None = None) -> ParetoResult:
    if not grid:
        raise ValueError("empty weight grid")
    points = []
    for w in grid:
        s = optimise_horizon(scenario.params, scenario.hvac, scenario.comfort, w,
                             scenario.inputs, scenario.T_i0, opts)
        points.append(ParetoPoint(w, s.cost, s.carbon, s.comfort_criterion))
    front = non_dominated([(p.cost, p.carbon, p.comfort) for p in points])
    return ParetoResult(points, front)
