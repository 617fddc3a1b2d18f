"""Configuration-driven scenario runner.

    energyopt <command> --config run.yaml [--out DIR] [--seed N] [--verbose]

Commands: ``forecast``, ``fit-building``, ``mpc``, ``pareto``, ``chp``, ``ems``
and ``generate`` (writes the bundled synthetic dataset and configs). Every
command computes all outputs in memory and writes them, plus a
``manifest.json``, only once it has succeeded. Exit codes: 0 success, 2
configuration or input error, 3 infeasible scenario, 4 solver limit reached.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np
import yaml

from . import __version__, chp, ems, synthetic, thermal
from .errors import InfeasibleError, SolverError
from .forecast import (
    LEVELS,
    EmaModel,
    Hierarchy,
    LinearArModel,
    SeasonalNaiveModel,
    aggregate_bottom_up,
    backtest,
    combine,
    default_window,
    update_weights,
)
from .milp import SolveOptions, Status
from .timeseries import (
    CsvSchema,
    DataError,
    TimeSeries,
    csv_text,
    detect_anomalies,
    fill_gaps,
    filter_meters,
    format_timestamp,
    hourly_index,
    ingest_csv,
    score_arrays,
    weekday_index,
)

log = logging.getLogger("energyopt")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: str, status: int, detail: str) -> None:
        super().__init__(detail)
        self.code = code
        self.status = status


def config_error(detail: str) -> CliError:
    return CliError("E_CONFIG", EXIT_CONFIG, detail)


# --- config plumbing ---------------------------------------------------------------

@dataclass
class RunContext:
    config: dict
    base: Path
    seed: int
    inputs: dict[str, Path]
    outputs: dict[str, bytes]

    def path(self, raw: Any, where: str) -> Path:
        if not isinstance(raw, str) or not raw:
            raise config_error(f"{where}: expected a file path")
        p = (self.base / raw).resolve() if not Path(raw).is_absolute() else Path(raw)
        if not p.is_file():
            raise config_error(f"{where}: input file {raw} not found")
        self.inputs[raw] = p
        return p

    def emit_json(self, name: str, obj: Any) -> None:
        self.outputs[name] = (json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False)
                              + "\n").encode()

    def emit_csv(self, name: str, series: Mapping[str, TimeSeries]) -> None:
        self.outputs[name] = csv_text(series, "{:.9g}").encode()

    def emit_rows(self, name: str, header: list[str], rows: list[list[Any]]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.9g}" if isinstance(v, float) else v for v in r])
        self.outputs[name] = buf.getvalue().encode()


def _plain(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def section(cfg: Mapping, key: str, required: bool = True) -> dict:
    raw = cfg.get(key)
    if raw is None:
        if required:
            raise config_error(f"missing section {key!r}")
        return {}
    if not isinstance(raw, Mapping):
        raise config_error(f"section {key!r} must be a mapping")
    return dict(raw)


def build(cls: type, raw: Any, where: str, **extra: Any):
    """Instantiate a dataclass from a config mapping, rejecting unknown keys."""
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        raise config_error(f"{where}: expected a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise config_error(f"{where}: unknown key(s) {unknown}")
    try:
        return cls(**{**raw, **extra})
    except (TypeError, ValueError) as exc:
        raise config_error(f"{where}: {exc}") from None


def option(sec: Mapping, key: str, default: Any, kind: Callable = float, where: str = "") -> Any:
    if key not in sec or sec[key] is None:
        return default
    try:
        return kind(sec[key])
    except (TypeError, ValueError):
        raise config_error(f"{where}{key}: cannot interpret {sec[key]!r}") from None


def check_keys(sec: Mapping, allowed: set[str], where: str) -> None:
    unknown = sorted(set(sec) - allowed)
    if unknown:
        raise config_error(f"{where}: unknown key(s) {unknown}")


def read_columns(path: Path, columns: list[str], optional: tuple[str, ...] = ()) -> dict[str, TimeSeries]:
    with path.open(newline="") as fh:
        header = next(csv.reader(fh), [])
    present = [c for c in columns if c in header] + [c for c in optional if c in header]
    missing = [c for c in columns if c not in header]
    if missing:
        raise config_error(f"{path.name}: missing column(s) {missing}")
    recs = ingest_csv(path, CsvSchema(value_columns=present, unit=""))
    out = {r.meter_id: r.series for r in recs}
    for c in columns:
        if np.isnan(out[c].values).any():
            raise config_error(f"{path.name}: column {c!r} has missing values")
    return out


def solve_options(sec: Mapping) -> SolveOptions:
    return SolveOptions(
        rel_gap=option(sec, "rel_gap", 1e-6),
        time_limit=option(sec, "time_limit", None),
        max_nodes=option(sec, "max_nodes", 1_000_000, int),
    )


# --- forecast ------------------------------------------------------------------------

def cmd_forecast(ctx: RunContext) -> None:
    sec = section(ctx.config, "forecast")
    check_keys(sec, {"meters", "labels", "weather", "horizon", "window_days", "ema_alpha",
                     "season_length", "ar_lags", "use_weather", "max_gap", "z_threshold",
                     "min_completeness"}, "forecast")
    labels = _read_labels(ctx.path(sec.get("labels"), "forecast.labels"))
    records = ingest_csv(ctx.path(sec.get("meters"), "forecast.meters"), CsvSchema(labels=labels))
    horizon = option(sec, "horizon", 24, int, "forecast.")
    alpha = option(sec, "ema_alpha", 0.3, float, "forecast.")
    season = option(sec, "season_length", 24, int, "forecast.")
    lags = option(sec, "ar_lags", 24, int, "forecast.")
    max_gap = option(sec, "max_gap", 3, int, "forecast.")
    z = option(sec, "z_threshold", 6.0, float, "forecast.")
    min_comp = option(sec, "min_completeness", 0.8, float, "forecast.")
    use_weather = bool(sec.get("use_weather", True)) and sec.get("weather") is not None
    exog = None
    first = records[0].series
    if use_weather:
        w = read_columns(ctx.path(sec["weather"], "forecast.weather"), ["temperature"])["temperature"]
        if w.start != first.start or w.resolution != first.resolution or len(w) < len(first) + horizon:
            raise config_error("forecast.weather must start with the meters and extend past them by the horizon")
        exog = {"temperature": w}
    window = default_window(first.resolution, option(sec, "window_days", 7.0, float, "forecast."))
    unlabelled = [r.meter_id for r in records if not r.labels]
    if unlabelled:
        raise config_error(f"forecast.labels: no labels for meter(s) {unlabelled}")

    kept, rejected = filter_meters(records, min_comp)
    if not kept:
        raise config_error("forecast: every meter fails the completeness filter")
    pool = lambda: [EmaModel(alpha), SeasonalNaiveModel(season), LinearArModel(lags)]  # noqa: E731
    meter_reports: dict[str, Any] = {}
    backtests: dict[str, TimeSeries] = {}
    actuals: dict[str, TimeSeries] = {}
    finals: dict[str, TimeSeries] = {}
    cleaning: dict[str, Any] = {}
    for rec in kept:
        s = rec.series
        flagged = detect_anomalies(s, z)
        vals = s.values.copy()
        vals[flagged] = np.nan
        filled, unfilled = fill_gaps(s.with_values(vals), max_gap)
        clean = _hold_edges(filled)
        if np.isnan(clean.values).any():
            rejected.append(rec)
            cleaning[rec.meter_id] = {"rejected": "gaps longer than max_gap"}
            continue
        cleaning[rec.meter_id] = {
            "anomalies": [format_timestamp(s.start + i * s.resolution) for i in flagged],
            "unfilled_runs": [[format_timestamp(s.start + i * s.resolution), n] for i, n in unfilled],
        }
        log.info("backtesting %s", rec.meter_id)
        res = backtest(pool(), clean, window, horizon, exogenous=exog)
        meter_reports[rec.meter_id] = res.to_dict()
        backtests[rec.meter_id] = res.forecast
        actuals[rec.meter_id] = res.actual
        # final forecast: members refit on all data, weighted by their trailing-window error
        models = pool()
        fc = [m.fit(clean, exog).predict(horizon) for m in models]
        errs = {name: float(np.nanmean(np.abs(f.values[-window:] - res.actual.values[-window:])))
                for name, f in res.member_forecasts.items()}
        weights = update_weights(errs)
        finals[rec.meter_id] = combine(fc, weights)
        meter_reports[rec.meter_id]["final_weights"] = weights.as_dict()

    if not finals:
        raise config_error("forecast: no meter survived cleaning")
    hierarchy = Hierarchy.from_labels({m: labels[m] for m in finals})
    level_reports: dict[str, Any] = {}
    for level in LEVELS:
        pred = aggregate_bottom_up(backtests, hierarchy, level)
        act = aggregate_bottom_up(actuals, hierarchy, level)
        level_reports[level] = {node: score_arrays(act[node].values, pred[node].values).to_dict()
                                for node in sorted(pred)}
        ctx.emit_csv(f"forecast_{level}.csv", dict(sorted(aggregate_bottom_up(finals, hierarchy, level).items())))
    ctx.emit_json("forecast_report.json", {
        "meters": meter_reports,
        "levels": level_reports,
        "cleaning": cleaning,
        "rejected": sorted({r.meter_id for r in rejected}),
        "horizon": horizon,
        "window": window,
    })


def _read_labels(path: Path) -> dict[str, dict[str, str]]:
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    need = {"meter", "contract", "sector", "district"}
    if not rows or not need <= set(rows[0]):
        raise config_error(f"{path.name}: label file needs columns {sorted(need)}")
    return {r["meter"]: {k: r[k] for k in ("contract", "sector", "district")} for r in rows}


def _hold_edges(s: TimeSeries) -> TimeSeries:
    """Hold the first/last observed value over missing runs at the series ends."""
    v = s.values.copy()
    ok = np.flatnonzero(~np.isnan(v))
    if len(ok):
        v[: ok[0]] = v[ok[0]]
        v[ok[-1] + 1:] = v[ok[-1]]
    return s.with_values(v)


# --- building commands ----------------------------------------------------------------

BUILDING_COLUMNS = ["T_e", "I_s", "C_energy", "C_carbon", "T_target", "occupied"]


@dataclass(frozen=True)
class ThermostatConfig:
    setpoint: float = 21.0
    deadband: float = 1.0
    start_hour: float = 6.0
    end_hour: float = 18.0
    weekdays_only: bool = True


def load_building(ctx: RunContext) -> tuple[thermal.BuildingScenario, ThermostatConfig]:
    sec = section(ctx.config, "building")
    check_keys(sec, {"inputs", "params", "hvac", "comfort", "T_i0", "thermostat"}, "building")
    cols = read_columns(ctx.path(sec.get("inputs"), "building.inputs"), BUILDING_COLUMNS, ("allowed",))
    inputs = thermal.ScenarioInputs(cols["T_e"], cols["I_s"], cols["C_energy"], cols["C_carbon"])
    params = build(thermal.RcModelParams, sec.get("params"), "building.params")
    allowed = tuple(cols["allowed"].values > 0.5) if "allowed" in cols else None
    hvac = build(thermal.HvacSpec, sec.get("hvac"), "building.hvac", allowed=allowed)
    comfort_raw = dict(sec.get("comfort") or {})
    check_keys(comfort_raw, {"band"}, "building.comfort")
    comfort = thermal.ComfortSpec(cols["T_target"], tuple(cols["occupied"].values > 0.5),
                                  option(comfort_raw, "band", 1.0, float, "building.comfort."))
    T_i0 = option(sec, "T_i0", None, float, "building.")
    if T_i0 is None:
        raise config_error("building.T_i0 is required")
    thermostat = build(ThermostatConfig, sec.get("thermostat"), "building.thermostat")
    return thermal.BuildingScenario(params, hvac, comfort, inputs, T_i0), thermostat


def thermostat_run(sc: thermal.BuildingScenario, cfg: ThermostatConfig) -> thermal.BuildingSchedule:
    like = sc.inputs.T_e
    hod = hourly_index(like)
    active = (hod >= cfg.start_hour) & (hod < cfg.end_hour)
    if cfg.weekdays_only:
        active &= weekday_index(like) < 5
    if sc.hvac.allowed is not None:
        active &= np.asarray(sc.hvac.allowed, dtype=bool)
    policy = thermal.ThermostatPolicy(np.full(len(like), cfg.setpoint), sc.hvac.q_max, active, cfg.deadband)
    return thermal.simulate(sc.params, policy, sc.inputs, sc.T_i0, hvac=sc.hvac, comfort=sc.comfort)


def schedule_series(s: thermal.BuildingSchedule, comfort: thermal.ComfortSpec) -> dict[str, TimeSeries]:
    n = len(s.Q_HVAC)
    out = {"Q_HVAC": s.Q_HVAC, "T_i": s.T_i, "T_target": comfort.target.slice(0, n)}
    if s.Q_cool is not None:
        out["Q_cool"] = s.Q_cool
    return out


def cmd_fit_building(ctx: RunContext) -> None:
    sec = section(ctx.config, "fit_building")
    check_keys(sec, {"history"}, "fit_building")
    cols = read_columns(ctx.path(sec.get("history"), "fit_building.history"), ["T_i", "T_e", "I_s", "Q_HVAC"])
    params, report = thermal.fit_parameters(cols["T_i"], cols["T_e"], cols["I_s"], cols["Q_HVAC"])
    ctx.emit_json("fit_report.json", {
        "params": {"R": params.R, "C": params.C, "p": params.p, "time_constant_h": params.time_constant},
        "one_step_accuracy": report.to_dict(),
        "steps": len(cols["T_i"]),
    })


def cmd_mpc(ctx: RunContext) -> None:
    sc, thermo = load_building(ctx)
    sec = section(ctx.config, "mpc")
    check_keys(sec, {"weights", "horizon", "total_steps", "plant", "measurement_noise", "feedback",
                     "process_var", "solver"}, "mpc")
    weights = build(thermal.ObjectiveWeights, sec.get("weights"), "mpc.weights")
    total = option(sec, "total_steps", len(sc.inputs), int, "mpc.")
    horizon = option(sec, "horizon", 24, int, "mpc.")
    if not 1 <= horizon <= total <= len(sc.inputs):
        raise config_error("mpc: need 1 <= horizon <= total_steps <= input length")
    plant = build(thermal.RcModelParams, sec["plant"], "mpc.plant") if sec.get("plant") else sc.params
    opts = solve_options(section(sec, "solver", required=False))
    inputs = sc.inputs.slice(0, total)
    comfort = sc.comfort.slice(0, total)
    baseline = thermostat_run(thermal.BuildingScenario(plant, sc.hvac, comfort, inputs, sc.T_i0), thermo)
    open_loop = thermal.optimise_horizon(sc.params, sc.hvac, comfort, weights, inputs, sc.T_i0, opts)
    closed = thermal.rolling_mpc(
        plant, sc.params, sc.hvac, sc.comfort, weights, sc.inputs, sc.T_i0, horizon, total,
        measurement_noise=option(sec, "measurement_noise", 0.0, float, "mpc."),
        feedback=bool(sec.get("feedback", True)),
        process_var=option(sec, "process_var", 0.01, float, "mpc."),
        seed=ctx.seed, opts=opts,
    )
    saving = None if baseline.cost == 0 else 100.0 * (baseline.cost - closed.cost) / baseline.cost
    ctx.emit_json("mpc_summary.json", {
        "baseline": baseline.summary(),
        "open_loop": open_loop.summary(),
        "closed_loop": closed.summary(),
        "closed_loop_saving_vs_baseline_pct": saving,
        "weights": dict(zip(("w_cost", "w_carbon", "w_comfort"), weights.as_tuple())),
        "horizon": horizon,
        "total_steps": total,
    })
    ctx.emit_csv("schedule_baseline.csv", schedule_series(baseline, comfort))
    ctx.emit_csv("schedule_open_loop.csv", schedule_series(open_loop, comfort))
    ctx.emit_csv("schedule_closed_loop.csv", schedule_series(closed, comfort))


def cmd_pareto(ctx: RunContext) -> None:
    sc, thermo = load_building(ctx)
    sec = section(ctx.config, "pareto", required=False)
    check_keys(sec, {"grid", "solver"}, "pareto")
    grid = thermal.default_weight_grid()
    if sec.get("grid"):
        g = section(sec, "grid")
        check_keys(g, {"w_cost", "w_carbon", "w_comfort"}, "pareto.grid")
        try:
            grid = [thermal.ObjectiveWeights(float(a), float(b), float(c))
                    for a in g.get("w_cost", [1.0]) for b in g.get("w_carbon", [0.0])
                    for c in g.get("w_comfort", [1.0])]
        except (TypeError, ValueError) as exc:
            raise config_error(f"pareto.grid: {exc}") from None
    opts = solve_options(section(sec, "solver", required=False))
    result = thermal.pareto_sweep(grid, sc, opts)
    base = thermostat_run(sc, thermo)
    points = [{"w_cost": p.weights.w_cost, "w_carbon": p.weights.w_carbon, "w_comfort": p.weights.w_comfort,
               "cost": p.cost, "carbon": p.carbon, "comfort": p.comfort} for p in result.points]
    front = [dict(points[i], index=i) for i in result.front]
    beats = [i for i, p in enumerate(result.points)
             if p.cost <= base.cost and p.comfort >= base.comfort_criterion]
    ctx.emit_json("pareto_points.json", points)
    ctx.emit_json("pareto_front.json", front)
    ctx.emit_json("pareto_summary.json", {
        "baseline": base.summary(),
        "points_beating_baseline": beats,
        "best_saving_pct_at_equal_or_better_comfort": max(
            (100.0 * (base.cost - result.points[i].cost) / base.cost for i in beats), default=None),
        "front_size": len(front),
        "grid_size": len(points),
    })
    ctx.emit_rows("pareto_points.csv", ["w_cost", "w_carbon", "w_comfort", "cost", "carbon", "comfort", "on_front"],
                  [[p["w_cost"], p["w_carbon"], p["w_comfort"], p["cost"], p["carbon"], p["comfort"],
                    int(i in result.front)] for i, p in enumerate(points)])


# --- CHP ---------------------------------------------------------------------------------

def cmd_chp(ctx: RunContext) -> None:
    sec = section(ctx.config, "chp")
    check_keys(sec, {"inputs", "chp", "boiler", "store", "costs", "rule", "solver"}, "chp")
    cols = read_columns(ctx.path(sec.get("inputs"), "chp.inputs"),
                        ["E_demand", "Q_demand", "P_gas", "P_import", "P_export"])
    assets = chp.SiteAssets(
        build(chp.ChpSpec, sec.get("chp"), "chp.chp"),
        build(chp.BoilerSpec, sec.get("boiler"), "chp.boiler"),
        build(chp.ThermalStoreSpec, sec["store"], "chp.store") if sec.get("store") else chp.NO_STORE,
    )
    costs = section(sec, "costs", required=False)
    check_keys(costs, {"R_max", "import_pref", "chp_pref", "boiler_pref", "restart_cost", "initial_on"}, "chp.costs")
    try:
        scenario = chp.NetworkScenario(cols["E_demand"], cols["Q_demand"], cols["P_gas"], cols["P_import"],
                                       cols["P_export"], **costs)
    except (TypeError, ValueError) as exc:
        raise config_error(f"chp.costs: {exc}") from None
    rule = build(chp.WindowRule, sec.get("rule"), "chp.rule")
    opts = solve_options(section(sec, "solver", required=False))
    baseline = chp.baseline_schedule(scenario, assets, rule)
    optimised = chp.optimise(scenario, assets, opts)
    cmp = chp.compare_costs(baseline.real_cost, optimised.real_cost)
    ctx.emit_json("chp_report.json", {
        "baseline": {"costs": baseline.costs, "restarts_per_day": baseline.restarts_per_day,
                     "within_restart_cap": chp.within_restart_cap(baseline, scenario)},
        "optimised": {"costs": optimised.costs, "restarts_per_day": optimised.restarts_per_day,
                      "status": optimised.status},
        "comparison": cmp.to_dict(),
    })
    like = scenario.E_demand
    for name, s in (("baseline", baseline), ("optimised", optimised)):
        ctx.emit_csv(f"chp_{name}.csv", {k: like.with_values(v, "") for k, v in s.columns().items()})


# --- EMS ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class TariffConfig:
    base_price: float = 0.15
    peak_multiplier: float = 3.0
    export_price: float = 0.05
    w_carbon: float = 0.0


def cmd_ems(ctx: RunContext) -> None:
    sec = section(ctx.config, "ems")
    check_keys(sec, {"inputs", "pv", "battery", "tariff", "tariffs", "peak_threshold", "twin", "solver"}, "ems")
    cols = read_columns(ctx.path(sec.get("inputs"), "ems.inputs"),
                        ["irradiance", "ambient", "load", "carbon"], ("measured_pv",))
    pv_spec = build(ems.PvSpec, sec.get("pv"), "ems.pv")
    battery = build(ems.BatterySpec, sec.get("battery"), "ems.battery")
    tcfg = build(TariffConfig, sec.get("tariff"), "ems.tariff")
    try:
        tariffs = ems.tariff_scenarios(tcfg.base_price, tcfg.peak_multiplier, tcfg.export_price,
                                       cols["carbon"], tcfg.w_carbon)
    except ValueError as exc:
        raise config_error(f"ems.tariff: {exc}") from None
    wanted = sec.get("tariffs") or list(tariffs)
    bad = [t for t in wanted if t not in tariffs]
    if bad:
        raise config_error(f"ems.tariffs: unknown tariff(s) {bad}; choose from {sorted(tariffs)}")
    threshold = option(sec, "peak_threshold", None, float, "ems.")
    opts = solve_options(section(sec, "solver", required=False))
    pv = ems.simulate_pv(cols["irradiance"], cols["ambient"], pv_spec)
    load = cols["load"]
    report: dict[str, Any] = {"tariffs": {}}
    for name in wanted:
        tariff = tariffs[name]
        runs = {
            "baseline": ems.baseline_dispatch(pv, load, battery, tariff),
            "self_consumption": ems.optimise_self_consumption(pv, load, battery, tariff, threshold, opts),
            "cost": ems.optimise_cost(pv, load, battery, tariff, threshold, opts),
        }
        base_cost = runs["baseline"].cost
        entry = {}
        for strat, r in runs.items():
            summary = r.summary()
            summary["savings_vs_baseline_pct"] = (None if base_cost == 0
                                                  else 100.0 * (base_cost - r.cost) / abs(base_cost))
            entry[strat] = summary
            ctx.emit_csv(f"dispatch_{name}_{strat}.csv",
                         {k: load.with_values(v, "") for k, v in r.columns().items()})
        report["tariffs"][name] = entry
    twin_cfg = section(sec, "twin", required=False)
    check_keys(twin_cfg, {"strategy", "tariff"}, "ems.twin")
    if "measured_pv" in cols:
        strat = twin_cfg.get("strategy", "baseline")
        if strat not in ems.STRATEGIES:
            raise config_error(f"ems.twin.strategy: unknown strategy {strat!r}")
        tname = twin_cfg.get("tariff", wanted[0])
        if tname not in tariffs:
            raise config_error(f"ems.twin.tariff: unknown tariff {tname!r}")
        ev = ems.evaluate_twin(pv, cols["measured_pv"], tariffs[tname], load, battery, strat, opts)
        report["twin"] = dict(ev.to_dict(), strategy=strat, tariff=tname)
    ctx.emit_json("ems_report.json", report)


# --- dataset generator -------------------------------------------------------------------

def write_bundle(seed: int) -> dict[str, bytes]:
    """Synthetic dataset and one config per command, as ``{relative path: bytes}``."""
    files: dict[str, bytes] = {}

    def add_csv(name: str, series: Mapping[str, TimeSeries]) -> None:
        files[f"data/{name}"] = csv_text(series, "{:.9g}").encode()

    def add_cfg(name: str, cfg: dict) -> None:
        files[f"configs/{name}.yaml"] = yaml.safe_dump(cfg, sort_keys=False).encode()

    port = synthetic.meter_portfolio(seed)
    add_csv("meters.csv", port.meters)
    add_csv("weather.csv", {"temperature": port.temperature})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["meter", "contract", "sector", "district"])
    for m, tags in port.labels.items():
        w.writerow([m, tags["contract"], tags["sector"], tags["district"]])
    files["data/meter_labels.csv"] = buf.getvalue().encode()
    add_cfg("forecast", {"seed": seed, "output_dir": "../out/forecast", "forecast": {
        "meters": "../data/meters.csv", "labels": "../data/meter_labels.csv",
        "weather": "../data/weather.csv", "horizon": 24, "window_days": 7, "ema_alpha": 0.3,
        "season_length": 24, "ar_lags": 24, "use_weather": True, "max_gap": 3,
        "z_threshold": 6.0, "min_completeness": 0.8}})

    hist = synthetic.building_history(synthetic.BUILDING_PARAMS, seed)
    add_csv("building_history.csv", hist)
    add_cfg("fit_building", {"seed": seed, "output_dir": "../out/fit_building",
                             "fit_building": {"history": "../data/building_history.csv"}})

    case = synthetic.winter_week_building(seed)
    sc = case.scenario
    like = sc.inputs.T_e
    add_csv("building_week.csv", {
        "T_e": sc.inputs.T_e, "I_s": sc.inputs.I_s, "C_energy": sc.inputs.C_energy,
        "C_carbon": sc.inputs.C_carbon, "T_target": sc.comfort.target,
        "occupied": like.with_values(np.asarray(sc.comfort.occupied, float)),
        "allowed": like.with_values(np.asarray(sc.hvac.allowed, float)),
    })
    p = sc.params
    building = {"inputs": "../data/building_week.csv",
                "params": {"R": p.R, "C": p.C, "p": p.p},
                "hvac": {"q_max": sc.hvac.q_max, "cop_heat": sc.hvac.cop_heat},
                "comfort": {"band": sc.comfort.band}, "T_i0": sc.T_i0,
                "thermostat": {"setpoint": 21.0, "deadband": 1.0, "start_hour": 6.0,
                               "end_hour": 18.0, "weekdays_only": True}}
    add_cfg("mpc", {"seed": seed, "output_dir": "../out/mpc", "building": building, "mpc": {
        "weights": {"w_cost": 1.0, "w_carbon": 0.0, "w_comfort": 0.3}, "horizon": 24,
        "total_steps": len(like), "plant": {"R": p.R * 1.2, "C": p.C, "p": p.p},
        "measurement_noise": 0.1, "feedback": True}})
    add_cfg("pareto", {"seed": seed, "output_dir": "../out/pareto", "building": building, "pareto": {
        "grid": {"w_cost": [1.0], "w_carbon": [0.0, 2.0e-4, 1.0e-3],
                 "w_comfort": [0.003, 0.01, 0.03, 0.1, 0.3, 1.0]}}})

    net = synthetic.chp_scenario(seed, steps=48)
    add_csv("chp_scenario.csv", {"E_demand": net.E_demand, "Q_demand": net.Q_demand, "P_gas": net.P_gas,
                                 "P_import": net.P_import, "P_export": net.P_export})
    site = synthetic.chp_site()
    add_cfg("chp", {"seed": seed, "output_dir": "../out/chp", "chp": {
        "inputs": "../data/chp_scenario.csv",
        "chp": _asdict(site.chp), "boiler": _asdict(site.boiler), "store": _asdict(site.store),
        "costs": {"R_max": net.R_max, "import_pref": net.import_pref, "chp_pref": net.chp_pref,
                  "boiler_pref": net.boiler_pref, "restart_cost": net.restart_cost,
                  "initial_on": net.initial_on},
        "rule": {"start_hour": 7.0, "end_hour": 24.0, "load": 1.0}}})

    weather = synthetic.ems_weather(seed)
    pv_spec, battery = synthetic.ems_site()
    pv = ems.simulate_pv(weather["irradiance"], weather["ambient"], pv_spec)
    rng = np.random.default_rng(seed + 1)
    measured = pv.with_values(np.maximum(pv.values * (1.0 + rng.normal(0, 0.05, len(pv))), 0.0))
    add_csv("ems_site.csv", {"irradiance": weather["irradiance"], "ambient": weather["ambient"],
                             "load": weather["load"], "carbon": synthetic.grid_carbon(pv, seed),
                             "measured_pv": measured})
    add_cfg("ems", {"seed": seed, "output_dir": "../out/ems", "ems": {
        "inputs": "../data/ems_site.csv", "pv": _asdict(pv_spec),
        "battery": {k: v for k, v in _asdict(battery).items() if v is not None},
        "tariff": {"base_price": 0.15, "peak_multiplier": 3.0, "export_price": 0.05, "w_carbon": 0.0},
        "tariffs": ["flat", "peak_offpeak", "three_tier", "weekday_peak"],
        "twin": {"strategy": "baseline", "tariff": "peak_offpeak"}}})
    return files


def _asdict(obj: Any) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


# --- entry point ----------------------------------------------------------------------------

COMMANDS: dict[str, Callable[[RunContext], None]] = {
    "forecast": cmd_forecast,
    "fit-building": cmd_fit_building,
    "mpc": cmd_mpc,
    "pareto": cmd_pareto,
    "chp": cmd_chp,
    "ems": cmd_ems,
}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_all(out: Path, files: Mapping[str, bytes]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        target = out / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)


def run(command: str, config_path: str | None, out: str | None = None, seed: int | None = None) -> Path:
    """Execute one command; raises ``CliError`` on failure. Returns the output directory."""
    if command == "generate":
        if out is None:
            raise config_error("generate needs --out")
        files = write_bundle(0 if seed is None else seed)
        _write_all(Path(out), files)
        return Path(out)
    if command not in COMMANDS:
        raise config_error(f"unknown command {command!r}")
    if config_path is None:
        raise config_error("--config is required")
    cfg_file = Path(config_path)
    if not cfg_file.is_file():
        raise config_error(f"config file {config_path} not found")
    raw = cfg_file.read_bytes()
    try:
        cfg = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise config_error(f"config is not valid YAML: {str(exc).splitlines()[0]}") from None
    if not isinstance(cfg, dict):
        raise config_error("config must be a mapping")
    run_seed = seed if seed is not None else option(cfg, "seed", 0, int)
    if out is not None:
        out_dir = Path(out)
    elif cfg.get("output_dir"):
        out_dir = cfg_file.parent / str(cfg["output_dir"])
    else:
        raise config_error("no output directory: pass --out or set output_dir")
    ctx = RunContext(cfg, cfg_file.parent, run_seed, {}, {})
    try:
        COMMANDS[command](ctx)
    except CliError:
        raise
    except InfeasibleError as exc:
        raise CliError("E_INFEASIBLE", EXIT_INFEASIBLE, str(exc)) from None
    except SolverError as exc:
        if exc.status is Status.INFEASIBLE:
            raise CliError("E_INFEASIBLE", EXIT_INFEASIBLE, str(exc)) from None
        raise CliError("E_SOLVER_LIMIT", EXIT_LIMIT, str(exc)) from None
    except DataError as exc:
        raise config_error(f"input data: {exc}") from None
    except ValueError as exc:
        raise config_error(str(exc)) from None
    manifest = {
        "command": command,
        "version": __version__,
        "seed": run_seed,
        "config": cfg_file.name,
        "config_sha256": _sha256(raw),
        "inputs": [{"path": k, "sha256": _sha256(p.read_bytes())} for k, p in sorted(ctx.inputs.items())],
        "outputs": [{"path": k, "sha256": _sha256(v)} for k, v in sorted(ctx.outputs.items())],
    }
    files = dict(ctx.outputs)
    files["manifest.json"] = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
    _write_all(out_dir, files)
    return out_dir


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="energyopt", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=[*COMMANDS, "generate"])
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir in the config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides seed in the config)")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = run(args.command, args.config, args.out, args.seed)
    except CliError as exc:
        print(exc.code, file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return exc.status
    log.info("outputs written to %s", out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
