"""Seeded synthetic scenarios standing in for site data.

Every generator takes an explicit ``seed`` and returns plain dataclasses or
series, so two calls with the same arguments are identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .chp import NO_STORE, BoilerSpec, ChpSpec, NetworkScenario, SiteAssets, ThermalStoreSpec
from .ems import BatterySpec, PvSpec
from .forecast import Hierarchy
from .thermal import (
    BuildingScenario,
    ComfortSpec,
    HvacSpec,
    RcModelParams,
    ScenarioInputs,
    ThermostatPolicy,
    rc_step,
)
from .timeseries import TimeSeries, hourly_index

# a Monday, so weekday structure lines up with the step index
EPOCH = datetime(2024, 1, 8, tzinfo=timezone.utc)
HOUR = timedelta(hours=1)
HALF_HOUR = timedelta(minutes=30)


def _series(values, resolution: timedelta, unit: str, start: datetime = EPOCH) -> TimeSeries:
    return TimeSeries(start, resolution, np.asarray(values, float), unit)


def _hours(n: int, resolution: timedelta) -> np.ndarray:
    return np.arange(n) * (resolution / HOUR)


# --- building ------------------------------------------------------------------

BUILDING_PARAMS = RcModelParams(R=2.0, C=10.0, p=0.01)


@dataclass(frozen=True)
class BuildingCase:
    scenario: BuildingScenario
    baseline: ThermostatPolicy


def winter_week_building(seed: int = 0, days: int = 7,
                         params: RcModelParams = BUILDING_PARAMS) -> BuildingCase:
    """Hourly winter week for a small office with a gas boiler and a legacy thermostat.

    Occupied 08:00-18:00 on weekdays at 21 degC. The plant may run 04:00-19:00
    on weekdays. The legacy thermostat heats at full power from 06:00 on
    occupied days with a 1 degC deadband.
    """
    rng = np.random.default_rng(seed)
    n = 24 * days
    h = _hours(n, HOUR)
    hod = h % 24
    weekday = (h // 24) % 7 < 5
    T_e = 3.0 + 4.0 * np.sin(2 * np.pi * (hod - 9) / 24) + np.cumsum(rng.normal(0, 0.3, n))
    daylight = np.clip(np.sin(np.pi * (hod - 8) / 8), 0, None) * ((hod >= 8) & (hod <= 16))
    I_s = 250.0 * daylight * rng.uniform(0.3, 1.0, n)
    price = np.where(hod < 7, 0.05, np.where((hod >= 16) & (hod < 19), 0.09, 0.07))
    carbon = 180.0 + 60.0 * np.sin(2 * np.pi * (hod - 12) / 24) + rng.normal(0, 5, n)
    occupied = weekday & (hod >= 8) & (hod < 18)
    allowed = weekday & (hod >= 4) & (hod < 19)
    target = np.where(occupied, 21.0, 16.0)
    inputs = ScenarioInputs(
        _series(T_e, HOUR, "degC"),
        _series(I_s, HOUR, "W/m2"),
        _series(price, HOUR, "GBP/kWh"),
        _series(carbon, HOUR, "gCO2/kWh"),
    )
    hvac = HvacSpec(q_max=20.0, cop_heat=0.9, allowed=tuple(allowed))
    comfort = ComfortSpec(_series(target, HOUR, "degC"), tuple(occupied), band=1.0)
    active = weekday & (hod >= 6) & (hod < 18)
    baseline = ThermostatPolicy(np.full(n, 21.0), hvac.q_max, active, deadband=1.0)
    return BuildingCase(BuildingScenario(params, hvac, comfort, inputs, T_i0=16.0), baseline)


def building_history(params: RcModelParams, seed: int = 0, days: int = 14,
                     noise: float = 0.05, resolution: timedelta = HALF_HOUR
                     ) -> dict[str, TimeSeries]:
    """Measured history for fitting: random excitation and optional sensor noise."""
    rng = np.random.default_rng(seed)
    dt = resolution / HOUR
    n = int(round(days * 24 / dt))
    hod = _hours(n, resolution) % 24
    T_e = 5.0 + 4.0 * np.sin(2 * np.pi * (hod - 9) / 24) + np.cumsum(rng.normal(0, 0.05, n))
    I_s = np.maximum(0.0, 600.0 * np.sin(2 * np.pi * (hod - 6) / 24))
    Q = np.where((hod > 6) & (hod < 20), rng.uniform(0, 8, n), rng.uniform(0, 2, n))
    T_i = np.empty(n)
    T_i[0] = 18.0
    for k in range(n - 1):
        T_i[k + 1] = rc_step(T_i[k], T_e[k], Q[k], I_s[k], params, dt)
    if noise > 0:
        T_i = T_i + rng.normal(0, noise, n)
    return {
        "T_i": _series(T_i, resolution, "degC"),
        "T_e": _series(T_e, resolution, "degC"),
        "I_s": _series(I_s, resolution, "W/m2"),
        "Q_HVAC": _series(Q, resolution, "kW"),
    }


# --- CHP heat network ----------------------------------------------------------

def chp_site(store: bool = True) -> SiteAssets:
    return SiteAssets(
        chp=ChpSpec(elec_capacity=400.0, heat_capacity=500.0, gas_per_elec=2.5,
                    min_load_fraction=0.5, maintenance_cost_per_hour=4.0),
        boiler=BoilerSpec(heat_capacity=900.0, efficiency=0.9),
        store=ThermalStoreSpec(capacity=1200.0, min_level=100.0, max_charge_rate=400.0,
                               max_discharge_rate=400.0, initial_soe=400.0) if store else NO_STORE,
    )


def chp_scenario(seed: int = 0, steps: int = 48, resolution: timedelta = HOUR,
                 **prefs) -> NetworkScenario:
    """Site demands with a day/evening profile and a two-rate electricity tariff."""
    rng = np.random.default_rng(seed)
    hod = _hours(steps, resolution) % 24
    day = (hod >= 7) & (hod < 22)
    E = 250.0 + 200.0 * day + rng.normal(0, 30, steps)
    Q = 350.0 + 250.0 * np.exp(-((hod - 8) ** 2) / 8) + 150.0 * np.exp(-((hod - 19) ** 2) / 8) \
        + rng.normal(0, 40, steps)
    P_imp = np.where(day, 0.28, 0.12) * rng.uniform(0.9, 1.1, steps)
    P_exp = np.where(day, 0.08, 0.04) * np.ones(steps)
    P_gas = np.full(steps, 0.05) * rng.uniform(0.95, 1.05)
    kw = dict(R_max=2, import_pref=0.001, chp_pref=0.0, boiler_pref=0.0, restart_cost=5.0)
    kw.update(prefs)
    return NetworkScenario(
        _series(np.maximum(E, 0), resolution, "kW"),
        _series(np.maximum(Q, 0), resolution, "kW"),
        _series(P_gas, resolution, "GBP/kWh"),
        _series(P_imp, resolution, "GBP/kWh"),
        _series(P_exp, resolution, "GBP/kWh"),
        **kw,
    )


# --- EMS -----------------------------------------------------------------------

def ems_site() -> tuple[PvSpec, BatterySpec]:
    return (PvSpec(dc_rating=50.0, derate_coeff=0.004, ref_temp=25.0, system_efficiency=0.85),
            BatterySpec(E_cap=100.0, P_max=25.0, soc_min=10.0, soc_max=90.0,
                        eta_c=0.95, eta_d=0.95, initial_soc=50.0))


def ems_weather(seed: int = 0, days: int = 7, resolution: timedelta = HOUR,
                start: datetime = EPOCH, summer: bool = True) -> dict[str, TimeSeries]:
    """Irradiance (W/m2), ambient temperature (degC) and site load (kWh per step)."""
    rng = np.random.default_rng(seed)
    dt = resolution / HOUR
    n = int(round(days * 24 / dt))
    hod = _hours(n, resolution) % 24
    sunrise, sunset = (5.0, 21.0) if summer else (8.0, 16.0)
    peak = 850.0 if summer else 350.0
    daylen = sunset - sunrise
    shape = np.clip(np.sin(np.pi * (hod - sunrise) / daylen), 0, None) * ((hod > sunrise) & (hod < sunset))
    cloud = np.repeat(rng.uniform(0.4, 1.0, days), int(round(24 / dt)))[:n]
    irr = peak * shape * cloud * rng.uniform(0.85, 1.0, n)
    temp = (18.0 if summer else 5.0) + 6.0 * np.sin(2 * np.pi * (hod - 9) / 24) + rng.normal(0, 0.5, n)
    evening = np.exp(-((hod - 18.5) ** 2) / 4)
    morning = np.exp(-((hod - 8) ** 2) / 3)
    load_kw = 15.0 + 20.0 * evening + 10.0 * morning + rng.normal(0, 1.5, n)
    return {
        "irradiance": _series(irr, resolution, "W/m2", start),
        "ambient": _series(temp, resolution, "degC", start),
        "load": _series(np.maximum(load_kw, 0.0) * dt, resolution, "kWh", start),
    }


def grid_carbon(like: TimeSeries, seed: int = 0) -> TimeSeries:
    rng = np.random.default_rng(seed + 7919)
    hod = hourly_index(like)
    vals = 200.0 + 80.0 * np.exp(-((hod - 18) ** 2) / 6) - 60.0 * np.exp(-((hod - 13) ** 2) / 8) \
        + rng.normal(0, 5, len(like))
    return like.with_values(vals, "gCO2/kWh")


# --- forecasting -----------------------------------------------------------------

def regime_switch_series(seed: int = 0, days: int = 28, switch_day: int = 14) -> TimeSeries:
    """Hourly series: a clean daily cycle, then a trendless random-walk level.

    Repeating the last day is near-exact before the switch and poor after it;
    smoothing is the reverse.
    """
    rng = np.random.default_rng(seed)
    n = 24 * days
    k = 24 * switch_day
    h = np.arange(n)
    y = 100.0 + 30.0 * np.sin(2 * np.pi * h / 24) + rng.normal(0, 1.0, n)
    walk = 100.0 + np.cumsum(rng.normal(0, 2.0, n - k))
    y[k:] = walk + rng.normal(0, 1.0, n - k)
    return _series(y, HOUR, "kWh")


@dataclass(frozen=True)
class MeterPortfolio:
    meters: dict[str, TimeSeries]
    labels: dict[str, dict[str, str]]
    temperature: TimeSeries  # extends past the meter data by the forecast horizon

    @property
    def hierarchy(self) -> Hierarchy:
        return Hierarchy.from_labels(self.labels)


def meter_portfolio(seed: int = 0, days: int = 28, horizon: int = 24, n_meters: int = 12,
                    missing_rate: float = 0.01) -> MeterPortfolio:
    """Half-day-shifted office and residential profiles with temperature-driven heating load.

    Meters are split over contracts, sectors and districts; a few values are
    missing and one meter carries an isolated spike.
    """
    rng = np.random.default_rng(seed)
    n = 24 * days
    h = np.arange(n + horizon)
    hod = h % 24
    weekday = (h // 24) % 7 < 5
    temp = 6.0 + 4.0 * np.sin(2 * np.pi * (hod - 9) / 24) + np.cumsum(rng.normal(0, 0.15, len(h)))
    heating = np.maximum(15.0 - temp, 0.0)
    meters: dict[str, TimeSeries] = {}
    labels: dict[str, dict[str, str]] = {}
    sectors = ("office", "residential", "retail")
    for i in range(n_meters):
        sector = sectors[i % len(sectors)]
        if sector == "office":
            shape = np.where(weekday & (hod >= 8) & (hod < 18), 1.0, 0.25)
        elif sector == "residential":
            shape = 0.4 + 0.6 * np.exp(-((hod - 19) ** 2) / 6) + 0.3 * np.exp(-((hod - 7.5) ** 2) / 3)
        else:
            shape = np.where((hod >= 9) & (hod < 20), 1.0, 0.2)
        scale = rng.uniform(5.0, 20.0)
        vals = scale * shape + 0.3 * scale / 10.0 * heating + rng.normal(0, 0.05 * scale, len(h))
        vals = np.maximum(vals[:n], 0.0)
        vals[rng.random(n) < missing_rate] = np.nan
        if i == 0:
            vals[n // 2] = vals[n // 2 - 1] * 8.0 if np.isfinite(vals[n // 2 - 1]) else 100.0
        name = f"M{i + 1:03d}"
        meters[name] = _series(vals, HOUR, "kWh")
        labels[name] = {
            "contract": f"{sector[:3].upper()}{i // (2 * len(sectors)) + 1:02d}",
            "sector": sector,
            "district": "north" if sector in ("office", "retail") else "south",
        }
    return MeterPortfolio(meters, labels, _series(temp, HOUR, "degC"))
