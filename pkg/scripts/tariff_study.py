"""Dispatch savings of the three EMS strategies across tariff structures and peak spreads.

    python3 scripts/tariff_study.py --days 7 --multipliers 1 2 3 4
"""

from __future__ import annotations

import argparse

from energyopt.ems import baseline_dispatch, optimise_cost, optimise_self_consumption, simulate_pv, tariff_scenarios
from energyopt.synthetic import ems_site, ems_weather, grid_carbon


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--base-price", type=float, default=0.15)
    ap.add_argument("--export-price", type=float, default=0.05)
    ap.add_argument("--multipliers", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--winter", action="store_true", help="short winter days instead of summer")
    args = ap.parse_args()

    pv_spec, battery = ems_site()
    w = ems_weather(args.seed, args.days, summer=not args.winter)
    pv = simulate_pv(w["irradiance"], w["ambient"], pv_spec)
    load = w["load"]
    carbon = grid_carbon(pv, args.seed)
    print(f"PV {pv.values.sum():.0f} kWh, load {load.values.sum():.0f} kWh over {args.days} days")
    print(f"{'mult':>5} {'tariff':<13} {'baseline':>9} {'self-cons':>9} {'cost-opt':>9} "
          f"{'sc save%':>8} {'opt save%':>9} {'cycles':>6}")
    for mult in args.multipliers:
        for name, tariff in tariff_scenarios(args.base_price, mult, args.export_price, carbon).items():
            b = baseline_dispatch(pv, load, battery, tariff)
            s = optimise_self_consumption(pv, load, battery, tariff)
            c = optimise_cost(pv, load, battery, tariff)
            pct = lambda x: 100.0 * (b.cost - x.cost) / abs(b.cost) if b.cost else float("nan")  # noqa: E731
            print(f"{mult:5.1f} {name:<13} {b.cost:9.2f} {s.cost:9.2f} {c.cost:9.2f} "
                  f"{pct(s):8.2f} {pct(c):9.2f} {c.cycles:6.2f}")


if __name__ == "__main__":
    main()
