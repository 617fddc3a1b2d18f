"""Weight sweep on the synthetic winter-week building against its legacy thermostat.

    python3 scripts/pareto_study.py --seed 0 --out out/pareto_study.csv
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

from energyopt.synthetic import winter_week_building
from energyopt.thermal import default_weight_grid, pareto_sweep, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--out", type=Path, help="optional CSV of every grid point")
    args = ap.parse_args()

    case = winter_week_building(args.seed, args.days)
    sc = case.scenario
    base = simulate(sc.params, case.baseline, sc.inputs, sc.T_i0, hvac=sc.hvac, comfort=sc.comfort)
    grid = default_weight_grid()
    res = pareto_sweep(grid, sc)

    print(f"thermostat: cost {base.cost:.3f} GBP, carbon {base.carbon / 1e3:.1f} kg, "
          f"comfort {base.comfort_criterion:.3f}")
    print(f"{'w_carbon':>9} {'w_comfort':>9} {'cost':>8} {'saving%':>8} {'carbon kg':>9} {'comfort':>8}  front beats")
    rows = []
    for i, (w, p) in enumerate(zip(grid, res.points)):
        saving = 100.0 * (base.cost - p.cost) / base.cost
        beats = p.cost <= base.cost and p.comfort >= base.comfort_criterion
        on_front = i in res.front
        print(f"{w.w_carbon:9.1e} {w.w_comfort:9.3f} {p.cost:8.3f} {saving:8.2f} {p.carbon / 1e3:9.1f} "
              f"{p.comfort:8.3f}  {'*' if on_front else ' ':>5} {'yes' if beats else '':>5}")
        rows.append([w.w_cost, w.w_carbon, w.w_comfort, p.cost, p.carbon, p.comfort, int(on_front), int(beats)])
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["w_cost", "w_carbon", "w_comfort", "cost", "carbon", "comfort", "on_front",
                          "beats_thermostat"])
            out.writerows(rows)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
