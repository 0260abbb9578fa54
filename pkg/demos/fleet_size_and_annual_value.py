"""How outage revenue scales with fleet size, and what it is worth per year.

Sweeps three fleet sizes on the extreme and moderate scenarios, then
turns the difference between one extreme day and one moderate day into
extra yearly revenue per vehicle for a range of outage-day counts.

Full days take several minutes on one core; pass --steps to shorten.
"""
import argparse

from fleetpde import annualize, load_builtin, revenue_report, sweep

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=144)
parser.add_argument("--jobs", type=int, default=1)
args = parser.parse_args()

sizes = [7500, 15000, 40000]
reports = {}
for name in ("extreme", "moderate"):
    sc = load_builtin(name).with_overrides(n_sim_steps=args.steps)
    logs = sweep(sc, sizes, jobs=args.jobs)
    reports[name] = [revenue_report(log, sc.with_fleet_size(s)) for log, s in zip(logs, sizes)]

print(f"{'fleet':>7} {'extreme total':>15} {'moderate total':>15} {'extra per vehicle-day':>22}")
for i, s in enumerate(sizes):
    ext, mod = reports["extreme"][i], reports["moderate"][i]
    print(f"{s:7,d} {ext.total:15,.0f} {mod.total:15,.0f} {(ext.total - mod.total) / s:22.2f}")

days = [0, 4, 8, 12, 16, 20]
for i, s in enumerate(sizes):
    tab = annualize(reports["extreme"][i], reports["moderate"][i], days)
    print(f"\n{s:,} vehicles: each extra outage day adds ${tab.slope_per_vehicle:,.2f} per vehicle "
          f"({tab.per_event_uplift_percent:.0f}% over a moderate day)")
    for row in tab.rows():
        print(f"  {row['extreme_days']:3d} outage days: +${row['new_revenue_per_vehicle']:8,.2f} per vehicle "
              f"per year ({row['percent_increase']:.2f}%)")
