"""A full day of receding-horizon dispatch through a severe outage.

Runs the bundled extreme scenario with a small and a large fleet and
prints, every two hours, how each fleet splits between charging, idle,
discharging and driving.  The small fleet is pulled away from the idle
state during the outage peak; the large one mostly waits.

    python demos/outage_day.py            # both fleets over a full day, about two minutes
    python demos/outage_day.py --steps 48 # first eight hours only
"""
import argparse
import time

import numpy as np

from fleetpde import load_builtin, revenue_report, run
from fleetpde.controller import CENSUS_FIELDS

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=144)
args = parser.parse_args()

base = load_builtin("extreme").with_overrides(n_sim_steps=args.steps)
dt = base.grid.dt_minutes
every = int(120 // dt)

for fleet in (7500, 40000):
    sc = base.with_fleet_size(fleet)
    t0 = time.perf_counter()
    log = run(sc)
    rep = revenue_report(log, sc)
    print(f"\n=== {fleet:,} vehicles ({time.perf_counter() - t0:.0f} s) ===")
    print(f"{'time':>5} " + " ".join(f"{f:>13}" for f in CENSUS_FIELDS))
    for t in range(0, log.n_steps, every):
        share = log.census[t] / log.census[t].sum()
        hh, mm = divmod(int(t * dt), 60)
        print(f"{hh:02d}:{mm:02d} " + " ".join(f"{s:13.1%}" for s in share))
    print(f"trips ${rep.trips_revenue:,.0f}  V2B ${rep.v2b_revenue:,.0f}  G2V -${rep.g2v_cost:,.0f}  "
          f"total ${rep.total:,.0f} of ${rep.max_possible:,.0f} possible")
    print(f"unserved outage energy by zone (kWh): "
          + ", ".join(f"{n} {max(v, 0.0):,.0f}" for n, v in zip(rep.nodes, rep.unserved_kwh)))
    print(f"vehicle count drift over the day: {log.max_conservation_drift():.1e}")
    modal = CENSUS_FIELDS[int(np.argmax(log.census.sum(axis=0)))]
    print(f"most common state over the day: {modal}")
