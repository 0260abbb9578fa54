"""Build and solve a single dispatch window at the height of the outage.

A 7,500-vehicle fleet starts idle and evenly spread over the three zones.
We ask the LP what to do over the next five steps starting at 14:00 and
print where the vehicles are told to go.
"""
import numpy as np

from fleetpde import build_lp, extract_controls, init_uniform_idle, load_builtin, solve
from fleetpde.dispatch import audit_objective

scenario = load_builtin("extreme")
grid = scenario.grid
start = int(14 * 60 // grid.dt_minutes)

state = init_uniform_idle(7500, grid).with_(step=start)
dlp = build_lp(state, scenario)
print(f"window at step {start}: {dlp.problem.n_rows} rows x {dlp.problem.n_cols} columns")

sol = solve(dlp.problem)
print(f"status {sol.status} after {sol.iterations} pivots, window value ${sol.objective:,.2f}")

# the audit recomputes the value from served energy and trips, not from c
audit = audit_objective(sol.x, dlp, scenario)
print(f"audited: trips ${audit['trips']:,.2f}  V2B ${audit['v2b']:,.2f}  G2V ${audit['g2v']:,.2f}")

ctrl = extract_controls(sol.x, dlp.index, 0)
per_flow = grid.dt_minutes * grid.dx        # vehicles moved by a unit flow density in one step
print("\nfirst-step decisions (vehicles)")
print(f"{'zone':>5} {'to charge':>10} {'to discharge':>13} {'with riders':>12} {'empty':>8}")
for i, node in enumerate(scenario.nodes):
    to_charge = np.clip(ctrl.sic[i], 0, None).sum() * per_flow
    to_discharge = np.clip(ctrl.sid[i], 0, None).sum() * per_flow
    riders = ctrl.pax[i].sum() * per_flow
    empty = ctrl.emp[i].sum() * per_flow
    print(f"{node:>5} {to_charge:10.1f} {to_discharge:13.1f} {riders:12.1f} {empty:8.1f}")

dis_now = scenario.demand.D_dis[:, start]
print(f"\n{'zone':>5} {'load kWh':>10} {'served kWh':>11}")
for node, load, served in zip(scenario.nodes, dis_now, audit["served_kwh"][0]):
    print(f"{node:>5} {load:10.1f} {served:11.1f}")
