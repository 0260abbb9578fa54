"""Receding-horizon simulation: solve a window LP, apply its first step, roll."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .dispatch import build_lp, extract_controls, window_densities
from .dynamics import Census, project_controls, state_census, step, step_flows, transfer
from .errors import FleetError, SolverError
from .grid import FleetState, init_uniform_idle, total_vehicles
from .simplex import solve

log = logging.getLogger(__name__)

CENSUS_FIELDS = Census._fields


@dataclass
class RunLog:
    """Per-step record of one simulated day.

    Census rows describe what the fleet does during each step (after the
    step's transfers).  Energy is in kWh per step, trips in vehicles.
    """

    label: str
    fleet_size: float
    nodes: tuple
    census: np.ndarray            # (T, 5) charging, idle, discharging, transit_pax, transit_empty
    served_kwh: np.ndarray        # (T, N)
    demand_kwh: np.ndarray        # (T, N)
    trips_served: np.ndarray      # (T, N, N)
    trips_demand: np.ndarray      # (T, N, N)
    trips_empty: np.ndarray       # (T, N, N)
    charge_kwh: np.ndarray        # (T, N)
    revenue_trips: np.ndarray     # (T,)
    revenue_v2b: np.ndarray       # (T,)
    cost_g2v: np.ndarray          # (T,)
    lp_objective: np.ndarray      # (T,)
    vehicles: np.ndarray          # (T + 1,) fleet count before each step and at the end
    lp_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    @classmethod
    def empty(cls, label, fleet_size, nodes):
        N = len(nodes)
        z = np.zeros
        return cls(label, float(fleet_size), tuple(nodes), z((0, 5)), z((0, N)), z((0, N)), z((0, N, N)),
                   z((0, N, N)), z((0, N, N)), z((0, N)), z(0), z(0), z(0), z(0), np.array([float(fleet_size)]),
                   z(0, int))

    @property
    def n_steps(self):
        return self.census.shape[0]

    @property
    def revenue_total(self) -> np.ndarray:
        return self.revenue_trips + self.revenue_v2b - self.cost_g2v

    def totals(self) -> dict:
        return {
            "trips": float(self.revenue_trips.sum()),
            "v2b": float(self.revenue_v2b.sum()),
            "g2v": float(self.cost_g2v.sum()),
            "total": float(self.revenue_total.sum()),
            "served_kwh": float(self.served_kwh.sum()),
            "trips_served": float(self.trips_served.sum()),
            "charge_kwh": float(self.charge_kwh.sum()),
        }

    def max_conservation_drift(self) -> float:
        v = self.vehicles
        return float(np.abs(v - v[0]).max() / max(abs(v[0]), 1e-300)) if v.size else 0.0

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = val.tolist() if isinstance(val, np.ndarray) else (list(val) if f.name == "nodes" else val)
        return out

    @classmethod
    def from_dict(cls, d) -> "RunLog":
        N = len(d["nodes"])
        shapes = {"census": (-1, 5), "served_kwh": (-1, N), "demand_kwh": (-1, N), "charge_kwh": (-1, N),
                  "trips_served": (-1, N, N), "trips_demand": (-1, N, N), "trips_empty": (-1, N, N)}
        kw = {}
        for f in fields(cls):
            val = d[f.name]
            if f.name in ("label",):
                kw[f.name] = val
            elif f.name == "fleet_size":
                kw[f.name] = float(val)
            elif f.name == "nodes":
                kw[f.name] = tuple(val)
            elif f.name == "lp_iterations":
                kw[f.name] = np.asarray(val, int)
            else:
                a = np.asarray(val, float)
                kw[f.name] = a.reshape(shapes[f.name]) if f.name in shapes else a
        return cls(**kw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text) -> "RunLog":
        return cls.from_dict(json.loads(text))


def initial_state(scenario) -> FleetState:
    return init_uniform_idle(scenario.fleet_size, scenario.grid, scenario.nodes, scenario.initial_weights)


def _check_consistency(x, dlp, nxt: FleetState, t: int, rtol: float = 1e-6):
    """The LP's step-1 densities must equal what the simulator produced."""
    if dlp.index.horizon < 2:
        return
    for name, lp_val, sim_val in zip("uvw", window_densities(x, dlp.index, 1), (nxt.u, nxt.v, nxt.w)):
        scale = max(1.0, np.abs(sim_val).max(), np.abs(lp_val).max())
        err = np.abs(lp_val - sim_val).max() / scale
        if err > rtol:
            raise SolverError(f"LP and simulator disagree on {name} after step {t} (rel. error {err:.2e})",
                              step=t, diagnostics={"density": name, "relative_error": float(err)})


def run(scenario, state0: FleetState | None = None, *, progress=None, check_consistency: bool = True,
        solver_options: dict | None = None) -> RunLog:
    """Simulate ``scenario.grid.n_sim_steps`` steps under receding-horizon control."""
    grid, rates, od = scenario.grid, scenario.rates, scenario.od
    rates.check_cfl(grid)
    state = initial_state(scenario) if state0 is None else state0
    T, N = grid.n_sim_steps, len(scenario.nodes)
    opts = solver_options or {}

    census = np.zeros((T, 5))
    served_kwh, demand_kwh, charge_kwh = np.zeros((T, N)), np.zeros((T, N)), np.zeros((T, N))
    trips_served, trips_demand, trips_empty = np.zeros((T, N, N)), np.zeros((T, N, N)), np.zeros((T, N, N))
    lp_obj, iters = np.zeros(T), np.zeros(T, int)
    vehicles = np.zeros(T + 1)
    vehicles[0] = total_vehicles(state, grid)

    rho = np.asarray(scenario.prices.rho_dis, float)
    fare = scenario.fare_coefficient
    C = scenario.prices.grid_price
    D_dis, D_mob = scenario.demand.D_dis, scenario.demand.D_mob

    for t in range(T):
        abs_t = state.step
        dlp = build_lp(state, scenario, abs_t, grid, rates)
        sol = solve(dlp.problem, **opts)
        if not sol.optimal:
            raise SolverError(f"window LP at step {abs_t} ended with status {sol.status}", step=abs_t,
                              diagnostics=dict(sol.diagnostics, status=sol.status))
        ctrl = extract_controls(sol.x, dlp.index, 0)
        try:
            ctrl = project_controls(state, ctrl, grid, od)
            flows = step_flows(state, ctrl, rates, grid, od)
            census[t] = state_census(transfer(state, ctrl, grid, od), grid)
            nxt = step(state, ctrl, rates, grid, od)
        except FleetError as exc:
            raise SolverError(f"controls from step {abs_t} rejected by the simulator: {exc}", step=abs_t,
                              diagnostics=dict(sol.diagnostics)) from exc
        if check_consistency:
            _check_consistency(sol.x, dlp, nxt, abs_t)

        served_kwh[t], charge_kwh[t] = flows.discharge_kwh, flows.charge_kwh
        trips_served[t], trips_empty[t] = flows.trips_pax, flows.trips_empty
        demand_kwh[t] = D_dis[:, abs_t]
        trips_demand[t] = D_mob[:, :, abs_t]
        lp_obj[t] = sol.objective
        iters[t] = sol.iterations
        state = nxt
        vehicles[t + 1] = total_vehicles(state, grid)
        if progress is not None:
            progress(t, T)
        log.debug("step %d: lp objective %.2f in %d pivots", abs_t, sol.objective, sol.iterations)

    revenue_v2b = served_kwh @ rho
    revenue_trips = (trips_served * fare[None]).sum(axis=(1, 2))
    cost_g2v = C * charge_kwh.sum(axis=1)
    return RunLog(scenario.label, float(scenario.fleet_size), tuple(scenario.nodes), census, served_kwh,
                  demand_kwh, trips_served, trips_demand, trips_empty, charge_kwh, revenue_trips, revenue_v2b,
                  cost_g2v, lp_obj, vehicles, iters)


def _run_sized(args):
    scenario, size, opts = args
    return run(scenario.with_fleet_size(size), solver_options=opts)


def sweep(scenario, fleet_sizes, jobs: int = 1, solver_options: dict | None = None) -> list:
    """One independent run per fleet size, returned in the order given."""
    sizes = list(fleet_sizes)
    if not sizes:
        raise ValueError("fleet_sizes must be nonempty")
    work = [(scenario, s, solver_options) for s in sizes]
    if jobs <= 1 or len(sizes) == 1:
        return [_run_sized(w) for w in work]
    with ProcessPoolExecutor(max_workers=min(jobs, len(sizes))) as ex:
        return list(ex.map(_run_sized, work))
