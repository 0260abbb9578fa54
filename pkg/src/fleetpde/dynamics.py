"""Forward simulation of the charging / idle / discharging curves.

One step has two stages.  First the controls move vehicles between curves
at fixed SOE (idle <-> charging, idle <-> discharging, idle -> road); vehicles
sitting at x=1 on the charging curve and at x=0 on the discharging curve are
returned to idle unconditionally.  Then the charging and discharging curves
are advected one time step with the first-order upwind scheme, and trips
due at the next step land on their destination's idle curve.

The post-transfer densities are what the fleet is *doing* during the step:
revenue, charging cost and the activity census are all evaluated on them.
The LP in :mod:`fleetpde.dispatch` uses exactly the same stencil.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DimensionError, InfeasibleControlError
from .grid import FleetState, SoeGrid, TransitEntry, clamp_floor, merge_transit


@dataclass(frozen=True)
class ChargeRates:
    """Per-vehicle charge/discharge power and the SOE advection speeds."""

    power_kw: float = 7.0
    e_max_kwh: float = 10.0
    eta: float = 0.86

    def __post_init__(self):
        if self.power_kw <= 0 or self.e_max_kwh <= 0 or not 0 < self.eta <= 1:
            raise ConfigurationError(f"invalid charge rates {self}")

    @property
    def q_c(self) -> float:
        """SOE per minute while charging."""
        return self.power_kw / self.e_max_kwh * self.eta / 60.0

    @property
    def q_d(self) -> float:
        """SOE per minute while discharging (negative)."""
        return -self.power_kw / self.e_max_kwh / 60.0

    def courant(self, grid: SoeGrid):
        """(charging, discharging) Courant numbers |q| dt / dx."""
        return self.q_c * grid.dt_minutes / grid.dx, -self.q_d * grid.dt_minutes / grid.dx

    def check_cfl(self, grid: SoeGrid):
        cc, cd = self.courant(grid)
        if max(cc, cd) > 1.0 + 1e-12:
            raise ConfigurationError(
                f"CFL violated: |q| dt/dx = {max(cc, cd):.4f} > 1 (dt={grid.dt_minutes} min, dx={grid.dx})"
            )
        return self

    def soe_gain_per_step(self, grid: SoeGrid) -> float:
        return self.q_c * grid.dt_minutes

    def kwh_per_vehicle_step(self, grid: SoeGrid) -> float:
        """Energy one vehicle moves through its charger in one step (grid side)."""
        return self.power_kw * grid.dt_minutes / 60.0


@dataclass(frozen=True)
class ControlVector:
    """Flow rates for one step, in vehicles per unit SOE per minute.

    ``sic``/``sid`` have shape (nodes, bins); positive means idle -> charging
    (discharging).  ``pax``/``emp`` have shape (origin, destination, bins) and
    hold departures with and without passengers.
    """

    sic: np.ndarray
    sid: np.ndarray
    pax: np.ndarray
    emp: np.ndarray

    @classmethod
    def zeros(cls, n_nodes, n_bins):
        return cls(np.zeros((n_nodes, n_bins)), np.zeros((n_nodes, n_bins)),
                   np.zeros((n_nodes, n_nodes, n_bins)), np.zeros((n_nodes, n_nodes, n_bins)))

    def check_shape(self, n_nodes, n_bins):
        ok = (self.sic.shape == self.sid.shape == (n_nodes, n_bins)
              and self.pax.shape == self.emp.shape == (n_nodes, n_nodes, n_bins))
        if not ok:
            raise DimensionError(f"control shapes do not match {n_nodes} nodes x {n_bins} bins")


class Census(NamedTuple):
    charging: float
    idle: float
    discharging: float
    transit_pax: float
    transit_empty: float

    @property
    def total(self):
        return sum(self)


class StepFlows(NamedTuple):
    """Quantities delivered during one step (post-transfer)."""

    discharge_kwh: np.ndarray   # (nodes,)
    charge_kwh: np.ndarray      # (nodes,) drawn from the grid
    trips_pax: np.ndarray       # (origin, destination) vehicles departing
    trips_empty: np.ndarray


def _forced_controls(state: FleetState, ctrl: ControlVector, grid: SoeGrid):
    dt = grid.dt_minutes
    sic = np.array(ctrl.sic, dtype=float)
    sid = np.array(ctrl.sid, dtype=float)
    sic[:, -1] = -state.u[:, -1] / dt
    sid[:, 0] = -state.w[:, 0] / dt
    return sic, sid


def project_controls(state: FleetState, ctrl: ControlVector, grid: SoeGrid, od, rtol: float = 1e-6) -> ControlVector:
    """Pull an LP control back onto the flow bounds, absorbing solver round-off.

    Departures below the energy requirement and negative departures are
    zeroed, over-drawn charging/discharging curves are returned to zero, and
    an over-drawn idle bin has its outgoing flows scaled down.  Any
    correction larger than ``rtol`` times the state's largest density raises.
    """
    n, K = state.n_nodes, state.n_bins
    ctrl.check_shape(n, K)
    dt = grid.dt_minutes
    tol = rtol * max(1.0, float(max(state.u.max(initial=0), state.v.max(initial=0), state.w.max(initial=0))))

    def small(excess, what):
        if excess > tol:
            raise InfeasibleControlError(f"{what} violated by {excess:.3e} (tolerance {tol:.3e})")

    below = np.arange(K)[None, None, :] < od.delta_bins[:, :, None]
    pax, emp = np.array(ctrl.pax, float), np.array(ctrl.emp, float)
    for a, what in ((pax, "passenger departures"), (emp, "empty departures")):
        small(dt * max(0.0, -a.min(initial=0.0)), what)
        small(dt * np.abs(np.where(below, a, 0.0)).max(initial=0.0), f"{what} below energy requirement")
        a[(a < 0) | below] = 0.0
    sic, sid = np.array(ctrl.sic, float), np.array(ctrl.sid, float)
    for a, dens, what in ((sic, state.u, "charging floor"), (sid, state.w, "discharging floor")):
        short = -(dens + dt * a)
        small(short.max(initial=0.0), what)
        a[short > 0] = -dens[short > 0] / dt

    out_pos = dt * (np.maximum(sic, 0) + np.maximum(sid, 0) + pax.sum(axis=1) + emp.sum(axis=1))
    out_neg = dt * (np.minimum(sic, 0) + np.minimum(sid, 0))
    short = out_pos + out_neg - state.v
    small(short.max(initial=0.0), "idle outflow bound")
    over = short > 0
    if over.any():
        factor = np.ones((n, K))
        factor[over] = (state.v[over] - out_neg[over]) / out_pos[over]
        factor = np.clip(factor, 0.0, 1.0)
        sic = np.where(sic > 0, sic * factor, sic)
        sid = np.where(sid > 0, sid * factor, sid)
        pax = pax * factor[:, None, :]
        emp = emp * factor[:, None, :]
    return ControlVector(sic, sid, pax, emp)


def transfer(state: FleetState, ctrl: ControlVector, grid: SoeGrid, od) -> FleetState:
    """Apply the inter-curve flows at fixed SOE; returns the post-transfer state.

    The returned state carries the new departures in its transit ledger and
    keeps the same step index.
    """
    state.check_grid(grid)
    n, K = state.n_nodes, state.n_bins
    ctrl.check_shape(n, K)
    dt, dx = grid.dt_minutes, grid.dx
    sic, sid = _forced_controls(state, ctrl, grid)
    pax = clamp_floor(np.asarray(ctrl.pax, float) * dt, "passenger departure") / dt
    emp = clamp_floor(np.asarray(ctrl.emp, float) * dt, "empty departure") / dt

    bins = np.arange(K)
    too_low = bins[None, None, :] < od.delta_bins[:, :, None]
    if np.any((pax + emp)[too_low] * dt > 0):
        # tolerate LP round-off only
        if np.abs((pax + emp)[too_low]).max() * dt > 1e-9 * max(1.0, np.abs(state.v).max()):
            raise InfeasibleControlError("departure from an SOE bin below the trip's energy requirement")
        pax = np.where(too_low, 0.0, pax)
        emp = np.where(too_low, 0.0, emp)

    u = clamp_floor(state.u + dt * sic, "charging")
    w = clamp_floor(state.w + dt * sid, "discharging")
    out = dt * (sic + sid + pax.sum(axis=1) + emp.sum(axis=1))
    v = clamp_floor(state.v - out, "idle")

    new = []
    for i, o in enumerate(state.nodes):
        for j, d in enumerate(state.nodes):
            ds, db = int(od.delta_steps[i, j]), int(od.delta_bins[i, j])
            for k in range(db, K):
                for flow, flag in ((pax, True), (emp, False)):
                    cnt = flow[i, j, k] * dt * dx
                    if cnt > 0:
                        new.append(TransitEntry(o, d, state.step + ds, k - db, cnt, flag))
    return FleetState(state.nodes, u, v, w, merge_transit(list(state.in_transit) + new), state.step)


def advect(post: FleetState, grid: SoeGrid, rates: ChargeRates) -> FleetState:
    """Upwind advection of the charging/discharging curves plus landing trips."""
    rates.check_cfl(grid)
    cc, cd = rates.courant(grid)
    u, w = post.u, post.w
    u_next = (1.0 - cc) * u
    u_next[:, 1:] += cc * u[:, :-1]
    # x=1 is absorbing: charged vehicles wait there for the forced return
    u_next[:, -1] += cc * u[:, -1]
    w_next = (1.0 - cd) * w
    w_next[:, :-1] += cd * w[:, 1:]
    w_next[:, 0] += cd * w[:, 0]

    nxt = post.step + 1
    v_next = np.array(post.v)
    remaining = []
    for e in post.in_transit:
        if e.arrival_step <= nxt:
            v_next[post.node_index(e.destination), e.arrival_bin] += e.vehicle_count / grid.dx
        else:
            remaining.append(e)
    return FleetState(post.nodes, u_next, v_next, w_next, tuple(remaining), nxt)


def step(state: FleetState, ctrl: ControlVector, rates: ChargeRates, grid: SoeGrid, od) -> FleetState:
    """Advance the fleet one time step under ``ctrl``."""
    return advect(transfer(state, ctrl, grid, od), grid, rates)


def step_flows(state: FleetState, ctrl: ControlVector, rates: ChargeRates, grid: SoeGrid, od) -> StepFlows:
    post = transfer(state, ctrl, grid, od)
    e = rates.kwh_per_vehicle_step(grid)
    dt, dx = grid.dt_minutes, grid.dx
    pax = np.clip(ctrl.pax, 0, None) * dt * dx
    emp = np.clip(ctrl.emp, 0, None) * dt * dx
    below = np.arange(state.n_bins)[None, None, :] < od.delta_bins[:, :, None]
    pax = np.where(below, 0.0, pax).sum(axis=2)
    emp = np.where(below, 0.0, emp).sum(axis=2)
    return StepFlows(e * post.w.sum(axis=1) * dx, e * post.u.sum(axis=1) * dx, pax, emp)


def state_census(state: FleetState, grid: SoeGrid) -> Census:
    """Vehicle counts per activity: charging, idle, discharging, on the road."""
    state.check_grid(grid)
    dx = grid.dx
    pax = sum(e.vehicle_count for e in state.in_transit if e.with_passengers)
    emp = sum(e.vehicle_count for e in state.in_transit if not e.with_passengers)
    return Census(float(state.u.sum() * dx), float(state.v.sum() * dx), float(state.w.sum() * dx),
                  float(pax), float(emp))
