"""Horizon-window linear program for fleet dispatch.

Window step ``t`` (0 <= t < H) owns density columns ``u, v, w`` and control
columns ``sic, sid, pax, emp``.  Step-0 densities are pinned to the current
state.  Rows per step:

* flow bounds   ``u + dt*sic >= 0``, ``w + dt*sid >= 0``,
  ``dt*(sic + sid + sum_j pax + emp) <= v``
* boundary      ``u[top] + dt*sic[top] = 0``, ``w[0] + dt*sid[0] = 0``
* caps          outage kWh served <= D_dis, passenger trips <= D_mob
* state         the upwind stencil linking step t to t+1 (t < H-1)

Trip arrivals are not separate columns: a departure at (t, bin k) enters
the destination's idle equation at (t + delta_steps, k - delta_bins).
Departures whose arrival falls after the window's end state are fixed to
zero, as are departures from bins below the trip's energy requirement.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ChargeRates, ControlVector
from .errors import DimensionError, ScenarioError
from .grid import FleetState, SoeGrid
from .simplex import EQ, LE, LpProblem

DENSITY_KINDS = ("u", "v", "w")
SWITCH_KINDS = ("sic", "sid")
TRIP_KINDS = ("pax", "emp")


@dataclass(frozen=True)
class VariableIndex:
    """Column layout of a window LP.

    Every block is a contiguous ``arange`` reshaped to ``(H, N, K)`` for the
    density and switching kinds, ``(H, N, N, K)`` for trip kinds.  With
    ``explicit_arrivals`` an extra ``arr`` block (H, N, N, K) holds arrival
    flows indexed by arrival step and landing bin.
    """

    n_nodes: int
    n_bins: int
    horizon: int
    explicit_arrivals: bool = False

    def _shape(self, kind):
        H, N, K = self.horizon, self.n_nodes, self.n_bins
        return (H, N, N, K) if kind in TRIP_KINDS or kind == "arr" else (H, N, K)

    @property
    def kinds(self):
        base = DENSITY_KINDS + SWITCH_KINDS + TRIP_KINDS
        return base + ("arr",) if self.explicit_arrivals else base

    @property
    def offsets(self):
        out, pos = {}, 0
        for k in self.kinds:
            out[k] = pos
            pos += int(np.prod(self._shape(k)))
        return out

    @property
    def n_cols(self):
        return sum(int(np.prod(self._shape(k))) for k in self.kinds)

    def block(self, kind) -> np.ndarray:
        shape = self._shape(kind)
        return self.offsets[kind] + np.arange(int(np.prod(shape))).reshape(shape)

    def tag(self, col: int) -> tuple:
        """Inverse map: column number -> (kind, *indices)."""
        if not 0 <= col < self.n_cols:
            raise DimensionError(f"column {col} outside 0..{self.n_cols - 1}")
        offs = self.offsets
        for kind in reversed(self.kinds):
            if col >= offs[kind]:
                return (kind, *map(int, np.unravel_index(col - offs[kind], self._shape(kind))))
        raise AssertionError("unreachable")

    def names(self):
        out = []
        for kind in self.kinds:
            for idx in np.ndindex(*self._shape(kind)):
                out.append(kind + "_" + "_".join(map(str, idx)))
        return out


@dataclass
class DispatchLp:
    problem: LpProblem
    index: VariableIndex
    window_start: int
    row_kinds: dict


class _Rows:
    def __init__(self):
        self.r, self.c, self.v = [], [], []
        self.sense, self.rhs, self.kind = [], [], []
        self.hint = {}

    def add(self, kind, sense, rhs, terms, hint=None):
        """Add one row per element of ``rhs``; ``terms`` = [(cols, coeff), ...] broadcast to rhs."""
        rhs = np.asarray(rhs, float).ravel()
        start = len(self.rhs)
        rows = start + np.arange(rhs.size)
        for cols, coeff in terms:
            cols = np.asarray(cols)
            coeff = np.broadcast_to(np.asarray(coeff, float), cols.shape).ravel()
            cols = cols.ravel()
            if cols.size != rhs.size:
                raise DimensionError("row term does not match row count")
            self.r.append(rows)
            self.c.append(cols)
            self.v.append(coeff)
        self.sense += [sense] * rhs.size
        self.rhs += rhs.tolist()
        self.kind += [kind] * rhs.size
        if hint is not None:
            for rr, cc in zip(rows, np.asarray(hint).ravel()):
                self.hint[int(rr)] = int(cc)
        return rows


def window_demand(scenario, window_start: int, horizon: int):
    """Outage kWh (H, N) and trip demand (H, N, N) visible to the window."""
    dem = scenario.demand
    end = window_start + horizon
    if window_start < 0 or end > dem.n_steps:
        raise ScenarioError(f"demand covers {dem.n_steps} steps; window needs steps {window_start}..{end - 1}")
    dis = np.array(dem.D_dis[:, window_start:end].T)
    mob = np.moveaxis(dem.D_mob[:, :, window_start:end], 2, 0).copy()
    if scenario.visibility == "current":
        dis[1:] = 0.0
    return dis, mob


def build_lp(state0: FleetState, scenario, window_start: int | None = None, grid: SoeGrid | None = None,
             rates: ChargeRates | None = None, *, explicit_arrivals: bool = False,
             basis_hint: bool = True) -> DispatchLp:
    """Assemble the window LP starting from ``state0``."""
    grid = grid or scenario.grid
    rates = (rates or scenario.rates).check_cfl(grid)
    start = state0.step if window_start is None else window_start
    state0.check_grid(grid)
    if tuple(state0.nodes) != tuple(scenario.nodes):
        raise ScenarioError(f"state nodes {state0.nodes} differ from scenario nodes {scenario.nodes}")

    N, K, H = state0.n_nodes, grid.n_bins, grid.horizon_steps
    dt, dx = grid.dt_minutes, grid.dx
    cc, cd = rates.courant(grid)
    e = rates.kwh_per_vehicle_step(grid)
    od = scenario.od
    db, ds = np.asarray(od.delta_bins), np.asarray(od.delta_steps)
    dis, mob = window_demand(scenario, start, H)

    idx = VariableIndex(N, K, H, explicit_arrivals)
    U, V, W = idx.block("u"), idx.block("v"), idx.block("w")
    SIC, SID = idx.block("sic"), idx.block("sid")
    PAX, EMP = idx.block("pax"), idx.block("emp")
    n = idx.n_cols

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for blk in (SIC, SID):
        lb[blk] = -np.inf
    lb[U[0]] = ub[U[0]] = state0.u
    lb[V[0]] = ub[V[0]] = state0.v
    lb[W[0]] = ub[W[0]] = state0.w
    # energy feasibility and end-of-window arrivals
    t_ax = np.arange(H)[:, None, None, None]
    k_ax = np.arange(K)[None, None, None, :]
    blocked = (k_ax < db[None, :, :, None]) | (t_ax + ds[None, :, :, None] > H)
    blocked = np.broadcast_to(blocked, PAX.shape)
    ub[PAX[blocked]] = 0.0
    ub[EMP[blocked]] = 0.0

    # objective
    c = np.zeros(n)
    rho = np.asarray(scenario.prices.rho_dis, float)
    fare = scenario.fare_coefficient
    C = scenario.prices.grid_price
    c[W] += (rho * e * dx)[None, :, None]
    c[SID] += (rho * e * dx * dt)[None, :, None]
    c[U] -= C * e * dx
    c[SIC] -= C * e * dx * dt
    c[PAX] += (fare * dx * dt)[None, :, :, None]

    R = _Rows()
    for t in range(H):
        R.add("charge_floor", LE, np.zeros((N, K)), [(U[t], -1.0), (SIC[t], -dt)])
        R.add("discharge_floor", LE, np.zeros((N, K)), [(W[t], -1.0), (SID[t], -dt)])
        terms = [(V[t], -1.0), (SIC[t], dt), (SID[t], dt)]
        for j in range(N):
            terms += [(PAX[t][:, j, :], dt), (EMP[t][:, j, :], dt)]
        R.add("idle_outflow", LE, np.zeros((N, K)), terms)
        hint_u = SIC[t][:, -1] if t > 0 else None
        hint_w = SID[t][:, 0] if t > 0 else None
        R.add("full_return", EQ, np.zeros(N), [(U[t][:, -1], 1.0), (SIC[t][:, -1], dt)], hint_u)
        R.add("empty_return", EQ, np.zeros(N), [(W[t][:, 0], 1.0), (SID[t][:, 0], dt)], hint_w)
        R.add("outage_cap", LE, dis[t], [(W[t][:, k], e * dx) for k in range(K)]
              + [(SID[t][:, k], e * dx * dt) for k in range(K)])
        R.add("trip_cap", LE, mob[t], [(PAX[t][:, :, k], dx * dt) for k in range(K)])

    # pending arrivals from the ledger, as idle density per (t, node, bin)
    landed = np.zeros((H, N, K))
    for ent in state0.in_transit:
        tt = ent.arrival_step - start
        if 0 < tt < H:
            landed[tt, state0.node_index(ent.destination), ent.arrival_bin] += ent.vehicle_count / dx

    if explicit_arrivals:
        ARR = idx.block("arr")
        # arr[t, i, j, k] = vehicles/dx landing in j at (t, k) from i
        lb[ARR] = 0.0
        for t in range(H):
            for i in range(N):
                for j in range(N):
                    for k in range(K):
                        src_t, src_k = t - ds[i, j], k + db[i, j]
                        if src_t < 0 or src_k >= K:
                            ub[ARR[t, i, j, k]] = 0.0
                            continue
                        R.add("arrival_link", EQ, [0.0], [(ARR[t, i, j, k], 1.0),
                                                          (PAX[src_t, i, j, src_k], -dt),
                                                          (EMP[src_t, i, j, src_k], -dt)])

    kk = np.arange(K)
    for t in range(H - 1):
        # charging: mass moves up; top bin keeps what it has
        keep_u = np.full(K, 1.0 - cc)
        keep_u[-1] = 1.0
        terms = [(U[t + 1], 1.0), (U[t], -keep_u), (SIC[t], -dt * keep_u)]
        from_below_u = np.where(kk >= 1, kk - 1, 0)
        up = np.where(kk >= 1, cc, 0.0)
        terms += [(U[t][:, from_below_u], -up), (SIC[t][:, from_below_u], -dt * up)]
        R.add("state_charge", EQ, np.zeros((N, K)), _merge(terms), U[t + 1])

        keep_w = np.full(K, 1.0 - cd)
        keep_w[0] = 1.0
        terms = [(W[t + 1], 1.0), (W[t], -keep_w), (SID[t], -dt * keep_w)]
        from_above = np.where(kk < K - 1, kk + 1, K - 1)
        down = np.where(kk < K - 1, cd, 0.0)
        terms += [(W[t][:, from_above], -down), (SID[t][:, from_above], -dt * down)]
        R.add("state_discharge", EQ, np.zeros((N, K)), _merge(terms), W[t + 1])

        terms = [(V[t + 1], 1.0), (V[t], -1.0), (SIC[t], dt), (SID[t], dt)]
        for j in range(N):
            terms += [(PAX[t][:, j, :], dt), (EMP[t][:, j, :], dt)]
        if explicit_arrivals:
            for i in range(N):
                terms.append((ARR[t + 1][i], -1.0))
        else:
            for i in range(N):
                for j in range(N):
                    src_t = t + 1 - ds[i, j]
                    if src_t < 0:
                        continue
                    # arrivals into (j, k) come from departures at bin k + db; other nodes get zero coefficients
                    src_k = np.minimum(kk + db[i, j], K - 1)
                    coeff = np.zeros((N, K))
                    coeff[j] = np.where(kk + db[i, j] < K, -dt, 0.0)
                    for blk in (PAX, EMP):
                        terms.append((np.broadcast_to(blk[src_t, i, j, src_k], (N, K)), coeff))
        R.add("state_idle", EQ, landed[t + 1], _merge(terms), V[t + 1])

    rows = np.concatenate(R.r) if R.r else np.zeros(0, int)
    cols = np.concatenate(R.c) if R.c else np.zeros(0, int)
    vals = np.concatenate(R.v) if R.v else np.zeros(0)
    keep = vals != 0.0
    prob = LpProblem.from_triples(c, rows[keep], cols[keep], vals[keep], np.array(R.sense), np.array(R.rhs), lb, ub,
                                  basis_hint=R.hint if basis_hint else None)
    kinds: dict = {}
    for i, k in enumerate(R.kind):
        kinds.setdefault(k, []).append(i)
    return DispatchLp(prob, idx, start, {k: np.array(v) for k, v in kinds.items()})


def _merge(terms):
    """Broadcast each term's coefficients to its column array's shape."""
    out = []
    for cols, coeff in terms:
        cols = np.asarray(cols)
        out.append((cols, np.broadcast_to(np.asarray(coeff, float), cols.shape)))
    return out


def extract_controls(x: np.ndarray, index: VariableIndex, window_step: int = 0, tol: float = 1e-9) -> ControlVector:
    """Pull the controls of ``window_step`` out of a solution vector."""
    x = np.asarray(x, float)
    if x.shape != (index.n_cols,):
        raise DimensionError(f"solution has {x.shape} entries, index expects {index.n_cols}")
    if not 0 <= window_step < index.horizon:
        raise DimensionError(f"window step {window_step} outside horizon {index.horizon}")

    def grab(kind):
        a = x[index.block(kind)[window_step]].copy()
        a[np.abs(a) < tol] = 0.0
        return a

    return ControlVector(grab("sic"), grab("sid"), grab("pax"), grab("emp"))


def window_densities(x: np.ndarray, index: VariableIndex, window_step: int):
    """(u, v, w) at ``window_step`` from a solution vector."""
    return tuple(np.asarray(x)[index.block(k)[window_step]] for k in DENSITY_KINDS)


def audit_objective(x: np.ndarray, dlp: DispatchLp, scenario, grid: SoeGrid | None = None,
                    rates: ChargeRates | None = None) -> dict:
    """Recompute the window objective from served quantities (independent of ``c``)."""
    grid = grid or scenario.grid
    rates = rates or scenario.rates
    idx = dlp.index
    dt, dx = grid.dt_minutes, grid.dx
    e = rates.kwh_per_vehicle_step(grid)
    x = np.asarray(x)
    u = x[idx.block("u")] + dt * x[idx.block("sic")]
    w = x[idx.block("w")] + dt * x[idx.block("sid")]
    pax = x[idx.block("pax")]
    served_kwh = e * dx * w.sum(axis=2)                 # (H, N)
    charged_kwh = e * dx * u.sum(axis=2)
    trips = dx * dt * pax.sum(axis=3)                   # (H, N, N)
    v2b = float((served_kwh * scenario.prices.rho_dis[None, :]).sum())
    g2v = float(charged_kwh.sum() * scenario.prices.grid_price)
    fares = float((trips * scenario.fare_coefficient[None]).sum())
    return {"v2b": v2b, "g2v": g2v, "trips": fares, "total": v2b + fares - g2v,
            "served_kwh": served_kwh, "charged_kwh": charged_kwh, "trips_served": trips}


def named_problem(dlp: DispatchLp) -> LpProblem:
    """Copy of the window LP with readable column and row names (for export)."""
    row_names = [""] * dlp.problem.n_rows
    for kind, rows in dlp.row_kinds.items():
        for i, r in enumerate(rows):
            row_names[r] = f"{kind}_{i}"
    p = dlp.problem
    return LpProblem(p.c, p.A, p.sense, p.rhs, p.lb, p.ub, col_names=dlp.index.names(), row_names=row_names,
                     basis_hint=p.basis_hint)
