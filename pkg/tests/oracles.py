"""Independent reference computations used by the tests.

Nothing here imports the LP builder or the simplex; the dispatch oracle
does its own bookkeeping in whole-vehicle units on a shift-exact grid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# ---------------------------------------------------------------------------
# LP vertex enumeration
# ---------------------------------------------------------------------------


def enumerate_vertices(c, A, sense, rhs, lb, ub, tol=1e-9, rows_bound_region=False):
    """Maximise c@x over a bounded polytope by visiting every basic point.

    Equalities (redundant ones included) are eliminated first by writing
    x = x0 + Z y with Z spanning their null space; a vertex is then any
    feasible point where dim(y) linearly independent inequalities are tight.
    All bounds must be finite unless ``rows_bound_region`` is set, in which
    case infinite bounds are dropped and the caller vouches that the rows
    alone keep the feasible set bounded.  Returns ("optimal", value, x) or
    ("infeasible", None, None).
    """
    c, A, rhs, lb, ub = (np.asarray(a, float) for a in (c, A, rhs, lb, ub))
    n = c.size
    A = A.reshape(-1, n)
    if not rows_bound_region and not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
        raise ValueError("vertex enumeration needs finite bounds")
    sense = np.asarray(sense)
    eq = sense == "="
    E, e = A[eq], rhs[eq]
    # inequalities as G @ x <= h, bounds included
    fu, fl = np.isfinite(ub), np.isfinite(lb)
    G = np.vstack([A[sense == "<="], -A[sense == ">="], np.eye(n)[fu], -np.eye(n)[fl]])
    h = np.concatenate([rhs[sense == "<="], -rhs[sense == ">="], ub[fu], -lb[fl]])
    if E.shape[0]:
        x0 = np.linalg.lstsq(E, e, rcond=None)[0]
        if np.abs(E @ x0 - e).max() > tol * (1.0 + np.abs(e).max()):
            return "infeasible", None, None
        _, sv, vt = np.linalg.svd(E)
        rank = int((sv > 1e-10 * max(1.0, sv.max())).sum())
        Z = vt[rank:].T
    else:
        x0, Z = np.zeros(n), np.eye(n)
    d = Z.shape[1]
    GZ, hr = G @ Z, h - G @ x0
    scale = 1.0 + np.abs(h)
    best, best_x = None, None

    def consider(x):
        nonlocal best, best_x
        if np.all(G @ x - h <= tol * scale):
            v = float(c @ x)
            if best is None or v > best:
                best, best_x = v, x

    if d == 0:
        consider(x0)
    else:
        combos = itertools.combinations(range(G.shape[0]), d)
        while True:
            chunk = list(itertools.islice(combos, 4096))
            if not chunk:
                break
            rows = np.array(chunk, dtype=int)
            M = GZ[rows]
            ok = np.abs(np.linalg.det(M)) > 1e-10
            if not ok.any():
                continue
            ys = np.linalg.solve(M[ok], hr[rows[ok]][..., None])[..., 0]
            for y in ys:
                consider(x0 + Z @ y)
    if best is None:
        return "infeasible", None, None
    return "optimal", best, best_x


# ---------------------------------------------------------------------------
# dispatch lattice oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TinyInstance:
    """A 1-2 node, 3-point SOE problem on a grid where advection is an exact shift.

    Counts are whole vehicles.  ``pools[i][k]`` is (charging, idle,
    discharging) at node i, SOE point k.  ``trip_bins[i][j]`` is the SOE
    drop of a trip (1 or 2 points); every trip takes one step.
    """

    pools: tuple            # ((u, v, w) per bin) per node
    trip_bins: tuple        # (N, N)
    rho: tuple              # $/kWh per node
    fare: tuple             # $ per trip, (N, N)
    grid_price: float
    kwh_per_vehicle: float  # energy through one charger/discharger in one step
    dis_cap: tuple          # (steps, N) kWh
    mob_cap: tuple          # (steps, N, N) trips

    @property
    def n_nodes(self):
        return len(self.pools)


def _compositions(total_units, n_parts):
    """All ways to write total_units as an ordered sum of n_parts nonnegative ints."""
    if n_parts == 1:
        yield (total_units,)
        return
    for first in range(total_units + 1):
        for rest in _compositions(total_units - first, n_parts - 1):
            yield (first,) + rest


def _node_options(inst: TinyInstance, node, pools, t, units):
    """Feasible allocations at one node and step, as (reward, landing counts per (dest, bin), own next pools).

    ``pools`` is a tuple of per-bin vehicle counts in lattice units.
    Categories per bin: idle, charge (not top), discharge (not bottom),
    and per destination a passenger and an empty departure (if the bin
    holds enough energy).
    """
    N, K = inst.n_nodes, len(pools)
    e = inst.kwh_per_vehicle
    per_bin = []
    for k in range(K):
        cats = ["idle"]
        if k < K - 1:
            cats.append("charge")
        if k > 0:
            cats.append("discharge")
        for j in range(N):
            if k >= inst.trip_bins[node][j]:
                cats += [("pax", j), ("emp", j)]
        per_bin.append([(cats, comp) for comp in _compositions(pools[k], len(cats))])
    # allocations leading to the same landing pattern and next pools are interchangeable
    # for the future, so only the best immediate reward among them is kept
    best: dict = {}
    for choice in itertools.product(*per_bin):
        dis = chg = 0
        pax = [0] * N
        own_next = [0] * K
        land = {}
        for k, (cats, comp) in enumerate(choice):
            for cat, cnt in zip(cats, comp):
                if cnt == 0:
                    continue
                if cat == "idle":
                    own_next[k] += cnt
                elif cat == "charge":
                    chg += cnt
                    own_next[k + 1] += cnt
                elif cat == "discharge":
                    dis += cnt
                    own_next[k - 1] += cnt
                else:
                    kind, j = cat
                    if kind == "pax":
                        pax[j] += cnt
                    key = (j, k - inst.trip_bins[node][j])
                    land[key] = land.get(key, 0) + cnt
        if dis * e / units > inst.dis_cap[t][node] + 1e-9:
            continue
        if any(pax[j] / units > inst.mob_cap[t][node][j] + 1e-9 for j in range(N)):
            continue
        reward = (inst.rho[node] * e * dis + sum(inst.fare[node][j] * pax[j] for j in range(N))
                  - inst.grid_price * e * chg) / units
        key = (tuple(sorted(land.items())), tuple(own_next))
        if key not in best or reward > best[key]:
            best[key] = reward
    return [(r, dict(land), own) for (land, own), r in best.items()]


def lattice_optimum(inst: TinyInstance, units: int) -> float:
    """Best two-step revenue over allocations in multiples of 1/units vehicle."""
    N = inst.n_nodes
    K = len(inst.pools[0])
    pools0 = tuple(tuple(units * int(round(sum(p))) for p in node) for node in inst.pools)

    @lru_cache(maxsize=None)
    def last_step_value(node, pools):
        return max(r for r, _, _ in _node_options(inst, node, pools, 1, units))

    opts = [_node_options(inst, i, pools0[i], 0, units) for i in range(N)]
    best = -np.inf
    for combo in itertools.product(*opts):
        nxt = [list(own) for _, _, own in combo]
        for _, land, _ in combo:
            for (j, k), cnt in land.items():
                nxt[j][k] += cnt
        val = sum(r for r, _, _ in combo)
        val += sum(last_step_value(j, tuple(nxt[j])) for j in range(N))
        best = max(best, val)
    return float(best)


def refined_lattice_optimum(inst: TinyInstance, max_units: int = 4, rtol: float = 1e-9):
    """Halve the lattice until the optimum stops moving; returns (value, units, history)."""
    history = []
    units = 1
    while True:
        v = lattice_optimum(inst, units)
        history.append((units, v))
        if len(history) >= 2 and abs(history[-1][1] - history[-2][1]) <= rtol * max(1.0, abs(v)):
            return v, units, history
        if units >= max_units:
            return v, units, history
        units *= 2
