"""Scenario inputs: node set, OD trip table, prices, demand profiles.

A scenario is a JSON document plus two CSV demand files living next to it::

    {
      "label": "extreme-2014-12-31",
      "synthetic_demand": true,
      "nodes": ["I", "II", "IV"],
      "fleet_size": 7500,
      "initial_weights": {"I": 0.3333333333333333, ...},
      "grid": {"dx": 0.2, "dt_minutes": 10, "horizon_steps": 5, "n_sim_steps": 144},
      "vehicle": {"power_kw": 7, "e_max_kwh": 10, "eta": 0.86},
      "options": {"fare_mode": "per_trip", "visibility": "window", "quantization": "ceil"},
      "od": [{"origin": "I", "destination": "IV", "delta_x_kwh": 0.93, "delta_t_seconds": 1000}, ...],
      "prices": {
        "grid_price": 0.25,
        "outage": [{"node": "I", "per_kwh": 20, "per_step": 23}, ...],
        "trips": [{"origin": "I", "destination": "I", "per_kwh": 25, "per_step": 11}, ...]
      },
      "demand": {"power_csv": "extreme_power.csv", "mobility_csv": "mobility.csv", "mobility_scale": 10}
    }

``power_csv`` has header ``node,step,value`` (kWh of outage load per step);
``mobility_csv`` has header ``origin,destination,step,value`` (trips per step
before ``mobility_scale`` is applied).  Missing (node, step) rows are zero.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import ChargeRates
from .errors import ConfigurationError, ScenarioError
from .grid import DEFAULT_NODES, SoeGrid

FARE_MODES = ("per_trip", "per_minute")
VISIBILITY_MODES = ("window", "current")
QUANTIZATION_MODES = ("ceil", "nearest")

BUILTIN = {
    "extreme": "extreme.json",
    "moderate": "moderate.json",
    "zero-demand": "zero_demand.json",
    "paper-tables": "extreme.json",
}


def quantize_trip(delta_x_kwh, delta_t_seconds, grid: SoeGrid, e_max_kwh, mode="ceil"):
    """Whole (bins, steps) for one trip; both are at least 1.

    ``ceil`` never lets a trip arrive early or cheap; ``nearest`` rounds to
    the closest bin/step but still charges at least one of each.
    """
    soe = delta_x_kwh / e_max_kwh
    bins = soe / grid.dx
    steps = delta_t_seconds / grid.dt_seconds
    if mode == "ceil":
        b, s = math.ceil(bins - 1e-9), math.ceil(steps - 1e-9)
    elif mode == "nearest":
        b, s = int(np.floor(bins + 0.5)), int(np.floor(steps + 0.5))
    else:
        raise ConfigurationError(f"unknown quantization mode {mode!r}")
    return max(1, b), max(1, s)


@dataclass(frozen=True)
class OdTable:
    nodes: tuple
    delta_x_kwh: np.ndarray
    delta_t_seconds: np.ndarray
    delta_bins: np.ndarray
    delta_steps: np.ndarray

    @classmethod
    def build(cls, nodes, delta_x_kwh, delta_t_seconds, grid: SoeGrid, e_max_kwh, mode="ceil"):
        dxk = np.asarray(delta_x_kwh, float)
        dts = np.asarray(delta_t_seconds, float)
        n = len(nodes)
        if dxk.shape != (n, n) or dts.shape != (n, n):
            raise ScenarioError(f"OD table must be {n}x{n}")
        if np.any(dxk <= 0) or np.any(dts <= 0):
            raise ScenarioError("trip energies and durations must be positive")
        bins = np.zeros((n, n), int)
        steps = np.zeros((n, n), int)
        for i in range(n):
            for j in range(n):
                bins[i, j], steps[i, j] = quantize_trip(dxk[i, j], dts[i, j], grid, e_max_kwh, mode)
        if np.any(bins > grid.n_bins - 1):
            raise ScenarioError("a trip needs more energy than a full battery holds")
        return cls(tuple(nodes), dxk, dts, bins, steps)

    def row(self, origin, destination):
        i, j = self.nodes.index(origin), self.nodes.index(destination)
        return float(self.delta_x_kwh[i, j]), float(self.delta_t_seconds[i, j])


@dataclass(frozen=True)
class PriceTable:
    nodes: tuple
    rho_dis: np.ndarray              # $/kWh served during outages
    rho_dis_per_step: np.ndarray     # $/step, informational
    fare_per_step: np.ndarray        # (origin, destination) $ per trip
    fare_per_kwh: np.ndarray         # informational
    grid_price: float = 0.25

    def __post_init__(self):
        for name in ("rho_dis", "rho_dis_per_step", "fare_per_step", "fare_per_kwh"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ScenarioError(f"negative price in {name}")
        if self.grid_price < 0:
            raise ScenarioError("negative grid price")

    def fare_coefficient(self, mode: str, grid: SoeGrid) -> np.ndarray:
        """Revenue per served trip under ``mode``."""
        if mode == "per_trip":
            return np.asarray(self.fare_per_step, float)
        if mode == "per_minute":
            return np.asarray(self.fare_per_step, float) / grid.dt_minutes
        raise ConfigurationError(f"unknown fare mode {mode!r}")


@dataclass(frozen=True)
class DemandProfile:
    nodes: tuple
    dis_kwh: np.ndarray          # (nodes, steps)
    mob_raw: np.ndarray          # (origin, destination, steps), before scaling
    mobility_scale: float = 10.0

    @property
    def D_dis(self):
        return self.dis_kwh

    @property
    def D_mob(self):
        return self.mob_raw * self.mobility_scale

    @property
    def n_steps(self):
        return self.dis_kwh.shape[1]


def validate_demand(profile: DemandProfile, grid: SoeGrid) -> list:
    """Return a list of human-readable violations (empty when valid)."""
    out = []
    need = grid.n_sim_steps + grid.horizon_steps
    n = len(profile.nodes)
    if profile.dis_kwh.ndim != 2 or profile.dis_kwh.shape[0] != n:
        out.append(f"power demand must have shape ({n}, steps), got {profile.dis_kwh.shape}")
        return out
    if profile.mob_raw.shape[:2] != (n, n) or profile.mob_raw.shape[2] != profile.dis_kwh.shape[1]:
        out.append(f"mobility demand must have shape ({n}, {n}, {profile.dis_kwh.shape[1]}), got {profile.mob_raw.shape}")
        return out
    for i, t in zip(*np.nonzero(profile.dis_kwh < 0)):
        out.append(f"negative power demand {profile.dis_kwh[i, t]:g} at node {profile.nodes[i]} step {t}")
    for i, j, t in zip(*np.nonzero(profile.mob_raw < 0)):
        out.append(f"negative mobility demand at {profile.nodes[i]}->{profile.nodes[j]} step {t}")
    if not np.all(np.isfinite(profile.dis_kwh)) or not np.all(np.isfinite(profile.mob_raw)):
        out.append("demand contains non-finite values")
    if profile.mobility_scale < 0:
        out.append("mobility_scale must be nonnegative")
    if profile.n_steps < need:
        out.append(f"demand covers {profile.n_steps} steps; need {need} "
                   f"(n_sim_steps {grid.n_sim_steps} + horizon_steps {grid.horizon_steps})")
    return out


@dataclass(frozen=True)
class ScenarioSpec:
    label: str
    grid: SoeGrid
    rates: ChargeRates
    nodes: tuple
    od: OdTable
    prices: PriceTable
    demand: DemandProfile
    fleet_size: float
    initial_weights: tuple
    fare_mode: str = "per_trip"
    visibility: str = "window"
    quantization: str = "ceil"
    synthetic_demand: bool = False
    sources: dict = field(default_factory=dict, compare=False)

    @property
    def fare_coefficient(self):
        return self.prices.fare_coefficient(self.fare_mode, self.grid)

    def with_fleet_size(self, fleet_size) -> "ScenarioSpec":
        return replace(self, fleet_size=fleet_size)

    def with_overrides(self, **kw) -> "ScenarioSpec":
        """Re-derive the scenario with grid/vehicle/option overrides; revalidates."""
        d = scenario_to_dict(self)
        g = d["grid"]
        for key in ("dx", "dt_minutes", "horizon_steps", "n_sim_steps"):
            if kw.get(key) is not None:
                g[key] = kw[key]
        for key in ("fare_mode", "visibility", "quantization"):
            if kw.get(key) is not None:
                d["options"][key] = kw[key]
        if kw.get("fleet_size") is not None:
            d["fleet_size"] = kw["fleet_size"]
        return scenario_from_dict(d, self.demand)


# ---------------------------------------------------------------------------
# (de)serialisation
# ---------------------------------------------------------------------------

def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def _require(d, key, where):
    if key not in d:
        raise ScenarioError(f"missing '{key}' in {where}")
    return d[key]


def scenario_from_dict(d: dict, demand: DemandProfile) -> ScenarioSpec:
    nodes = tuple(_require(d, "nodes", "scenario"))
    if len(set(nodes)) != len(nodes) or not nodes:
        raise ScenarioError(f"node labels must be unique and nonempty: {nodes}")
    idx = {n: i for i, n in enumerate(nodes)}

    def node(label, where):
        if label not in idx:
            raise ScenarioError(f"unknown node label {label!r} in {where}")
        return idx[label]

    g = _require(d, "grid", "scenario")
    try:
        grid = SoeGrid.from_dx(float(g.get("dx", 0.2)), dt_minutes=float(g.get("dt_minutes", 10)),
                               horizon_steps=int(g.get("horizon_steps", 5)),
                               n_sim_steps=int(g.get("n_sim_steps", 144)))
        veh = d.get("vehicle", {})
        rates = ChargeRates(float(veh.get("power_kw", 7)), float(veh.get("e_max_kwh", 10)),
                            float(veh.get("eta", 0.86))).check_cfl(grid)
    except ConfigurationError as exc:
        raise ScenarioError(str(exc)) from exc
    opts = d.get("options", {})
    fare_mode = opts.get("fare_mode", "per_trip")
    visibility = opts.get("visibility", "window")
    quant = opts.get("quantization", "ceil")
    if fare_mode not in FARE_MODES:
        raise ScenarioError(f"fare_mode must be one of {FARE_MODES}")
    if visibility not in VISIBILITY_MODES:
        raise ScenarioError(f"visibility must be one of {VISIBILITY_MODES}")
    if quant not in QUANTIZATION_MODES:
        raise ScenarioError(f"quantization must be one of {QUANTIZATION_MODES}")

    n = len(nodes)
    dxk = np.full((n, n), np.nan)
    dts = np.full((n, n), np.nan)
    for row in _require(d, "od", "scenario"):
        i, j = node(row["origin"], "od"), node(row["destination"], "od")
        dxk[i, j] = float(row["delta_x_kwh"])
        dts[i, j] = float(row["delta_t_seconds"])
    miss = np.argwhere(np.isnan(dxk))
    if miss.size:
        i, j = miss[0]
        raise ScenarioError(f"od table has no entry for {nodes[i]}->{nodes[j]}")
    od = OdTable.build(nodes, dxk, dts, grid, rates.e_max_kwh, quant)

    p = _require(d, "prices", "scenario")
    rho = np.full(n, np.nan)
    rho_step = np.full(n, np.nan)
    for row in _require(p, "outage", "prices"):
        i = node(row["node"], "prices.outage")
        rho[i] = float(row["per_kwh"])
        rho_step[i] = float(row.get("per_step", np.nan))
    if np.isnan(rho).any():
        raise ScenarioError(f"prices.outage missing node {nodes[int(np.argmax(np.isnan(rho)))]}")
    fare = np.full((n, n), np.nan)
    fare_kwh = np.full((n, n), np.nan)
    for row in _require(p, "trips", "prices"):
        i, j = node(row["origin"], "prices.trips"), node(row["destination"], "prices.trips")
        fare[i, j] = float(row["per_step"])
        fare_kwh[i, j] = float(row.get("per_kwh", np.nan))
    miss = np.argwhere(np.isnan(fare))
    if miss.size:
        i, j = miss[0]
        raise ScenarioError(f"prices.trips has no fare for {nodes[i]}->{nodes[j]}")
    prices = PriceTable(nodes, rho, rho_step, fare, fare_kwh, float(p.get("grid_price", 0.25)))

    if tuple(demand.nodes) != nodes:
        raise ScenarioError(f"demand nodes {demand.nodes} do not match scenario nodes {nodes}")
    problems = validate_demand(demand, grid)
    if problems:
        raise ScenarioError("; ".join(problems))

    weights = d.get("initial_weights")
    if weights is None:
        w = tuple([1.0 / n] * n)
    else:
        for k in weights:
            node(k, "initial_weights")
        w = tuple(float(weights.get(k, 0.0)) for k in nodes)
    if abs(sum(w) - 1.0) > 1e-9 or min(w) < 0:
        raise ScenarioError(f"initial_weights must be nonnegative and sum to 1, got {w}")
    fleet = float(_require(d, "fleet_size", "scenario"))
    if fleet < 0:
        raise ScenarioError("fleet_size must be nonnegative")

    return ScenarioSpec(
        label=str(d.get("label", "scenario")), grid=grid, rates=rates, nodes=nodes, od=od, prices=prices,
        demand=demand, fleet_size=fleet, initial_weights=w, fare_mode=fare_mode, visibility=visibility,
        quantization=quant, synthetic_demand=bool(d.get("synthetic_demand", False)),
        sources=dict(d.get("demand", {})),
    )


def scenario_to_dict(s: ScenarioSpec) -> dict:
    nodes = s.nodes
    od_rows, trip_rows = [], []
    for i, o in enumerate(nodes):
        for j, t in enumerate(nodes):
            od_rows.append({"origin": o, "destination": t, "delta_x_kwh": _num(s.od.delta_x_kwh[i, j]),
                            "delta_t_seconds": _num(s.od.delta_t_seconds[i, j])})
            row = {"origin": o, "destination": t}
            if not np.isnan(s.prices.fare_per_kwh[i, j]):
                row["per_kwh"] = _num(s.prices.fare_per_kwh[i, j])
            row["per_step"] = _num(s.prices.fare_per_step[i, j])
            trip_rows.append(row)
    outage = []
    for i, n in enumerate(nodes):
        row = {"node": n, "per_kwh": _num(s.prices.rho_dis[i])}
        if not np.isnan(s.prices.rho_dis_per_step[i]):
            row["per_step"] = _num(s.prices.rho_dis_per_step[i])
        outage.append(row)
    return {
        "label": s.label,
        "synthetic_demand": s.synthetic_demand,
        "nodes": list(nodes),
        "fleet_size": _num(s.fleet_size),
        "initial_weights": {n: s.initial_weights[i] for i, n in enumerate(nodes)},
        "grid": {"dx": s.grid.dx, "dt_minutes": _num(s.grid.dt_minutes), "horizon_steps": s.grid.horizon_steps,
                 "n_sim_steps": s.grid.n_sim_steps},
        "vehicle": {"power_kw": _num(s.rates.power_kw), "e_max_kwh": _num(s.rates.e_max_kwh),
                    "eta": _num(s.rates.eta)},
        "options": {"fare_mode": s.fare_mode, "visibility": s.visibility, "quantization": s.quantization},
        "od": od_rows,
        "prices": {"grid_price": _num(s.prices.grid_price), "outage": outage, "trips": trip_rows},
        "demand": {"power_csv": s.sources.get("power_csv", "power.csv"),
                   "mobility_csv": s.sources.get("mobility_csv", "mobility.csv"),
                   "mobility_scale": _num(s.demand.mobility_scale)},
    }


def dumps_scenario(s: ScenarioSpec) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def read_power_csv(path, nodes, n_steps=None) -> np.ndarray:
    rows = _read_csv(path, ("node", "step", "value"))
    idx = {n: i for i, n in enumerate(nodes)}
    T = n_steps if n_steps is not None else 1 + max((int(r["step"]) for r in rows), default=-1)
    out = np.zeros((len(nodes), T))
    for r in rows:
        if r["node"] not in idx:
            raise ScenarioError(f"{path}: unknown node label {r['node']!r}")
        out[idx[r["node"]], int(r["step"])] = float(r["value"])
    return out


def read_mobility_csv(path, nodes, n_steps) -> np.ndarray:
    rows = _read_csv(path, ("origin", "destination", "step", "value"))
    idx = {n: i for i, n in enumerate(nodes)}
    out = np.zeros((len(nodes), len(nodes), n_steps))
    for r in rows:
        for key in ("origin", "destination"):
            if r[key] not in idx:
                raise ScenarioError(f"{path}: unknown node label {r[key]!r}")
        t = int(r["step"])
        if t >= n_steps:
            raise ScenarioError(f"{path}: mobility step {t} beyond power profile length {n_steps}")
        out[idx[r["origin"]], idx[r["destination"]], t] = float(r["value"])
    return out


def _read_csv(path, header):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != header:
                raise ScenarioError(f"{path}: expected header {','.join(header)}, got {reader.fieldnames}")
            rows = list(reader)
    except OSError as exc:
        raise ScenarioError(f"cannot read demand file {path}: {exc}") from exc
    for r in rows:
        try:
            float(r["value"])
            int(r["step"])
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: malformed row {r}") from exc
        if int(r["step"]) < 0:
            raise ScenarioError(f"{path}: negative step in row {r}")
    return rows


def _fmt(v):
    return repr(_num(v)) if isinstance(_num(v), float) else str(_num(v))


def write_power_csv(path, nodes, dis):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["node", "step", "value"])
        for i, n in enumerate(nodes):
            for t in range(dis.shape[1]):
                wr.writerow([n, t, _fmt(dis[i, t])])


def write_mobility_csv(path, nodes, mob):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["origin", "destination", "step", "value"])
        for i, o in enumerate(nodes):
            for j, d in enumerate(nodes):
                for t in range(mob.shape[2]):
                    wr.writerow([o, d, t, _fmt(mob[i, j, t])])


def load_scenario(path) -> ScenarioSpec:
    """Load and validate a scenario JSON document (or a built-in name)."""
    if str(path) in BUILTIN:
        return load_builtin(str(path))
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    nodes = tuple(_require(d, "nodes", str(path)))
    dem = _require(d, "demand", str(path))
    base = path.parent
    dis = read_power_csv(base / _require(dem, "power_csv", "demand"), nodes)
    mob = read_mobility_csv(base / _require(dem, "mobility_csv", "demand"), nodes, dis.shape[1])
    demand = DemandProfile(nodes, dis, mob, float(dem.get("mobility_scale", 10)))
    return scenario_from_dict(d, demand)


def save_scenario(s: ScenarioSpec, path) -> Path:
    """Write the JSON document and its two CSVs (next to ``path``)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = scenario_to_dict(s)
    write_power_csv(path.parent / d["demand"]["power_csv"], s.nodes, s.demand.dis_kwh)
    write_mobility_csv(path.parent / d["demand"]["mobility_csv"], s.nodes, s.demand.mob_raw)
    path.write_text(dumps_scenario(s))
    return path


def builtin_path(name: str) -> Path:
    if name not in BUILTIN:
        raise ScenarioError(f"unknown built-in scenario {name!r}; choose from {sorted(BUILTIN)}")
    return Path(str(resources.files("fleetpde") / "data" / BUILTIN[name]))


def load_builtin(name: str) -> ScenarioSpec:
    return load_scenario(builtin_path(name))


def format_reference_tables(extreme: ScenarioSpec, moderate: ScenarioSpec) -> dict:
    """Render the trip, outage-price and fare tables as plain text rows."""
    def f(v):
        v = _num(v)
        return str(v)

    nodes = extreme.nodes
    flow = [f"{o}->{d} {f(extreme.od.delta_x_kwh[i, j])} {f(extreme.od.delta_t_seconds[i, j])}"
            for i, o in enumerate(nodes) for j, d in enumerate(nodes)]
    pe, pm = extreme.prices, moderate.prices
    outage = [f"{n} {f(pe.rho_dis[i])} {f(pe.rho_dis_per_step[i])} {f(pm.rho_dis[i])} {f(pm.rho_dis_per_step[i])}"
              for i, n in enumerate(nodes)]
    trips = [f"{o} {d} {f(pe.fare_per_kwh[i, j])} {f(pe.fare_per_step[i, j])}"
             for i, o in enumerate(nodes) for j, d in enumerate(nodes)]
    return {"flow_constraints": flow, "outage_costs": outage, "trip_costs": trips}


# ---------------------------------------------------------------------------
# synthetic demand
# ---------------------------------------------------------------------------

# peak trips per 10-minute step before the x10 scaling, row = origin
_MOB_PEAK = np.array([
    [40.0, 15.0, 10.0],
    [15.0, 20.0, 8.0],
    [10.0, 8.0, 20.0],
])
# outage load at the peak, kWh per 10-minute step
_POWER_PEAK = {"extreme": np.array([6000.0, 4000.0, 8000.0]), "moderate": np.array([60.0, 40.0, 80.0])}
_POWER_CENTER = {"extreme": np.array([84.0, 80.0, 88.0]), "moderate": np.array([72.0, 66.0, 78.0])}


def _bump(t, center, width):
    return np.exp(-(((t - center) / width) ** 2))


def synthetic_demand(kind: str, n_steps: int = 149, seed: int = 0, dt_minutes: float = 10.0,
                     nodes=DEFAULT_NODES) -> DemandProfile:
    """Smooth, clearly artificial demand profiles for the three-node network.

    Mobility follows a two-peak weekday taxi curve; outage load is a
    mid-day bump.  ``extreme`` load is 100x ``moderate``; ``zero`` gives an
    all-zero profile.  Multiplicative noise is drawn from ``seed``.
    """
    if len(nodes) != 3:
        raise ScenarioError("synthetic profiles are defined for three nodes")
    rng = np.random.default_rng(seed)
    t = np.arange(n_steps)
    hour = t * dt_minutes / 60.0
    if kind == "zero":
        return DemandProfile(tuple(nodes), np.zeros((3, n_steps)), np.zeros((3, 3, n_steps)))
    if kind not in _POWER_PEAK:
        raise ScenarioError(f"unknown synthetic profile {kind!r}")
    shape = 0.15 + 0.55 * _bump(hour, 8.5, 1.5) + 0.35 * _bump(hour, 13.0, 3.0) + 0.7 * _bump(hour, 18.5, 2.5)
    shape = shape / shape.max()
    noise = np.clip(1.0 + 0.1 * rng.standard_normal((3, 3, n_steps)), 0.0, None)
    mob = np.round(_MOB_PEAK[:, :, None] * shape[None, None, :] * noise, 2)
    width = 12.0 * 60.0 / dt_minutes / 6.0
    load = _POWER_PEAK[kind][:, None] * (0.02 + _bump(t[None, :], _POWER_CENTER[kind][:, None], width))
    load *= np.clip(1.0 + 0.05 * rng.standard_normal((3, n_steps)), 0.0, None)
    return DemandProfile(tuple(nodes), np.round(load, 2), mob)


# ---------------------------------------------------------------------------
# built-in scenarios
# ---------------------------------------------------------------------------

TRIP_TABLE = {
    # (origin, destination): (kWh, seconds)
    ("I", "I"): (0.42, 476), ("I", "II"): (0.82, 792), ("I", "IV"): (0.93, 1000),
    ("II", "I"): (0.84, 760), ("II", "II"): (0.38, 489), ("II", "IV"): (0.77, 698),
    ("IV", "I"): (0.93, 956), ("IV", "II"): (0.77, 725), ("IV", "IV"): (0.37, 403),
}
OUTAGE_PRICES = {
    # node: ($/kWh, $/step)
    "extreme": {"I": (20, 23), "II": (9, 11), "IV": (15, 18)},
    "moderate": {"I": (14, 16), "II": (32, 37), "IV": (46, 54)},
}
TRIP_FARES = {
    # (origin, destination): ($/kWh, $/step)
    ("I", "I"): (25, 11), ("I", "II"): (19, 8), ("I", "IV"): (20, 9),
    ("II", "I"): (18, 8), ("II", "II"): (26, 10), ("II", "IV"): (19, 7),
    ("IV", "I"): (20, 9), ("IV", "II"): (19, 7), ("IV", "IV"): (24, 9),
}
_LABELS = {"extreme": "extreme-2014-12-31", "moderate": "moderate-2014-09-29", "zero": "zero-demand"}


def builtin_document(kind: str, power_csv: str, mobility_csv: str, fleet_size=7500) -> dict:
    nodes = list(DEFAULT_NODES)
    prices = OUTAGE_PRICES["extreme" if kind == "zero" else kind]
    return {
        "label": _LABELS[kind],
        "synthetic_demand": True,
        "nodes": nodes,
        "fleet_size": fleet_size,
        "initial_weights": {n: 1.0 / len(nodes) for n in nodes},
        "grid": {"dx": 0.2, "dt_minutes": 10, "horizon_steps": 5, "n_sim_steps": 144},
        "vehicle": {"power_kw": 7, "e_max_kwh": 10, "eta": 0.86},
        "options": {"fare_mode": "per_trip", "visibility": "window", "quantization": "ceil"},
        "od": [{"origin": o, "destination": d, "delta_x_kwh": TRIP_TABLE[o, d][0],
                "delta_t_seconds": TRIP_TABLE[o, d][1]} for o in nodes for d in nodes],
        "prices": {
            "grid_price": 0.25,
            "outage": [{"node": n, "per_kwh": prices[n][0], "per_step": prices[n][1]} for n in nodes],
            "trips": [{"origin": o, "destination": d, "per_kwh": TRIP_FARES[o, d][0],
                       "per_step": TRIP_FARES[o, d][1]} for o in nodes for d in nodes],
        },
        "demand": {"power_csv": power_csv, "mobility_csv": mobility_csv, "mobility_scale": 10},
    }


def write_builtin_data(out_dir, seed: int = 0, n_steps: int = 149) -> list:
    """Regenerate the bundled scenario files (deterministic in ``seed``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    mob = synthetic_demand("extreme", n_steps, seed).mob_raw
    write_mobility_csv(out / "mobility.csv", DEFAULT_NODES, mob)
    write_mobility_csv(out / "zero_mobility.csv", DEFAULT_NODES, np.zeros_like(mob))
    for kind, fname in (("extreme", "extreme.json"), ("moderate", "moderate.json"), ("zero", "zero_demand.json")):
        dis = synthetic_demand(kind, n_steps, seed).dis_kwh
        power = f"{kind}_power.csv"
        write_power_csv(out / power, DEFAULT_NODES, dis)
        doc = builtin_document(kind, power, "zero_mobility.csv" if kind == "zero" else "mobility.csv")
        (out / fname).write_text(json.dumps(doc, indent=2) + "\n")
        written += [out / fname, out / power]
    return written + [out / "mobility.csv", out / "zero_mobility.csv"]


def build_scenario(nodes, trip_kwh, trip_seconds, rho_dis, fares, dis_kwh, mob_trips, *, fleet_size,
                   grid: SoeGrid | None = None, rates: ChargeRates | None = None, grid_price: float = 0.25,
                   mobility_scale: float = 1.0, label: str = "custom", initial_weights=None,
                   fare_mode: str = "per_trip", visibility: str = "window", quantization: str = "ceil") -> ScenarioSpec:
    """Assemble and validate a scenario from arrays (no files involved).

    ``dis_kwh`` has shape (N, steps) and ``mob_trips`` (N, N, steps); trips
    are multiplied by ``mobility_scale`` when read through ``D_mob``.
    """
    nodes = tuple(nodes)
    n = len(nodes)
    grid = grid or SoeGrid()
    rates = rates or ChargeRates()
    try:
        rates.check_cfl(grid)
    except ConfigurationError as exc:
        raise ScenarioError(str(exc)) from exc
    for mode, allowed in ((fare_mode, FARE_MODES), (visibility, VISIBILITY_MODES), (quantization, QUANTIZATION_MODES)):
        if mode not in allowed:
            raise ScenarioError(f"option {mode!r} not in {allowed}")
    od = OdTable.build(nodes, trip_kwh, trip_seconds, grid, rates.e_max_kwh, quantization)
    nan_n, nan_nn = np.full(n, np.nan), np.full((n, n), np.nan)
    prices = PriceTable(nodes, np.asarray(rho_dis, float).reshape(n), nan_n, np.asarray(fares, float).reshape(n, n),
                        nan_nn, float(grid_price))
    demand = DemandProfile(nodes, np.asarray(dis_kwh, float), np.asarray(mob_trips, float), float(mobility_scale))
    problems = validate_demand(demand, grid)
    if problems:
        raise ScenarioError("; ".join(problems))
    w = tuple([1.0 / n] * n) if initial_weights is None else tuple(float(x) for x in initial_weights)
    if len(w) != n or abs(sum(w) - 1.0) > 1e-9 or min(w) < 0:
        raise ScenarioError(f"initial_weights must be {n} nonnegative shares summing to 1")
    return ScenarioSpec(label, grid, rates, nodes, od, prices, demand, float(fleet_size), w, fare_mode, visibility,
                        quantization, False)
