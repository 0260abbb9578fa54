"""Revenue decomposition, annualisation and CSV/manifest emission."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controller import CENSUS_FIELDS, RunLog
from .errors import OutputError, ValidationError

COMPONENTS = ("g2v_cost", "trips_revenue", "v2b_revenue", "total", "max_possible")
BASELINES = ("moderate_total", "moderate_trips")


def sig2(x: float) -> float:
    """Round to two significant figures."""
    return float(f"{x:.2g}")


@dataclass(frozen=True)
class RevenueReport:
    label: str
    fleet_size: float
    g2v_cost: float
    trips_revenue: float
    v2b_revenue: float
    total: float
    max_possible: float
    unserved_kwh: np.ndarray        # (N,) per node over the run
    unserved_trips: np.ndarray      # (N, N) per OD pair over the run
    nodes: tuple = ()

    def per_vehicle(self, component: str) -> float:
        return getattr(self, component) / self.fleet_size if self.fleet_size > 0 else 0.0

    def as_dict(self) -> dict:
        out = {"label": self.label, "fleet_size": self.fleet_size}
        for c in COMPONENTS:
            out[c] = getattr(self, c)
            out[c + "_per_vehicle"] = self.per_vehicle(c)
        out["unserved_kwh"] = dict(zip(self.nodes, self.unserved_kwh.tolist()))
        out["unserved_trips"] = {f"{o}->{d}": float(self.unserved_trips[i, j])
                                 for i, o in enumerate(self.nodes) for j, d in enumerate(self.nodes)}
        return out


def revenue_report(log: RunLog, scenario) -> RevenueReport:
    rho = np.asarray(scenario.prices.rho_dis, float)
    fare = scenario.fare_coefficient
    g2v = float(log.cost_g2v.sum())
    trips = float(log.revenue_trips.sum())
    v2b = float(log.revenue_v2b.sum())
    max_possible = float((log.demand_kwh @ rho).sum() + (log.trips_demand * fare[None]).sum())
    return RevenueReport(
        log.label, log.fleet_size, g2v, trips, v2b, trips + v2b - g2v, max_possible,
        (log.demand_kwh - log.served_kwh).sum(axis=0), (log.trips_demand - log.trips_served).sum(axis=0),
        tuple(log.nodes),
    )


@dataclass(frozen=True)
class AnnualizationTable:
    """Marginal yearly revenue from serving outage days, per vehicle.

    ``per_event_uplift_percent`` compares one extreme day with one moderate
    day; the row values compare a year with ``extreme_days`` outage days
    against a year of moderate days.
    """

    fleet_size: float
    extreme_days: np.ndarray
    annual_revenue: np.ndarray
    baseline_revenue: float
    new_revenue_per_vehicle: np.ndarray
    percent_increase: np.ndarray
    slope_per_vehicle: float
    per_event_uplift_percent: float
    baseline: str = "moderate_total"

    def rows(self):
        for n, a, nv, p in zip(self.extreme_days, self.annual_revenue, self.new_revenue_per_vehicle,
                               self.percent_increase):
            yield {"fleet_size": self.fleet_size, "extreme_days": int(n), "annual_revenue": float(a),
                   "baseline_revenue": self.baseline_revenue, "new_revenue_per_vehicle": float(nv),
                   "new_revenue_per_vehicle_2sf": sig2(nv), "percent_increase": float(p),
                   "percent_increase_2sf": sig2(p), "per_event_uplift_percent": self.per_event_uplift_percent}


def annualize(extreme: RevenueReport, moderate: RevenueReport, extreme_days, fleet_size=None,
              baseline: str = "moderate_total", days_per_year: int = 365) -> AnnualizationTable:
    """Year = N extreme days + (365 - N) moderate days, against a year of moderate days.

    With ``baseline="moderate_trips"`` the reference year counts only the
    moderate day's trip fares net of charging.
    """
    if extreme.fleet_size != moderate.fleet_size:
        raise ValidationError(f"fleet sizes differ: extreme {extreme.fleet_size} vs moderate {moderate.fleet_size}")
    fleet = extreme.fleet_size if fleet_size is None else float(fleet_size)
    if fleet != extreme.fleet_size:
        raise ValidationError(f"fleet_size {fleet} does not match the reports ({extreme.fleet_size})")
    if fleet <= 0:
        raise ValidationError("fleet_size must be positive")
    if baseline not in BASELINES:
        raise ValidationError(f"baseline must be one of {BASELINES}")
    days = np.asarray(list(extreme_days), dtype=int)
    if days.size and (days.min() < 0 or days.max() > days_per_year):
        raise ValidationError(f"extreme day counts must lie in 0..{days_per_year}")
    annual = days * extreme.total + (days_per_year - days) * moderate.total
    day_base = moderate.total if baseline == "moderate_total" else moderate.trips_revenue - moderate.g2v_cost
    base = days_per_year * day_base
    gain = annual - base
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = np.where(base != 0, 100.0 * gain / base, np.nan)
    per_event = 100.0 * (extreme.total - moderate.total) / moderate.total if moderate.total else float("nan")
    return AnnualizationTable(fleet, days, annual, float(base), gain / fleet, pct,
                              (extreme.total - moderate.total) / fleet, float(per_event), baseline)


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

DECOMP_HEADER = ["label", "fleet_size", "component", "value", "value_2sf", "per_vehicle", "per_vehicle_2sf"]
STATE_HEADER = ["step", *CENSUS_FIELDS, "total"]
UNSERVED_HEADER = ["step", "quantity", "origin", "destination", "demanded", "served", "unserved"]
ANNUAL_HEADER = ["fleet_size", "extreme_days", "annual_revenue", "baseline_revenue", "new_revenue_per_vehicle",
                 "new_revenue_per_vehicle_2sf", "percent_increase", "percent_increase_2sf",
                 "per_event_uplift_percent"]


def _write(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for r in rows:
                wr.writerow([repr(v) if isinstance(v, float) else v for v in r])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def emit_outputs(report: RevenueReport | None, log: RunLog, out_dir, annualization=None, suffix: str = "") -> dict:
    """Write the four CSVs and the plot-data manifest; returns {name: path}."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from exc
    names = {k: out / f"{k}{suffix}.csv" for k in ("revenue_decomposition", "state_timeseries", "unserved",
                                                   "annualization")}
    has_steps = log.n_steps > 0

    rows = []
    if report is not None and has_steps:
        for c in COMPONENTS:
            val, pv = getattr(report, c), report.per_vehicle(c)
            rows.append([report.label, report.fleet_size, c, val, sig2(val), pv, sig2(pv)])
    _write(names["revenue_decomposition"], DECOMP_HEADER, rows)

    c = log.census
    _write(names["state_timeseries"], STATE_HEADER,
           ([t, *map(float, c[t]), float(c[t].sum())] for t in range(log.n_steps)))

    def unserved_rows():
        nodes = log.nodes
        for t in range(log.n_steps):
            for i, n in enumerate(nodes):
                d, s = float(log.demand_kwh[t, i]), float(log.served_kwh[t, i])
                yield [t, "power_kwh", n, "", d, s, d - s]
            for i, o in enumerate(nodes):
                for j, dst in enumerate(nodes):
                    d, s = float(log.trips_demand[t, i, j]), float(log.trips_served[t, i, j])
                    yield [t, "trips", o, dst, d, s, d - s]

    _write(names["unserved"], UNSERVED_HEADER, unserved_rows())

    tables = [] if annualization is None else (
        annualization if isinstance(annualization, (list, tuple)) else [annualization])
    _write(names["annualization"], ANNUAL_HEADER,
           ([r[h] for h in ANNUAL_HEADER] for tab in tables for r in tab.rows()))

    manifest = {
        "series": [
            {"name": "revenue_decomposition", "file": names["revenue_decomposition"].name, "x": "component",
             "y": ["value", "per_vehicle"], "units": {"value": "USD per day", "per_vehicle": "USD per vehicle per day"}},
            {"name": "state_timeseries", "file": names["state_timeseries"].name, "x": "step",
             "y": list(CENSUS_FIELDS), "units": {"step": "time step", "y": "vehicles"}},
            {"name": "unserved", "file": names["unserved"].name, "x": "step", "group_by": ["quantity", "origin",
             "destination"], "y": ["demanded", "served", "unserved"],
             "units": {"power_kwh": "kWh per step", "trips": "trips per step"}},
            {"name": "annualization", "file": names["annualization"].name, "x": "extreme_days",
             "y": ["new_revenue_per_vehicle", "percent_increase"],
             "units": {"new_revenue_per_vehicle": "USD per vehicle per year", "percent_increase": "percent"}},
        ],
        "label": log.label,
        "fleet_size": log.fleet_size,
    }
    mpath = out / f"plot_data{suffix}.json"
    try:
        mpath.write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {mpath}: {exc}") from exc
    names["plot_data"] = mpath
    return names
