"""Command-line front end.

Exit codes: 0 ok, 2 usage, 3 scenario/configuration, 4 solver, 5 I/O.  On
failure a single line ``ERROR <class>: <detail>`` goes to stderr.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .controller import RunLog, initial_state, run, sweep
from .dispatch import build_lp, named_problem
from .errors import (ConfigurationError, DimensionError, FleetError, OutputError, ScenarioError, SolverError,
                     ValidationError)
from .mps import write_mps
from .reporting import annualize, emit_outputs, revenue_report
from .scenario import BUILTIN, load_scenario, scenario_from_dict, scenario_to_dict, synthetic_demand

OUTPUT_ENV = "FLEETPDE_OUTPUT_ROOT"
EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4, 5
_SYNTHETIC_KIND = {"extreme": "extreme", "paper-tables": "extreme", "moderate": "moderate", "zero-demand": "zero"}
DEFAULT_EXTREME_DAYS = (10, 12, 14, 16, 18, 20)

log = logging.getLogger("fleetpde")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return [int(v) if float(v).is_integer() else v for v in vals]


def _overrides(p):
    g = p.add_argument_group("overrides")
    g.add_argument("--fleet-size", type=float, help="fleet size (vehicles)")
    g.add_argument("--dt", type=float, help="time step in minutes")
    g.add_argument("--dx", type=float, help="SOE grid spacing")
    g.add_argument("--horizon", type=int, help="window length in steps")
    g.add_argument("--steps", type=int, help="simulated steps")
    g.add_argument("--visibility", choices=("window", "current"),
                   help="outage demand visible over the whole window or only at the current step")
    g.add_argument("--quantization", choices=("ceil", "nearest"), help="trip energy/time rounding")
    g.add_argument("--fare-mode", choices=("per_trip", "per_minute"), help="interpretation of the fare column")
    g.add_argument("--seed", type=int,
                   help="regenerate a built-in scenario's synthetic demand with this seed")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fleetpde", description="Receding-horizon dispatch of an EV fleet between trips and outage load.")
    p.add_argument("--version", action="version", version=f"fleetpde {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("scenario", help=f"scenario JSON path or built-in name ({', '.join(sorted(BUILTIN))})")
        if out:
            sp.add_argument("-o", "--out", help=f"output directory (default: ${OUTPUT_ENV} or ./fleetpde_out)")
        _overrides(sp)

    common(sub.add_parser("run", help="simulate one day"))
    sw = sub.add_parser("sweep", help="simulate one day per fleet size")
    common(sw)
    sw.add_argument("--fleet-sizes", type=_int_list, required=True, help="comma-separated fleet sizes")
    sw.add_argument("--jobs", type=int, default=1, help="parallel runs")
    rp = sub.add_parser("report", help="re-emit reports from saved run logs; annualize extreme vs moderate")
    common(rp)
    rp.add_argument("--log", required=True, help="run_log.json produced by run/sweep for this scenario")
    rp.add_argument("--moderate-scenario", help="scenario of the moderate-day log (for annualization)")
    rp.add_argument("--moderate-log", help="run_log.json of the moderate day at the same fleet size")
    rp.add_argument("--extreme-days", type=_int_list, default=list(DEFAULT_EXTREME_DAYS))
    common(sub.add_parser("validate", help="check a scenario and print OK"), out=False)
    ex = sub.add_parser("export-lp", help="write the window LP built from the initial state as free MPS")
    common(ex)
    ex.add_argument("--window-start", type=int, default=0, help="absolute step of the window")
    return p


# ---------------------------------------------------------------------------

def resolve_scenario(args):
    """Load the scenario, apply flag overrides and revalidate everything."""
    base = load_scenario(args.scenario)
    d = scenario_to_dict(base)
    g = d["grid"]
    for key, val in (("dx", args.dx), ("dt_minutes", args.dt), ("horizon_steps", args.horizon),
                     ("n_sim_steps", args.steps)):
        if val is not None:
            g[key] = val
    for key in ("fare_mode", "visibility", "quantization"):
        if getattr(args, key) is not None:
            d["options"][key] = getattr(args, key)
    if args.fleet_size is not None:
        d["fleet_size"] = args.fleet_size
    demand = base.demand
    if args.seed is not None:
        kind = _SYNTHETIC_KIND.get(args.scenario)
        if kind is None:
            raise ScenarioError("--seed applies only to built-in synthetic scenarios")
        demand = synthetic_demand(kind, int(g["n_sim_steps"]) + int(g["horizon_steps"]), args.seed,
                                  float(g["dt_minutes"]), base.nodes)
    return scenario_from_dict(d, demand)


def _out_dir(args) -> Path:
    root = args.out or os.environ.get(OUTPUT_ENV) or "fleetpde_out"
    return Path(root)


def _config(sc, args, extra=None) -> dict:
    d = scenario_to_dict(sc)
    d.pop("od"), d.pop("prices")
    cfg = {"scenario": args.scenario, "resolved": d, "seed": args.seed,
           "quantized": {"delta_bins": sc.od.delta_bins.tolist(), "delta_steps": sc.od.delta_steps.tolist()}}
    cfg.update(extra or {})
    return cfg


def _write_manifest(out: Path, argv, cfg, files):
    man = {
        "tool": "fleetpde", "version": __version__, "argv": list(argv),
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(), "numpy": np.__version__,
        "config": cfg, "outputs": sorted(str(Path(f).relative_to(out)) for f in files),
    }
    path = out / "run_manifest.json"
    try:
        path.write_text(json.dumps(man, indent=2) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _save_log(lg: RunLog, path: Path):
    try:
        path.write_text(lg.dumps())
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _progress(verbose):
    if verbose < 1:
        return None

    def cb(t, T):
        if (t + 1) % 12 == 0 or t + 1 == T:
            log.info("step %d/%d", t + 1, T)
    return cb


def cmd_validate(sc, args, argv):
    print("OK")
    print(f"label {sc.label}; nodes {','.join(sc.nodes)}; bins {sc.grid.n_bins}; steps {sc.grid.n_sim_steps}; "
          f"horizon {sc.grid.horizon_steps}; synthetic demand {'yes' if sc.synthetic_demand else 'no'}")
    for i, o in enumerate(sc.nodes):
        for j, d in enumerate(sc.nodes):
            print(f"  {o}->{d}: {sc.od.delta_bins[i, j]} bin(s), {sc.od.delta_steps[i, j]} step(s)")
    return EXIT_OK


def cmd_run(sc, args, argv):
    out = _out_dir(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    lg = run(sc, progress=_progress(args.verbose))
    rep = revenue_report(lg, sc)
    files = list(emit_outputs(rep, lg, out).values())
    files.append(_save_log(lg, out / "run_log.json"))
    _write_manifest(out, argv, _config(sc, args, {"fleet_sizes": [sc.fleet_size]}), files)
    t = lg.totals()
    print(f"total {t['total']:.2f} trips {t['trips']:.2f} v2b {t['v2b']:.2f} g2v {t['g2v']:.2f} -> {out}")
    return EXIT_OK


def cmd_sweep(sc, args, argv):
    out = _out_dir(args)
    sizes = args.fleet_sizes
    if any(s <= 0 for s in sizes):
        raise UsageError("fleet sizes must be positive")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    logs = sweep(sc, sizes, jobs=args.jobs)
    files, summary = [], []
    for size, lg in zip(sizes, logs):
        tag = f"_{size}"
        sub = out / f"fleet{tag}"
        rep = revenue_report(lg, sc)
        files += list(emit_outputs(rep, lg, sub, suffix=tag).values())
        files.append(_save_log(lg, sub / f"run_log{tag}.json"))
        summary.append((size, rep))
    path = out / "sweep_summary.csv"
    try:
        with open(path, "w") as fh:
            fh.write("fleet_size,total,trips_revenue,v2b_revenue,g2v_cost,max_possible,total_per_vehicle\n")
            for size, rep in summary:
                fh.write(f"{size},{rep.total!r},{rep.trips_revenue!r},{rep.v2b_revenue!r},{rep.g2v_cost!r},"
                         f"{rep.max_possible!r},{rep.per_vehicle('total')!r}\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    files.append(path)
    _write_manifest(out, argv, _config(sc, args, {"fleet_sizes": sizes, "jobs": args.jobs}), files)
    for size, rep in summary:
        print(f"fleet {size}: total {rep.total:.2f}")
    return EXIT_OK


def _read_log(path) -> RunLog:
    try:
        return RunLog.loads(Path(path).read_text())
    except OSError as exc:
        raise OutputError(f"cannot read run log {path}: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise ScenarioError(f"{path}: not a run log ({exc})") from exc


def cmd_report(sc, args, argv):
    out = _out_dir(args)
    lg = _read_log(args.log)
    rep = revenue_report(lg, sc)
    table = None
    if args.moderate_log:
        if not args.moderate_scenario:
            raise UsageError("--moderate-log needs --moderate-scenario")
        msc = load_scenario(args.moderate_scenario)
        mlog = _read_log(args.moderate_log)
        table = annualize(rep, revenue_report(mlog, msc), args.extreme_days)
    files = list(emit_outputs(rep, lg, out, annualization=table).values())
    _write_manifest(out, argv, _config(sc, args, {"log": args.log, "moderate_log": args.moderate_log}), files)
    print(f"total {rep.total:.2f} max {rep.max_possible:.2f} -> {out}")
    if table is not None:
        for r in table.rows():
            print(f"  {r['extreme_days']} extreme days: +{r['new_revenue_per_vehicle_2sf']:g} $/vehicle/yr, "
                  f"{r['percent_increase_2sf']:g}%")
    return EXIT_OK


def cmd_export_lp(sc, args, argv):
    out = _out_dir(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    st = initial_state(sc).with_(step=args.window_start)
    dlp = build_lp(st, sc, args.window_start)
    path = out / f"window_{args.window_start}.mps"
    try:
        write_mps(named_problem(dlp), path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    _write_manifest(out, argv, _config(sc, args, {"window_start": args.window_start}), [path])
    print(f"{dlp.problem.n_cols} columns, {dlp.problem.n_rows} rows -> {path}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "report": cmd_report, "validate": cmd_validate,
            "export-lp": cmd_export_lp}


def _fail(code, kind, detail):
    print(f"ERROR {kind}: {' '.join(str(detail).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", exc)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        sc = resolve_scenario(args)
        return COMMANDS[args.command](sc, args, argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", exc)
    except (ScenarioError, ConfigurationError, ValidationError, DimensionError) as exc:
        return _fail(EXIT_SCENARIO, type(exc).__name__, exc)
    except SolverError as exc:
        where = f" (step {exc.step})" if exc.step is not None else ""
        return _fail(EXIT_SOLVER, "SolverError", f"{exc}{where} {json.dumps(exc.diagnostics, default=str)}")
    except (OutputError, OSError) as exc:
        return _fail(EXIT_IO, type(exc).__name__, exc)
    except FleetError as exc:
        return _fail(EXIT_SOLVER, type(exc).__name__, exc)


if __name__ == "__main__":
    sys.exit(main())
