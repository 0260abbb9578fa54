import csv
import json

import pytest

from fleetpde import cli
from fleetpde.errors import SolverError


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_bundled_tables(capsys):
    code, out, err = run_cli(capsys, "validate", "paper-tables")
    assert code == 0 and out.splitlines()[0] == "OK"
    assert "I->IV: 1 bin(s), 2 step(s)" in out


def test_zero_demand_run(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "run", "zero-demand", "--steps", "6", "-o", str(tmp_path))
    assert code == 0
    with open(tmp_path / "revenue_decomposition.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["value"]) == 0.0 for r in rows)
    man = json.loads((tmp_path / "run_manifest.json").read_text())
    assert man["config"]["resolved"]["grid"]["n_sim_steps"] == 6
    assert "run_log.json" in man["outputs"]


def test_repeat_runs_are_byte_identical_apart_from_the_manifest(tmp_path, capsys):
    for d in ("a", "b"):
        assert run_cli(capsys, "run", "extreme", "--steps", "3", "--horizon", "3", "-o", str(tmp_path / d))[0] == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        if name != "run_manifest.json":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_sweep_writes_one_set_per_size(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "sweep", "extreme", "--steps", "12", "--fleet-sizes", "7500,15000,40000",
                           "--jobs", "2", "-o", str(tmp_path))
    assert code == 0
    for size in (7500, 15000, 40000):
        sub = tmp_path / f"fleet_{size}"
        assert (sub / f"state_timeseries_{size}.csv").exists() and (sub / f"run_log_{size}.json").exists()
    with open(tmp_path / "sweep_summary.csv") as fh:
        totals = [float(r["total"]) for r in csv.DictReader(fh)]
    assert len(totals) == 3 and totals[0] <= totals[1] + 1e-6 and totals[1] <= totals[2] + 1e-6


def test_report_with_annualization(tmp_path, capsys):
    assert run_cli(capsys, "run", "extreme", "--steps", "3", "-o", str(tmp_path / "e"))[0] == 0
    assert run_cli(capsys, "run", "moderate", "--steps", "3", "-o", str(tmp_path / "m"))[0] == 0
    code, out, _ = run_cli(capsys, "report", "extreme", "--steps", "3", "--log", str(tmp_path / "e" / "run_log.json"),
                           "--moderate-scenario", "moderate", "--moderate-log", str(tmp_path / "m" / "run_log.json"),
                           "--extreme-days", "10,12", "-o", str(tmp_path / "r"))
    assert code == 0 and "10 extreme days" in out
    with open(tmp_path / "r" / "annualization.csv") as fh:
        assert [r["extreme_days"] for r in csv.DictReader(fh)] == ["10", "12"]


def test_export_lp(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "export-lp", "extreme", "--window-start", "80", "-o", str(tmp_path))
    assert code == 0 and (tmp_path / "window_80.mps").read_text().startswith("NAME")


def test_output_root_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert run_cli(capsys, "run", "zero-demand", "--steps", "2")[0] == 0
    assert (tmp_path / "env" / "run_manifest.json").exists()


def test_seed_regenerates_builtin_demand(tmp_path, capsys):
    assert run_cli(capsys, "validate", "extreme", "--seed", "4")[0] == 0
    scenario_file = tmp_path / "s.json"
    from fleetpde import load_builtin, save_scenario
    save_scenario(load_builtin("extreme"), scenario_file)
    code, _, err = run_cli(capsys, "validate", str(scenario_file), "--seed", "4")
    assert code == 3 and err.startswith("ERROR ScenarioError:")


@pytest.mark.parametrize("argv, code, kind", [
    (["frobnicate"], 2, "UsageError"),
    (["run"], 2, "UsageError"),
    (["sweep", "extreme", "--fleet-sizes", "a,b"], 2, "UsageError"),
    (["sweep", "extreme", "--fleet-sizes", "0"], 2, "UsageError"),
    (["validate", "extreme", "--dt", "20"], 3, "ScenarioError"),
    (["validate", "extreme", "--dx", "0.3"], 3, "ScenarioError"),
    (["validate", "/no/such/file.json"], 3, "ScenarioError"),
])
def test_errors_map_to_exit_codes(capsys, argv, code, kind):
    got, _, err = run_cli(capsys, *argv)
    assert got == code
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith(f"ERROR {kind}:")


def test_solver_failure_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise SolverError("window LP at step 3 ended with status numerical", step=3, diagnostics={"rows": 1})
    monkeypatch.setattr(cli, "run", boom)
    code, _, err = run_cli(capsys, "run", "extreme", "-o", str(tmp_path))
    assert code == 4 and "step 3" in err


def test_unwritable_output_exit_code(tmp_path, capsys):
    blocker = tmp_path / "f"
    blocker.write_text("")
    code, _, err = run_cli(capsys, "run", "zero-demand", "--steps", "1", "-o", str(blocker / "x"))
    assert code == 5 and err.startswith("ERROR OutputError:")
