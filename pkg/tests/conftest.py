import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fleetpde import load_builtin, revenue_report, run  # noqa: E402

FLEET_SIZES = (7500, 15000, 40000)

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, passed: bool, detail: str):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


class FullDayRuns:
    """Lazily simulated full days on the bundled scenarios, shared by the session."""

    def __init__(self):
        self._runs = {}
        self.seconds = {}
        self.scenarios = {name: load_builtin(name) for name in ("extreme", "moderate")}

    def log(self, name, fleet_size):
        key = (name, fleet_size)
        if key not in self._runs:
            t0 = time.perf_counter()
            self._runs[key] = run(self.scenarios[name].with_fleet_size(fleet_size))
            self.seconds[key] = time.perf_counter() - t0
        return self._runs[key]

    def report(self, name, fleet_size):
        return revenue_report(self.log(name, fleet_size), self.scenarios[name].with_fleet_size(fleet_size))

    def all(self):
        return [(name, size, self.log(name, size)) for name in ("extreme", "moderate") for size in FLEET_SIZES]


@pytest.fixture(scope="session")
def full_days():
    return FullDayRuns()
