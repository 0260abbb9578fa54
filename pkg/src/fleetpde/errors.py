"""Exception hierarchy shared by every module."""


class FleetError(Exception):
    """Base class for all package errors."""


class DimensionError(FleetError, ValueError):
    """Array shapes disagree with the grid or node set."""


class ValidationError(FleetError, ValueError):
    pass


class ConfigurationError(FleetError, ValueError):
    """Grid/rate settings violate an invariant (CFL, SOE span, ...)."""


class InfeasibleControlError(FleetError):
    """A control vector would drive some density below the numerical floor."""


class ScenarioError(FleetError):
    """Scenario input is missing, malformed or inconsistent."""


class SolverError(FleetError):
    """An LP did not reach optimality; carries the step and diagnostics."""

    def __init__(self, message, step=None, diagnostics=None):
        super().__init__(message)
        self.step = step
        self.diagnostics = diagnostics or {}


class OutputError(FleetError, OSError):
    """An output file or directory could not be written."""
