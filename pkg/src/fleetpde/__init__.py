"""Aggregate EV-fleet dispatch between taxi trips and outage backup power."""

__version__ = "0.1.0"

from .controller import RunLog, initial_state, run, sweep
from .dispatch import DispatchLp, VariableIndex, build_lp, extract_controls
from .dynamics import (Census, ChargeRates, ControlVector, StepFlows, advect, project_controls, state_census, step,
                       step_flows, transfer)
from .errors import (ConfigurationError, DimensionError, FleetError, InfeasibleControlError, OutputError,
                     ScenarioError, SolverError, ValidationError)
from .grid import FleetState, SoeGrid, TransitEntry, empty_state, init_uniform_idle, total_vehicles
from .reporting import AnnualizationTable, RevenueReport, annualize, emit_outputs, revenue_report
from .scenario import (DemandProfile, OdTable, PriceTable, ScenarioSpec, load_builtin, load_scenario,
                       save_scenario, synthetic_demand, validate_demand)
from .simplex import LpProblem, LpSolution, solve

__all__ = [
    "AnnualizationTable", "Census", "ChargeRates", "ConfigurationError", "ControlVector", "DemandProfile",
    "DimensionError", "DispatchLp", "FleetError", "FleetState", "InfeasibleControlError", "LpProblem",
    "LpSolution", "OdTable", "OutputError", "PriceTable", "RevenueReport", "RunLog", "ScenarioError",
    "ScenarioSpec", "SoeGrid", "SolverError", "StepFlows", "TransitEntry", "ValidationError", "VariableIndex",
    "advect", "annualize", "build_lp", "emit_outputs", "empty_state", "extract_controls", "init_uniform_idle",
    "initial_state", "load_builtin", "load_scenario", "project_controls", "revenue_report", "run",
    "save_scenario", "solve", "state_census", "step", "step_flows", "sweep", "synthetic_demand",
    "total_vehicles", "transfer", "validate_demand",
]
