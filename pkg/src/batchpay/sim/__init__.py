"""Deterministic multi-actor simulation harness."""

from .config import ScenarioConfig, load_scenario_config, parse_scenario_config
from .oracle import LogView, oracle_balance, view_of
from .report import ScenarioReport, emit_report, parse_report, report_digest
from .scenario import SimRun, run_scenario, run_scenario_full

__all__ = [
    "LogView",
    "ScenarioConfig",
    "ScenarioReport",
    "SimRun",
    "emit_report",
    "load_scenario_config",
    "oracle_balance",
    "parse_report",
    "parse_scenario_config",
    "report_digest",
    "run_scenario",
    "run_scenario_full",
    "view_of",
]
