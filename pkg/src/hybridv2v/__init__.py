"""Discrete-event simulator of highway alert relaying toward roadside units
with greedy V2V forwarding, backward V2V recovery and LTE D2D fallback."""

from .config import (
    BUILTIN_SCENARIOS,
    ConfigError,
    D2dMode,
    ScenarioConfig,
    TimingModel,
    load_scenario,
    resolve_scenario,
    scenario_variants,
    validate,
)
from .engine import ScenarioError, SimResult, inject_dead_end, run, run_many
from .metrics import DeliveryRecord, SweepTable, aggregate, run_metrics, write_csv

__all__ = [
    "BUILTIN_SCENARIOS",
    "ConfigError",
    "D2dMode",
    "DeliveryRecord",
    "ScenarioConfig",
    "ScenarioError",
    "SimResult",
    "SweepTable",
    "TimingModel",
    "aggregate",
    "inject_dead_end",
    "load_scenario",
    "resolve_scenario",
    "run",
    "run_many",
    "run_metrics",
    "scenario_variants",
    "validate",
    "write_csv",
]
