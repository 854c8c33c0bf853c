"""Scenario configuration, traffic sources, experiment runner and CLI."""

from .experiment import (ComparisonReport, PairedComparison, PolicyAggregate,
                         aggregate, compare_policies, emit, run_experiment,
                         sign_test)
from .scenario import FlowConfig, Scenario, ScenarioError, load_scenario
from .traffic import CbrSource, RunResult, run_scenario

__all__ = [
    "CbrSource",
    "ComparisonReport",
    "FlowConfig",
    "PairedComparison",
    "PolicyAggregate",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "aggregate",
    "compare_policies",
    "emit",
    "load_scenario",
    "run_experiment",
    "run_scenario",
    "sign_test",
]
