"""
Engine: scenario interface, simulated network, simulator and checker.
"""

from .base import (
    Event,
    ExplicitScenario,
    InterpretedScenario,
    Scenario,
    ScenarioKind,
    Trace,
    Transition,
    as_scenario,
)
from .checker import Path, StateSpaceStats, Status, Verdict, check, state_space_stats, validate_path
from .network import Network
from .oracle import oracle_check
from .simulator import Estimate, estimate, replay, run_seeds, simulate

__all__ = [
    "Estimate",
    "Event",
    "ExplicitScenario",
    "InterpretedScenario",
    "Network",
    "Path",
    "Scenario",
    "ScenarioKind",
    "StateSpaceStats",
    "Status",
    "Trace",
    "Transition",
    "Verdict",
    "as_scenario",
    "check",
    "estimate",
    "oracle_check",
    "replay",
    "run_seeds",
    "simulate",
    "state_space_stats",
    "validate_path",
]
