"""
swarmcoord

A coordination kernel for robot swarms: one shared core (identities,
positions, tuples, templates, attribute predicates) under three
coordination substrates, plus a seeded simulator and an explicit-state
checker that run on every one of them.

Modules:
- kernel: values, tuples, templates, attribute maps and predicates
- world: arena geometry, neighbourhoods and movement intents
- tuplespace: attribute-addressed tuple repositories and processes
- stigmergy: timestamped replicas with last-writer-wins gossip
- interp: ISPL-subset parser and interpreted-system semantics
- engine: scenario interface, simulated network, simulator, checker, oracle
- scenarios: foraging and flocking on each substrate
- cli: command-line front end
"""

from .engine import (
    ExplicitScenario,
    InterpretedScenario,
    Scenario,
    Status,
    Trace,
    Verdict,
    check,
    estimate,
    simulate,
    state_space_stats,
)
from .errors import ISPLError, ScenarioConfigError, SwarmError
from .interp import InterpretedSystem, parse_ispl
from .scenarios import build_scenario

__version__ = "1.0.0"

__all__ = [
    'ExplicitScenario',
    'ISPLError',
    'InterpretedScenario',
    'InterpretedSystem',
    'Scenario',
    'ScenarioConfigError',
    'Status',
    'SwarmError',
    'Trace',
    'Verdict',
    'build_scenario',
    'check',
    'estimate',
    'parse_ispl',
    'simulate',
    'state_space_stats',
]
