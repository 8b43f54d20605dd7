"""
Scenario builders: foraging and flocking on every coordination substrate.
"""

import logging
from pathlib import Path

from ..config import ScenarioConfig
from ..engine.base import InterpretedScenario, Scenario
from ..errors import ScenarioConfigError
from ..interp.parser import parse_ispl
from .flocking import (
    flocking_ispl,
    flocking_ispl_text,
    flocking_scel,
    flocking_scel_lamport,
    flocking_vstig,
    flocking_voter,
)
from .foraging import foraging_broadcast, foraging_ispl, foraging_ispl_text, foraging_scel
from .programs import AgentProgram, Outcome, ProgramScenario, ProgramState
from .spaces import TupleSpaceScenario

logger = logging.getLogger(__name__)

_BUILDERS = {
    'foraging_broadcast': foraging_broadcast,
    'foraging_scel': foraging_scel,
    'flocking_vstig': flocking_vstig,
    'flocking_voter': flocking_voter,
    'flocking_scel': flocking_scel,
    'flocking_scel_lamport': flocking_scel_lamport,
}


def load_ispl(path) -> InterpretedScenario:
    """Read, parse and validate an ISPL file as a scenario named after the file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioConfigError(f"cannot read {path}: {exc}") from None
    return InterpretedScenario.from_spec(parse_ispl(text), Path(path).stem)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """
    Build the scenario a config names.

    Raises:
        ScenarioConfigError: on inconsistent settings
        ISPLError: when an interpreted-system description is invalid
    """
    logger.debug("building scenario %s", cfg.scenario)
    if cfg.scenario == "ispl":
        return load_ispl(cfg.ispl_path)
    if cfg.scenario == "foraging_ispl":
        return InterpretedScenario.from_spec(foraging_ispl(cfg), "foraging_ispl")
    if cfg.scenario == "flocking_ispl":
        return InterpretedScenario.from_spec(flocking_ispl(cfg), "flocking_ispl")
    return _BUILDERS[cfg.scenario](cfg)


__all__ = [
    "AgentProgram",
    "Outcome",
    "ProgramScenario",
    "ProgramState",
    "TupleSpaceScenario",
    "build_scenario",
    "flocking_ispl",
    "flocking_ispl_text",
    "flocking_scel",
    "flocking_scel_lamport",
    "flocking_vstig",
    "flocking_voter",
    "foraging_broadcast",
    "foraging_ispl",
    "foraging_ispl_text",
    "foraging_scel",
    "load_ispl",
]
