"""
Interpreted systems: an ISPL-subset front end and the synchronous product semantics.
"""

from .model import AgentSpec, Formula, SystemSpec, VarDecl, VarType, dump
from .parser import format_ispl, parse_formula, parse_ispl, parse_with_diagnostics
from .semantics import (
    GlobalState,
    InterpretedSystem,
    enabled_actions,
    enumerate_init,
    joint_successors,
)

__all__ = [
    "AgentSpec",
    "Formula",
    "GlobalState",
    "InterpretedSystem",
    "SystemSpec",
    "VarDecl",
    "VarType",
    "dump",
    "enabled_actions",
    "enumerate_init",
    "format_ispl",
    "joint_successors",
    "parse_formula",
    "parse_ispl",
    "parse_with_diagnostics",
]
