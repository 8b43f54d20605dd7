"""
Exception hierarchy for swarmcoord.

Normal negative outcomes (a template that does not match, a blocked action,
a deadlock, an exhausted state budget) are returned as values. Exceptions are
reserved for malformed input and modelling bugs.
"""

from typing import Optional


class SwarmError(Exception):
    """Base class for every error raised by the package."""


class PredicateTypeError(SwarmError):
    """A predicate compares value kinds that can never be compared."""


class ScenarioConfigError(SwarmError):
    """A scenario configuration violates the builder's requirements."""


class MovementError(SwarmError):
    """A movement intent targets a cell outside the arena."""


class ProcessError(SwarmError):
    """A tuple-space process refers to an unbound variable or unknown definition."""


class ISPLError(SwarmError):
    """Base class for interpreted-system description errors."""


class ISPLSyntaxError(ISPLError):
    """The text does not follow the ISPL subset grammar."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UndeclaredIdentifierError(ISPLError):
    """An expression names a variable, agent or action that is not declared."""


class ISPLTypeError(ISPLError):
    """An expression mixes value kinds, or a value falls outside its domain."""


class DomainError(ISPLTypeError):
    """An evolution assigns a value outside the variable's declared domain."""


class ProtocolTotalityError(ISPLError):
    """A reachable local state enables no action."""

    def __init__(self, agent: str, state: Optional[dict] = None):
        super().__init__(f"agent {agent} has no enabled action in state {state}")
        self.agent = agent
        self.state = state


class EvolutionConflictError(ISPLError):
    """Two evolution rules of one agent assign one variable different values."""

    def __init__(self, agent: str, variable: str, rules: tuple):
        super().__init__(
            f"agent {agent}: rules {rules[0]} and {rules[1]} assign {variable} differently"
        )
        self.agent = agent
        self.variable = variable
        self.rules = rules


class EmptyInitError(ISPLError):
    """The InitStates constraint is unsatisfiable."""
