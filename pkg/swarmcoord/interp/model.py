"""
AST of the interpreted-system description language.

Nodes are immutable dataclasses. Bare identifiers stay unresolved (``Name``)
until semantic analysis decides whether they denote a local variable or an
enumeration/action symbol.
"""

from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

ENVIRONMENT = "Environment"
TEMPORAL_OPERATORS = ("AG", "AF", "EF", "EG")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarType:
    """boolean, a bounded integer range lo..hi, or an enumeration."""
    kind: str  # "bool" | "range" | "enum"
    lo: int = 0
    hi: int = 0
    symbols: tuple = ()

    def domain(self) -> tuple:
        if self.kind == "bool":
            return (False, True)
        if self.kind == "range":
            return tuple(range(self.lo, self.hi + 1))
        return self.symbols

    @property
    def size(self) -> int:
        return len(self.domain())

    def contains(self, value) -> bool:
        if self.kind == "bool":
            return isinstance(value, bool)
        if self.kind == "range":
            return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi
        return value in self.symbols

    def __str__(self) -> str:
        if self.kind == "bool":
            return "boolean"
        if self.kind == "range":
            return f"{self.lo}..{self.hi}"
        return "{" + ", ".join(self.symbols) + "}"


BOOLEAN = VarType("bool")


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: VarType

    def __str__(self) -> str:
        return f"{self.name} : {self.type};"


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    """Base class of expressions."""

    def children(self) -> Iterator["Expr"]:
        return iter(())

    def walk(self) -> Iterator["Expr"]:
        yield self
        for child in self.children():
            yield from child.walk()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class Name(Expr):
    """An unqualified identifier: a local variable or a symbol."""
    name: str


@dataclass(frozen=True)
class Ref(Expr):
    """A qualified variable reference ``Agent.var``."""
    agent: str
    name: str


@dataclass(frozen=True)
class ActionRef(Expr):
    """The action performed by an agent (``Agent.Action``, or ``Action`` for the owner)."""
    agent: Optional[str] = None


@dataclass(frozen=True)
class NotExpr(Expr):
    operand: Expr

    def children(self):
        yield self.operand


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        yield self.left
        yield self.right


BOOLEAN_OPS = ("and", "or")
COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
ARITHMETIC_OPS = ("+", "-")

_PRECEDENCE = {"or": 1, "and": 2, **{op: 3 for op in COMPARISON_OPS}, "+": 4, "-": 4}


def _precedence(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, NotExpr):
        return 5
    return 6


def format_expr(expr: Expr) -> str:
    """Print an expression with the minimum parentheses needed to reparse it identically."""
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, Ref):
        return f"{expr.agent}.{expr.name}"
    if isinstance(expr, ActionRef):
        return "Action" if expr.agent is None else f"{expr.agent}.Action"
    if isinstance(expr, NotExpr):
        inner = format_expr(expr.operand)
        return f"!{inner}" if _precedence(expr.operand) >= 5 else f"!({inner})"
    if isinstance(expr, BinOp):
        mine = _precedence(expr)
        left = format_expr(expr.left)
        right = format_expr(expr.right)
        if _precedence(expr.left) < mine:
            left = f"({left})"
        if _precedence(expr.right) <= mine:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Agents and systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolRule:
    """``guard : {actions};``; a guard of None is the ``Other`` rule."""
    guard: Optional[Expr]
    actions: tuple

    @property
    def is_other(self) -> bool:
        return self.guard is None


@dataclass(frozen=True)
class Assignment:
    var: str
    expr: Expr


@dataclass(frozen=True)
class EvolutionRule:
    assignments: tuple
    guard: Expr
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        lhs = " and ".join(f"{a.var} = {format_expr(a.expr)}" for a in self.assignments)
        return f"{lhs} if {format_expr(self.guard)};"


@dataclass(frozen=True)
class AgentSpec:
    name: str
    obsvars: tuple = ()
    vars: tuple = ()
    actions: tuple = ()
    protocol: tuple = ()
    evolution: tuple = ()

    @property
    def is_environment(self) -> bool:
        return self.name == ENVIRONMENT

    def declarations(self) -> Tuple[VarDecl, ...]:
        return tuple(self.obsvars) + tuple(self.vars)

    def declaration(self, name: str) -> Optional[VarDecl]:
        for decl in self.declarations():
            if decl.name == name:
                return decl
        return None


@dataclass(frozen=True)
class Proposition:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Formula:
    """A temporal property ``OP p`` over a named proposition (or true/false), optionally negated."""
    op: str
    prop: str
    negated: bool = False

    def __post_init__(self):
        if self.op not in TEMPORAL_OPERATORS:
            raise ValueError(f"unknown temporal operator {self.op!r}")

    @property
    def is_universal(self) -> bool:
        return self.op.startswith("A")

    def __str__(self) -> str:
        return f"{self.op} {'!' if self.negated else ''}{self.prop}"


@dataclass(frozen=True)
class SystemSpec:
    """A parsed interpreted system: environment, agents, propositions, initial states, formulae."""
    environment: Optional[AgentSpec]
    agents: tuple
    evaluation: tuple = ()
    init: Optional[Expr] = None
    formulae: tuple = ()

    @property
    def participants(self) -> Tuple[AgentSpec, ...]:
        """Environment first (when present), then agents in declaration order."""
        head = (self.environment,) if self.environment is not None else ()
        return head + tuple(self.agents)

    def agent(self, name: str) -> AgentSpec:
        for spec in self.participants:
            if spec.name == name:
                return spec
        raise KeyError(name)

    def proposition(self, name: str) -> Optional[Proposition]:
        for prop in self.evaluation:
            if prop.name == name:
                return prop
        return None




def dump(spec: SystemSpec) -> str:
    """Structured-text debug dump of a parsed system."""
    lines = []
    for agent in spec.participants:
        lines.append(f"agent {agent.name}")
        for label, decls in (("obsvar", agent.obsvars), ("var", agent.vars)):
            for decl in decls:
                lines.append(f"  {label} {decl.name}: {decl.type}")
        lines.append(f"  actions: {', '.join(agent.actions)}")
        for rule in agent.protocol:
            guard = "Other" if rule.is_other else format_expr(rule.guard)
            lines.append(f"  protocol [{guard}] -> {{{', '.join(rule.actions)}}}")
        for rule in agent.evolution:
            lines.append(f"  evolution {rule}")
    for prop in spec.evaluation:
        lines.append(f"proposition {prop.name} := {format_expr(prop.expr)}")
    if spec.init is not None:
        lines.append(f"init {format_expr(spec.init)}")
    for formula in spec.formulae:
        lines.append(f"formula {formula}")
    return "\n".join(lines) + "\n"
