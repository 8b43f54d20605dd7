"""
Value model shared by every coordination substrate.

Provides:
- Values: integers, symbols, agent ids, grid positions and the four grid
  directions
- Tuples and templates with binders, plus template matching
- Attribute maps (the exposed interface of a component)
- The predicate language used for attribute-based addressing

Everything here is immutable once constructed.
"""

import math
import operator
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Union

from .errors import PredicateTypeError


class Direction(Enum):
    """Grid headings used by the interpreted-system scenarios."""
    UP = "Up"
    DOWN = "Down"
    LEFT = "Left"
    RIGHT = "Right"

    @property
    def delta(self) -> "Position":
        return _DIRECTION_DELTAS[self]

    def __str__(self) -> str:
        return self.value


class Position(NamedTuple):
    """A grid cell; (1, 1) is the lower-left corner."""
    x: int
    y: int

    def __str__(self) -> str:
        return f"({self.x},{self.y})"


_DIRECTION_DELTAS = {
    Direction.UP: Position(0, 1),
    Direction.DOWN: Position(0, -1),
    Direction.LEFT: Position(-1, 0),
    Direction.RIGHT: Position(1, 0),
}


@dataclass(frozen=True, order=True)
class AgentId:
    """Opaque identity of an agent (a non-negative integer)."""
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int) or self.value < 0:
            raise ValueError(f"agent id must be a non-negative integer, got {self.value!r}")

    def __str__(self) -> str:
        return f"#{self.value}"


Value = Union[int, str, AgentId, Position, Direction]

# Kind names, in sort order
_KIND_RANK = {"int": 0, "symbol": 1, "agent": 2, "position": 3, "direction": 4}
ORDERED_KINDS = frozenset({"int", "agent"})


def value_kind(value: Value) -> str:
    """
    Classify a value.

    Raises:
        TypeError: if the object is not a kernel value (floats, bools, None...)
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not kernel values")
    if isinstance(value, Position):
        return "position"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "symbol"
    if isinstance(value, AgentId):
        return "agent"
    if isinstance(value, Direction):
        return "direction"
    raise TypeError(f"not a kernel value: {value!r}")


def value_sort_key(value: Value) -> tuple:
    """Total order over values of mixed kinds, used for canonical encodings."""
    kind = value_kind(value)
    if kind == "agent":
        payload = value.value
    elif kind == "direction":
        payload = value.value
    else:
        payload = value
    return (_KIND_RANK[kind], payload)


def format_value(value: Value) -> str:
    if isinstance(value, str):
        return f'"{value}"'
    return str(value)


@dataclass(frozen=True)
class KTuple:
    """A knowledge tuple: an ordered, non-empty list of values."""
    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ValueError("tuples must have arity >= 1")
        for item in items:
            value_kind(item)
        object.__setattr__(self, "items", items)

    @property
    def arity(self) -> int:
        return len(self.items)

    @property
    def head(self) -> Value:
        return self.items[0]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Value]:
        return iter(self.items)

    def __getitem__(self, index: int) -> Value:
        return self.items[index]

    def sort_key(self) -> tuple:
        return tuple(value_sort_key(v) for v in self.items)

    def __str__(self) -> str:
        return "(" + ", ".join(format_value(v) for v in self.items) + ")"


def ktuple(*items: Value) -> KTuple:
    """Shorthand constructor: ``ktuple("food", Position(3, 4))``."""
    return KTuple(items)


@dataclass(frozen=True)
class Binder:
    """A template slot that captures the corresponding tuple item (``?name``)."""
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Bindings = Dict[str, Value]


@dataclass(frozen=True)
class Template:
    """A pattern over tuples: each slot is a literal value or a binder."""
    slots: tuple

    def __post_init__(self):
        slots = tuple(self.slots)
        if not slots:
            raise ValueError("templates must have at least one slot")
        names = [s.name for s in slots if isinstance(s, Binder)]
        if len(names) != len(set(names)):
            raise ValueError(f"binder names must be unique within a template: {names}")
        for slot in slots:
            if not isinstance(slot, Binder):
                value_kind(slot)
        object.__setattr__(self, "slots", slots)

    @property
    def binders(self) -> List[str]:
        return [s.name for s in self.slots if isinstance(s, Binder)]

    def instantiate(self, bindings: Mapping[str, Value]) -> KTuple:
        """Replace every binder by its bound value."""
        return KTuple(
            tuple(bindings[s.name] if isinstance(s, Binder) else s for s in self.slots)
        )

    def __str__(self) -> str:
        return "(" + ", ".join(
            str(s) if isinstance(s, Binder) else format_value(s) for s in self.slots
        ) + ")"


def template(*slots) -> Template:
    """Shorthand: ``template("food", Binder("f"))``."""
    return Template(slots)


def match(tpl: Template, item: KTuple) -> Optional[Bindings]:
    """
    Match a tuple against a template.

    Returns:
        The bindings when arities agree and every literal slot equals the
        corresponding item, otherwise None.
    """
    if len(tpl.slots) != len(item.items):
        return None
    bindings: Bindings = {}
    for slot, value in zip(tpl.slots, item.items):
        if isinstance(slot, Binder):
            bindings[slot.name] = value
        elif slot != value or value_kind(slot) != value_kind(value):
            return None
    return bindings


class AttributeMap:
    """
    Named values exposed by a component.

    Lookups of absent names return None; no kernel value is ever None, so
    absence is always distinguishable.
    """

    __slots__ = ("_entries", "_index")

    def __init__(self, entries: Union[Mapping[str, Value], Iterable[tuple], None] = None):
        pairs = dict(entries.items() if isinstance(entries, Mapping) else (entries or ()))
        for value in pairs.values():
            value_kind(value)
        self._entries = tuple(sorted(pairs.items()))
        self._index = dict(self._entries)

    def lookup(self, name: str) -> Optional[Value]:
        return self._index.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> tuple:
        return self._entries

    def with_value(self, name: str, value: Value) -> "AttributeMap":
        updated = dict(self._index)
        updated[name] = value
        return AttributeMap(updated)

    def __eq__(self, other) -> bool:
        return isinstance(other, AttributeMap) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        return "AttributeMap({" + ", ".join(f"{k}: {format_value(v)}" for k, v in self._entries) + "})"


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttrRef:
    """Reference to an attribute of the target, or of the evaluator with on_self."""
    name: str
    on_self: bool = False

    def __str__(self) -> str:
        return f"self.{self.name}" if self.on_self else self.name


@dataclass(frozen=True)
class Literal:
    value: Value

    def __post_init__(self):
        value_kind(self.value)

    def __str__(self) -> str:
        return format_value(self.value)


@dataclass(frozen=True)
class Var:
    """A free variable, filled in by the process layer before evaluation."""
    name: str

    def __str__(self) -> str:
        return self.name


Operand = Union[AttrRef, Literal, Var]
Metric = Callable[[Position, Position], float]

COMPARISONS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
ORDERING_OPS = frozenset({"<", "<=", ">", ">="})


def euclidean(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


class _Unsatisfiable(Exception):
    """Raised internally when an operand cannot take part in a comparison."""


class Predicate:
    """Base class of the predicate AST."""

    def references(self) -> Iterator[AttrRef]:
        return iter(())

    def _eval(self, ctx: "_EvalContext") -> bool:
        raise NotImplementedError

    def substitute(self, env: Mapping[str, Value]) -> "Predicate":
        return self


@dataclass(frozen=True)
class _EvalContext:
    self_attrs: AttributeMap
    target_attrs: AttributeMap
    metric: Metric

    def resolve(self, operand: Operand) -> Value:
        if isinstance(operand, Literal):
            return operand.value
        if isinstance(operand, Var):
            raise PredicateTypeError(f"unbound variable {operand.name} in predicate")
        attrs = self.self_attrs if operand.on_self else self.target_attrs
        value = attrs.lookup(operand.name)
        if value is None:
            raise _Unsatisfiable(operand)
        return value


def _check_literal_pair(op: str, left: Operand, right: Operand) -> None:
    for side in (left, right):
        if isinstance(side, Literal) and op in ORDERING_OPS and value_kind(side.value) not in ORDERED_KINDS:
            raise PredicateTypeError(f"{op} is undefined on {value_kind(side.value)} values")
    if isinstance(left, Literal) and isinstance(right, Literal):
        if value_kind(left.value) != value_kind(right.value):
            raise PredicateTypeError(
                f"cannot compare {value_kind(left.value)} with {value_kind(right.value)}"
            )


def _as_operand(raw) -> Operand:
    if isinstance(raw, (AttrRef, Literal, Var)):
        return raw
    return Literal(raw)


def _substitute_operand(operand: Operand, env: Mapping[str, Value]) -> Operand:
    if isinstance(operand, Var) and operand.name in env:
        return Literal(env[operand.name])
    return operand


@dataclass(frozen=True)
class Const(Predicate):
    value: bool

    def _eval(self, ctx) -> bool:
        return self.value

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Compare(Predicate):
    op: str
    left: Operand
    right: Operand

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise PredicateTypeError(f"unknown comparison {self.op!r}")
        _check_literal_pair(self.op, self.left, self.right)

    def references(self):
        return (o for o in (self.left, self.right) if isinstance(o, AttrRef))

    def _eval(self, ctx) -> bool:
        left, right = ctx.resolve(self.left), ctx.resolve(self.right)
        if value_kind(left) != value_kind(right):
            if self.op in ORDERING_OPS:
                raise _Unsatisfiable(self)
            return self.op == "!="
        if self.op in ORDERING_OPS and value_kind(left) not in ORDERED_KINDS:
            raise _Unsatisfiable(self)
        return COMPARISONS[self.op](left, right)

    def substitute(self, env):
        return Compare(self.op, _substitute_operand(self.left, env), _substitute_operand(self.right, env))

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Within(Predicate):
    """``dist(target_pos, self_pos) <= radius`` under the supplied metric."""
    radius: Operand
    target_pos: Operand = AttrRef("pos")
    self_pos: Operand = AttrRef("pos", on_self=True)

    def __post_init__(self):
        if isinstance(self.radius, Literal) and (value_kind(self.radius.value) != "int" or self.radius.value < 0):
            raise PredicateTypeError(f"distance radius must be a non-negative integer, got {self.radius}")
        for side in (self.target_pos, self.self_pos):
            if isinstance(side, Literal) and value_kind(side.value) != "position":
                raise PredicateTypeError(f"distance operands must be positions, got {side}")

    def references(self):
        return (o for o in (self.radius, self.target_pos, self.self_pos) if isinstance(o, AttrRef))

    def _eval(self, ctx) -> bool:
        radius = ctx.resolve(self.radius)
        a, b = ctx.resolve(self.target_pos), ctx.resolve(self.self_pos)
        if value_kind(radius) != "int" or value_kind(a) != "position" or value_kind(b) != "position":
            raise _Unsatisfiable(self)
        return ctx.metric(a, b) <= radius

    def substitute(self, env):
        return Within(
            _substitute_operand(self.radius, env),
            _substitute_operand(self.target_pos, env),
            _substitute_operand(self.self_pos, env),
        )

    def __str__(self) -> str:
        return f"dist({self.target_pos}, {self.self_pos}) <= {self.radius}"


@dataclass(frozen=True)
class And(Predicate):
    parts: tuple

    def references(self):
        for part in self.parts:
            yield from part.references()

    def _eval(self, ctx) -> bool:
        results = [p._eval(ctx) for p in self.parts]
        return all(results)

    def substitute(self, env):
        return And(tuple(p.substitute(env) for p in self.parts))

    def __str__(self) -> str:
        return " and ".join(f"({p})" for p in self.parts)


@dataclass(frozen=True)
class Or(Predicate):
    parts: tuple

    def references(self):
        for part in self.parts:
            yield from part.references()

    def _eval(self, ctx) -> bool:
        results = [p._eval(ctx) for p in self.parts]
        return any(results)

    def substitute(self, env):
        return Or(tuple(p.substitute(env) for p in self.parts))

    def __str__(self) -> str:
        return " or ".join(f"({p})" for p in self.parts)


@dataclass(frozen=True)
class Not(Predicate):
    part: Predicate

    def references(self):
        return self.part.references()

    def _eval(self, ctx) -> bool:
        return not self.part._eval(ctx)

    def substitute(self, env):
        return Not(self.part.substitute(env))

    def __str__(self) -> str:
        return f"not ({self.part})"


# Builders

def attr(name: str) -> AttrRef:
    return AttrRef(name)


def self_attr(name: str) -> AttrRef:
    return AttrRef(name, on_self=True)


def compare(left, op: str, right) -> Compare:
    """``compare(attr("task"), "=", "idle")``; raw values become literals."""
    return Compare(op, _as_operand(left), _as_operand(right))


def within(radius, target_pos=None, self_pos=None) -> Within:
    return Within(
        _as_operand(radius),
        _as_operand(target_pos) if target_pos is not None else AttrRef("pos"),
        _as_operand(self_pos) if self_pos is not None else AttrRef("pos", on_self=True),
    )


def all_of(*parts: Predicate) -> Predicate:
    return And(tuple(parts))


def any_of(*parts: Predicate) -> Predicate:
    return Or(tuple(parts))


def negate(part: Predicate) -> Predicate:
    return Not(part)


def eval_predicate(
    p: Predicate,
    self_attrs: AttributeMap,
    target_attrs: AttributeMap,
    metric: Metric = euclidean,
) -> bool:
    """
    Evaluate a predicate for one (evaluator, target) pair.

    A predicate that reads an attribute absent from either map, or that
    orders values of incompatible kinds, is false as a whole.

    Args:
        p: Predicate to evaluate
        self_attrs: Attributes of the evaluating component (``self.`` refs)
        target_attrs: Attributes of the candidate target
        metric: Distance used by ``Within`` nodes

    Returns:
        True iff the target satisfies the predicate
    """
    for ref in p.references():
        attrs = self_attrs if ref.on_self else target_attrs
        if ref.name not in attrs:
            return False
    try:
        return p._eval(_EvalContext(self_attrs, target_attrs, metric))
    except _Unsatisfiable:
        return False
