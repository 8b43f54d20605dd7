"""
Tuple-space components with attribute-based addressing.

Each component owns a repository (a multiset of tuples), exposes an interface
of attributes mirrored from designated repository tuples, and runs processes
built from put/get/qry prefixes, choice and parametric invocation. Actions
target either the actor's own repository (SELF) or every other component
whose attributes satisfy a predicate.

Enabled-set functions are pure: they return every possible outcome and leave
the choice to the simulator or checker.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

from .errors import ProcessError
from .kernel import (
    AgentId,
    AttributeMap,
    Binder,
    Bindings,
    KTuple,
    Metric,
    Predicate,
    Template,
    Value,
    Var,
    euclidean,
    eval_predicate,
    format_value,
    match,
    value_kind,
)

logger = logging.getLogger(__name__)

MAX_UNFOLDING = 32


class _SelfTarget:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "self"

    __str__ = __repr__


SELF = _SelfTarget()
Target = Union[_SelfTarget, Predicate]


# ---------------------------------------------------------------------------
# Expressions used inside process terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThisAttr:
    """The acting component's own attribute (``this.pos``)."""
    name: str

    def __str__(self) -> str:
        return f"this.{self.name}"


@dataclass(frozen=True)
class Succ:
    """``var + 1``, saturating at bound when one is given."""
    var: str
    bound: Optional[int] = None

    def __str__(self) -> str:
        return f"{self.var}+1"


Expr = Union[Value, Var, ThisAttr, Succ]


def _expr_str(expr) -> str:
    if isinstance(expr, (Var, ThisAttr, Succ, Binder)):
        return str(expr)
    return format_value(expr)


@dataclass(frozen=True)
class TupleExpr:
    items: tuple

    def __str__(self) -> str:
        return "(" + ", ".join(_expr_str(i) for i in self.items) + ")"


@dataclass(frozen=True)
class TemplateExpr:
    slots: tuple

    def __str__(self) -> str:
        return "(" + ", ".join(_expr_str(s) for s in self.slots) + ")"


def texpr(*items) -> TupleExpr:
    return TupleExpr(tuple(items))


def tplexpr(*slots) -> TemplateExpr:
    return TemplateExpr(tuple(slots))


# ---------------------------------------------------------------------------
# Process terms. Terms are built once per scenario and compared by identity.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Put:
    target: Target
    tuple_expr: TupleExpr

    def __str__(self) -> str:
        return f"put{self.tuple_expr}@{_target_str(self.target)}"


@dataclass(frozen=True)
class Get:
    target: Target
    template_expr: TemplateExpr

    def __str__(self) -> str:
        return f"get{self.template_expr}@{_target_str(self.target)}"


@dataclass(frozen=True)
class Qry:
    target: Target
    template_expr: TemplateExpr

    def __str__(self) -> str:
        return f"qry{self.template_expr}@{_target_str(self.target)}"


Action = Union[Put, Get, Qry]


def _target_str(target: Target) -> str:
    return "self" if target is SELF else f"[{target}]"


class Process:
    """Base class of process terms."""


@dataclass(frozen=True, eq=False)
class Nil(Process):
    def __str__(self) -> str:
        return "nil"


NIL = Nil()


@dataclass(frozen=True, eq=False)
class Prefix(Process):
    action: Action
    then: Process

    def __str__(self) -> str:
        return f"{self.action}.{self.then}"


@dataclass(frozen=True, eq=False)
class Choice(Process):
    branches: tuple

    def __str__(self) -> str:
        return "(" + " + ".join(str(b) for b in self.branches) + ")"


@dataclass(frozen=True, eq=False)
class Call(Process):
    name: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}(" + ", ".join(_expr_str(a) for a in self.args) + ")"


def seq(*steps) -> Process:
    """``seq(a1, a2, ..., tail)`` builds a1.a2. ... .tail."""
    *actions, tail = steps
    process = tail
    for action in reversed(actions):
        process = Prefix(action, process)
    return process


def choice(*branches: Process) -> Process:
    return Choice(tuple(branches))


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple
    body: Process


@dataclass(frozen=True)
class ProcessState:
    """A process term closed by the values of its free variables."""
    term: Process
    env: tuple = ()  # ((name, value), ...) sorted

    @property
    def is_nil(self) -> bool:
        return isinstance(self.term, Nil)

    def bindings(self) -> Dict[str, Value]:
        return dict(self.env)

    def __str__(self) -> str:
        if not self.env:
            return str(self.term)
        env = ", ".join(f"{k}={format_value(v)}" for k, v in self.env)
        return f"{{{env}}} {self.term}"


def _closure(term: Process, env: Mapping[str, Value]) -> ProcessState:
    return ProcessState(term, tuple(sorted(env.items())))


# ---------------------------------------------------------------------------
# Repositories and components
# ---------------------------------------------------------------------------

def _memo_hash(obj, key: tuple) -> int:
    """Hash of an immutable state object, computed once per instance."""
    cached = obj.__dict__.get("_hash")
    if cached is None:
        cached = hash(key)
        object.__setattr__(obj, "_hash", cached)
    return cached


@dataclass(frozen=True)
class Repository:
    """A multiset of tuples in canonical (sorted) order."""
    counts: tuple = ()  # ((KTuple, multiplicity), ...)

    def __hash__(self) -> int:
        return _memo_hash(self, self.counts)

    @classmethod
    def of(cls, tuples: Iterable[KTuple]) -> "Repository":
        repo = cls()
        for item in tuples:
            repo = repo.add(item)
        return repo

    def count(self, item: KTuple) -> int:
        for stored, n in self.counts:
            if stored == item:
                return n
        return 0

    def __len__(self) -> int:
        return sum(n for _, n in self.counts)

    def distinct(self) -> List[KTuple]:
        return [stored for stored, _ in self.counts]

    def add(self, item: KTuple, bound: Optional[int] = None, singleton_heads: Iterable[str] = ()) -> "Repository":
        """
        Insert one copy of item.

        Args:
            bound: Maximum multiplicity per tuple; further copies are absorbed
            singleton_heads: Heads of interface tuples; a new one replaces the old
        """
        table = dict(self.counts)
        if item.arity >= 2 and item.head in tuple(singleton_heads):
            table = {t: n for t, n in table.items() if not (t.arity >= 2 and t.head == item.head)}
        n = table.get(item, 0) + 1
        table[item] = n if bound is None else min(n, bound)
        return Repository(tuple(sorted(table.items(), key=lambda p: p[0].sort_key())))

    def remove(self, item: KTuple) -> "Repository":
        table = dict(self.counts)
        if table.get(item, 0) == 0:
            raise KeyError(f"{item} is not in the repository")
        table[item] -= 1
        if table[item] == 0:
            del table[item]
        return Repository(tuple(sorted(table.items(), key=lambda p: p[0].sort_key())))

    def remove_where(self, keep: Callable[[KTuple], bool]) -> "Repository":
        return Repository(tuple((t, n) for t, n in self.counts if keep(t)))

    def matching(self, tpl: Template) -> List[Tuple[KTuple, Bindings]]:
        """Distinct tuples matching tpl, each with its bindings, in canonical order."""
        found = []
        for stored, _ in self.counts:
            bindings = match(tpl, stored)
            if bindings is not None:
                found.append((stored, bindings))
        return found

    def __str__(self) -> str:
        return "{" + ", ".join(str(t) if n == 1 else f"{t}x{n}" for t, n in self.counts) + "}"


@dataclass(frozen=True)
class Component:
    """
    A tuple-space component.

    Attributes named in the interface are read from repository tuples whose
    head is the attribute name: the second item is the exposed value. Tuples
    whose head is listed in ``set_heads`` are kept at multiplicity one.
    """
    id: AgentId
    repo: Repository
    interface: tuple = ()
    procs: tuple = ()
    set_heads: tuple = ()

    def __hash__(self) -> int:
        return _memo_hash(self, (self.id, self.repo, self.interface, self.procs, self.set_heads))

    @cached_property
    def attrs(self) -> AttributeMap:
        values = {}
        for item in self.repo.distinct():
            if item.arity >= 2 and item.head in self.interface:
                values[item.head] = item[1]
        return AttributeMap(values)

    def bound_for(self, item: KTuple, bound: Optional[int]) -> Optional[int]:
        return 1 if item.head in self.set_heads else bound

    def with_repo(self, repo: Repository) -> "Component":
        return Component(self.id, repo, self.interface, self.procs, self.set_heads)

    def with_proc(self, index: int, proc: ProcessState) -> "Component":
        procs = list(self.procs)
        procs[index] = proc
        return Component(self.id, self.repo, self.interface, tuple(procs), self.set_heads)


def make_component(
    agent: int,
    tuples: Iterable[KTuple],
    interface: Iterable[str] = (),
    procs: Iterable[Union[Process, ProcessState]] = (),
    set_heads: Iterable[str] = (),
) -> Component:
    states = tuple(p if isinstance(p, ProcessState) else ProcessState(p) for p in procs)
    return Component(AgentId(agent), Repository.of(tuples), tuple(interface), states, tuple(set_heads))


@dataclass(frozen=True)
class TupleSystem:
    """All components of a tuple-space system plus the static program."""
    components: tuple
    definitions: Mapping[str, Definition] = field(default_factory=dict, compare=False, hash=False, repr=False)
    metric: Metric = field(default=euclidean, compare=False, hash=False, repr=False)
    repo_bound: Optional[int] = field(default=None, compare=False, hash=False, repr=False)
    mobility: object = None

    def __post_init__(self):
        ordered = tuple(sorted(self.components, key=lambda c: c.id))
        ids = [c.id for c in ordered]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate component ids: {ids}")
        object.__setattr__(self, "components", ordered)

    def __hash__(self) -> int:
        return _memo_hash(self, (self.components, self.mobility))

    def component(self, agent: AgentId) -> Component:
        for comp in self.components:
            if comp.id == agent:
                return comp
        raise KeyError(f"no component {agent}")

    def replace(self, comp: Component) -> "TupleSystem":
        return TupleSystem(
            tuple(comp if c.id == comp.id else c for c in self.components),
            self.definitions, self.metric, self.repo_bound, self.mobility,
        )

    def with_mobility(self, mobility) -> "TupleSystem":
        return TupleSystem(self.components, self.definitions, self.metric, self.repo_bound, mobility)

    def deposit(self, agent: AgentId, item: KTuple) -> "TupleSystem":
        comp = self.component(agent)
        return self.replace(comp.with_repo(comp.repo.add(item, comp.bound_for(item, self.repo_bound), comp.interface)))


class ActionOutcome(NamedTuple):
    system: TupleSystem
    bindings: Bindings
    source: Optional[AgentId]


class StepOutcome(NamedTuple):
    system: TupleSystem
    continuation: ProcessState
    label: str


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------

def _recipients(sys: TupleSystem, actor: AgentId, target: Target) -> List[Component]:
    if target is SELF:
        return [sys.component(actor)]
    self_attrs = sys.component(actor).attrs
    return [
        c for c in sys.components
        if c.id != actor and eval_predicate(target, self_attrs, c.attrs, sys.metric)
    ]


def act_put(sys: TupleSystem, actor: AgentId, target: Target, t: KTuple) -> TupleSystem:
    """
    Insert t into the actor's repository (SELF) or into every other component
    satisfying the predicate at this instant. Never blocks; an empty
    recipient set leaves the system unchanged.
    """
    for comp in _recipients(sys, actor, target):
        sys = sys.deposit(comp.id, t)
    return sys


def _retrieve(sys: TupleSystem, actor: AgentId, target: Target, tpl: Template, destructive: bool) -> List[ActionOutcome]:
    outcomes = []
    for comp in _recipients(sys, actor, target):
        for item, bindings in comp.repo.matching(tpl):
            system = sys.replace(comp.with_repo(comp.repo.remove(item))) if destructive else sys
            outcomes.append(ActionOutcome(system, bindings, comp.id))
    return outcomes


def act_get(sys: TupleSystem, actor: AgentId, target: Target, tpl: Template) -> List[ActionOutcome]:
    """
    Withdraw one tuple matching tpl.

    Returns:
        One outcome per (satisfying component, distinct matching tuple); an
        empty list means the action is disabled
    """
    return _retrieve(sys, actor, target, tpl, destructive=True)


def act_qry(sys: TupleSystem, actor: AgentId, target: Target, tpl: Template) -> List[ActionOutcome]:
    """Like act_get but non-destructive: every outcome carries the unchanged system."""
    return _retrieve(sys, actor, target, tpl, destructive=False)


# ---------------------------------------------------------------------------
# Process stepping
# ---------------------------------------------------------------------------

def _eval_expr(expr, env: Mapping[str, Value], actor: Component) -> Value:
    if isinstance(expr, Var):
        if expr.name not in env:
            raise ProcessError(f"unbound variable {expr.name} in component {actor.id}")
        return env[expr.name]
    if isinstance(expr, ThisAttr):
        value = actor.attrs.lookup(expr.name)
        if value is None:
            raise ProcessError(f"component {actor.id} exposes no attribute {expr.name}")
        return value
    if isinstance(expr, Succ):
        base = _eval_expr(Var(expr.var), env, actor)
        if value_kind(base) != "int":
            raise ProcessError(f"{expr.var}+1 needs an integer, got {base!r}")
        return base + 1 if expr.bound is None else min(base + 1, expr.bound)
    return expr


def _resolve_target(target: Target, env: Mapping[str, Value]) -> Target:
    return target if target is SELF else target.substitute(env)


def _action_outcomes(sys: TupleSystem, actor: AgentId, action: Action, env: Mapping[str, Value]) -> List[Tuple[TupleSystem, Bindings, str]]:
    comp = sys.component(actor)
    target = _resolve_target(action.target, env)
    if isinstance(action, Put):
        item = KTuple(tuple(_eval_expr(e, env, comp) for e in action.tuple_expr.items))
        recipients = _recipients(sys, actor, target)
        label = f"put{item}@" + ("self" if target is SELF else ",".join(str(c.id) for c in recipients) or "none")
        return [(act_put(sys, actor, target, item), {}, label)]
    tpl = Template(tuple(
        s if isinstance(s, Binder) else _eval_expr(s, env, comp) for s in action.template_expr.slots
    ))
    verb = "get" if isinstance(action, Get) else "qry"
    fn = act_get if isinstance(action, Get) else act_qry
    return [
        (o.system, o.bindings, f"{verb}{tpl.instantiate(o.bindings)}@{'self' if target is SELF else o.source}")
        for o in fn(sys, actor, target, tpl)
    ]


def _unfold(term: Process, env: Mapping[str, Value], definitions: Mapping[str, Definition], actor: Component, depth: int = 0) -> Tuple[Process, Dict[str, Value]]:
    """Replace a leading invocation by the definition body with its parameters bound."""
    while isinstance(term, Call):
        if depth > MAX_UNFOLDING:
            raise ProcessError(f"unguarded recursion through {term.name}")
        if term.name not in definitions:
            raise ProcessError(f"unknown process {term.name}")
        definition = definitions[term.name]
        if len(definition.params) != len(term.args):
            raise ProcessError(f"{term.name} expects {len(definition.params)} arguments")
        env = {p: _eval_expr(a, env, actor) for p, a in zip(definition.params, term.args)}
        term = definition.body
        depth += 1
    return term, dict(env)


def _step_term(sys: TupleSystem, actor: AgentId, term: Process, env: Dict[str, Value]) -> List[Tuple[TupleSystem, ProcessState, str]]:
    term, env = _unfold(term, env, sys.definitions, sys.component(actor))
    if isinstance(term, Nil):
        return []
    if isinstance(term, Choice):
        results = []
        for branch in term.branches:
            results.extend(_step_term(sys, actor, branch, env))
        return results
    if isinstance(term, Prefix):
        results = []
        for system, bindings, label in _action_outcomes(sys, actor, term.action, env):
            continuation = dict(env)
            continuation.update(bindings)
            then, closed = _unfold(term.then, continuation, sys.definitions, system.component(actor))
            results.append((system, _closure(then, closed), label))
        return results
    raise ProcessError(f"unsupported process term {term!r}")


def step_process(sys: TupleSystem, actor: AgentId, index: int = 0) -> List[StepOutcome]:
    """
    Every outcome of the first actions available to one process of a component.

    Both branches of a choice contribute; an outcome commits to its branch.
    Each returned system already has the continuation installed.

    Args:
        sys: Current system
        actor: Acting component
        index: Which of the component's processes to step

    Returns:
        List of StepOutcome (empty when the process is nil or blocked)
    """
    proc = sys.component(actor).procs[index]
    outcomes = []
    for system, continuation, label in _step_term(sys, actor, proc.term, proc.bindings()):
        comp = system.component(actor)
        installed = system.replace(comp.with_proc(index, continuation))
        outcomes.append(StepOutcome(installed, continuation, label))
    return outcomes
