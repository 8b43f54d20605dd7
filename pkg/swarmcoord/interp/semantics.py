"""
Semantics of interpreted systems: protocols, synchronous joint steps,
initial states and propositions.

A global state is a plain tuple holding one value per declared variable, laid
out participant by participant (environment first) in declaration order, so
equal valuations are equal tuples and hash equal. Expressions are compiled
once into closures over (state, joint action).
"""

import itertools
import logging
import math
import operator
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from ..errors import (
    DomainError,
    EmptyInitError,
    EvolutionConflictError,
    ISPLError,
    ISPLTypeError,
    ProtocolTotalityError,
    UndeclaredIdentifierError,
)
from .model import (
    ARITHMETIC_OPS,
    BOOLEAN_OPS,
    ActionRef,
    AgentSpec,
    BinOp,
    BoolLit,
    Expr,
    IntLit,
    Name,
    NotExpr,
    Ref,
    SystemSpec,
    VarType,
    format_expr,
)

logger = logging.getLogger(__name__)

GlobalState = tuple
JointAction = tuple
Compiled = Callable[[GlobalState, Optional[JointAction]], object]

TOTALITY_CHECK_LIMIT = 10 ** 5
_CACHE_LIMIT = 2_000_000

_COMPARE = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class _Scope:
    """Where an expression appears, which decides what it may read."""

    def __init__(self, owner: Optional[AgentSpec], allow_actions: bool):
        self.owner = owner
        self.allow_actions = allow_actions

    @property
    def is_global(self) -> bool:
        return self.owner is None


class InterpretedSystem:
    """
    A validated interpreted system ready for simulation and checking.

    Construction resolves every identifier and type-checks every expression;
    errors surface as ISPLError subclasses.
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.participants: Tuple[AgentSpec, ...] = spec.participants
        names = [a.name for a in self.participants]
        if len(names) != len(set(names)):
            raise ISPLError(f"duplicate agent names: {names}")
        self._index = {name: i for i, name in enumerate(names)}

        self.slots: List[Tuple[str, str, VarType]] = []
        self._slot = {}
        for agent in self.participants:
            if agent.obsvars and not agent.is_environment:
                raise ISPLError(f"agent {agent.name}: only the Environment declares Obsvars")
            seen = set()
            for decl in agent.declarations():
                if decl.name in seen:
                    raise ISPLError(f"agent {agent.name} declares {decl.name} twice")
                seen.add(decl.name)
                self._slot[(agent.name, decl.name)] = len(self.slots)
                self.slots.append((agent.name, decl.name, decl.type))
            if not agent.actions:
                raise ISPLError(f"agent {agent.name} declares no actions")
            if len(set(agent.actions)) != len(agent.actions):
                raise ISPLError(f"agent {agent.name} declares an action twice")

        self._symbols = set()
        for _, _, vtype in self.slots:
            if vtype.kind == "enum":
                self._symbols.update(vtype.symbols)
        for agent in self.participants:
            self._symbols.update(agent.actions)

        self._protocols = [self._compile_protocol(a) for a in self.participants]
        self._evolutions = [self._compile_evolution(a) for a in self.participants]
        self._protocol_keys = [_getter(reads) for _, _, reads in self._protocols]
        self._update_keys = [(_getter(reads), _getter(actions)) for _, reads, actions in self._evolutions]
        self._protocol_cache: Dict[tuple, tuple] = {}
        self._evolution_cache: Dict[tuple, tuple] = {}

        global_scope = _Scope(None, allow_actions=False)
        self._propositions: Dict[str, Callable[[GlobalState], bool]] = {}
        for prop in spec.evaluation:
            fn = self._compile_bool(prop.expr, global_scope, f"proposition {prop.name}")
            self._propositions[prop.name] = lambda state, fn=fn: bool(fn(state, None))
        for formula in spec.formulae:
            if formula.prop not in ("true", "false") and formula.prop not in self._propositions:
                raise UndeclaredIdentifierError(f"formula {formula} names an undefined proposition {formula.prop}")
        self._pins, self._residual = self._compile_init(spec.init)

    # -- layout --------------------------------------------------------------

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.participants)

    def slot(self, agent: str, var: str) -> int:
        try:
            return self._slot[(agent, var)]
        except KeyError:
            raise UndeclaredIdentifierError(f"{agent}.{var} is not declared") from None

    def value(self, state: GlobalState, agent: str, var: str):
        return state[self.slot(agent, var)]

    def valuation(self, state: GlobalState) -> Dict[str, object]:
        return {f"{agent}.{var}": state[i] for i, (agent, var, _) in enumerate(self.slots)}

    def state_parts(self, state: GlobalState) -> Tuple[str, ...]:
        """``Agent.var=value`` strings in slot order, booleans written the ISPL way."""
        return tuple(f"{agent}.{var}={_fmt(state[i])}" for i, (agent, var, _) in enumerate(self.slots))

    def make_state(self, values: Dict[str, object]) -> GlobalState:
        """Build a state from ``{"Agent.var": value}``; every variable must be given."""
        missing = [f"{a}.{v}" for a, v, _ in self.slots if f"{a}.{v}" not in values]
        if missing:
            raise ISPLError(f"state is missing {', '.join(missing)}")
        state = tuple(values[f"{a}.{v}"] for a, v, _ in self.slots)
        for (agent, var, vtype), value in zip(self.slots, state):
            if not vtype.contains(value):
                raise DomainError(f"{agent}.{var} = {value!r} is outside {vtype}")
        return state

    # -- expression compilation ----------------------------------------------

    def _resolve_var(self, agent: str, name: str, scope: _Scope) -> Tuple[int, VarType]:
        if agent not in self._index:
            raise UndeclaredIdentifierError(f"unknown agent {agent}")
        spec = self.participants[self._index[agent]]
        decl = spec.declaration(name)
        if decl is None:
            raise UndeclaredIdentifierError(f"{agent}.{name} is not declared")
        if not scope.is_global and agent != scope.owner.name:
            if not spec.is_environment:
                raise UndeclaredIdentifierError(
                    f"agent {scope.owner.name} cannot observe {agent}.{name}"
                )
            if decl not in spec.obsvars:
                raise UndeclaredIdentifierError(
                    f"agent {scope.owner.name} cannot observe {agent}.{name}: only Obsvars are observable"
                )
        return self._slot[(agent, name)], decl.type

    def _compile(self, expr: Expr, scope: _Scope) -> Tuple[Compiled, tuple]:
        if isinstance(expr, BoolLit):
            value = expr.value
            return (lambda s, a: value), ("bool",)
        if isinstance(expr, IntLit):
            value = expr.value
            return (lambda s, a: value), ("int",)
        if isinstance(expr, Name):
            if scope.owner is not None and scope.owner.declaration(expr.name) is not None:
                return self._var_access(*self._resolve_var(scope.owner.name, expr.name, scope))
            if expr.name in self._symbols:
                symbol = expr.name
                return (lambda s, a: symbol), ("symbol", symbol)
            raise UndeclaredIdentifierError(f"undeclared identifier {expr.name}")
        if isinstance(expr, Ref):
            return self._var_access(*self._resolve_var(expr.agent, expr.name, scope))
        if isinstance(expr, ActionRef):
            if not scope.allow_actions:
                raise ISPLTypeError(f"{format_expr(expr)} may only appear in evolution guards")
            agent = expr.agent if expr.agent is not None else scope.owner.name
            if agent not in self._index:
                raise UndeclaredIdentifierError(f"unknown agent {agent}")
            index = self._index[agent]
            return (lambda s, a: a[index]), ("action", agent)
        if isinstance(expr, NotExpr):
            fn, kind = self._compile(expr.operand, scope)
            if kind[0] != "bool":
                raise ISPLTypeError(f"! applied to a non-boolean: {format_expr(expr)}")
            return (lambda s, a: not fn(s, a)), ("bool",)
        if isinstance(expr, BinOp):
            return self._compile_binop(expr, scope)
        raise ISPLTypeError(f"unsupported expression {expr!r}")

    @staticmethod
    def _var_access(index: int, vtype: VarType) -> Tuple[Compiled, tuple]:
        if vtype.kind == "bool":
            kind = ("bool",)
        elif vtype.kind == "range":
            kind = ("int",)
        else:
            kind = ("enum", vtype.symbols)
        return (lambda s, a: s[index]), kind

    def _compile_binop(self, expr: BinOp, scope: _Scope) -> Tuple[Compiled, tuple]:
        left, lk = self._compile(expr.left, scope)
        right, rk = self._compile(expr.right, scope)
        op = expr.op
        if op in BOOLEAN_OPS:
            if lk[0] != "bool" or rk[0] != "bool":
                raise ISPLTypeError(f"{op} needs boolean operands: {format_expr(expr)}")
            if op == "and":
                return (lambda s, a: left(s, a) and right(s, a)), ("bool",)
            return (lambda s, a: left(s, a) or right(s, a)), ("bool",)
        if op in ARITHMETIC_OPS:
            if lk[0] != "int" or rk[0] != "int":
                raise ISPLTypeError(f"{op} needs integer operands: {format_expr(expr)}")
            fn = operator.add if op == "+" else operator.sub
            return (lambda s, a: fn(left(s, a), right(s, a))), ("int",)
        compare = _COMPARE[op]
        if op in ("<", "<=", ">", ">="):
            if lk[0] != "int" or rk[0] != "int":
                raise ISPLTypeError(f"{op} needs integer operands: {format_expr(expr)}")
        else:
            self._check_equality(expr, lk, rk)
        return (lambda s, a: compare(left(s, a), right(s, a))), ("bool",)

    def _symbols_of(self, kind: tuple) -> Optional[tuple]:
        if kind[0] == "enum":
            return kind[1]
        if kind[0] == "action":
            return self.participants[self._index[kind[1]]].actions
        if kind[0] == "symbol":
            return (kind[1],)
        return None

    def _check_equality(self, expr: BinOp, lk: tuple, rk: tuple) -> None:
        if lk[0] in ("int", "bool") or rk[0] in ("int", "bool"):
            if lk[0] != rk[0]:
                raise ISPLTypeError(f"cannot compare {lk[0]} with {rk[0]}: {format_expr(expr)}")
            return
        left, right = self._symbols_of(lk), self._symbols_of(rk)
        if not set(left) & set(right):
            if "action" in (lk[0], rk[0]):
                raise ISPLTypeError(f"no such action in {format_expr(expr)}")
            raise DomainError(f"values can never be equal in {format_expr(expr)}")

    def _compile_bool(self, expr: Expr, scope: _Scope, where: str) -> Compiled:
        fn, kind = self._compile(expr, scope)
        if kind[0] != "bool":
            raise ISPLTypeError(f"{where}: expected a boolean condition, got {format_expr(expr)}")
        return fn

    def _reads(self, exprs: Sequence[Expr], owner: AgentSpec) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Variable slots and participant action indices an expression list depends on."""
        slots, actions = set(), set()
        for root in exprs:
            for node in root.walk():
                if isinstance(node, Name) and owner.declaration(node.name) is not None:
                    slots.add(self._slot[(owner.name, node.name)])
                elif isinstance(node, Ref):
                    slots.add(self._slot[(node.agent, node.name)])
                elif isinstance(node, ActionRef):
                    actions.add(self._index[node.agent if node.agent is not None else owner.name])
        return tuple(sorted(slots)), tuple(sorted(actions))

    # -- protocols -----------------------------------------------------------

    def _compile_protocol(self, agent: AgentSpec):
        scope = _Scope(agent, allow_actions=False)
        rules, other = [], None
        for rule in agent.protocol:
            for action in rule.actions:
                if action not in agent.actions:
                    raise UndeclaredIdentifierError(f"agent {agent.name}: protocol names undeclared action {action}")
            if rule.is_other:
                other = rule.actions
            else:
                rules.append((self._compile_bool(rule.guard, scope, f"{agent.name} protocol"), rule.actions))
        reads, _ = self._reads([r.guard for r in agent.protocol if not r.is_other], agent)
        return rules, other, reads

    def enabled_actions(self, agent: str, state: GlobalState) -> Tuple[str, ...]:
        """
        Actions an agent may perform in a global state.

        The union of the action sets of every matching rule, in declaration
        order; the Other rule applies only when no explicit rule matches.

        Raises:
            ProtocolTotalityError: if the result is empty
        """
        index = self._index[agent]
        rules, other, _ = self._protocols[index]
        key = (index, self._protocol_keys[index](state))
        cached = self._protocol_cache.get(key)
        if cached is not None:
            return cached
        chosen = set()
        for guard, actions in rules:
            if guard(state, None):
                chosen.update(actions)
        if not chosen and other is not None:
            chosen.update(other)
        if not chosen:
            raise ProtocolTotalityError(agent, self._local(index, state))
        result = tuple(a for a in self.participants[index].actions if a in chosen)
        self._remember(self._protocol_cache, key, result)
        return result

    def _local(self, index: int, state: GlobalState) -> Dict[str, object]:
        name = self.participants[index].name
        return {var: state[i] for i, (agent, var, _) in enumerate(self.slots) if agent == name}

    def check_totality(self, limit: int = TOTALITY_CHECK_LIMIT) -> List[ProtocolTotalityError]:
        """
        Look for local states that enable no action.

        Only agents whose protocol reads at most ``limit`` distinct local
        valuations are checked. Findings are logged as warnings and returned.
        """
        findings = []
        base = [vtype.domain()[0] for _, _, vtype in self.slots]
        for index, agent in enumerate(self.participants):
            rules, other, reads = self._protocols[index]
            if other is not None:
                continue
            domains = [self.slots[i][2].domain() for i in reads]
            if math.prod(len(d) for d in domains) > limit:
                logger.info("skipping totality check for %s: local space too large", agent.name)
                continue
            for combo in itertools.product(*domains):
                state = list(base)
                for i, value in zip(reads, combo):
                    state[i] = value
                state = tuple(state)
                if not any(guard(state, None) for guard, _ in rules):
                    local = {self.slots[i][1]: v for i, v in zip(reads, combo)}
                    finding = ProtocolTotalityError(agent.name, local)
                    logger.warning("protocol of %s is not total: %s", agent.name, local)
                    findings.append(finding)
                    break
        return findings

    # -- evolution -----------------------------------------------------------

    def _compile_evolution(self, agent: AgentSpec):
        scope = _Scope(agent, allow_actions=True)
        compiled = []
        exprs = []
        for rule in agent.evolution:
            guard = self._compile_bool(rule.guard, scope, f"{agent.name} evolution line {rule.line}")
            assigns = []
            for assignment in rule.assignments:
                decl = agent.declaration(assignment.var)
                if decl is None:
                    raise UndeclaredIdentifierError(
                        f"agent {agent.name} assigns undeclared variable {assignment.var}"
                    )
                fn, kind = self._compile(assignment.expr, scope)
                self._check_assignable(agent, decl.name, decl.type, kind, assignment.expr)
                assigns.append((self._slot[(agent.name, decl.name)], decl.name, decl.type, fn))
                exprs.append(assignment.expr)
            exprs.append(rule.guard)
            compiled.append((rule, guard, tuple(assigns)))
        reads, actions = self._reads(exprs, agent)
        return compiled, reads, actions

    def _check_assignable(self, agent: AgentSpec, var: str, vtype: VarType, kind: tuple, expr: Expr) -> None:
        expected = {"bool": "bool", "range": "int", "enum": "enum"}[vtype.kind]
        if expected == "enum":
            symbols = self._symbols_of(kind) if kind[0] in ("enum", "symbol") else None
            if symbols is None:
                raise ISPLTypeError(f"{agent.name}.{var} takes {vtype}, got {format_expr(expr)}")
            if not set(symbols) & set(vtype.symbols):
                raise DomainError(f"{agent.name}.{var} = {format_expr(expr)} is outside {vtype}")
        elif kind[0] != expected:
            raise ISPLTypeError(f"{agent.name}.{var} takes {vtype}, got {format_expr(expr)}")

    def _updates(self, index: int, state: GlobalState, joint: JointAction) -> tuple:
        compiled = self._evolutions[index][0]
        state_key, action_key = self._update_keys[index]
        key = (index, state_key(state), action_key(joint))
        cached = self._evolution_cache.get(key)
        if cached is not None:
            return cached
        agent = self.participants[index].name
        assigned: Dict[int, Tuple[object, object]] = {}
        for rule, guard, assigns in compiled:
            if not guard(state, joint):
                continue
            for slot, var, vtype, fn in assigns:
                value = fn(state, joint)
                if not vtype.contains(value):
                    raise DomainError(f"{agent}.{var} = {value!r} is outside {vtype} (line {rule.line})")
                if slot in assigned and assigned[slot][0] != value:
                    raise EvolutionConflictError(agent, var, (str(assigned[slot][1]), str(rule)))
                assigned[slot] = (value, rule)
        result = tuple(sorted((slot, value) for slot, (value, _) in assigned.items()))
        self._remember(self._evolution_cache, key, result)
        return result

    @staticmethod
    def _remember(cache: dict, key, value) -> None:
        if len(cache) >= _CACHE_LIMIT:
            cache.clear()
        cache[key] = value

    def joint_successors(self, state: GlobalState) -> List[Tuple[JointAction, GlobalState]]:
        """
        Every joint action available in a state with its unique successor.

        Joint actions enumerate the Cartesian product of the participants'
        enabled actions (environment first). All matching evolution rules of
        every participant fire simultaneously; unassigned variables persist.
        """
        options = [self.enabled_actions(agent.name, state) for agent in self.participants]
        if not options:
            return []
        results = []
        for joint in itertools.product(*options):
            successor = list(state)
            for index in range(len(self.participants)):
                for slot, value in self._updates(index, state, joint):
                    successor[slot] = value
            results.append((joint, tuple(successor)))
        return results

    def successor_states(self, state: GlobalState) -> List[GlobalState]:
        """Successors in ``joint_successors`` order, without the joint actions."""
        return [successor for _, successor in self.joint_successors(state)]

    # -- initial states ------------------------------------------------------

    def _compile_init(self, init: Optional[Expr]):
        pins: Dict[int, set] = {}
        residual: List[Expr] = []
        scope = _Scope(None, allow_actions=False)
        if init is not None:
            self._compile_bool(init, scope, "InitStates")
            for conjunct in _conjuncts(init):
                pinned = self._pin(conjunct)
                if pinned is None:
                    residual.append(conjunct)
                    continue
                slot, value = pinned
                allowed = {value} if self.slots[slot][2].contains(value) else set()
                pins[slot] = pins[slot] & allowed if slot in pins else allowed
        checks = [self._compile_bool(c, scope, "InitStates") for c in residual]
        return pins, checks

    def _pin(self, expr: Expr) -> Optional[Tuple[int, object]]:
        if not isinstance(expr, BinOp) or expr.op != "=":
            return None
        for var, lit in ((expr.left, expr.right), (expr.right, expr.left)):
            if isinstance(var, Ref) and isinstance(lit, (IntLit, BoolLit, Name)):
                value = lit.name if isinstance(lit, Name) else lit.value
                return self._slot[(var.agent, var.name)], value
        return None

    def _init_domains(self) -> List[tuple]:
        return [
            tuple(sorted(self._pins[i], key=repr)) if i in self._pins else vtype.domain()
            for i, (_, _, vtype) in enumerate(self.slots)
        ]

    def enumerate_init(self) -> Iterator[GlobalState]:
        """
        Lazily yield every valuation satisfying InitStates, in canonical order.

        Raises:
            EmptyInitError: once exhausted, if nothing satisfied the constraint
        """
        produced = False
        for combo in itertools.product(*self._init_domains()):
            if all(check(combo, None) for check in self._residual):
                produced = True
                yield combo
        if not produced:
            raise EmptyInitError("InitStates is unsatisfiable")

    def is_initial(self, state: GlobalState) -> bool:
        if len(state) != len(self.slots):
            return False
        for i, (_, _, vtype) in enumerate(self.slots):
            if not vtype.contains(state[i]) or (i in self._pins and state[i] not in self._pins[i]):
                return False
        return all(check(state, None) for check in self._residual)

    def count_init(self) -> int:
        """Number of initial states; computed from domain sizes when every conjunct pins a variable."""
        if not self._residual:
            count = math.prod(len(d) for d in self._init_domains())
            if count == 0:
                raise EmptyInitError("InitStates is unsatisfiable")
            return count
        return sum(1 for _ in self.enumerate_init())

    def sample_init(self, rng) -> GlobalState:
        """Draw one initial state uniformly with a numpy Generator."""
        domains = self._init_domains()
        if not self._residual:
            if any(len(d) == 0 for d in domains):
                raise EmptyInitError("InitStates is unsatisfiable")
            return tuple(d[int(rng.integers(len(d)))] for d in domains)
        states = list(self.enumerate_init())
        return states[int(rng.integers(len(states)))]

    # -- propositions --------------------------------------------------------

    @property
    def propositions(self) -> Dict[str, Callable[[GlobalState], bool]]:
        return dict(self._propositions)


def _getter(indices: Tuple[int, ...]) -> Callable[[tuple], object]:
    if not indices:
        return lambda values: ()
    return operator.itemgetter(*indices)


def _conjuncts(expr: Expr) -> List[Expr]:
    if isinstance(expr, BinOp) and expr.op == "and":
        return _conjuncts(expr.left) + _conjuncts(expr.right)
    return [expr]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def enabled_actions(system: InterpretedSystem, agent: str, state: GlobalState) -> Tuple[str, ...]:
    return system.enabled_actions(agent, state)


def joint_successors(system: InterpretedSystem, state: GlobalState) -> List[Tuple[JointAction, GlobalState]]:
    return system.joint_successors(state)


def enumerate_init(system: InterpretedSystem) -> Iterator[GlobalState]:
    return system.enumerate_init()
