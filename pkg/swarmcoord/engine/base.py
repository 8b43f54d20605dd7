"""
Base classes for executable scenarios.

A Scenario exposes a finite (or budget-bounded) labelled transition system:
initial states, the enabled atomic transitions of a state, and named state
propositions. The simulator and the checker only ever talk to this interface.
"""

import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence

from ..interp.model import SystemSpec
from ..interp.semantics import InterpretedSystem

State = Hashable
PropositionFn = Callable[[State], bool]

DIGEST_SIZE = 8


class ScenarioKind(Enum):
    """Coordination substrate a scenario runs on."""
    TUPLE_SPACE = "tuple_space"
    STIGMERGY = "stigmergy"
    MESSAGE_PASSING = "message_passing"
    INTERPRETED_SYSTEM = "interpreted_system"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class Transition:
    """One enabled atomic step: who acts, what they do, and the resulting state."""
    actor: str
    action: str
    target: State

    @property
    def label(self) -> str:
        return f"{self.actor}: {self.action}"


def digest(text: str) -> str:
    """Short stable digest of a canonical state rendering."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=DIGEST_SIZE).hexdigest()


@dataclass
class Event:
    """A committed transition in a trace."""
    tick: int
    actor: str
    action: str
    delta: str                         # digest of the changed state parts
    state: str                         # digest of the state after the step

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tick': self.tick,
            'actor': self.actor,
            'action': self.action,
            'delta': self.delta,
            'state': self.state,
        }


@dataclass
class Trace:
    """
    Output of one simulation run.

    The JSON-lines rendering (header line, then one event per line) is the
    on-disk format; the visited states are kept in memory for validation.
    """
    scenario: str
    seed: int
    prng: str
    initial: str
    events: List[Event] = field(default_factory=list)
    states: List[State] = field(default_factory=list, repr=False)
    deadlocked: bool = False
    stopped_by: Optional[str] = None

    def __len__(self) -> int:
        return len(self.events)

    def header(self) -> Dict[str, Any]:
        return {
            'type': 'header',
            'scenario': self.scenario,
            'seed': self.seed,
            'prng': self.prng,
            'initial': self.initial,
        }

    def footer(self) -> Dict[str, Any]:
        return {
            'type': 'end',
            'ticks': len(self.events),
            'deadlocked': self.deadlocked,
            'stopped_by': self.stopped_by,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        for event in self.events:
            record = {'type': 'event', **event.to_dict()}
            lines.append(json.dumps(record, sort_keys=True))
        lines.append(json.dumps(self.footer(), sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.to_jsonl())


class Scenario(ABC):
    """
    Abstract base class for scenarios.

    Subclasses provide initial states and transitions; everything else has a
    usable default.
    """

    # States are plain values that compare equal after pickling
    value_states = False

    def __init__(self, name: str, kind: ScenarioKind, propositions: Optional[Mapping[str, PropositionFn]] = None):
        """
        Initialize the scenario.

        Args:
            name: Human-readable scenario name (recorded in traces)
            kind: Coordination substrate
            propositions: Named state predicates usable in formulas
        """
        self.name = name
        self.kind = kind
        self.propositions: Dict[str, PropositionFn] = dict(propositions or {})

    @abstractmethod
    def initial_states(self) -> List[State]:
        """
        All initial states, in a deterministic order.

        Returns:
            Non-empty list of states
        """
        pass

    @abstractmethod
    def transitions(self, state: State) -> List[Transition]:
        """
        Every enabled atomic transition of a state, in a deterministic order.

        Returns:
            List of Transition objects (empty means deadlock)
        """
        pass

    def successor_states(self, state: State) -> List[State]:
        """Targets of ``transitions(state)``, in the same order."""
        return [t.target for t in self.transitions(state)]

    def is_initial(self, state: State) -> bool:
        return state in set(self.initial_states())

    def sample_initial(self, rng) -> State:
        states = self.initial_states()
        if len(states) == 1:
            return states[0]
        return states[int(rng.integers(len(states)))]

    def describe(self, state: State) -> str:
        """Canonical human-readable rendering; equal states render equal."""
        return "\n".join(self.describe_parts(state))

    def describe_parts(self, state: State) -> Sequence[str]:
        return (repr(state),)

    def digest(self, state: State) -> str:
        return digest(self.describe(state))

    def delta(self, before: State, after: State) -> str:
        """Digest of the state parts a step changed."""
        old = self.describe_parts(before)
        new = self.describe_parts(after)
        changed = [f"{i}:{part}" for i, part in enumerate(new) if i >= len(old) or old[i] != part]
        return digest("\n".join(changed))

    def proposition(self, name: str, negated: bool = False) -> PropositionFn:
        """
        Look up a proposition by name; ``true``/``false`` are always defined.

        Raises:
            KeyError: if the scenario defines no such proposition
        """
        if name == "true":
            fn = _always(True)
        elif name == "false":
            fn = _always(False)
        elif name in self.propositions:
            fn = self.propositions[name]
        else:
            known = ", ".join(sorted(self.propositions)) or "none"
            raise KeyError(f"scenario {self.name} has no proposition {name!r} (known: {known})")
        if negated:
            return lambda state, fn=fn: not fn(state)
        return fn


def _always(value: bool) -> PropositionFn:
    return lambda state: value


class ExplicitScenario(Scenario):
    """A scenario given as an explicit finite graph over hashable states."""

    value_states = True

    def __init__(
        self,
        name: str,
        initial: Iterable[State],
        edges: Mapping[State, Sequence[State]],
        labels: Optional[Mapping[str, Iterable[State]]] = None,
    ):
        self._initial = list(initial)
        self._edges = {s: list(targets) for s, targets in edges.items()}
        props = {}
        for prop, states in (labels or {}).items():
            members = frozenset(states)
            props[prop] = lambda state, members=members: state in members
        super().__init__(name, ScenarioKind.EXPLICIT, props)

    def initial_states(self) -> List[State]:
        return list(self._initial)

    def transitions(self, state: State) -> List[Transition]:
        return [
            Transition("graph", f"{state}->{target}#{i}", target)
            for i, target in enumerate(self._edges.get(state, ()))
        ]

    def successor_states(self, state: State) -> List[State]:
        return list(self._edges.get(state, ()))


class InterpretedScenario(Scenario):
    """Adapter running an interpreted system under the engine."""

    value_states = True

    def __init__(self, system: InterpretedSystem, name: str = "interpreted"):
        self.system = system
        super().__init__(name, ScenarioKind.INTERPRETED_SYSTEM, system.propositions)

    @classmethod
    def from_spec(cls, spec: SystemSpec, name: str = "interpreted") -> "InterpretedScenario":
        return cls(InterpretedSystem(spec), name)

    def initial_states(self) -> List[State]:
        return list(self.system.enumerate_init())

    def is_initial(self, state: State) -> bool:
        return self.system.is_initial(state)

    def sample_initial(self, rng) -> State:
        return self.system.sample_init(rng)

    def transitions(self, state: State) -> List[Transition]:
        names = self.system.names
        return [
            Transition("joint", " ".join(f"{n}.{a}" for n, a in zip(names, joint)), successor)
            for joint, successor in self.system.joint_successors(state)
        ]

    def successor_states(self, state: State) -> List[State]:
        return self.system.successor_states(state)

    def describe_parts(self, state: State) -> Sequence[str]:
        return self.system.state_parts(state)


def as_scenario(obj, name: str = "interpreted") -> Scenario:
    """Accept a Scenario, an InterpretedSystem or a SystemSpec."""
    if isinstance(obj, Scenario):
        return obj
    if isinstance(obj, InterpretedSystem):
        return InterpretedScenario(obj, name)
    if isinstance(obj, SystemSpec):
        return InterpretedScenario.from_spec(obj, name)
    raise TypeError(f"cannot run {type(obj).__name__} as a scenario")
