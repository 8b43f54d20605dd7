"""
Tuple-space scenarios with world actuation.

Components talk to the world through their own repositories. A
``("moveTo", p)`` tuple starts travel towards p and a ``("randomWalk",)``
tuple one random step: the world takes either tuple in the same step that
puts it, clearing stale ``("reached", _)`` tuples. Further travel steps
interleave with process steps, and arrival is reported by depositing
``("reached", p)``. Positions are mirrored in the ``("pos", p)`` interface
tuple.
"""

import logging
from typing import List, Mapping, Optional, Sequence, Tuple

from ..engine.base import PropositionFn, Scenario, ScenarioKind, Transition
from ..kernel import KTuple, Position, ktuple
from ..tuplespace import Component, TupleSystem, step_process
from ..world import Arena, Mobility, MovementEvent, World, movement_outcomes, open_intent, open_walk

logger = logging.getLogger(__name__)

MOVE_TO = "moveTo"
RANDOM_WALK = "randomWalk"
REACHED = "reached"


def _is(item: KTuple, head: str, arity: int) -> bool:
    return item.arity == arity and item.head == head


def _actuation_tuple(comp: Component) -> Optional[KTuple]:
    for item in comp.repo.distinct():
        if _is(item, MOVE_TO, 2) or _is(item, RANDOM_WALK, 1):
            return item
    return None


class TupleSpaceScenario(Scenario):
    """Interleaves process steps of every component with world actuation steps."""

    def __init__(
        self,
        name: str,
        arena: Arena,
        initial: TupleSystem,
        propositions: Optional[Mapping[str, PropositionFn]] = None,
    ):
        super().__init__(name, ScenarioKind.TUPLE_SPACE, propositions)
        self.arena = arena
        if initial.mobility is None:
            initial = initial.with_mobility(Mobility())
        self._initial = initial

    def initial_states(self) -> List[TupleSystem]:
        return [self._initial]

    def _world(self, sys: TupleSystem) -> World:
        positions = {
            c.id: c.attrs.lookup("pos") for c in sys.components
            if isinstance(c.attrs.lookup("pos"), Position)
        }
        return World(self.arena, tuple(sorted(positions.items())), sys.mobility)

    def _sync(self, sys: TupleSystem, world: World, events: Sequence[MovementEvent]) -> TupleSystem:
        """Carry a world update back into the repositories."""
        sys = sys.with_mobility(world.mobility)
        for event in events:
            if event.kind == "moved":
                sys = sys.deposit(event.agent, ktuple("pos", event.position))
                comp = sys.component(event.agent)
                stale = comp.repo.remove_where(
                    lambda t, here=event.position: not (_is(t, REACHED, 2) and t[1] != here)
                )
                sys = sys.replace(comp.with_repo(stale))
            elif event.kind == "reached":
                sys = sys.deposit(event.agent, ktuple(REACHED, event.position))
        return sys

    def _start(self, sys: TupleSystem, comp: Component, item: KTuple) -> List[Tuple[TupleSystem, str]]:
        """Hand one moveTo or randomWalk tuple to the world."""
        if _is(item, MOVE_TO, 2):
            consumed = comp.repo.remove(item).remove_where(lambda t: not _is(t, REACHED, 2))
            base = sys.replace(comp.with_repo(consumed))
            world = open_intent(self._world(base), comp.id, item[1])
            return [
                (self._sync(base, moved, events), f"start {item}, at {moved.position(comp.id)}")
                for moved, events in movement_outcomes(world, comp.id)
            ]
        base = sys.replace(comp.with_repo(comp.repo.remove(item)))
        outcomes = movement_outcomes(open_walk(self._world(base), comp.id), comp.id)
        if not outcomes:
            return [(base, "walk blocked")]
        return [
            (self._sync(base, moved, events), f"walk to {moved.position(comp.id)}")
            for moved, events in outcomes
        ]

    def _settle(self, sys: TupleSystem) -> List[Tuple[TupleSystem, str]]:
        """Every way the world can take the pending actuation tuples, one at a time."""
        for comp in sys.components:
            item = _actuation_tuple(comp)
            if item is not None:
                return [
                    (settled, f"{note}; {more}" if more else note)
                    for started, note in self._start(sys, comp, item)
                    for settled, more in self._settle(started)
                ]
        return [(sys, "")]

    def _travel(self, sys: TupleSystem, comp: Component) -> List[Transition]:
        if sys.mobility.get(comp.id) is None:
            return []
        return [
            Transition(str(comp.id), f"move to {moved.position(comp.id)}", self._sync(sys, moved, events))
            for moved, events in movement_outcomes(self._world(sys), comp.id)
        ]

    def transitions(self, state: TupleSystem) -> List[Transition]:
        result: List[Transition] = []
        for comp in state.components:
            for index in range(len(comp.procs)):
                for outcome in step_process(state, comp.id, index):
                    for system, note in self._settle(outcome.system):
                        label = f"{outcome.label}; {note}" if note else outcome.label
                        result.append(Transition(str(comp.id), label, system))
            result.extend(self._travel(state, comp))
        return result

    def describe_parts(self, state: TupleSystem) -> Sequence[str]:
        parts = []
        for comp in state.components:
            procs = " | ".join(str(p) for p in comp.procs)
            parts.append(f"{comp.id} {comp.repo} [{procs}]")
        intents = ", ".join(f"{a}:{i.kind}{'' if i.target is None else i.target}" for a, i in state.mobility.intents)
        parts.append(f"intents{{{intents}}}")
        return tuple(parts)
