"""
Message-passing agent programs on the simulated network.

A ProgramScenario runs one AgentProgram per agent. Its atomic transitions
are agent steps, in agent-id order, followed by the delivery of the head
message of every non-empty queue. Broadcasts reach the sender's current
neighbours that listen to the message kind; a full queue drops the message.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Hashable, List, Mapping, Optional, Sequence

import networkx as nx

from ..engine.base import PropositionFn, Scenario, ScenarioKind, Transition
from ..engine.network import Network
from ..kernel import AgentId, Position
from ..world import Arena, neighbours

logger = logging.getLogger(__name__)


def message_kind(message) -> str:
    kind = message.kind
    return kind.value if isinstance(kind, Enum) else kind


@dataclass(frozen=True)
class Outcome:
    """One possible result of a program reacting to a step or a message."""
    local: Hashable
    label: str
    sends: tuple = ()                  # ((recipient or None for broadcast, message), ...)
    position: Optional[Position] = None


@dataclass(frozen=True)
class StepContext:
    """What an agent can see while it reacts."""
    arena: Arena
    position: Position
    neighbours: FrozenSet[AgentId]
    positions: Mapping[AgentId, Position]


@dataclass(frozen=True)
class ProgramState:
    locals: tuple      # ((AgentId, local), ...) sorted by id
    positions: tuple   # ((AgentId, Position), ...) sorted by id
    network: Network

    def local(self, agent: AgentId) -> Hashable:
        for owner, local in self.locals:
            if owner == agent:
                return local
        raise KeyError(f"no agent {agent}")

    def position_map(self) -> Dict[AgentId, Position]:
        return dict(self.positions)


class AgentProgram(ABC):
    """
    Abstract base class for the behaviour of one agent.

    Programs are stateless objects; everything that changes lives in the
    local state they are handed and return.
    """

    listens: FrozenSet[str] = frozenset()

    @abstractmethod
    def on_step(self, me: AgentId, local: Hashable, ctx: StepContext) -> List[Outcome]:
        """
        React to being scheduled.

        Args:
            me: Id of the acting agent
            local: Its current local state
            ctx: Arena, own position and current neighbours

        Returns:
            Every possible outcome (empty when the agent has nothing to do)
        """
        pass

    def on_message(self, me: AgentId, local: Hashable, sender: AgentId, message, ctx: StepContext) -> List[Outcome]:
        """React to a delivered message; ignoring it is the default."""
        return [Outcome(local, "ignore")]

    def describe(self, local: Hashable) -> str:
        return repr(local)


class ProgramScenario(Scenario):
    """Agents running AgentPrograms over bounded FIFO channels."""

    def __init__(
        self,
        name: str,
        kind: ScenarioKind,
        arena: Arena,
        programs: Mapping[AgentId, AgentProgram],
        initial: Sequence[ProgramState],
        comm_range: int = 1,
        graph: Optional[nx.Graph] = None,
        propositions: Optional[Mapping[str, PropositionFn]] = None,
    ):
        """
        Initialize the scenario.

        Args:
            arena: Arena the agents live in
            programs: Program of every agent
            initial: Initial states
            comm_range: Broadcast range when no graph is given
            graph: Static neighbour graph overriding the range
        """
        super().__init__(name, kind, propositions)
        self.arena = arena
        self.programs = dict(programs)
        self._initial = list(initial)
        self.comm_range = comm_range
        self.graph = graph

    def initial_states(self) -> List[ProgramState]:
        return list(self._initial)

    def _context(self, agent: AgentId, positions: Dict[AgentId, Position]) -> StepContext:
        if self.graph is not None:
            nearby = frozenset(self.graph.neighbors(agent))
        else:
            nearby = neighbours(self.arena, positions, agent, self.comm_range)
        return StepContext(self.arena, positions[agent], nearby, positions)

    def _apply(self, state: ProgramState, agent: AgentId, outcome: Outcome, ctx: StepContext) -> ProgramState:
        locals_ = tuple((a, outcome.local if a == agent else l) for a, l in state.locals)
        positions = state.positions
        if outcome.position is not None:
            positions = tuple((a, outcome.position if a == agent else p) for a, p in positions)
        network = state.network
        for recipient, message in outcome.sends:
            kind = message_kind(message)
            if recipient is None:
                receivers = [r for r in sorted(ctx.neighbours) if kind in self.programs[r].listens]
                network = network.broadcast(agent, receivers, message)
            elif kind in self.programs[recipient].listens:
                network, _ = network.send(agent, recipient, message)
        return ProgramState(locals_, positions, network)

    def transitions(self, state: ProgramState) -> List[Transition]:
        positions = state.position_map()
        result: List[Transition] = []
        for agent, local in state.locals:
            ctx = self._context(agent, positions)
            for outcome in self.programs[agent].on_step(agent, local, ctx):
                result.append(Transition(str(agent), outcome.label, self._apply(state, agent, outcome, ctx)))
        for sender, receiver, message in state.network.heads():
            _, network = state.network.pop(sender, receiver)
            popped = ProgramState(state.locals, state.positions, network)
            ctx = self._context(receiver, positions)
            program = self.programs[receiver]
            for outcome in program.on_message(receiver, state.local(receiver), sender, message, ctx):
                label = f"recv {message} from {sender}: {outcome.label}"
                result.append(Transition(str(receiver), label, self._apply(popped, receiver, outcome, ctx)))
        return result

    def describe_parts(self, state: ProgramState) -> Sequence[str]:
        positions = state.position_map()
        parts = [
            f"{agent}@{positions[agent]} {self.programs[agent].describe(local)}"
            for agent, local in state.locals
        ]
        parts.append(str(state.network))
        return tuple(parts)
