"""
Arena geometry, neighbourhoods and movement actuation.

Range tests use Euclidean distance on cells (with minimal wrap-around deltas
on a torus); movement is 4-directional, one cell per activation.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from .errors import MovementError
from .kernel import AgentId, Direction, Position

logger = logging.getLogger(__name__)


class Topology(Enum):
    BOUNDED = "bounded"
    TOROIDAL = "toroidal"


@dataclass(frozen=True)
class Arena:
    """A width x height grid; valid cells satisfy 1 <= x <= width, 1 <= y <= height."""
    width: int
    height: int
    topology: Topology = Topology.BOUNDED

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"arena dimensions must be positive, got {self.width}x{self.height}")

    @property
    def toroidal(self) -> bool:
        return self.topology is Topology.TOROIDAL

    def contains(self, pos: Position) -> bool:
        return 1 <= pos.x <= self.width and 1 <= pos.y <= self.height

    def cells(self) -> List[Position]:
        return [Position(x, y) for x in range(1, self.width + 1) for y in range(1, self.height + 1)]

    def deltas(self, a: Position, b: Position) -> Tuple[int, int]:
        """Signed displacement from a to b, shortest way round on a torus."""
        dx, dy = b.x - a.x, b.y - a.y
        if self.toroidal:
            dx = _wrap_delta(dx, self.width)
            dy = _wrap_delta(dy, self.height)
        return dx, dy

    def distance(self, a: Position, b: Position) -> float:
        dx, dy = self.deltas(a, b)
        return math.hypot(dx, dy)

    def shift(self, pos: Position, dx: int, dy: int) -> Optional[Position]:
        """Cell reached by a displacement; None when it leaves a bounded arena."""
        x, y = pos.x + dx, pos.y + dy
        if self.toroidal:
            return Position((x - 1) % self.width + 1, (y - 1) % self.height + 1)
        moved = Position(x, y)
        return moved if self.contains(moved) else None

    def neighbours4(self, pos: Position) -> List[Position]:
        """Valid 4-neighbour cells in Up, Down, Left, Right order, without duplicates."""
        cells: List[Position] = []
        for direction in Direction:
            cell = self.shift(pos, direction.delta.x, direction.delta.y)
            if cell is not None and cell != pos and cell not in cells:
                cells.append(cell)
        return cells


def _wrap_delta(delta: int, size: int) -> int:
    delta %= size
    return delta - size if delta > size // 2 else delta


def neighbours(
    arena: Arena,
    positions: Mapping[AgentId, Position],
    self_id: AgentId,
    range_: int,
) -> FrozenSet[AgentId]:
    """
    Agents (excluding self) whose distance from self is at most range_.

    Args:
        arena: Arena providing the metric
        positions: Position of every agent
        self_id: The observing agent
        range_: Non-negative sensing/communication range in cells

    Returns:
        Frozen set of neighbouring agent ids
    """
    here = positions[self_id]
    return frozenset(
        other for other, pos in positions.items()
        if other != self_id and arena.distance(here, pos) <= range_
    )


@dataclass(frozen=True)
class Intent:
    """A movement intent: walk one random step, or travel to a target cell."""
    kind: str  # "moveTo" | "walk"
    target: Optional[Position] = None


@dataclass(frozen=True)
class Mobility:
    """Active intents, at most one per agent, kept sorted by agent id."""
    intents: tuple = ()

    def get(self, agent: AgentId) -> Optional[Intent]:
        for owner, intent in self.intents:
            if owner == agent:
                return intent
        return None

    def with_intent(self, agent: AgentId, intent: Intent) -> "Mobility":
        others = [(a, i) for a, i in self.intents if a != agent]
        return Mobility(tuple(sorted(others + [(agent, intent)], key=lambda p: p[0])))

    def cleared(self, agent: AgentId) -> "Mobility":
        return Mobility(tuple((a, i) for a, i in self.intents if a != agent))


@dataclass(frozen=True)
class MovementEvent:
    agent: AgentId
    kind: str  # "moved" | "reached"
    position: Position


@dataclass(frozen=True)
class World:
    """Positions and movement state of every mobile agent."""
    arena: Arena
    positions: tuple  # ((AgentId, Position), ...) sorted by id
    mobility: Mobility = field(default_factory=Mobility)
    arrived: tuple = ()

    @classmethod
    def create(cls, arena: Arena, positions: Mapping[AgentId, Position]) -> "World":
        for agent, pos in positions.items():
            if not arena.contains(pos):
                raise MovementError(f"agent {agent} starts outside the arena at {pos}")
        return cls(arena, tuple(sorted(positions.items())))

    def position_map(self) -> Dict[AgentId, Position]:
        return dict(self.positions)

    def position(self, agent: AgentId) -> Position:
        return self.position_map()[agent]

    def _with(self, agent: AgentId, pos: Position, mobility: Mobility, arrived: bool) -> "World":
        positions = tuple((a, pos if a == agent else p) for a, p in self.positions)
        flags = set(self.arrived) - {agent}
        if arrived:
            flags.add(agent)
        return World(self.arena, positions, mobility, tuple(sorted(flags)))


def open_intent(world: World, agent: AgentId, target: Position) -> World:
    """
    Give an agent a travel intent, replacing any previous one.

    Raises:
        MovementError: if the target lies outside the arena
    """
    if not world.arena.contains(target):
        raise MovementError(f"target {target} lies outside the {world.arena.width}x{world.arena.height} arena")
    return world._with(agent, world.position(agent), world.mobility.with_intent(agent, Intent("moveTo", target)), False)


def open_walk(world: World, agent: AgentId) -> World:
    return world._with(agent, world.position(agent), world.mobility.with_intent(agent, Intent("walk")), False)


def step_toward(arena: Arena, pos: Position, target: Position) -> Position:
    """One axis-step along a shortest path (x axis first)."""
    dx, dy = arena.deltas(pos, target)
    if dx:
        return arena.shift(pos, 1 if dx > 0 else -1, 0)
    if dy:
        return arena.shift(pos, 0, 1 if dy > 0 else -1)
    return pos


def movement_outcomes(world: World, agent: AgentId) -> List[Tuple[World, List[MovementEvent]]]:
    """
    Every possible result of one activation of an agent's intent.

    A travel intent has exactly one outcome; a walk intent has one per valid
    4-neighbour cell (none when the arena is a single cell).
    """
    intent = world.mobility.get(agent)
    if intent is None:
        return []
    here = world.position(agent)
    cleared = world.mobility.cleared(agent)
    if intent.kind == "walk":
        return [
            (world._with(agent, cell, cleared, False), [MovementEvent(agent, "moved", cell)])
            for cell in world.arena.neighbours4(here)
        ]
    target = intent.target
    events: List[MovementEvent] = []
    if here != target:
        here = step_toward(world.arena, here, target)
        events.append(MovementEvent(agent, "moved", here))
    if here == target:
        events.append(MovementEvent(agent, "reached", target))
        return [(world._with(agent, here, cleared, True), events)]
    return [(world._with(agent, here, world.mobility, False), events)]


def advance_movement(world: World, agent: AgentId, rng=None) -> Tuple[World, List[MovementEvent]]:
    """
    Activate an agent's intent once.

    Args:
        world: Current world
        agent: Agent with an active intent
        rng: numpy Generator used to pick a walk step (first option when None)

    Returns:
        Updated world and the movement events emitted
    """
    outcomes = movement_outcomes(world, agent)
    if not outcomes:
        logger.debug("agent %s has no movement outcome", agent)
        return world, []
    index = int(rng.integers(len(outcomes))) if rng is not None and len(outcomes) > 1 else 0
    return outcomes[index]


_AXIS_HEADINGS = (Direction.RIGHT, Direction.UP, Direction.LEFT, Direction.DOWN)


def heading_direction(degrees: int) -> Direction:
    """
    Nearest axis direction of a heading (0 = +x, 90 = +y).

    Headings halfway between two axes turn counterclockwise: 45 is Up,
    135 Left, 225 Down and 315 Right.
    """
    return _AXIS_HEADINGS[(int(degrees) % 360 + 45) // 90 % 4]


def heading_step(arena: Arena, pos: Position, degrees: int) -> Position:
    """Move one cell along the heading's axis direction; blocked moves stay put."""
    delta = heading_direction(degrees).delta
    moved = arena.shift(pos, delta.x, delta.y)
    return pos if moved is None else moved
