"""
Helpers shared by the scenario builders: arenas, default placements,
seeded initial directions and neighbour graphs.
"""

from typing import List, Optional, Sequence

import networkx as nx
import numpy as np

from ..config import ScenarioConfig
from ..errors import ScenarioConfigError
from ..kernel import AgentId, Position
from ..world import Arena, Topology


def arena_of(cfg: ScenarioConfig) -> Arena:
    return Arena(cfg.arena.width, cfg.arena.height, Topology(cfg.arena.topology))


def default_positions(arena: Arena, count: int, offset: int = 0) -> List[Position]:
    """Row-major placement from the lower-left corner, wrapping over the arena."""
    cells = arena.cells()
    ordered = sorted(cells, key=lambda p: (p.y, p.x))
    return [ordered[(offset + i) % len(ordered)] for i in range(count)]


def positions_for(arena: Arena, configured: Optional[Sequence], count: int, label: str, offset: int = 0) -> List[Position]:
    if configured is None:
        return default_positions(arena, count, offset)
    if len(configured) != count:
        raise ScenarioConfigError(f"{label}: expected {count} positions, got {len(configured)}")
    return [Position(x, y) for x, y in configured]


def initial_direction(agent: int, init_seed: int, step: int) -> int:
    """Direction in degrees drawn from a generator seeded with the squared agent id."""
    rng = np.random.Generator(np.random.PCG64(agent * agent + init_seed))
    return int(rng.integers(360 // step)) * step


def initial_directions(cfg: ScenarioConfig, count: int) -> List[int]:
    if cfg.initial_directions is not None:
        if len(cfg.initial_directions) != count:
            raise ScenarioConfigError(f"initial_directions: expected {count} values")
        for value in cfg.initial_directions:
            if value % cfg.direction_step or not 0 <= value < 360:
                raise ScenarioConfigError(
                    f"initial direction {value} is not a multiple of {cfg.direction_step} in [0, 360)"
                )
        return list(cfg.initial_directions)
    return [initial_direction(i, cfg.init_seed, cfg.direction_step) for i in range(count)]


def angle_error(current: int, target: int) -> int:
    """Signed smallest rotation from current to target, in (-180, 180]."""
    error = (target - current) % 360
    return error - 360 if error > 180 else error


def static_graph(kind: str, ids: Sequence[AgentId]) -> Optional[nx.Graph]:
    """Neighbour graph for the static topologies; None for range-based neighbourhoods."""
    if kind == "range":
        return None
    n = len(ids)
    if kind == "complete":
        base = nx.complete_graph(n)
    elif kind == "ring":
        base = nx.cycle_graph(n) if n > 2 else nx.path_graph(n)
    elif kind == "line":
        base = nx.path_graph(n)
    elif kind == "star":
        base = nx.star_graph(n - 1) if n > 1 else nx.empty_graph(1)
    else:
        raise ScenarioConfigError(f"unknown topology {kind!r}")
    return nx.relabel_nodes(base, {i: ids[i] for i in range(n)})
