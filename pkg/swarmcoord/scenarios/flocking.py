"""
Flocking scenarios: agents agreeing on a common heading.

- flocking_vstig: headings shared through one virtual-stigmergy key; every
  step an agent reads the key (sending a QUERY), then turns one step
  toward the stored value or moves forward.
- flocking_voter: every ``voter_period`` own steps an agent adopts the
  heading of one neighbour it has heard from. Zealots never adopt.
- flocking_scel / flocking_scel_lamport: tuple-space components querying
  the direction tuples of neighbours in range, the latter guarded by
  Lamport clocks.
- flocking_ispl: the watch-and-imitate interpreted system of grid robots.

Every variant defines ``consensus``: all agents share one direction.
"""

import logging
from dataclasses import dataclass, replace
from typing import ClassVar, Dict, List, Optional

from ..config import ScenarioConfig
from ..engine.base import ScenarioKind
from ..engine.network import Network
from ..interp.model import SystemSpec
from ..interp.parser import parse_ispl
from ..kernel import AgentId, Binder, Var, all_of, attr, compare, ktuple, self_attr, within
from ..stigmergy import MessageKind, Replica, agreed_entry, on_receive, vstig_get, vstig_put
from ..tuplespace import SELF, Call, Definition, Put, Qry, Succ, TupleSystem, make_component, seq, texpr, tplexpr
from ..world import heading_step, neighbours
from .common import angle_error, arena_of, initial_directions, positions_for, static_graph
from .programs import AgentProgram, Outcome, ProgramScenario, ProgramState, StepContext
from .spaces import TupleSpaceScenario

logger = logging.getLogger(__name__)

DIRECTIONS = ("Up", "Down", "Left", "Right")


def _agents(cfg: ScenarioConfig):
    arena = arena_of(cfg)
    ids = [AgentId(i) for i in range(cfg.agents)]
    cells = positions_for(arena, cfg.agent_positions, cfg.agents, "agent_positions")
    return arena, ids, dict(zip(ids, cells))


def _initial_neighbours(cfg: ScenarioConfig, arena, ids, positions, graph):
    if graph is not None:
        return {a: sorted(graph.neighbors(a)) for a in ids}
    return {a: sorted(neighbours(arena, positions, a, cfg.comm_range)) for a in ids}


def _same(values) -> bool:
    return len(set(values)) <= 1


# ---------------------------------------------------------------------------
# Virtual-stigmergy flocking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlockLocal:
    replica: Replica
    heading: int


class StigmergyFlocker(AgentProgram):
    """Steers toward the heading stored in the stigmergy."""

    listens = frozenset({MessageKind.WRITE.value, MessageKind.QUERY.value})

    def __init__(self, key: str, step: int, threshold: int):
        self.key = key
        self.step = step
        self.threshold = threshold

    def on_step(self, me: AgentId, local: FlockLocal, ctx: StepContext) -> List[Outcome]:
        target, query = vstig_get(local.replica, self.key)
        sends = ((None, query),)
        if target is not None:
            error = angle_error(local.heading, target)
            if abs(error) > self.threshold:
                turned = (local.heading + (self.step if error > 0 else -self.step)) % 360
                return [Outcome(FlockLocal(local.replica, turned), f"turn to {turned}", sends)]
        moved = heading_step(ctx.arena, ctx.position, local.heading)
        return [Outcome(local, f"advance to {moved}", sends, moved)]

    def on_message(self, me: AgentId, local: FlockLocal, sender: AgentId, message, ctx: StepContext) -> List[Outcome]:
        replica, out = on_receive(local.replica, message)
        sends = tuple((item.recipient, item.message) for item in out)
        if replica != local.replica:
            label = f"adopt {replica.lookup(message.key)}"
        elif sends:
            label = "repair sender"
        else:
            label = "up to date"
        return [Outcome(FlockLocal(replica, local.heading), label, sends)]

    def describe(self, local: FlockLocal) -> str:
        entries = ", ".join(str(e) for _, e in local.replica.entries)
        return f"heading={local.heading} [{entries}]"


def flocking_vstig(cfg: ScenarioConfig) -> ProgramScenario:
    """
    Stigmergy flocking.

    Every agent starts by writing its own heading; the initial WRITEs are
    already queued toward its neighbours.

    Propositions:
        consensus: every replica holds the same entry for the key
        aligned: every agent has the same heading
    """
    arena, ids, positions = _agents(cfg)
    graph = static_graph(cfg.topology, ids)
    headings = initial_directions(cfg, cfg.agents)
    nearby = _initial_neighbours(cfg, arena, ids, positions, graph)
    program = StigmergyFlocker(cfg.stig_key, cfg.direction_step, cfg.control_threshold)

    locals_, network = [], Network(capacity=cfg.queue_capacity)
    for agent, heading in zip(ids, headings):
        replica, write = vstig_put(Replica(agent), cfg.stig_key, heading)
        locals_.append((agent, FlockLocal(replica, heading)))
        network = network.broadcast(agent, nearby[agent], write)
    initial = ProgramState(tuple(locals_), tuple(sorted(positions.items())), network)

    key = cfg.stig_key
    propositions = {
        'consensus': lambda s: agreed_entry({a: l.replica for a, l in s.locals}, key) is not None,
        'aligned': lambda s: _same(l.heading for _, l in s.locals),
    }
    return ProgramScenario(
        "flocking_vstig", ScenarioKind.STIGMERGY, arena, {a: program for a in ids}, [initial],
        comm_range=cfg.comm_range, graph=graph, propositions=propositions,
    )


# ---------------------------------------------------------------------------
# Voter-model flocking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Heading:
    sender: AgentId
    direction: int
    kind: ClassVar[str] = "direction"

    def __str__(self) -> str:
        return f"heading({self.sender}={self.direction})"


@dataclass(frozen=True)
class VoterLocal:
    direction: int
    steps: int = 0
    heard: tuple = ()  # ((AgentId, direction), ...) sorted by id

    def hearing(self, sender: AgentId, direction: int) -> "VoterLocal":
        table = dict(self.heard)
        table[sender] = direction
        return replace(self, heard=tuple(sorted(table.items())))


class Voter(AgentProgram):
    """Adopts a heard neighbour's direction once every ``period`` own steps."""

    listens = frozenset({Heading.kind})

    def __init__(self, period: int, zealot: bool = False):
        self.period = period
        self.zealot = zealot

    def on_step(self, me: AgentId, local: VoterLocal, ctx: StepContext) -> List[Outcome]:
        steps = (local.steps + 1) % self.period
        if steps or self.zealot or not local.heard:
            return [Outcome(replace(local, steps=steps), "wait")]
        outcomes = []
        for neighbour, direction in local.heard:
            sends = ((None, Heading(me, direction)),) if direction != local.direction else ()
            adopted = replace(local, direction=direction, steps=0)
            outcomes.append(Outcome(adopted, f"adopt {direction} from {neighbour}", sends))
        return outcomes

    def on_message(self, me: AgentId, local: VoterLocal, sender: AgentId, message, ctx: StepContext) -> List[Outcome]:
        return [Outcome(local.hearing(sender, message.direction), f"hear {message.direction}")]

    def describe(self, local: VoterLocal) -> str:
        heard = ", ".join(f"{a}={d}" for a, d in local.heard)
        return f"dir={local.direction} step={local.steps} heard[{heard}]"


def flocking_voter(cfg: ScenarioConfig) -> ProgramScenario:
    """
    Voter-model flocking over a static or range topology.

    Agents start out knowing their neighbours' initial directions and
    broadcast whenever their own direction changes.

    Propositions:
        consensus: every agent has the same direction
    """
    arena, ids, positions = _agents(cfg)
    graph = static_graph(cfg.topology, ids)
    directions = dict(zip(ids, initial_directions(cfg, cfg.agents)))
    nearby = _initial_neighbours(cfg, arena, ids, positions, graph)
    zealots = {AgentId(z) for z in cfg.zealots}
    programs = {a: Voter(cfg.voter_period, a in zealots) for a in ids}
    locals_ = tuple(
        (a, VoterLocal(directions[a], 0, tuple((n, directions[n]) for n in nearby[a])))
        for a in ids
    )
    initial = ProgramState(locals_, tuple(sorted(positions.items())), Network(capacity=cfg.queue_capacity))
    propositions = {'consensus': lambda s: _same(l.direction for _, l in s.locals)}
    return ProgramScenario(
        "flocking_voter", ScenarioKind.MESSAGE_PASSING, arena, programs, [initial],
        comm_range=cfg.comm_range, graph=graph, propositions=propositions,
    )


# ---------------------------------------------------------------------------
# Tuple-space flocking
# ---------------------------------------------------------------------------

def flocking_definitions(lamport: bool = False, clock_bound: Optional[int] = None) -> Dict[str, Definition]:
    """
    The flocking process P.

    Plain: query the direction of a neighbour in range that disagrees, then
    adopt it. With Lamport clocks: query any neighbour in range whose clock
    is not behind, set its own clock to t+1, then adopt the direction stamped
    t+1.
    """
    in_range = within(self_attr("range"))
    if not lamport:
        guard = all_of(in_range, compare(attr("direction"), "!=", self_attr("direction")))
        body = seq(
            Qry(guard, tplexpr("direction", Binder("d"))),
            Put(SELF, texpr("direction", Var("d"))),
            Call("P"),
        )
    else:
        guard = all_of(in_range, compare(attr("time"), ">=", self_attr("time")))
        body = seq(
            Qry(guard, tplexpr("direction", Binder("d"), Binder("t"))),
            Put(SELF, texpr("time", Succ("t", clock_bound))),
            Put(SELF, texpr("direction", Var("d"), Succ("t", clock_bound))),
            Call("P"),
        )
    return {'P': Definition("P", (), body)}


def _scel_flock(cfg: ScenarioConfig, lamport: bool) -> TupleSpaceScenario:
    arena, ids, positions = _agents(cfg)
    directions = initial_directions(cfg, cfg.agents)
    components = []
    for agent, direction in zip(ids, directions):
        tuples = [ktuple("pos", positions[agent]), ktuple("range", cfg.comm_range)]
        if lamport:
            tuples += [ktuple("direction", direction, 0), ktuple("time", 0)]
            interface = ("pos", "direction", "time", "range")
        else:
            tuples.append(ktuple("direction", direction))
            interface = ("pos", "direction", "range")
        components.append(make_component(agent.value, tuples, interface, [Call("P")]))
    definitions = flocking_definitions(lamport, cfg.clock_bound)
    system = TupleSystem(tuple(components), definitions, arena.distance, cfg.repo_bound)
    propositions = {
        'consensus': lambda s: _same(c.attrs.lookup("direction") for c in s.components),
    }
    name = "flocking_scel_lamport" if lamport else "flocking_scel"
    return TupleSpaceScenario(name, arena, system, propositions)


def flocking_scel(cfg: ScenarioConfig) -> TupleSpaceScenario:
    """Static agents adopting a disagreeing neighbour's direction."""
    return _scel_flock(cfg, lamport=False)


def flocking_scel_lamport(cfg: ScenarioConfig) -> TupleSpaceScenario:
    """Static agents adopting directions only from neighbours whose clock is not behind."""
    return _scel_flock(cfg, lamport=True)


# ---------------------------------------------------------------------------
# Interpreted-system flocking
# ---------------------------------------------------------------------------

_AXIS = {"Up": ("PosY", "+"), "Down": ("PosY", "-"), "Left": ("PosX", "-"), "Right": ("PosX", "+")}


def _edge(direction: str, width: int, height: int) -> str:
    """Condition under which a step in direction stays inside a bounded arena."""
    return {
        "Up": f"PosY < {height}",
        "Down": "PosY > 1",
        "Left": "PosX > 1",
        "Right": f"PosX < {width}",
    }[direction]


def flocking_ispl_text(cfg: ScenarioConfig, topology: Optional[str] = None) -> str:
    """
    ISPL source for watch-and-imitate flocking.

    A robot either moves one cell along its direction or watches; watching
    copies the environment's ``lastDir``, the direction of the last robot to
    move. When several robots move in one round, the highest-numbered one
    sets ``lastDir``. On a bounded arena a robot facing a wall can only
    watch; on a toroidal arena moves wrap around.
    """
    topology = topology or cfg.arena.topology
    width, height = cfg.arena.width, cfg.arena.height
    robots = [f"Robot{r}" for r in range(1, cfg.robots + 1)]
    symbols = ", ".join(DIRECTIONS)

    lines = [
        f"-- watch-and-imitate flocking, {topology} {width}x{height} arena",
        "Agent Environment",
        "  Obsvars:",
        f"    lastDir : {{{symbols}}};",
        "  end Obsvars",
        "  Actions = {none};",
        "  Protocol:",
        "    Other : {none};",
        "  end Protocol",
        "  Evolution:",
    ]
    for index, robot in enumerate(robots):
        later = [f"{other}.Action = Watch" for other in robots[index + 1:]]
        for d in DIRECTIONS:
            guard = " and ".join([f"{robot}.Action = Move{d}"] + later)
            lines.append(f"    lastDir = {d} if {guard};")
    lines += ["  end Evolution", "end Agent", ""]

    actions = ", ".join([f"Move{d}" for d in DIRECTIONS] + ["Watch"])
    for robot in robots:
        lines += [
            f"Agent {robot}",
            "  Vars:",
            f"    PosX : 1..{width};",
            f"    PosY : 1..{height};",
            f"    dir : {{{symbols}}};",
            "  end Vars",
            f"  Actions = {{{actions}}};",
            "  Protocol:",
        ]
        for d in DIRECTIONS:
            guard = f"dir = {d}" if topology == "toroidal" else f"dir = {d} and {_edge(d, width, height)}"
            lines.append(f"    {guard} : {{Move{d}, Watch}};")
        lines += ["    Other : {Watch};", "  end Protocol", "  Evolution:"]
        for d in DIRECTIONS:
            var, sign = _AXIS[d]
            if topology == "toroidal":
                size = height if var == "PosY" else width
                boundary, wrapped = (size, 1) if sign == "+" else (1, size)
                lines.append(f"    {var} = {var} {sign} 1 if Action = Move{d} and {_edge(d, width, height)};")
                lines.append(f"    {var} = {wrapped} if Action = Move{d} and {var} = {boundary};")
            else:
                lines.append(f"    {var} = {var} {sign} 1 if Action = Move{d};")
        lines += ["    dir = Environment.lastDir if Action = Watch;", "  end Evolution", "end Agent", ""]

    pairs = [f"{a}.dir = {b}.dir" for a, b in zip(robots, robots[1:])]
    lines += ["Evaluation", f"  consensus if {' and '.join(pairs) if pairs else 'true'};", "end Evaluation", ""]
    if cfg.agent_positions is not None and len(cfg.agent_positions) == len(robots):
        pins = []
        for robot, (x, y) in zip(robots, cfg.agent_positions):
            pins += [f"{robot}.PosX = {x}", f"{robot}.PosY = {y}"]
        lines += ["InitStates", "  " + " and ".join(pins) + ";", "end InitStates", ""]
    lines += ["Formulae", "  AF consensus;", "end Formulae"]
    return "\n".join(lines) + "\n"


def flocking_ispl(cfg: ScenarioConfig, topology: Optional[str] = None) -> SystemSpec:
    return parse_ispl(flocking_ispl_text(cfg, topology))
