"""
Foraging scenarios.

Three encodings of the same task, searching an arena for food items:

- foraging_broadcast: foragers walk and broadcast requests, items within
  sensing range answer and the others reply with a miss, and a forager
  credits the first item that answers. Items keep no record of who
  collected them, so two foragers can credit the same item.
- foraging_scel: tuple-space components. Items advertise themselves to idle
  foragers in range, a forager travels to the advertised position and takes
  the item's single lock before marking it found.
- foraging_ispl: an interpreted system of grid robots picking up items.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import ClassVar, Dict, FrozenSet, List

from ..config import ScenarioConfig
from ..engine.base import ScenarioKind
from ..engine.network import Network
from ..interp.model import SystemSpec
from ..interp.parser import parse_ispl
from ..kernel import AgentId, Binder, Position, Var, all_of, attr, compare, ktuple, within
from ..tuplespace import (
    NIL,
    SELF,
    Call,
    Definition,
    Get,
    Put,
    Qry,
    ThisAttr,
    TupleSystem,
    choice,
    make_component,
    seq,
    texpr,
    tplexpr,
)
from .common import arena_of, positions_for
from .programs import AgentProgram, Outcome, ProgramScenario, ProgramState, StepContext
from .spaces import TupleSpaceScenario

logger = logging.getLogger(__name__)


def _ids(cfg: ScenarioConfig):
    """Foragers take ids 0..F-1, items F..F+I-1."""
    foragers = [AgentId(i) for i in range(cfg.foragers)]
    items = [AgentId(cfg.foragers + i) for i in range(cfg.items)]
    return foragers, items


def _placements(cfg: ScenarioConfig, arena):
    item_cells = positions_for(arena, cfg.item_positions, cfg.items, "item_positions")
    forager_cells = positions_for(arena, cfg.forager_positions, cfg.foragers, "forager_positions", offset=cfg.items)
    return forager_cells, item_cells


# ---------------------------------------------------------------------------
# Broadcast foraging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Request:
    forager: AgentId
    position: Position
    kind: ClassVar[str] = "request"

    def __str__(self) -> str:
        return f"request({self.forager}@{self.position})"


@dataclass(frozen=True)
class Response:
    item: AgentId
    forager: AgentId
    kind: ClassVar[str] = "response"

    def __str__(self) -> str:
        return f"response({self.item}->{self.forager})"


@dataclass(frozen=True)
class Miss:
    """Reply of an item that heard a request from outside its sensing range."""
    item: AgentId
    forager: AgentId
    kind: ClassVar[str] = "miss"

    def __str__(self) -> str:
        return f"miss({self.item}->{self.forager})"


@dataclass(frozen=True)
class Waiting:
    """A forager with a request out, expecting this many more replies."""
    outstanding: int


class ForagerProgram(AgentProgram):
    """
    Searches until some item answers.

    Local state is None while searching, Waiting while a request is out, and
    the credited item afterwards. A searching forager either walks to a
    neighbouring cell or broadcasts one request to the items around it; it
    stays put until every item has answered or one of them responds.
    """

    listens = frozenset({Response.kind, Miss.kind})

    def __init__(self, items: FrozenSet[AgentId], walk: bool = True):
        self.items = frozenset(items)
        self.walk = walk

    def on_step(self, me: AgentId, local, ctx: StepContext) -> List[Outcome]:
        if local is not None:
            return []
        outcomes = []
        listeners = ctx.neighbours & self.items
        if listeners:
            sends = ((None, Request(me, ctx.position)),)
            outcomes.append(Outcome(Waiting(len(listeners)), "broadcast request", sends))
        if self.walk:
            outcomes += [Outcome(local, f"walk to {cell}", (), cell) for cell in ctx.arena.neighbours4(ctx.position)]
        return outcomes

    def on_message(self, me: AgentId, local, sender: AgentId, message, ctx: StepContext) -> List[Outcome]:
        if isinstance(local, AgentId) or message.forager != me:
            return [Outcome(local, "ignore")]
        if message.kind == Response.kind:
            return [Outcome(message.item, f"credit {message.item}")]
        left = local.outstanding - 1 if isinstance(local, Waiting) else 0
        return [Outcome(Waiting(left) if left else None, "no pickup")]

    def describe(self, local) -> str:
        if local is None:
            return "searching"
        if isinstance(local, Waiting):
            return f"waiting for {local.outstanding}"
        return f"credited {local}"


class ItemProgram(AgentProgram):
    """Answers every request it hears, whether or not it was already collected."""

    listens = frozenset({Request.kind})

    def __init__(self, sense_range: int = 0):
        self.sense_range = sense_range

    def on_step(self, me: AgentId, local, ctx: StepContext) -> List[Outcome]:
        return []

    def on_message(self, me: AgentId, local, sender: AgentId, message, ctx: StepContext) -> List[Outcome]:
        if ctx.arena.distance(ctx.position, message.position) <= self.sense_range:
            return [Outcome(local, "respond", ((sender, Response(me, sender)),))]
        return [Outcome(local, "out of range", ((sender, Miss(me, sender)),))]

    def describe(self, local) -> str:
        return "item"


def _credits(state: ProgramState, foragers) -> Dict[AgentId, List[AgentId]]:
    table: Dict[AgentId, List[AgentId]] = {}
    for forager in foragers:
        item = state.local(forager)
        if isinstance(item, AgentId):
            table.setdefault(item, []).append(forager)
    return table


def foraging_broadcast(cfg: ScenarioConfig) -> ProgramScenario:
    """
    Message-passing foraging.

    Propositions:
        collected: every item has been credited by some forager
        double_credit: some item has been credited by two or more foragers
    """
    arena = arena_of(cfg)
    foragers, items = _ids(cfg)
    forager_cells, item_cells = _placements(cfg, arena)
    programs: Dict[AgentId, AgentProgram] = {f: ForagerProgram(frozenset(items), cfg.walk) for f in foragers}
    programs.update({i: ItemProgram(cfg.sense_range) for i in items})
    positions = dict(zip(foragers, forager_cells))
    positions.update(zip(items, item_cells))
    initial = ProgramState(
        tuple((a, None) for a in sorted(programs)),
        tuple(sorted(positions.items())),
        Network(capacity=cfg.queue_capacity),
    )
    propositions = {
        'collected': lambda s: set(_credits(s, foragers)) == set(items),
        'double_credit': lambda s: any(len(v) > 1 for v in _credits(s, foragers).values()),
    }
    return ProgramScenario(
        "foraging_broadcast", ScenarioKind.MESSAGE_PASSING, arena, programs, [initial],
        comm_range=cfg.comm_range, propositions=propositions,
    )


# ---------------------------------------------------------------------------
# Tuple-space foraging
# ---------------------------------------------------------------------------

def foraging_definitions(walk: bool = True) -> Dict[str, Definition]:
    """
    The three foraging processes.

    P_food runs on items: advertise the item to idle foragers in range, until
    the item is found. P_idle runs on foragers: take an advertisement or, when
    walk is on, ask for a random step. P_work(food) travels to the food, then
    either takes the lock and marks the item found, or gives up.
    """
    idle_in_range = all_of(compare(attr("task"), "=", "idle"), within(attr("range")))
    at_food = compare(attr("pos"), "=", Var("food"))
    p_food = choice(
        seq(Put(idle_in_range, texpr("food", ThisAttr("pos"))), Call("P_food")),
        seq(Qry(SELF, tplexpr("found")), NIL),
    )
    take_food = seq(Get(SELF, tplexpr("food", Binder("f"))), Call("P_work", (Var("f"),)))
    p_idle = choice(take_food, seq(Put(SELF, texpr("randomWalk")), Call("P_idle"))) if walk else take_food
    p_work = seq(
        Put(SELF, texpr("task", "work")),
        Put(SELF, texpr("moveTo", Var("food"))),
        Qry(SELF, tplexpr("reached", Var("food"))),
        choice(
            seq(
                Get(at_food, tplexpr("lock")),
                Put(at_food, texpr("found")),
                Put(SELF, texpr("task", "idle")),
                Call("P_idle"),
            ),
            seq(Put(SELF, texpr("task", "idle")), Call("P_idle")),
        ),
    )
    return {
        'P_food': Definition("P_food", (), p_food),
        'P_idle': Definition("P_idle", (), p_idle),
        'P_work': Definition("P_work", ("food",), p_work),
    }


def _found_counts(sys: TupleSystem, items) -> List[int]:
    return [sys.component(i).repo.count(ktuple("found")) for i in items]


def foraging_scel(cfg: ScenarioConfig) -> TupleSpaceScenario:
    """
    Tuple-space foraging with attribute-based addressing.

    Foragers expose pos, task and range and keep one copy of each food
    advertisement; items expose pos and hold one lock tuple. Other repository
    multiplicities saturate at ``repo_bound``. With ``walk`` off, idle
    foragers wait for an advertisement instead of walking.

    Propositions:
        collected: every item holds a found tuple
        double_found: some item received two found tuples
        all_idle: every forager exposes task = idle
    """
    arena = arena_of(cfg)
    foragers, items = _ids(cfg)
    forager_cells, item_cells = _placements(cfg, arena)
    definitions = foraging_definitions(cfg.walk)
    components = [
        make_component(
            f.value,
            [ktuple("pos", cell), ktuple("task", "idle"), ktuple("range", cfg.forager_range)],
            ("pos", "task", "range"),
            [Call("P_idle")],
            set_heads=("food",),
        )
        for f, cell in zip(foragers, forager_cells)
    ]
    components += [
        make_component(i.value, [ktuple("pos", cell), ktuple("lock")], ("pos",), [Call("P_food")])
        for i, cell in zip(items, item_cells)
    ]
    system = TupleSystem(tuple(components), definitions, arena.distance, cfg.repo_bound)
    propositions = {
        'collected': lambda s: all(n >= 1 for n in _found_counts(s, items)),
        'double_found': lambda s: any(n >= 2 for n in _found_counts(s, items)),
        'all_idle': lambda s: all(s.component(f).attrs.lookup("task") == "idle" for f in foragers),
    }
    return TupleSpaceScenario("foraging_scel", arena, system, propositions)


# ---------------------------------------------------------------------------
# Interpreted-system foraging
# ---------------------------------------------------------------------------

MOVES = (("Up", "PosY", "+"), ("Down", "PosY", "-"), ("Left", "PosX", "-"), ("Right", "PosX", "+"))


def _move_guard(direction: str, width: int, height: int) -> str:
    return {
        "Up": f"PosY < {height}",
        "Down": "PosY > 1",
        "Left": "PosX > 1",
        "Right": f"PosX < {width}",
    }[direction]


def foraging_ispl_text(cfg: ScenarioConfig) -> str:
    """
    ISPL source for grid foraging.

    The environment exposes each item's availability and coordinates and
    counts collected items. Robots move one cell per round or pick up an
    item on their cell; simultaneous picks of one item count once.
    """
    width, height = cfg.arena.width, cfg.arena.height
    robots = [f"Robot{r}" for r in range(1, cfg.robots + 1)]
    items = list(range(1, cfg.items + 1))

    def picked(i: int) -> str:
        return "(" + " or ".join(f"{r}.Action = Pick{i}" for r in robots) + ")"

    lines = ["-- grid foraging", "Agent Environment"]
    if items:
        lines.append("  Obsvars:")
        for i in items:
            lines += [f"    item{i} : boolean;", f"    itemX{i} : 1..{width};", f"    itemY{i} : 1..{height};"]
        lines.append("  end Obsvars")
    lines += [
        "  Vars:",
        f"    foundItems : 0..{len(items)};",
        "  end Vars",
        "  Actions = {none};",
        "  Protocol:",
        "    Other : {none};",
        "  end Protocol",
        "  Evolution:",
    ]
    for i in items:
        lines.append(f"    item{i} = false if {picked(i)};")
    for size in range(1, len(items) + 1):
        for subset in combinations(items, size):
            guard = " and ".join(picked(i) if i in subset else f"!{picked(i)}" for i in items)
            lines.append(f"    foundItems = foundItems + {size} if {guard};")
    lines += ["  end Evolution", "end Agent", ""]

    actions = [f"Move{d}" for d, _, _ in MOVES] + [f"Pick{i}" for i in items] + ["Wait"]
    for robot in robots:
        lines += [
            f"Agent {robot}",
            "  Vars:",
            f"    PosX : 1..{width};",
            f"    PosY : 1..{height};",
            "  end Vars",
            "  Actions = {" + ", ".join(actions) + "};",
            "  Protocol:",
        ]
        for d, _, _ in MOVES:
            lines.append(f"    {_move_guard(d, width, height)} : {{Move{d}}};")
        for i in items:
            lines.append(
                f"    Environment.item{i} = true and Environment.itemX{i} = PosX"
                f" and Environment.itemY{i} = PosY : {{Pick{i}}};"
            )
        lines += ["    Other : {Wait};", "  end Protocol", "  Evolution:"]
        for d, var, sign in MOVES:
            lines.append(f"    {var} = {var} {sign} 1 if Action = Move{d};")
        lines += ["  end Evolution", "end Agent", ""]

    lines += ["Evaluation", f"  collected if Environment.foundItems = {len(items)};"]
    for i in items:
        lines.append(f"  taken{i} if Environment.item{i} = false;")
    lines += ["end Evaluation", ""]

    pins = [f"Environment.item{i} = true" for i in items] + ["Environment.foundItems = 0"]
    if cfg.item_positions is not None:
        for i, (x, y) in zip(items, cfg.item_positions):
            pins += [f"Environment.itemX{i} = {x}", f"Environment.itemY{i} = {y}"]
    if cfg.forager_positions is not None:
        for robot, (x, y) in zip(robots, cfg.forager_positions):
            pins += [f"{robot}.PosX = {x}", f"{robot}.PosY = {y}"]
    lines += ["InitStates", "  " + " and ".join(pins) + ";", "end InitStates", ""]
    lines += ["Formulae", "  EF collected;", "end Formulae"]
    return "\n".join(lines) + "\n"


def foraging_ispl(cfg: ScenarioConfig) -> SystemSpec:
    return parse_ispl(foraging_ispl_text(cfg))
