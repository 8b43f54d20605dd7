"""
Virtual stigmergy: per-agent replicated key-value stores.

Entries carry a per-key Lamport timestamp and the id of their writer; the
pair (ts, writer) totally orders conflicting writes, higher writer id winning
ties. Writes propagate by flooding (adopt, then re-broadcast) and every read
sends the reader's current belief so that either side can be repaired.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from .kernel import AgentId, Value, format_value, value_kind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StigEntry:
    """One replicated binding of a key."""
    key: str
    value: Value
    ts: int
    writer: AgentId

    def __post_init__(self):
        if self.ts < 1:
            raise ValueError(f"written entries carry ts >= 1, got {self.ts}")
        value_kind(self.value)

    @property
    def rank(self) -> Tuple[int, int]:
        return (self.ts, self.writer.value)

    def __str__(self) -> str:
        return f"{self.key}={format_value(self.value)}@{self.ts}/{self.writer}"


def beats(incoming: Optional[StigEntry], local: Optional[StigEntry]) -> bool:
    """True iff incoming is strictly newer than local in the (ts, writer) order."""
    if incoming is None:
        return False
    if local is None:
        return True
    return incoming.rank > local.rank


class MessageKind(Enum):
    WRITE = "WRITE"
    QUERY = "QUERY"


@dataclass(frozen=True)
class StigMessage:
    kind: MessageKind
    key: str
    entry: Optional[StigEntry]
    sender: AgentId

    def __post_init__(self):
        if self.kind is MessageKind.WRITE and self.entry is None:
            raise ValueError("WRITE messages carry a full entry")

    def __str__(self) -> str:
        belief = str(self.entry) if self.entry is not None else "absent"
        return f"{self.kind.value}({self.key}, {belief}) from {self.sender}"


@dataclass(frozen=True)
class Outbound:
    """A message to send; recipient None means broadcast to current neighbours."""
    message: StigMessage
    recipient: Optional[AgentId] = None


@dataclass(frozen=True)
class Replica:
    """The local copy of the stigmergy held by one agent."""
    owner: AgentId
    entries: tuple = ()  # ((key, StigEntry), ...) sorted by key

    def lookup(self, key: str) -> Optional[StigEntry]:
        for name, entry in self.entries:
            if name == key:
                return entry
        return None

    def keys(self) -> List[str]:
        return [name for name, _ in self.entries]

    def with_entry(self, entry: StigEntry) -> "Replica":
        kept = [(k, e) for k, e in self.entries if k != entry.key]
        return Replica(self.owner, tuple(sorted(kept + [(entry.key, entry)], key=lambda p: p[0])))


def vstig_put(r: Replica, key: str, v: Value) -> Tuple[Replica, StigMessage]:
    """
    Write a key locally, advancing its Lamport clock.

    Returns:
        The updated replica and the WRITE message to broadcast
    """
    previous = r.lookup(key)
    entry = StigEntry(key, v, (previous.ts if previous else 0) + 1, r.owner)
    return r.with_entry(entry), StigMessage(MessageKind.WRITE, key, entry, r.owner)


def vstig_get(r: Replica, key: str) -> Tuple[Optional[Value], StigMessage]:
    """Read a key locally; the QUERY carries the local belief for read-repair."""
    entry = r.lookup(key)
    return (entry.value if entry else None), StigMessage(MessageKind.QUERY, key, entry, r.owner)


def on_receive(r: Replica, m: StigMessage) -> Tuple[Replica, List[Outbound]]:
    """
    Apply an incoming WRITE or QUERY.

    The incoming entry wins iff its (ts, writer) is lexicographically greater:
    the replica adopts it and re-broadcasts. When the local entry wins the
    sender gets a WRITE of it. Equal entries (or two absences) change nothing.
    """
    local = r.lookup(m.key)
    if beats(m.entry, local):
        updated = r.with_entry(m.entry)
        logger.debug("replica %s adopts %s", r.owner, m.entry)
        return updated, [Outbound(StigMessage(MessageKind.WRITE, m.key, m.entry, r.owner))]
    if beats(local, m.entry):
        return r, [Outbound(StigMessage(MessageKind.WRITE, m.key, local, r.owner), m.sender)]
    return r, []


def deliver(
    replicas: Mapping[AgentId, Replica],
    graph: nx.Graph,
    pending: Iterable[Tuple[AgentId, StigMessage]],
) -> Tuple[Dict[AgentId, Replica], List[Tuple[AgentId, StigMessage]]]:
    """
    Deliver (recipient, message) pairs in order.

    Returns:
        The updated replicas and the follow-up (recipient, message) pairs,
        broadcasts expanded over the graph neighbours in id order
    """
    state = dict(replicas)
    follow_up: List[Tuple[AgentId, StigMessage]] = []
    for recipient, message in pending:
        state[recipient], out = on_receive(state[recipient], message)
        for item in out:
            follow_up.extend(_address(graph, recipient, item))
    return state, follow_up


def _address(graph: nx.Graph, sender: AgentId, item: Outbound) -> List[Tuple[AgentId, StigMessage]]:
    if item.recipient is not None:
        return [(item.recipient, item.message)]
    return [(n, item.message) for n in sorted(graph.neighbors(sender))]


def gossip_round(
    replicas: Mapping[AgentId, Replica],
    graph: nx.Graph,
    pending: Iterable[Tuple[AgentId, StigMessage]] = (),
) -> Tuple[Dict[AgentId, Replica], List[Tuple[AgentId, StigMessage]]]:
    """
    One gossip round: every replica re-broadcasts all its entries to its
    neighbours, then the carried-over pending messages and this round's
    broadcasts are processed. Messages generated during processing are
    returned and belong to the next round.
    """
    broadcasts: List[Tuple[AgentId, StigMessage]] = []
    for owner in sorted(replicas):
        for key, entry in replicas[owner].entries:
            message = StigMessage(MessageKind.WRITE, key, entry, owner)
            broadcasts.extend((n, message) for n in sorted(graph.neighbors(owner)))
    return deliver(replicas, graph, list(pending) + broadcasts)


def agreed_entry(replicas: Mapping[AgentId, Replica], key: str) -> Optional[StigEntry]:
    """The entry every replica holds for key, or None when they disagree."""
    entries = {replica.lookup(key) for replica in replicas.values()}
    if len(entries) == 1:
        return entries.pop()
    return None
