"""
Simulated message network: one bounded FIFO queue per (sender, receiver).

The network is a value. Queues are part of the global state, so it is kept in
canonical form: only non-empty queues, sorted by endpoint pair.
"""

import logging
from dataclasses import dataclass, field
from typing import Hashable, Iterable, List, Tuple

from ..config import DEFAULT_QUEUE_CAPACITY
from ..kernel import AgentId

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Network:
    queues: tuple = ()  # (((sender, receiver), (message, ...)), ...)
    capacity: int = field(default=DEFAULT_QUEUE_CAPACITY, compare=False, hash=False)

    def queue(self, sender: AgentId, receiver: AgentId) -> tuple:
        for pair, messages in self.queues:
            if pair == (sender, receiver):
                return messages
        return ()

    def _with_queue(self, sender: AgentId, receiver: AgentId, messages: tuple) -> "Network":
        others = [(pair, q) for pair, q in self.queues if pair != (sender, receiver)]
        if messages:
            others.append(((sender, receiver), messages))
        return Network(tuple(sorted(others, key=lambda p: p[0])), self.capacity)

    def send(self, sender: AgentId, receiver: AgentId, message: Hashable) -> Tuple["Network", bool]:
        """
        Append a message to a queue.

        Returns:
            The updated network and whether the message was accepted (False
            when the queue was full and the message dropped)
        """
        queue = self.queue(sender, receiver)
        if len(queue) >= self.capacity:
            logger.debug("queue %s->%s full, dropping %s", sender, receiver, message)
            return self, False
        return self._with_queue(sender, receiver, queue + (message,)), True

    def broadcast(self, sender: AgentId, receivers: Iterable[AgentId], message: Hashable) -> "Network":
        network = self
        for receiver in sorted(receivers):
            network, _ = network.send(sender, receiver, message)
        return network

    def heads(self) -> List[Tuple[AgentId, AgentId, Hashable]]:
        """Deliverable messages: the head of every non-empty queue, in endpoint order."""
        return [(pair[0], pair[1], messages[0]) for pair, messages in self.queues]

    def pop(self, sender: AgentId, receiver: AgentId) -> Tuple[Hashable, "Network"]:
        queue = self.queue(sender, receiver)
        if not queue:
            raise KeyError(f"no message pending from {sender} to {receiver}")
        return queue[0], self._with_queue(sender, receiver, queue[1:])

    @property
    def pending(self) -> int:
        return sum(len(messages) for _, messages in self.queues)

    def is_empty(self) -> bool:
        return not self.queues

    def __str__(self) -> str:
        if not self.queues:
            return "net{}"
        parts = [
            f"{s}->{r}:[" + "; ".join(str(m) for m in messages) + "]"
            for (s, r), messages in self.queues
        ]
        return "net{" + ", ".join(parts) + "}"
