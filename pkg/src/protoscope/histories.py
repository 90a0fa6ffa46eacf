"""Agent-local state: initial keys plus a sequence of send/recv events.

A history is everything an agent ever observes, so it is also the input
to knowledge algorithms and the basis of indistinguishability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .terms import Key, Message


@dataclass(frozen=True, slots=True)
class Send:
    """An outgoing message with its claimed recipient.

    The recipient field is a claim only: nothing on the wire authenticates
    who sent a message, and the adversary may forge it.
    """

    to: str
    payload: Message


@dataclass(frozen=True, slots=True)
class Recv:
    payload: Message


Event = Union[Send, Recv]


@dataclass(frozen=True, slots=True)
class History:
    initial: frozenset[Key] = field(default_factory=frozenset)
    events: tuple[Event, ...] = ()

    def append(self, event: Event) -> "History":
        return History(self.initial, self.events + (event,))

    def received(self) -> tuple[Message, ...]:
        return tuple(e.payload for e in self.events if isinstance(e, Recv))

    def sent(self) -> tuple[Send, ...]:
        return tuple(e for e in self.events if isinstance(e, Send))


def history_of(
    received: tuple[Message, ...] | list[Message] = (),
    initial: frozenset[Key] | set[Key] = frozenset(),
) -> History:
    """Shorthand for receive-only histories (the passive adversary's shape)."""
    return History(frozenset(initial), tuple(Recv(m) for m in received))
