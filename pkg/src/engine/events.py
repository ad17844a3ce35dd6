"""
Deterministic event queue.
"""

import heapq
from itertools import count
from typing import Any

from src.engine.models import Event, EventKind


class EventQueue:
    """
    Min-heap of events ordered by (time, sequence).

    Sequence numbers are handed out in push order, so two events at the same
    time run in the order they were scheduled.
    """

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._sequence = count()

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)

    def push(self, time: float, kind: EventKind, payload: Any = None) -> Event:
        if time < 0:
            raise ValueError("event time must be >= 0")
        event = Event(time=time, sequence=next(self._sequence), kind=kind, payload=payload)
        heapq.heappush(self._heap, event)
        return event

    def peek(self) -> Event | None:
        return self._heap[0] if self._heap else None

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def pending(self, kind: EventKind | None = None) -> list[Event]:
        """Scheduled events in processing order, optionally of one kind."""
        events = sorted(self._heap)
        return [e for e in events if kind is None or e.kind == kind]
