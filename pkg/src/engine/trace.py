"""
Per-event trace stream.

One JSON object per line with the fields, in order:

    time, seq, kind, src, dst, outcome, energy_delta

``energy_delta`` is the debit in integer picojoules charged to the node named
by ``src`` (tx, idle, drain) or ``dst`` (rx); every ledger debit produces
exactly one event with a nonzero ``energy_delta``.
"""

import json
from enum import StrEnum
from pathlib import Path
from types import TracebackType
from typing import IO, TypedDict

from src.protocol import NodeId


class TraceKind(StrEnum):
    TX = "tx"
    RX = "rx"
    LOSS = "loss"
    IDLE = "idle"
    DRAIN = "drain"
    CRASH = "crash"
    ROUND = "round"
    EPOCH = "epoch"
    PROMOTE = "promote"
    REJOIN = "rejoin"
    ORPHAN = "orphan"
    AGGREGATE = "aggregate"
    PARTITION = "partition"


class TraceEvent(TypedDict):
    time: float
    seq: int
    kind: str
    src: NodeId | None
    dst: NodeId | None
    outcome: str
    energy_delta: int


class Tracer:
    """
    Sequences trace events and writes them as JSON lines.

    Totals (``debited_pj``, ``debit_events``) are kept even when nothing is
    written, so energy accounting can be cross-checked on any run.

    Args:
        path: Output file; None disables writing
        keep: Also keep every event in ``events``
    """

    def __init__(self, path: Path | None = None, *, keep: bool = False):
        self.path = path
        self.keep = keep
        self.events: list[TraceEvent] = []
        self.sequence = 0
        self.debited_pj = 0
        self.debit_events = 0
        self._fh: IO[str] | None = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = path.open("w", encoding="utf-8", newline="\n")

    def emit(
        self,
        time: float,
        kind: TraceKind,
        *,
        src: NodeId | None = None,
        dst: NodeId | None = None,
        outcome: str = "",
        energy_delta: int = 0,
    ) -> TraceEvent:
        event = TraceEvent(
            time=time,
            seq=self.sequence,
            kind=str(kind),
            src=src,
            dst=dst,
            outcome=outcome,
            energy_delta=energy_delta,
        )
        self.sequence += 1
        if energy_delta:
            self.debited_pj += energy_delta
            self.debit_events += 1
        if self._fh is not None:
            self._fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        if self.keep:
            self.events.append(event)
        return event

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Tracer":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


def read_trace(path: Path) -> list[TraceEvent]:
    """Load a trace file written by ``Tracer``."""
    with path.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
