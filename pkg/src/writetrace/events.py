"""Append-only edit event logs and deterministic replay.

The log is the sole source of truth for a writing session. On disk it is
line-delimited JSON, UTF-8, one event per line, `seq` starting at 1 and
gapless; absent fields are omitted. That file format is the bit-exact
interchange contract between the session service, the analysis CLI, and
the editor frontend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .provenance import BufferBoundsError, OriginKind, OriginTag, ProvenanceBuffer


class EventKind(str, Enum):
    TEXT_INSERT = "text-insert"
    TEXT_DELETE = "text-delete"
    CARET_MOVE = "caret-move"
    SUGGESTION_REQUEST = "suggestion-request"
    SUGGESTION_SHOWN = "suggestion-shown"
    SUGGESTION_INSERTED = "suggestion-inserted"
    SAVE = "save"


class LogFormatError(ValueError):
    """A log line could not be parsed into a well-formed event."""

    def __init__(self, message: str, last_valid_seq: int = 0):
        super().__init__(message)
        self.last_valid_seq = last_valid_seq


class ReplayError(ValueError):
    """Replay hit a malformed log: a seq gap or an out-of-bounds edit."""

    def __init__(self, message: str, seq: int):
        super().__init__(message)
        self.seq = seq


@dataclass(frozen=True)
class EditEvent:
    """One timestamped session action.

    `timestamp_ms` is milliseconds since session start. Which optional fields
    are required depends on `kind`; see `__post_init__`.
    """

    seq: int
    timestamp_ms: int
    kind: EventKind
    position: Optional[int] = None
    text: Optional[str] = None
    length: Optional[int] = None
    origin: Optional[OriginTag] = None
    suggestion_id: Optional[str] = None

    def __post_init__(self) -> None:
        k = self.kind
        if k is EventKind.TEXT_INSERT:
            self._require(position=True, text=True, origin=True)
            if self.origin.kind is not OriginKind.USER:
                raise ValueError("text-insert events must carry a user origin")
        elif k is EventKind.SUGGESTION_INSERTED:
            self._require(position=True, text=True, origin=True, suggestion_id=True)
            if self.origin.kind is not OriginKind.AI:
                raise ValueError("suggestion-inserted events must carry an ai origin")
        elif k is EventKind.TEXT_DELETE:
            self._require(position=True, length=True)
        elif k is EventKind.CARET_MOVE:
            self._require(position=True)
        elif k in (EventKind.SUGGESTION_REQUEST, EventKind.SUGGESTION_SHOWN):
            self._require(suggestion_id=True)
        # save: no payload

    def _require(self, **fields: bool) -> None:
        for name in fields:
            if getattr(self, name) is None:
                raise ValueError(f"{self.kind.value} event requires {name}")

    def to_dict(self) -> dict:
        d: dict = {"seq": self.seq, "timestamp_ms": self.timestamp_ms, "kind": self.kind.value}
        if self.position is not None:
            d["position"] = self.position
        if self.text is not None:
            d["text"] = self.text
        if self.length is not None:
            d["length"] = self.length
        if self.origin is not None:
            d["origin"] = self.origin.to_dict()
        if self.suggestion_id is not None:
            d["suggestion_id"] = self.suggestion_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EditEvent":
        origin = d.get("origin")
        return cls(
            seq=d["seq"],
            timestamp_ms=d["timestamp_ms"],
            kind=EventKind(d["kind"]),
            position=d.get("position"),
            text=d.get("text"),
            length=d.get("length"),
            origin=OriginTag.from_dict(origin) if origin is not None else None,
            suggestion_id=d.get("suggestion_id"),
        )


def event_to_line(event: EditEvent) -> str:
    return json.dumps(event.to_dict(), ensure_ascii=False, separators=(",", ":"))


def events_to_jsonl(events: Iterable[EditEvent]) -> str:
    """Serialize events to the log file format (one line each, trailing newline)."""
    return "".join(event_to_line(e) + "\n" for e in events)


def parse_log(content: str) -> list[EditEvent]:
    """Parse log file content, reporting the last valid seq on failure."""
    events: list[EditEvent] = []
    last_seq = 0
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(EditEvent.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise LogFormatError(
                f"malformed event at line {lineno} (last valid seq {last_seq}): {exc}",
                last_valid_seq=last_seq,
            ) from exc
        last_seq = events[-1].seq
    return events


def read_log(path: Union[str, Path]) -> list[EditEvent]:
    return parse_log(Path(path).read_text(encoding="utf-8"))


def write_log(path: Union[str, Path], events: Iterable[EditEvent]) -> None:
    Path(path).write_text(events_to_jsonl(events), encoding="utf-8")


def apply_event(buffer: ProvenanceBuffer, event: EditEvent) -> ProvenanceBuffer:
    """Apply one event to a buffer. Non-mutating kinds return it unchanged."""
    if event.kind is EventKind.TEXT_INSERT or event.kind is EventKind.SUGGESTION_INSERTED:
        return buffer.insert(event.position, event.text, event.origin)
    if event.kind is EventKind.TEXT_DELETE:
        return buffer.delete(event.position, event.length)
    return buffer


def validate_sequence(events: Sequence[EditEvent], last_seq: int = 0) -> None:
    """Check that seq values continue gaplessly after `last_seq` (1 for a full log)."""
    expected = last_seq
    for event in events:
        expected += 1
        if event.seq != expected:
            raise ReplayError(
                f"seq {event.seq} breaks the sequence (expected {expected})", seq=event.seq
            )


def replay(
    events: Sequence[EditEvent], upto_seq: Optional[int] = None
) -> ProvenanceBuffer:
    """Rebuild the buffer by applying mutating events in seq order.

    Only text-insert, text-delete, and suggestion-inserted events touch the
    text; caret/request/shown/save events are validated but otherwise ignored.
    With `upto_seq`, stops after that seq (0 yields the empty buffer).
    """
    buffer = ProvenanceBuffer.empty()
    prev_seq = 0
    for event in events:
        if event.seq != prev_seq + 1:
            raise ReplayError(
                f"seq {event.seq} breaks the sequence (expected {prev_seq + 1})",
                seq=event.seq,
            )
        prev_seq = event.seq
        if upto_seq is not None and event.seq > upto_seq:
            break
        try:
            buffer = apply_event(buffer, event)
        except (BufferBoundsError, ValueError) as exc:
            raise ReplayError(f"event seq {event.seq} cannot apply: {exc}", seq=event.seq) from exc
    return buffer
