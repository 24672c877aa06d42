"""Provenance-tracked co-writing: buffers, event logs, suggestions, metrics."""

from .provenance import (
    BufferBoundsError,
    MissingSpanError,
    OriginKind,
    OriginTag,
    ProvenanceBuffer,
    Segment,
    Span,
)
from .events import EditEvent, EventKind, ReplayError, read_log, replay, write_log

__all__ = [
    "BufferBoundsError",
    "EditEvent",
    "EventKind",
    "MissingSpanError",
    "OriginKind",
    "OriginTag",
    "ProvenanceBuffer",
    "ReplayError",
    "Segment",
    "Span",
    "read_log",
    "replay",
    "write_log",
]
