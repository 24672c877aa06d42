"""Origin-tagged text buffers.

Every character in a buffer carries an origin: typed by the user, or inserted
by a specific AI suggestion (optionally a specific fragment of one). Buffers
are immutable; insert/delete return new buffers, so any snapshot can be shared
freely across threads.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from itertools import accumulate
from typing import Iterable, Optional


class OriginKind(str, Enum):
    USER = "user"
    AI = "ai"


class BufferBoundsError(IndexError):
    """Offset or range outside the buffer."""


class MissingSpanError(LookupError):
    """No character of the requested suggestion survives in the buffer."""


@dataclass(frozen=True)
class OriginTag:
    """Provenance of a character: the user, or one AI suggestion.

    `fragment_index` is only meaningful for intermediate-suggestion text and
    identifies which of its fragments the character came from.
    """

    kind: OriginKind
    suggestion_id: Optional[str] = None
    fragment_index: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is OriginKind.USER:
            if self.suggestion_id is not None or self.fragment_index is not None:
                raise ValueError("user origin carries no suggestion_id or fragment_index")
        else:
            if self.suggestion_id is None:
                raise ValueError("ai origin requires a suggestion_id")
            if self.fragment_index is not None and self.fragment_index < 0:
                raise ValueError("fragment_index must be non-negative")

    @classmethod
    def user(cls) -> "OriginTag":
        return USER_ORIGIN

    @classmethod
    def ai(cls, suggestion_id: str, fragment_index: Optional[int] = None) -> "OriginTag":
        return cls(OriginKind.AI, suggestion_id, fragment_index)

    def is_ai_for(self, suggestion_id: str) -> bool:
        return self.kind is OriginKind.AI and self.suggestion_id == suggestion_id

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.suggestion_id is not None:
            d["suggestion_id"] = self.suggestion_id
        if self.fragment_index is not None:
            d["fragment_index"] = self.fragment_index
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OriginTag":
        return cls(
            kind=OriginKind(d["kind"]),
            suggestion_id=d.get("suggestion_id"),
            fragment_index=d.get("fragment_index"),
        )


USER_ORIGIN = OriginTag(OriginKind.USER)

#: One maximal run of same-origin characters: (origin, character count).
Run = tuple[OriginTag, int]


@dataclass(frozen=True)
class Span:
    """Inclusive character range [start, end]."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span [{self.start}, {self.end}]")

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Segment:
    """Maximal same-origin-kind run inside a rewritten span."""

    span: Span
    origin_kind: OriginKind


class ProvenanceBuffer:
    """Immutable text plus maximal runs of per-character origin tags.

    Invariants: run lengths sum to the text length, no run is empty, and
    adjacent runs carry distinct origins.
    """

    __slots__ = ("_text", "_runs", "_ends")

    def __init__(self, text: str = "", runs: Iterable[Run] = ()):
        runs = tuple(runs)
        if sum(n for _, n in runs) != len(text):
            raise ValueError("run lengths do not sum to text length")
        for i, (origin, n) in enumerate(runs):
            if n <= 0:
                raise ValueError("runs must have positive length")
            if i > 0 and runs[i - 1][0] == origin:
                raise ValueError("adjacent runs must have distinct origins")
        self._text = text
        self._runs = runs
        self._ends: Optional[tuple[int, ...]] = None

    @classmethod
    def empty(cls) -> "ProvenanceBuffer":
        return cls()

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple[str, OriginTag]]) -> "ProvenanceBuffer":
        """Build a buffer from (text, origin) chunks, coalescing as needed."""
        text_parts: list[str] = []
        runs: list[Run] = []
        for chunk, origin in pieces:
            if not chunk:
                continue
            text_parts.append(chunk)
            if runs and runs[-1][0] == origin:
                runs[-1] = (origin, runs[-1][1] + len(chunk))
            else:
                runs.append((origin, len(chunk)))
        return cls("".join(text_parts), runs)

    @property
    def text(self) -> str:
        return self._text

    @property
    def runs(self) -> tuple[Run, ...]:
        return self._runs

    def __len__(self) -> int:
        return len(self._text)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProvenanceBuffer):
            return NotImplemented
        return self._text == other._text and self._runs == other._runs

    def __hash__(self) -> int:
        return hash((self._text, self._runs))

    def __repr__(self) -> str:
        return f"ProvenanceBuffer({self._text!r}, {len(self._runs)} runs)"

    def _run_ends(self) -> tuple[int, ...]:
        # Cumulative exclusive end offset of each run; cached, buffer is immutable.
        if self._ends is None:
            self._ends = tuple(accumulate(n for _, n in self._runs))
        return self._ends

    def insert(self, position: int, text: str, origin: OriginTag) -> "ProvenanceBuffer":
        """Return a new buffer with `text` inserted at `position` under `origin`.

        Pre-existing characters keep their tags; run maximality is restored.
        """
        if not 0 <= position <= len(self._text):
            raise BufferBoundsError(
                f"insert position {position} outside buffer of length {len(self._text)}"
            )
        if not text:
            raise ValueError("inserted text must be non-empty")

        runs = self._runs
        ends = self._run_ends()
        idx = bisect_right(ends, position)
        n = len(text)

        out: list[Run]
        if idx == len(runs):
            # at the very end (also covers the empty buffer)
            out = list(runs)
            self._push(out, origin, n)
        else:
            start = ends[idx - 1] if idx > 0 else 0
            if position == start:
                out = list(runs[:idx])
                self._push(out, origin, n)
                self._push(out, runs[idx][0], runs[idx][1])
                out.extend(runs[idx + 1:])
            else:
                # strictly inside run idx
                run_origin, run_len = runs[idx]
                out = list(runs[:idx])
                self._push(out, run_origin, position - start)
                self._push(out, origin, n)
                self._push(out, run_origin, start + run_len - position)
                out.extend(runs[idx + 1:])

        new_text = self._text[:position] + text + self._text[position:]
        return self._make(new_text, out)

    def delete(self, position: int, length: int) -> "ProvenanceBuffer":
        """Return a new buffer with [position, position+length) removed.

        Surviving characters keep their origins; equal-origin runs that become
        adjacent are merged. Zero length is the identity.
        """
        if length < 0:
            raise ValueError("delete length must be non-negative")
        if position < 0 or position + length > len(self._text):
            raise BufferBoundsError(
                f"delete range [{position}, {position + length}) outside buffer "
                f"of length {len(self._text)}"
            )
        if length == 0:
            return self

        runs = self._runs
        ends = self._run_ends()
        cut_end = position + length
        first = bisect_right(ends, position)
        last = bisect_right(ends, cut_end - 1)

        first_start = ends[first - 1] if first > 0 else 0
        out = list(runs[:first])
        self._push(out, runs[first][0], position - first_start)
        self._push(out, runs[last][0], ends[last] - cut_end)
        rest = runs[last + 1:]
        if rest:
            self._push(out, rest[0][0], rest[0][1])
            out.extend(rest[1:])

        new_text = self._text[:position] + self._text[cut_end:]
        return self._make(new_text, out)

    def origin_at(self, index: int) -> OriginTag:
        """Origin of the character at `index`."""
        if not 0 <= index < len(self._text):
            raise BufferBoundsError(
                f"index {index} outside buffer of length {len(self._text)}"
            )
        return self._runs[bisect_right(self._run_ends(), index)][0]

    def rewritten_span(self, suggestion_id: str) -> Optional[Span]:
        """Span from the first to the last surviving character of a suggestion.

        Interior characters may have any origin. None if nothing survives.
        """
        first = last = None
        offset = 0
        for origin, n in self._runs:
            if origin.is_ai_for(suggestion_id):
                if first is None:
                    first = offset
                last = offset + n - 1
            offset += n
        if first is None:
            return None
        return Span(first, last)

    def segments(self, suggestion_id: str) -> list[Segment]:
        """Alternating AI/user segments inside the suggestion's rewritten span.

        Characters of any other origin (the user, other suggestions) classify
        as user. Raises MissingSpanError when the span is absent.
        """
        span = self.rewritten_span(suggestion_id)
        if span is None:
            raise MissingSpanError(f"no surviving text for suggestion {suggestion_id!r}")

        segments: list[Segment] = []
        offset = 0
        for origin, n in self._runs:
            run_start, run_end = offset, offset + n - 1
            offset += n
            if run_end < span.start or run_start > span.end:
                continue
            start = max(run_start, span.start)
            end = min(run_end, span.end)
            kind = OriginKind.AI if origin.is_ai_for(suggestion_id) else OriginKind.USER
            if segments and segments[-1].origin_kind is kind:
                segments[-1] = Segment(Span(segments[-1].span.start, end), kind)
            else:
                segments.append(Segment(Span(start, end), kind))
        return segments

    @staticmethod
    def _push(out: list[Run], origin: OriginTag, n: int) -> None:
        if n <= 0:
            return
        if out and out[-1][0] == origin:
            out[-1] = (origin, out[-1][1] + n)
        else:
            out.append((origin, n))

    @classmethod
    def _make(cls, text: str, runs: list[Run]) -> "ProvenanceBuffer":
        # Internal fast path: runs are well-formed by construction.
        buf = cls.__new__(cls)
        buf._text = text
        buf._runs = tuple(runs)
        buf._ends = None
        return buf
