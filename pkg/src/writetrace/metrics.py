"""Rewrite metrics: how writers adapt inserted AI text.

Per suggestion, four numbers: the fraction of its words still present in the
final rewritten span (by character-majority attribution), the embedding
cosine similarity between the original suggestion and its rewritten span,
the count of edit operations landing inside the span, and the number of
alternating AI/user segments. A word is a maximal non-whitespace run; a word
counts as AI when strictly more than half of its characters carry the
suggestion's origin, so light inflection ("step" -> "stepped") keeps AI
attribution while full rewrites credit the user.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Protocol, Sequence

import numpy as np

from .events import EditEvent, EventKind, apply_event, replay
from .provenance import OriginKind, ProvenanceBuffer, Span
from .suggestions import SuggestionKind, SuggestionRecord

WORD_RE = re.compile(r"\S+")

EMBED_DIM = 256


class UndefinedMetricError(ValueError):
    """The metric has no defined value for these inputs."""


class SuggestionNotFoundError(KeyError):
    """The log contains no insertion event for the suggestion."""


def word_count(text: str) -> int:
    return len(WORD_RE.findall(text))


# ---------------------------------------------------------------------------
# Embedding
# ---------------------------------------------------------------------------


class Embedder(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


@lru_cache(maxsize=1 << 16)
def _trigram_bucket(trigram: str, dim: int) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class TrigramHashEmbedder:
    """Hashed character-trigram frequencies, L2-normalized.

    Deterministic reference embedder: buckets come from BLAKE2b of each
    lowercased trigram, so identical text embeds identically across runs
    and platforms. Texts shorter than one trigram cannot be embedded.
    """

    def __init__(self, dim: int = EMBED_DIM):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise UndefinedMetricError("cannot embed empty text")
        lowered = text.lower()
        if len(lowered) < 3:
            raise UndefinedMetricError("text shorter than one trigram cannot be embedded")
        vec = np.zeros(self.dim)
        for i in range(len(lowered) - 2):
            vec[_trigram_bucket(lowered[i : i + 3], self.dim)] += 1.0
        return vec / np.linalg.norm(vec)


_REFERENCE = TrigramHashEmbedder()


def reference_embed(text: str) -> np.ndarray:
    """Embed with the shared reference trigram embedder."""
    return _REFERENCE.embed(text)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        raise UndefinedMetricError("cosine similarity of a zero vector is undefined")
    return float(np.clip(float(np.dot(a, b)) / denom, -1.0, 1.0))


def embedding_similarity(
    original: str, rewritten: str, embedder: Optional[Embedder] = None
) -> float:
    """Cosine similarity of the two embedded texts; exactly 1.0 when equal."""
    if not original or not rewritten:
        raise UndefinedMetricError("cannot compare empty text")
    if original == rewritten:
        return 1.0
    embedder = embedder or _REFERENCE
    return cosine_similarity(embedder.embed(original), embedder.embed(rewritten))


# ---------------------------------------------------------------------------
# Per-suggestion metrics
# ---------------------------------------------------------------------------


def _span_ai_flags(buffer: ProvenanceBuffer, span: Span, suggestion_id: str) -> list[bool]:
    # One flag per span character: does it carry this suggestion's origin?
    flags: list[bool] = []
    offset = 0
    for origin, n in buffer.runs:
        run_start, run_end = offset, offset + n - 1
        offset += n
        if run_end < span.start or run_start > span.end:
            continue
        overlap = min(run_end, span.end) - max(run_start, span.start) + 1
        flags.extend([origin.is_ai_for(suggestion_id)] * overlap)
    return flags


def words_remaining(record: SuggestionRecord, final_buffer: ProvenanceBuffer) -> float:
    """Fraction of the suggestion's words surviving in its rewritten span.

    Numerator: span words whose characters are majority this suggestion's
    origin. Denominator: word count of the original suggestion text. 0.0 when
    nothing survives; capped at 1.0 (user edits can split surviving words).
    """
    denominator = word_count(record.final_text)
    if denominator == 0:
        raise UndefinedMetricError("suggestion has no words")
    span = final_buffer.rewritten_span(record.suggestion_id)
    if span is None:
        return 0.0
    span_text = final_buffer.text[span.start : span.end + 1]
    flags = _span_ai_flags(final_buffer, span, record.suggestion_id)
    numerator = 0
    for match in WORD_RE.finditer(span_text):
        ai_chars = sum(1 for i in range(match.start(), match.end()) if flags[i])
        if 2 * ai_chars > match.end() - match.start():
            numerator += 1
    return min(1.0, numerator / denominator)


def edit_count(events: Sequence[EditEvent], suggestion_id: str) -> int:
    """Edits landing inside the suggestion's then-current rewritten span.

    Counts text-insert/text-delete events after the suggestion's insertion
    whose position falls in [span_start, span_end + 1], replaying the log
    incrementally so the span tracks every intervening edit. Counting stops
    once the span disappears.
    """
    insert_seq = None
    for event in events:
        if (
            event.kind is EventKind.SUGGESTION_INSERTED
            and event.suggestion_id == suggestion_id
        ):
            insert_seq = event.seq
            break
    if insert_seq is None:
        raise SuggestionNotFoundError(f"suggestion {suggestion_id!r} was never inserted")

    buffer = replay(events, upto_seq=insert_seq)
    count = 0
    for event in events:
        if event.seq <= insert_seq:
            continue
        if event.kind in (EventKind.TEXT_INSERT, EventKind.TEXT_DELETE):
            span = buffer.rewritten_span(suggestion_id)
            if span is None:
                break
            if span.start <= event.position <= span.end + 1:
                count += 1
        buffer = apply_event(buffer, event)
    return count


@dataclass(frozen=True)
class RewriteMetrics:
    """The per-suggestion rewrite measurements, bundled."""

    suggestion_id: str
    kind: Optional[SuggestionKind]
    words_remaining: float
    embedding_similarity: Optional[float]
    edit_count: int
    segment_count: int


def suggestion_metrics(
    events: Sequence[EditEvent],
    final_buffer: ProvenanceBuffer,
    record: SuggestionRecord,
    embedder: Optional[Embedder] = None,
) -> RewriteMetrics:
    """All four metrics for one inserted suggestion.

    Similarity compares the original suggestion text against the full
    rewritten-span text (interior user insertions included); it is absent,
    like the segments, when no AI character survives.
    """
    span = final_buffer.rewritten_span(record.suggestion_id)
    remaining = words_remaining(record, final_buffer)
    if span is None:
        similarity = None
        segment_count = 0
    else:
        span_text = final_buffer.text[span.start : span.end + 1]
        similarity = embedding_similarity(record.final_text, span_text, embedder)
        segment_count = len(final_buffer.segments(record.suggestion_id))
    return RewriteMetrics(
        suggestion_id=record.suggestion_id,
        kind=record.kind,
        words_remaining=remaining,
        embedding_similarity=similarity,
        edit_count=edit_count(events, record.suggestion_id),
        segment_count=segment_count,
    )


# ---------------------------------------------------------------------------
# Session-level aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KindAggregate:
    count: int
    words_remaining_mean: float
    embedding_similarity_mean: Optional[float]
    edit_count_mean: float
    segment_count_mean: float


@dataclass(frozen=True)
class SessionSummary:
    total_words: int
    ai_words: int
    ai_word_share: float
    duration_ms: int
    suggestion_counts: dict[str, int]
    metric_means: dict[str, KindAggregate]


def _ai_word_count(buffer: ProvenanceBuffer) -> int:
    # AI words by majority attribution, counting any suggestion's origin.
    flags: list[bool] = []
    for origin, n in buffer.runs:
        flags.extend([origin.kind is OriginKind.AI] * n)
    count = 0
    for match in WORD_RE.finditer(buffer.text):
        ai_chars = sum(1 for i in range(match.start(), match.end()) if flags[i])
        if 2 * ai_chars > match.end() - match.start():
            count += 1
    return count


def aggregate_metrics(metrics: Sequence[RewriteMetrics]) -> KindAggregate:
    """Mean of each metric; the similarity mean skips absent values."""
    if not metrics:
        raise UndefinedMetricError("cannot aggregate zero suggestions")
    similarities = [m.embedding_similarity for m in metrics if m.embedding_similarity is not None]
    return KindAggregate(
        count=len(metrics),
        words_remaining_mean=sum(m.words_remaining for m in metrics) / len(metrics),
        embedding_similarity_mean=(
            sum(similarities) / len(similarities) if similarities else None
        ),
        edit_count_mean=sum(m.edit_count for m in metrics) / len(metrics),
        segment_count_mean=sum(m.segment_count for m in metrics) / len(metrics),
    )


def session_summary(
    events: Sequence[EditEvent],
    embedder: Optional[Embedder] = None,
    records: Optional[Sequence[SuggestionRecord]] = None,
) -> SessionSummary:
    """Whole-session aggregate: word totals plus per-kind metric means.

    The log format does not carry the suggestion kind, so pass the session's
    suggestion records to attribute metrics per kind; without them inserted
    suggestions are reconstructed from the log and grouped under "unknown".
    """
    buffer = replay(events)
    total_words = word_count(buffer.text)
    ai_words = _ai_word_count(buffer)
    by_id = {r.suggestion_id: r for r in records} if records else {}

    per_kind: dict[str, list[RewriteMetrics]] = {}
    for event in events:
        if event.kind is not EventKind.SUGGESTION_INSERTED:
            continue
        record = by_id.get(event.suggestion_id) or SuggestionRecord(
            suggestion_id=event.suggestion_id,
            kind=None,
            context_text="",
            final_text=event.text,
            created_at_ms=event.timestamp_ms,
        )
        metrics = suggestion_metrics(events, buffer, record, embedder)
        key = record.kind.value if record.kind else "unknown"
        per_kind.setdefault(key, []).append(metrics)

    return SessionSummary(
        total_words=total_words,
        ai_words=ai_words,
        ai_word_share=ai_words / total_words if total_words else 0.0,
        duration_ms=max((e.timestamp_ms for e in events), default=0),
        suggestion_counts={k: len(v) for k, v in per_kind.items()},
        metric_means={k: aggregate_metrics(v) for k, v in per_kind.items()},
    )
