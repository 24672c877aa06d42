#!/usr/bin/env python3
"""Walkthrough: origin-tagged buffers, replay, and rewrite metrics.

Builds a tiny writing session event by event, then shows how the final
document decomposes into provenance runs, how the rewritten span and its
alternating segments are extracted, and what the rewrite metrics report.
"""

from writetrace.events import EditEvent, EventKind, replay
from writetrace.metrics import suggestion_metrics
from writetrace.provenance import OriginTag
from writetrace.suggestions import SuggestionKind, SuggestionRecord

USER = OriginTag.user()

# The writer types an opening, accepts one AI suggestion, then rewrites it.
opening = "We rowed closer and "
suggestion = "the lighthouse keeper waved from the rocks and smiled"
waved_at = len(opening) + suggestion.index("waved")
events = [
    EditEvent(1, 1_000, EventKind.TEXT_INSERT, position=0,
              text=opening, origin=USER),
    EditEvent(2, 9_000, EventKind.SUGGESTION_REQUEST, suggestion_id="s1"),
    EditEvent(3, 9_400, EventKind.SUGGESTION_SHOWN, suggestion_id="s1"),
    EditEvent(4, 12_000, EventKind.SUGGESTION_INSERTED, position=len(opening),
              text=suggestion, origin=OriginTag.ai("s1"), suggestion_id="s1"),
    # replace "waved" with "was waving" and keep the rest
    EditEvent(5, 20_000, EventKind.TEXT_DELETE, position=waved_at, length=len("waved")),
    EditEvent(6, 21_000, EventKind.TEXT_INSERT, position=waved_at,
              text="was waving", origin=USER),
    EditEvent(7, 30_000, EventKind.SAVE),
]

buffer = replay(events)
print("final text:")
print(" ", buffer.text)
print("\nprovenance runs (origin, chars):")
for origin, n in buffer.runs:
    label = "user" if origin.suggestion_id is None else f"ai:{origin.suggestion_id}"
    print(f"  {label:8} {n}")

span = buffer.rewritten_span("s1")
print(f"\nrewritten span of s1: [{span.start}, {span.end}]")
print(" ", repr(buffer.text[span.start : span.end + 1]))

print("\nalternating segments inside the span:")
for segment in buffer.segments("s1"):
    chunk = buffer.text[segment.span.start : segment.span.end + 1]
    print(f"  {segment.origin_kind.value:4} {chunk!r}")

record = SuggestionRecord("s1", SuggestionKind.FLUENT, opening,
                          suggestion, created_at_ms=12_000)
m = suggestion_metrics(events, buffer, record)
print("\nrewrite metrics:")
print(f"  words_remaining      {m.words_remaining:.3f}")
print(f"  embedding_similarity {m.embedding_similarity:.3f}")
print(f"  edit_count           {m.edit_count}")
print(f"  segment_count        {m.segment_count}")
