"""Shared hand-scripted session fixtures with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass

from writetrace.events import EditEvent, EventKind
from writetrace.provenance import OriginTag
from writetrace.suggestions import SuggestionKind, SuggestionRecord

USER = OriginTag.user()

CAFE_PREFIX = "All of it was a welcome lift for a nervous wreck like "

#: The suggestion as generated: three sentences, 49 words.
CAFE_SUGGESTION = (
    "her. I square my shoulders and smooth my jacket, checking that every "
    "crease sits right. The Lantern Cafe is a snug corner spot, loved for "
    "its warm light and buttery pastries. As I walk in, the gentle hum of "
    "chatter and clinking cups settles me, quietly easing my doubts"
)

CAFE_SUFFIX = " and turning my thoughts to the evening ahead, my first date."

CAFE_BACKSTORY = (
    "\nMy phone buzzes twice in my pocket. Of course it does. My sister, no "
    "doubt, texting to ask whether I actually ironed anything or simply "
    "hoped for the best. I type back a quick lie, pocket the phone, and "
    "promise myself I will not check it again tonight.\n"
)


@dataclass(frozen=True)
class CafeFixture:
    """A suggestion rewritten with one large insertion plus small tense edits.

    The rewrite yields nine alternating segments and keeps 47 of the
    original 49 suggestion words ("is" was replaced and "As" became
    majority-user "as"; "walk" -> "walked" stays majority-AI).
    """

    events: list[EditEvent]
    record: SuggestionRecord
    suggestion_id: str
    expected_segments: int
    expected_words_numerator: int
    expected_words_denominator: int
    expected_edit_count: int
    final_text: str


def build_cafe_fixture() -> CafeFixture:
    sid = "s1"
    events: list[EditEvent] = []
    doc = ""
    clock = [0]

    def emit(kind, **kwargs):
        clock[0] += 1000
        events.append(
            EditEvent(seq=len(events) + 1, timestamp_ms=clock[0], kind=kind, **kwargs)
        )

    def user_insert(position, text):
        nonlocal doc
        emit(EventKind.TEXT_INSERT, position=position, text=text, origin=USER)
        doc = doc[:position] + text + doc[position:]

    def delete(position, length):
        nonlocal doc
        emit(EventKind.TEXT_DELETE, position=position, length=length)
        doc = doc[:position] + doc[position + length :]

    user_insert(0, CAFE_PREFIX)
    emit(EventKind.SUGGESTION_REQUEST, suggestion_id=sid)
    emit(EventKind.SUGGESTION_SHOWN, suggestion_id=sid)
    emit(
        EventKind.SUGGESTION_INSERTED,
        position=len(doc),
        text=CAFE_SUGGESTION,
        origin=OriginTag.ai(sid),
        suggestion_id=sid,
    )
    doc += CAFE_SUGGESTION

    # continue typing after the suggestion
    user_insert(len(doc), CAFE_SUFFIX)

    # large insertion replacing the space between the first two sentences
    gap = doc.index(" The Lantern Cafe")
    delete(gap, 1)
    user_insert(gap, CAFE_BACKSTORY)

    # "is" -> "was"
    is_at = doc.index(" is a snug") + 1
    delete(is_at, 2)
    user_insert(is_at, "was")

    # "pastries. As I walk" -> "pastries and as I walked"
    stop_at = doc.index(". As I walk")
    delete(stop_at, 3)  # ". A"
    user_insert(stop_at, " and a")
    walk_end = doc.index("s I walk in,") + len("s I walk")
    user_insert(walk_end, "ed")

    emit(EventKind.SAVE)

    record = SuggestionRecord(
        suggestion_id=sid,
        kind=SuggestionKind.FLUENT,
        context_text=CAFE_PREFIX,
        final_text=CAFE_SUGGESTION,
        created_at_ms=events[3].timestamp_ms,
    )
    return CafeFixture(
        events=events,
        record=record,
        suggestion_id=sid,
        expected_segments=9,
        expected_words_numerator=47,
        expected_words_denominator=49,
        expected_edit_count=8,
        final_text=doc,
    )
