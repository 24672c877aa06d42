"""Scripted synthetic writing sessions with known rewriting behavior.

Two personas: a "keeper" accepts every suggestion untouched, a
"heavy-rewriter" deletes at least 80% of each suggestion (word-aligned) and
types a short replacement. Sessions are driven through the real session
service with the deterministic mock provider, so the exports exercise the
full pipeline while the generator's own word arithmetic provides ground
truth to validate the analysis against.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .events import EditEvent, EventKind
from .providers import MockProvider
from .provenance import OriginTag
from .service import MenuOrder, SessionConfig, SessionService
from .suggestions import SuggestionKind

KEEPER = "keeper"
HEAVY_REWRITER = "heavy-rewriter"

_INTRO_VOCAB = (
    "morning harbor letter quiet lantern window garden answer journey "
    "whisper evening paper winter bright small certain story river wonder"
).split()


@dataclass
class PersonaGroundTruth:
    """Expected words_remaining per persona, from construction arithmetic."""

    per_suggestion: dict[str, list[float]] = field(default_factory=dict)

    def add(self, persona: str, value: float) -> None:
        self.per_suggestion.setdefault(persona, []).append(value)

    def mean(self, persona: str) -> float:
        values = self.per_suggestion[persona]
        return sum(values) / len(values)


def _word_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) offsets of each whitespace-delimited word."""
    spans = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        start = i
        while i < len(text) and not text[i].isspace():
            i += 1
        spans.append((start, i))
    return spans


class _Clock:
    def __init__(self) -> None:
        self.ms = 0

    def __call__(self) -> int:
        return self.ms


def generate_persona_corpus(
    out_dir: Union[str, Path],
    sessions_per_persona: int = 20,
    seed: int = 0,
    suggestions_per_session: int = 2,
) -> PersonaGroundTruth:
    """Write one export JSON per scripted session under `out_dir`.

    Exports are named `<persona>-<index>.json` and carry that name as their
    session_id so repeated runs produce identical analysis output.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clock = _Clock()
    # newline_rate 0 keeps fluent suggestions long enough for the heavy
    # persona to meaningfully delete 80% of them
    service = SessionService(
        out_dir / "_state", MockProvider(seed=seed, newline_rate=0.0), now_ms=clock
    )
    truth = PersonaGroundTruth()

    for persona in (KEEPER, HEAVY_REWRITER):
        for index in range(sessions_per_persona):
            name = f"{persona}-{index:02d}"
            export = _run_session(
                service, clock, persona, index, seed, suggestions_per_session, truth
            )
            export["session_id"] = name
            (out_dir / f"{name}.json").write_text(
                json.dumps(export, ensure_ascii=False, indent=1), encoding="utf-8"
            )
    return truth


def _run_session(
    service: SessionService,
    clock: _Clock,
    persona: str,
    index: int,
    seed: int,
    suggestions_per_session: int,
    truth: PersonaGroundTruth,
) -> dict:
    rng = random.Random(f"{seed}:{persona}:{index}")
    order = MenuOrder.A_FIRST if index % 2 == 0 else MenuOrder.B_FIRST
    session_id = service.create_session(SessionConfig(menu_order=order))
    started = clock.ms
    seq = 0

    def ingest(*events: EditEvent) -> None:
        nonlocal seq
        service.ingest_events(session_id, list(events))
        seq = events[-1].seq

    def type_text(position: int, text: str) -> None:
        nonlocal seq
        ingest(
            EditEvent(
                seq=seq + 1,
                timestamp_ms=clock.ms - started,
                kind=EventKind.TEXT_INSERT,
                position=position,
                text=text,
                origin=OriginTag.user(),
            )
        )

    def delete_text(position: int, length: int) -> None:
        ingest(
            EditEvent(
                seq=seq + 1,
                timestamp_ms=clock.ms - started,
                kind=EventKind.TEXT_DELETE,
                position=position,
                length=length,
            )
        )

    intro = " ".join(rng.choices(_INTRO_VOCAB, k=rng.randint(155, 180))) + " "
    type_text(0, intro)
    clock.ms += 16 * 60_000  # both unlock conditions now hold

    doc_len = len(intro)
    for round_no in range(suggestions_per_session):
        kind = (
            SuggestionKind.FLUENT
            if (round_no + index) % 2 == 0
            else SuggestionKind.INTERMEDIATE
        )
        clock.ms += rng.randint(5_000, 40_000)
        preview = service.request_suggestion(session_id, kind, doc_len)
        seq = preview["seq"]
        accepted = service.accept_suggestion(session_id, preview["suggestion_id"], doc_len)
        seq = accepted["seq"]
        suggestion = preview["text"]
        inserted_at = doc_len
        doc_len += len(suggestion)

        words = _word_spans(suggestion)
        if persona == KEEPER:
            truth.add(persona, 1.0)
        else:
            keep = max(1, int(0.15 * len(words)))
            cut = words[keep - 1][1]  # end of the last kept word
            clock.ms += rng.randint(2_000, 10_000)
            delete_text(inserted_at + cut, len(suggestion) - cut)
            doc_len -= len(suggestion) - cut
            replacement = " " + " ".join(rng.choices(_INTRO_VOCAB, k=rng.randint(6, 14)))
            type_text(inserted_at + cut, replacement)
            doc_len += len(replacement)
            truth.add(persona, keep / len(words))

        clock.ms += rng.randint(5_000, 30_000)
        bridge = " " + " ".join(rng.choices(_INTRO_VOCAB, k=rng.randint(10, 25))) + " "
        type_text(doc_len, bridge)
        doc_len += len(bridge)

    service.save(session_id)
    return service.export_session(session_id)
