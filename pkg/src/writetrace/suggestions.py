"""Two suggestion paradigms over a pluggable completion provider.

A fluent continuation is a single completion of the story prefix, cut at the
first newline or 60 tokens. An intermediate suggestion is four independent
short completions (plot beat, setting detail, benign tangent, whimsical
storyteller), each ellipsis-terminated and joined into one deliberately
ill-formed string that invites rewriting. All output passes a word blocklist
before it is shown.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

from .providers import CompletionProvider, ProviderError
from .provenance import BufferBoundsError, ProvenanceBuffer

#: Suggestions are disabled while the story prefix is shorter than this.
MIN_CONTEXT_CHARS = 100

#: Fluent continuations stop at the first newline or this many tokens.
FLUENT_MAX_TOKENS = 60

#: Inserted verbatim (as AI-origin text) when generation fails end to end.
GENERATION_FAILED_TEXT = "Text generation failed. Try again!"

FRAGMENT_JOINER = " "
FRAGMENT_SUFFIX = "..."


class GatingError(Exception):
    """Suggestion request refused; `reason` names the unmet condition."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class GenerationFailedError(Exception):
    """The provider produced nothing usable."""


class FilteredError(Exception):
    """The completion contained a blocklisted word and was suppressed."""


class SuggestionKind(str, Enum):
    FLUENT = "fluent"
    INTERMEDIATE = "intermediate"


class FragmentKind(str, Enum):
    PLOT_BEAT = "plot-beat"
    SETTING_DETAIL = "setting-detail"
    BENIGN_TANGENT = "benign-tangent"
    WHIMSICAL_STORYTELLER = "whimsical-storyteller"


@dataclass(frozen=True)
class FragmentSpec:
    kind: FragmentKind
    instruction: str
    word_cap: int = 15
    token_hard_limit: int = 30

    @property
    def full_instruction(self) -> str:
        return f"{self.instruction} Respond in at most {self.word_cap} words."


#: The four intermediate fragments, in assembly order.
FRAGMENT_SPECS: tuple[FragmentSpec, ...] = (
    FragmentSpec(
        FragmentKind.PLOT_BEAT,
        "Continue the story by suggesting a shift in the narrative: a new "
        "event, action, emotional turn, or realization.",
    ),
    FragmentSpec(
        FragmentKind.SETTING_DETAIL,
        "Continue the story by adding a new detail about the setting, such "
        "as fresh sensory information or a new element of the scene.",
    ),
    FragmentSpec(
        FragmentKind.BENIGN_TANGENT,
        "Continue the story by describing a benign circumstantial event "
        "happening in the background of the scene.",
    ),
    FragmentSpec(
        FragmentKind.WHIMSICAL_STORYTELLER,
        "Continue the story in a light-hearted, joking tone.",
    ),
)


class ContentFilter:
    """Whole-word, case-insensitive blocklist."""

    def __init__(self, blocklist: Iterable[str]):
        words = {w.strip().lower() for w in blocklist}
        words.discard("")
        self.blocklist = frozenset(words)
        if words:
            alternation = "|".join(re.escape(w) for w in sorted(words))
            self._pattern: Optional[re.Pattern] = re.compile(
                rf"\b(?:{alternation})\b", re.IGNORECASE
            )
        else:
            self._pattern = None

    def allows(self, text: str) -> bool:
        return self._pattern is None or self._pattern.search(text) is None

    def rejects(self, text: str) -> bool:
        return not self.allows(text)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ContentFilter":
        """Load a blocklist file: one lowercase word per line, '#' comments."""
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            word = line.split("#", 1)[0].strip()
            if word:
                words.append(word)
        return cls(words)

    @classmethod
    def default(cls) -> "ContentFilter":
        text = resources.files("writetrace.data").joinpath("blocklist.txt").read_text("utf-8")
        return cls(
            line.split("#", 1)[0].strip() for line in text.splitlines()
        )


@dataclass(frozen=True)
class SuggestionRecord:
    """One generated suggestion as shown to the writer.

    `final_text` is what insertion would place in the buffer; for the
    intermediate kind it is the ellipsis-joined assembly of `fragments`.
    Records flagged `error` carry the generation-failure message instead.
    `kind` is None only for records reconstructed from a bare event log,
    which does not carry the suggestion kind.
    """

    suggestion_id: str
    kind: Optional[SuggestionKind]
    context_text: str
    final_text: str
    created_at_ms: int
    fragments: tuple[tuple[FragmentKind, str], ...] = ()
    error: bool = False

    def __post_init__(self) -> None:
        if self.error:
            return
        if self.kind is SuggestionKind.FLUENT and self.fragments:
            raise ValueError("fluent suggestions carry no fragments")
        if self.kind is SuggestionKind.INTERMEDIATE and not 1 <= len(self.fragments) <= 4:
            raise ValueError("intermediate suggestions carry 1-4 fragments")

    def to_dict(self) -> dict:
        d: dict = {
            "suggestion_id": self.suggestion_id,
            "kind": self.kind.value,
            "context_text": self.context_text,
            "final_text": self.final_text,
            "created_at_ms": self.created_at_ms,
            "fragments": [[k.value, t] for k, t in self.fragments],
        }
        if self.error:
            d["error"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SuggestionRecord":
        return cls(
            suggestion_id=d["suggestion_id"],
            kind=SuggestionKind(d["kind"]),
            context_text=d["context_text"],
            final_text=d["final_text"],
            created_at_ms=d["created_at_ms"],
            fragments=tuple((FragmentKind(k), t) for k, t in d.get("fragments", [])),
            error=bool(d.get("error", False)),
        )


def error_suggestion() -> str:
    """The exact text inserted when generation fails end to end."""
    return GENERATION_FAILED_TEXT


def build_context(buffer: ProvenanceBuffer, caret: int) -> str:
    """Story prefix sent to the provider: characters [0, caret)."""
    if not 0 <= caret <= len(buffer):
        raise BufferBoundsError(f"caret {caret} outside buffer of length {len(buffer)}")
    return buffer.text[:caret]


def truncate_tokens(text: str, limit: int, provider: CompletionProvider) -> str:
    """Prefix of `text` covering its first `limit` provider tokens."""
    if limit <= 0:
        return ""
    tokens = provider.tokenize(text)
    if len(tokens) <= limit:
        return text.rstrip()
    pos = end = 0
    for token in tokens[:limit]:
        found = text.find(token, pos)
        if found < 0:
            # tokenizer output does not align with the text; rebuild from tokens
            return " ".join(tokens[:limit])
        end = found + len(token)
        pos = end
    return text[:end].rstrip()


def _check_context(context: str) -> None:
    if len(context) < MIN_CONTEXT_CHARS:
        raise GatingError(
            f"context too short ({len(context)} characters, need {MIN_CONTEXT_CHARS})"
        )


def generate_fluent(
    context: str,
    provider: CompletionProvider,
    content_filter: Optional[ContentFilter] = None,
) -> str:
    """One continuation of the prefix, cut at the first newline or 60 tokens."""
    _check_context(context)
    try:
        raw = provider.complete(context, max_tokens=FLUENT_MAX_TOKENS)
    except ProviderError as exc:
        raise GenerationFailedError(str(exc)) from exc
    text = raw.strip().split("\n", 1)[0]
    text = truncate_tokens(text, FLUENT_MAX_TOKENS, provider)
    if not text:
        raise GenerationFailedError("provider returned an empty completion")
    if content_filter is not None and content_filter.rejects(text):
        raise FilteredError("completion contained a blocklisted word")
    return text


def generate_intermediate(
    context: str,
    provider: CompletionProvider,
    content_filter: Optional[ContentFilter] = None,
) -> tuple[str, list[tuple[FragmentKind, str]]]:
    """Four independent fragment completions assembled into one suggestion.

    The four requests run concurrently but assemble in FRAGMENT_SPECS order.
    Fragments that fail (provider error, empty, or filtered) are dropped;
    only if all four fail does the whole request fail.
    """
    _check_context(context)

    def one(spec: FragmentSpec) -> Optional[str]:
        try:
            return provider.complete(
                context, spec.full_instruction, max_tokens=spec.token_hard_limit
            )
        except ProviderError:
            return None

    with ThreadPoolExecutor(max_workers=len(FRAGMENT_SPECS)) as pool:
        raws = list(pool.map(one, FRAGMENT_SPECS))

    fragments: list[tuple[FragmentKind, str]] = []
    for spec, raw in zip(FRAGMENT_SPECS, raws):
        if raw is None:
            continue
        text = truncate_tokens(raw.strip(), spec.token_hard_limit, provider)
        if not text:
            continue
        if content_filter is not None and content_filter.rejects(text):
            continue
        fragments.append((spec.kind, text))

    if not fragments:
        raise GenerationFailedError("all four fragment requests failed")
    assembled = FRAGMENT_JOINER.join(f"{text}{FRAGMENT_SUFFIX}" for _, text in fragments)
    return assembled, fragments
