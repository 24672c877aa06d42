"""Writing-session service: lifecycle, event ingestion, gated suggestions,
save, and export, over HTTP.

Suggestions stay locked until the writer has either spent `lock_minutes` in
the session or produced `lock_words` words; once open, the gate never closes
again (the unlock is latched and persisted). Independently of that, a request
is refused while the story prefix before the caret is shorter than
`min_context_chars`. Per session a single logical writer is assumed: event
ingestion and suggestion acceptance serialize on one lock, while provider
calls run outside it so slow generations do not block typing.
"""

from __future__ import annotations

import argparse
import os
import threading
import time
import uuid
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Union

from .events import EditEvent, EventKind, ReplayError, apply_event, replay, validate_sequence
from .metrics import word_count
from .provenance import BufferBoundsError, OriginTag, ProvenanceBuffer
from .providers import CompletionProvider, HttpChatProvider, MockProvider
from .store import PersistenceError, SessionStore
from .suggestions import (
    ContentFilter,
    FilteredError,
    GatingError,
    GenerationFailedError,
    SuggestionKind,
    SuggestionRecord,
    build_context,
    error_suggestion,
    generate_fluent,
    generate_intermediate,
)

DATA_DIR_ENV = "WRITETRACE_DATA_DIR"
PROVIDER_ENV = "WRITETRACE_PROVIDER"

#: Event kinds clients may ingest; suggestion events are server-generated.
CLIENT_EVENT_KINDS = frozenset(
    {EventKind.TEXT_INSERT, EventKind.TEXT_DELETE, EventKind.CARET_MOVE, EventKind.SAVE}
)


class NotFoundError(KeyError):
    """Unknown session or suggestion id."""


class OrderingError(ValueError):
    """An event batch does not continue the session's seq sequence."""


class ValidationError(ValueError):
    """An event or position does not apply to the current buffer."""


class ConflictError(ValueError):
    """The suggestion was already inserted."""


class ConfigurationError(ValueError):
    """The session config cannot be used (e.g. unreadable blocklist)."""


class MenuOrder(str, Enum):
    A_FIRST = "a-first"
    B_FIRST = "b-first"


@dataclass(frozen=True)
class SessionConfig:
    """Per-session settings, snapshotted at creation.

    `min_session_minutes` is informational (surfaced to the UI); the service
    never ends a session. Provider settings select and parameterize the
    completion backend for this session.
    """

    min_context_chars: int = 100
    lock_minutes: int = 15
    lock_words: int = 150
    menu_order: MenuOrder = MenuOrder.A_FIRST
    min_session_minutes: int = 50
    autosave_seconds: int = 60
    provider: str = "mock"
    provider_base_url: Optional[str] = None
    provider_model: str = "gpt-3.5-turbo"
    provider_timeout: float = 20.0
    provider_temperature: float = 1.0
    mock_seed: int = 0
    mock_fail_rate: float = 0.0
    blocklist_path: Optional[str] = None

    def __post_init__(self) -> None:
        for name in ("min_context_chars", "lock_minutes", "lock_words",
                     "min_session_minutes", "autosave_seconds"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.provider not in ("mock", "openai"):
            raise ConfigurationError(f"unknown provider {self.provider!r}")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["menu_order"] = self.menu_order.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(d)
        if "menu_order" in kwargs:
            try:
                kwargs["menu_order"] = MenuOrder(kwargs["menu_order"])
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from exc
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc


class _Session:
    """In-memory state of one session; everything here is derived from disk."""

    def __init__(
        self,
        session_id: str,
        config: SessionConfig,
        started_epoch_ms: int,
        content_filter: ContentFilter,
    ):
        self.session_id = session_id
        self.config = config
        self.started_epoch_ms = started_epoch_ms
        self.content_filter = content_filter
        self.lock = threading.Lock()
        self.buffer = ProvenanceBuffer.empty()
        self.last_seq = 0
        self.records: dict[str, SuggestionRecord] = {}
        self.inserted: set[str] = set()
        self.unlocked = False
        self.last_saved_ms: Optional[int] = None
        self.suggestion_counter = 0
        self.snapshot_dirty = False


class SessionService:
    """Core session logic, HTTP-agnostic. One instance serves many sessions."""

    def __init__(
        self,
        data_dir: Union[str, Path],
        provider: Optional[CompletionProvider] = None,
        *,
        now_ms: Optional[Callable[[], int]] = None,
    ):
        self.store = SessionStore(data_dir)
        self._provider_override = provider
        self._now_ms = now_ms or (lambda: time.time_ns() // 1_000_000)
        self._sessions: dict[str, _Session] = {}
        self._sessions_lock = threading.Lock()
        self._autosave_thread: Optional[threading.Thread] = None
        self._autosave_stop = threading.Event()

    # -- lifecycle -----------------------------------------------------------

    def create_session(self, config: Optional[SessionConfig] = None) -> str:
        config = config or SessionConfig()
        content_filter = self._build_filter(config)  # validates the blocklist path
        session_id = uuid.uuid4().hex[:12]
        started = self._now_ms()
        self.store.create(
            session_id,
            {
                "session_id": session_id,
                "started_epoch_ms": started,
                "config": config.to_dict(),
            },
        )
        session = _Session(session_id, config, started, content_filter)
        with self._sessions_lock:
            self._sessions[session_id] = session
        return session_id

    def _get(self, session_id: str) -> _Session:
        with self._sessions_lock:
            session = self._sessions.get(session_id)
            if session is not None:
                return session
            if not self.store.exists(session_id):
                raise NotFoundError(f"unknown session {session_id!r}")
            session = self._load(session_id)
            self._sessions[session_id] = session
            return session

    def _load(self, session_id: str) -> _Session:
        """Resume a persisted session: the log replays to the live state."""
        meta = self.store.read_meta(session_id)
        config = SessionConfig.from_dict(meta["config"])
        session = _Session(
            session_id, config, meta["started_epoch_ms"], self._build_filter(config)
        )
        events = self.store.read_events(session_id)
        try:
            session.buffer = replay(events)
        except ReplayError as exc:
            raise PersistenceError(f"session {session_id} log is corrupt: {exc}") from exc
        session.last_seq = events[-1].seq if events else 0
        session.records = {r.suggestion_id: r for r in self.store.read_records(session_id)}
        session.inserted = {
            e.suggestion_id for e in events if e.kind is EventKind.SUGGESTION_INSERTED
        }
        session.suggestion_counter = len(session.records)
        session.unlocked = self.store.is_unlocked(session_id)
        saves = [e.timestamp_ms for e in events if e.kind is EventKind.SAVE]
        session.last_saved_ms = saves[-1] if saves else None
        return session

    # -- events ---------------------------------------------------------------

    def ingest_events(self, session_id: str, events: list[EditEvent]) -> int:
        """Append a client batch; all-or-nothing. Returns the highest seq."""
        session = self._get(session_id)
        with session.lock:
            for event in events:
                if event.kind not in CLIENT_EVENT_KINDS:
                    raise ValidationError(
                        f"clients may not ingest {event.kind.value} events"
                    )
            try:
                validate_sequence(events, last_seq=session.last_seq)
            except ReplayError as exc:
                raise OrderingError(str(exc)) from exc
            scratch = session.buffer
            for event in events:
                try:
                    scratch = apply_event(scratch, event)
                except (BufferBoundsError, ValueError) as exc:
                    raise ValidationError(f"event seq {event.seq}: {exc}") from exc
            self.store.append_events(session_id, events)
            session.buffer = scratch
            if events:
                session.last_seq = events[-1].seq
                session.snapshot_dirty = True
            self._update_latch(session)
            return session.last_seq

    def _update_latch(self, session: _Session) -> None:
        if not session.unlocked and word_count(session.buffer.text) >= session.config.lock_words:
            session.unlocked = True
            self.store.set_unlocked(session.session_id)

    def _elapsed_ms(self, session: _Session) -> int:
        return max(0, self._now_ms() - session.started_epoch_ms)

    def _append_server_event(self, session: _Session, kind: EventKind, **kwargs) -> EditEvent:
        # caller holds session.lock
        event = EditEvent(
            seq=session.last_seq + 1,
            timestamp_ms=self._elapsed_ms(session),
            kind=kind,
            **kwargs,
        )
        self.store.append_events(session.session_id, [event])
        session.buffer = apply_event(session.buffer, event)
        session.last_seq = event.seq
        session.snapshot_dirty = True
        return event

    # -- suggestions ----------------------------------------------------------

    def check_gate(self, session_id: str, caret: int) -> Optional[str]:
        """The reason suggestions are unavailable right now, or None if open."""
        session = self._get(session_id)
        with session.lock:
            return self._gate_reason(session, caret)

    def _gate_reason(self, session: _Session, caret: int) -> Optional[str]:
        config = session.config
        elapsed = self._elapsed_ms(session)
        if not session.unlocked:
            self._update_latch(session)
        if not session.unlocked and elapsed >= config.lock_minutes * 60_000:
            session.unlocked = True
            self.store.set_unlocked(session.session_id)
        if not session.unlocked:
            words = word_count(session.buffer.text)
            return (
                f"suggestions unlock after {config.lock_minutes} minutes of writing "
                f"or {config.lock_words} words; at {elapsed // 60_000} minutes and "
                f"{words} words"
            )
        if caret < config.min_context_chars:
            return (
                f"story before the caret is too short ({caret} characters; "
                f"suggestions need {config.min_context_chars})"
            )
        return None

    def request_suggestion(
        self, session_id: str, kind: SuggestionKind, caret: int
    ) -> dict:
        """Generate a preview. The suggestion is not inserted until accepted.

        On engine failure the preview carries the fixed error text, flagged
        `error`; it is insertable like any other suggestion.
        """
        session = self._get(session_id)
        with session.lock:
            if not 0 <= caret <= len(session.buffer):
                raise ValidationError(f"caret {caret} outside buffer")
            reason = self._gate_reason(session, caret)
            if reason is not None:
                raise GatingError(reason)
            context = build_context(session.buffer, caret)
            session.suggestion_counter += 1
            suggestion_id = f"s{session.suggestion_counter}"
            self._append_server_event(
                session, EventKind.SUGGESTION_REQUEST, suggestion_id=suggestion_id
            )
            provider = self._provider_for(session.config)
            content_filter = session.content_filter

        # generation happens outside the session lock
        error = False
        fragments: tuple = ()
        try:
            if kind is SuggestionKind.FLUENT:
                text = generate_fluent(context, provider, content_filter)
            else:
                text, fragment_list = generate_intermediate(context, provider, content_filter)
                fragments = tuple(fragment_list)
        except (GenerationFailedError, FilteredError):
            text = error_suggestion()
            error = True

        with session.lock:
            shown = self._append_server_event(
                session, EventKind.SUGGESTION_SHOWN, suggestion_id=suggestion_id
            )
            record = SuggestionRecord(
                suggestion_id=suggestion_id,
                kind=kind,
                context_text=context,
                final_text=text,
                created_at_ms=shown.timestamp_ms,
                fragments=fragments,
                error=error,
            )
            self.store.append_record(session_id, record)
            session.records[suggestion_id] = record
            return {
                "suggestion_id": suggestion_id,
                "kind": kind.value,
                "text": text,
                "error": error,
                "seq": session.last_seq,
            }

    def accept_suggestion(self, session_id: str, suggestion_id: str, position: int) -> dict:
        session = self._get(session_id)
        with session.lock:
            record = session.records.get(suggestion_id)
            if record is None:
                raise NotFoundError(f"unknown suggestion {suggestion_id!r}")
            if suggestion_id in session.inserted:
                raise ConflictError(f"suggestion {suggestion_id!r} already inserted")
            if not 0 <= position <= len(session.buffer):
                raise ValidationError(
                    f"stale position {position} for buffer of length {len(session.buffer)}"
                )
            event = self._append_server_event(
                session,
                EventKind.SUGGESTION_INSERTED,
                position=position,
                text=record.final_text,
                origin=OriginTag.ai(suggestion_id),
                suggestion_id=suggestion_id,
            )
            session.inserted.add(suggestion_id)
            self._update_latch(session)
            return {"seq": event.seq, "text": record.final_text}

    # -- save / export / state ------------------------------------------------

    def save(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            event = self._append_server_event(session, EventKind.SAVE)
            self.store.write_snapshot(session_id, session.buffer.text)
            session.snapshot_dirty = False
            session.last_saved_ms = event.timestamp_ms
            return {"saved_at_ms": event.timestamp_ms, "seq": event.seq}

    def export_session(self, session_id: str) -> dict:
        """Everything analysis needs, with the log byte-exact as persisted."""
        session = self._get(session_id)
        with session.lock:
            meta = self.store.read_meta(session_id)
            return {
                "session_id": session_id,
                "started_epoch_ms": meta["started_epoch_ms"],
                "config": session.config.to_dict(),
                "log": self.store.read_log_text(session_id),
                "suggestions": [
                    session.records[sid].to_dict()
                    for sid in sorted(session.records, key=lambda s: int(s[1:]))
                ],
                "final_text": session.buffer.text,
            }

    def state(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            gate_reason = self._gate_reason(session, caret=len(session.buffer))
            context_ok = len(session.buffer) >= session.config.min_context_chars
            return {
                "session_id": session_id,
                "config": session.config.to_dict(),
                "seq": session.last_seq,
                "text": session.buffer.text,
                "runs": [
                    {"origin": origin.to_dict(), "length": n}
                    for origin, n in session.buffer.runs
                ],
                "word_count": word_count(session.buffer.text),
                "elapsed_ms": self._elapsed_ms(session),
                "last_saved_ms": session.last_saved_ms,
                "unlocked": session.unlocked,
                "suggestions_enabled": session.unlocked and context_ok,
                "gate_reason": gate_reason,
            }

    # -- autosave --------------------------------------------------------------

    def start_autosave(self, interval_s: Optional[float] = None) -> None:
        """Periodically snapshot dirty sessions (no save event is appended)."""
        if self._autosave_thread is not None:
            return
        self._autosave_stop.clear()

        def loop() -> None:
            while not self._autosave_stop.is_set():
                delay = interval_s
                if delay is None:
                    with self._sessions_lock:
                        configured = [
                            s.config.autosave_seconds for s in self._sessions.values()
                        ]
                    delay = min(configured) if configured else 60
                if self._autosave_stop.wait(delay):
                    break
                self.autosave_once()

        self._autosave_thread = threading.Thread(target=loop, daemon=True)
        self._autosave_thread.start()

    def autosave_once(self) -> None:
        with self._sessions_lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            with session.lock:
                if session.snapshot_dirty:
                    self.store.write_snapshot(session.session_id, session.buffer.text)
                    session.snapshot_dirty = False

    def stop_autosave(self) -> None:
        if self._autosave_thread is not None:
            self._autosave_stop.set()
            self._autosave_thread.join(timeout=5)
            self._autosave_thread = None

    # -- wiring -----------------------------------------------------------------

    def _provider_for(self, config: SessionConfig) -> CompletionProvider:
        if self._provider_override is not None:
            return self._provider_override
        if config.provider == "mock":
            return MockProvider(seed=config.mock_seed, fail_rate=config.mock_fail_rate)
        return HttpChatProvider(
            base_url=config.provider_base_url or os.environ.get("WRITETRACE_BASE_URL", ""),
            model=config.provider_model,
            timeout=config.provider_timeout,
            temperature=config.provider_temperature,
        )

    def _build_filter(self, config: SessionConfig) -> ContentFilter:
        if config.blocklist_path is None:
            return ContentFilter.default()
        try:
            return ContentFilter.from_file(config.blocklist_path)
        except OSError as exc:
            raise ConfigurationError(
                f"cannot read blocklist {config.blocklist_path!r}: {exc}"
            ) from exc


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------


def create_app(
    data_dir: Optional[Union[str, Path]] = None,
    provider: Optional[CompletionProvider] = None,
    *,
    service: Optional[SessionService] = None,
    autosave: bool = True,
):
    """FastAPI app over a SessionService; bodies use the log-format vocabulary."""
    from fastapi import FastAPI, Request
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    if service is None:
        data_dir = data_dir or os.environ.get(DATA_DIR_ENV, "./writetrace-data")
        service = SessionService(data_dir, provider)
    app = FastAPI(title="writetrace session service")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if autosave:
        service.start_autosave()

    status_by_error = {
        NotFoundError: 404,
        OrderingError: 409,
        ConflictError: 409,
        GatingError: 403,
        ValidationError: 400,
        ConfigurationError: 400,
        PersistenceError: 500,
    }

    def make_handler(status: int):
        async def handle(request: Request, exc: Exception):
            detail = exc.args[0] if exc.args else str(exc)
            return JSONResponse({"detail": detail}, status_code=status)

        return handle

    for error_type, status_code in status_by_error.items():
        app.add_exception_handler(error_type, make_handler(status_code))

    # Handlers are sync on purpose: FastAPI runs them in a worker pool, so a
    # slow provider call cannot stall typing-event ingestion.

    @app.post("/sessions")
    def create_session(body: Optional[dict] = None):
        config = SessionConfig.from_dict(body or {})
        session_id = service.create_session(config)
        return {"session_id": session_id, "config": config.to_dict()}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        return service.state(session_id)

    @app.post("/sessions/{session_id}/events")
    def post_events(session_id: str, body: dict):
        try:
            events = [EditEvent.from_dict(d) for d in body.get("events", [])]
        except (KeyError, ValueError, TypeError) as exc:
            raise ValidationError(f"malformed event: {exc}") from exc
        return {"ack_seq": service.ingest_events(session_id, events)}

    @app.post("/sessions/{session_id}/suggestions")
    def post_suggestion(session_id: str, body: dict):
        try:
            kind = SuggestionKind(body["kind"])
            caret = int(body["caret"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ValidationError(f"malformed request: {exc}") from exc
        return service.request_suggestion(session_id, kind, caret)

    @app.post("/sessions/{session_id}/suggestions/{suggestion_id}/accept")
    def post_accept(session_id: str, suggestion_id: str, body: dict):
        try:
            position = int(body["position"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ValidationError(f"malformed request: {exc}") from exc
        return service.accept_suggestion(session_id, suggestion_id, position)

    @app.post("/sessions/{session_id}/save")
    def post_save(session_id: str):
        return service.save(session_id)

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str):
        return service.export_session(session_id)

    return app


def main(argv: Optional[list[str]] = None) -> None:
    import uvicorn

    parser = argparse.ArgumentParser(description="Run the writing-session service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8040)
    parser.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV, "./writetrace-data"))
    parser.add_argument(
        "--provider",
        choices=["mock", "openai"],
        default=os.environ.get(PROVIDER_ENV, "mock"),
        help="completion backend for sessions that do not override it",
    )
    parser.add_argument("--mock-seed", type=int, default=0)
    parser.add_argument("--mock-fail-rate", type=float, default=0.0)
    args = parser.parse_args(argv)

    provider: Optional[CompletionProvider] = None
    if args.provider == "mock":
        provider = MockProvider(seed=args.mock_seed, fail_rate=args.mock_fail_rate)
    elif args.provider == "openai":
        provider = HttpChatProvider.from_env()
    app = create_app(args.data_dir, provider)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
