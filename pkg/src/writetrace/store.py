"""Durable per-session storage.

One directory per session: an append-only `log.jsonl` in the shared log
format (the source of truth), a `meta.json` config snapshot, an append-only
`suggestions.jsonl` of suggestion records, a `snapshot.txt` of the last saved
text, and an `unlocked` marker once the suggestion gate has opened. Appends
fsync before acknowledging, so a crash never loses acknowledged events.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Optional, Union

from .events import EditEvent, event_to_line, parse_log
from .suggestions import SuggestionRecord


class PersistenceError(Exception):
    """Session data could not be read or written."""


class SessionStore:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def exists(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "meta.json").is_file()

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "meta.json").is_file())

    def create(self, session_id: str, meta: dict) -> None:
        directory = self.session_dir(session_id)
        try:
            directory.mkdir(parents=True, exist_ok=False)
            (directory / "log.jsonl").touch()
            (directory / "suggestions.jsonl").touch()
            self._write_atomic(directory / "meta.json", json.dumps(meta, indent=2))
        except OSError as exc:
            raise PersistenceError(f"cannot create session {session_id}: {exc}") from exc

    def read_meta(self, session_id: str) -> dict:
        try:
            return json.loads((self.session_dir(session_id) / "meta.json").read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise PersistenceError(f"cannot read session {session_id} meta: {exc}") from exc

    # -- event log ----------------------------------------------------------

    def append_events(self, session_id: str, events: Iterable[EditEvent]) -> None:
        """Append events and fsync; callers may acknowledge once this returns."""
        path = self.session_dir(session_id) / "log.jsonl"
        data = "".join(event_to_line(e) + "\n" for e in events)
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"cannot append to session {session_id}: {exc}") from exc

    def read_events(self, session_id: str) -> list[EditEvent]:
        return parse_log(self.read_log_text(session_id))

    def read_log_text(self, session_id: str) -> str:
        """The log file content, byte-exact as persisted."""
        try:
            return (self.session_dir(session_id) / "log.jsonl").read_text("utf-8")
        except OSError as exc:
            raise PersistenceError(f"cannot read session {session_id} log: {exc}") from exc

    # -- suggestion records -------------------------------------------------

    def append_record(self, session_id: str, record: SuggestionRecord) -> None:
        path = self.session_dir(session_id) / "suggestions.jsonl"
        line = json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"cannot append record to {session_id}: {exc}") from exc

    def read_records(self, session_id: str) -> list[SuggestionRecord]:
        path = self.session_dir(session_id) / "suggestions.jsonl"
        if not path.is_file():
            return []
        records = []
        for line in path.read_text("utf-8").splitlines():
            if line.strip():
                records.append(SuggestionRecord.from_dict(json.loads(line)))
        return records

    # -- snapshots and the unlock latch --------------------------------------

    def write_snapshot(self, session_id: str, text: str) -> None:
        self._write_atomic(self.session_dir(session_id) / "snapshot.txt", text)

    def read_snapshot(self, session_id: str) -> Optional[str]:
        path = self.session_dir(session_id) / "snapshot.txt"
        return path.read_text("utf-8") if path.is_file() else None

    def set_unlocked(self, session_id: str) -> None:
        (self.session_dir(session_id) / "unlocked").touch()

    def is_unlocked(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "unlocked").is_file()

    def _write_atomic(self, path: Path, content: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        try:
            tmp.write_text(content, encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise PersistenceError(f"cannot write {path.name}: {exc}") from exc
