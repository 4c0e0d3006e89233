"""File-backed session persistence: one JSON document per session,
atomic save via write-temp-then-rename."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import NotFoundError, StorageError
from .model import Session

logger = logging.getLogger(__name__)


@dataclass
class SessionSummary:
    id: str
    app_name: str
    updated_at: str

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "app_name": self.app_name, "updated_at": self.updated_at}


class SessionStore:
    """Directory of ``<session-id>.json`` documents."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise StorageError(f"invalid session id {session_id!r}")
        return self.root / f"{session_id}.json"

    def save(self, session: Session) -> None:
        """Atomic: a crash between temp write and rename leaves the prior
        version intact."""
        path = self._path(session.id)
        payload = json.dumps(session.to_dict(), indent=2, ensure_ascii=False)
        fd, temp_name = tempfile.mkstemp(dir=self.root, prefix=f".{session.id}.",
                                         suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(temp_name, path)
        except OSError as exc:
            try:
                os.unlink(temp_name)
            except OSError:
                pass
            raise StorageError(f"failed to save session: {exc}", path=str(path)) from exc

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.is_file():
            raise NotFoundError(f"session {session_id!r} not found")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"corrupt session document: {exc}", path=str(path)) from exc
        return Session.from_dict(doc)

    def delete(self, session_id: str) -> None:
        path = self._path(session_id)
        if not path.is_file():
            raise NotFoundError(f"session {session_id!r} not found")
        path.unlink()

    def list(self) -> list[SessionSummary]:
        """Summaries of all stored sessions, most recently updated first.

        Corrupt documents are skipped with a warning rather than failing the
        listing.
        """
        summaries: list[SessionSummary] = []
        for path in sorted(self.root.glob("*.json")):
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                summaries.append(SessionSummary(
                    id=doc["id"],
                    app_name=doc.get("report_meta", {}).get("app_name", ""),
                    updated_at=doc.get("updated_at", ""),
                ))
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                logger.warning("skipping unreadable session file %s: %s", path, exc)
        summaries.sort(key=lambda s: s.updated_at, reverse=True)
        return summaries
