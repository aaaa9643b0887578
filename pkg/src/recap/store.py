"""Meeting persistence: in-process for tests, file-backed for deployments.

The file store keeps, per meeting, the canonical transcript bytes, a
meta record, an append-only event file (one JSON line per event, never
rewritten), and the head document snapshot. No external database.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .feedback import FeedbackEvent
from .recapdoc import RecapDocument, from_portable, to_portable
from .transcript import Transcript, canonical_bytes, from_canonical_bytes

STATUS_PENDING = "pending"
STATUS_READY = "ready"
STATUS_FAILED = "failed"


class UnknownMeeting(KeyError):
    pass


@dataclass
class MeetingMeta:
    meeting_id: str
    owner: str
    created_at: str
    status: str = STATUS_PENDING

    def to_json(self) -> dict:
        return {
            "meeting_id": self.meeting_id,
            "owner": self.owner,
            "created_at": self.created_at,
            "status": self.status,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "MeetingMeta":
        return cls(
            meeting_id=raw["meeting_id"],
            owner=raw["owner"],
            created_at=raw["created_at"],
            status=raw["status"],
        )


class MeetingStore(Protocol):
    def create_meeting(self, meta: MeetingMeta, transcript: Transcript) -> None: ...

    def set_status(self, meeting_id: str, status: str) -> None: ...

    def get_meta(self, meeting_id: str) -> MeetingMeta: ...

    def list_meetings(self) -> list[str]: ...

    def get_transcript(self, meeting_id: str) -> Transcript: ...

    def save_document(self, meeting_id: str, doc: RecapDocument) -> None: ...

    def load_document(self, meeting_id: str) -> RecapDocument: ...

    def save_initial_document(self, meeting_id: str, doc: RecapDocument) -> None: ...

    def load_initial_document(self, meeting_id: str) -> RecapDocument: ...

    def append_event(self, meeting_id: str, ev: FeedbackEvent) -> int: ...

    def events(self, meeting_id: str) -> list[FeedbackEvent]: ...


class MemoryStore:
    def __init__(self) -> None:
        self._meta: dict[str, MeetingMeta] = {}
        self._transcripts: dict[str, Transcript] = {}
        self._documents: dict[str, bytes] = {}
        self._initial_documents: dict[str, bytes] = {}
        self._events: dict[str, list[FeedbackEvent]] = {}
        self._lock = threading.Lock()

    def create_meeting(self, meta: MeetingMeta, transcript: Transcript) -> None:
        with self._lock:
            self._meta[meta.meeting_id] = meta
            self._transcripts[meta.meeting_id] = transcript
            self._events[meta.meeting_id] = []

    def _require(self, meeting_id: str) -> None:
        if meeting_id not in self._meta:
            raise UnknownMeeting(meeting_id)

    def set_status(self, meeting_id: str, status: str) -> None:
        with self._lock:
            self._require(meeting_id)
            self._meta[meeting_id].status = status

    def get_meta(self, meeting_id: str) -> MeetingMeta:
        with self._lock:
            self._require(meeting_id)
            return MeetingMeta.from_json(self._meta[meeting_id].to_json())

    def list_meetings(self) -> list[str]:
        with self._lock:
            return sorted(self._meta)

    def get_transcript(self, meeting_id: str) -> Transcript:
        with self._lock:
            self._require(meeting_id)
            return self._transcripts[meeting_id]

    def save_document(self, meeting_id: str, doc: RecapDocument) -> None:
        with self._lock:
            self._require(meeting_id)
            self._documents[meeting_id] = to_portable(doc)

    def load_document(self, meeting_id: str) -> RecapDocument:
        with self._lock:
            self._require(meeting_id)
            if meeting_id not in self._documents:
                raise UnknownMeeting(f"{meeting_id} has no document yet")
            return from_portable(self._documents[meeting_id])

    def save_initial_document(self, meeting_id: str, doc: RecapDocument) -> None:
        with self._lock:
            self._require(meeting_id)
            self._initial_documents[meeting_id] = to_portable(doc)

    def load_initial_document(self, meeting_id: str) -> RecapDocument:
        with self._lock:
            self._require(meeting_id)
            if meeting_id not in self._initial_documents:
                raise UnknownMeeting(f"{meeting_id} has no document yet")
            return from_portable(self._initial_documents[meeting_id])

    def append_event(self, meeting_id: str, ev: FeedbackEvent) -> int:
        with self._lock:
            self._require(meeting_id)
            self._events[meeting_id].append(ev)
            return len(self._events[meeting_id]) - 1

    def events(self, meeting_id: str) -> list[FeedbackEvent]:
        with self._lock:
            self._require(meeting_id)
            return list(self._events[meeting_id])


class FileStore:
    """Directory-per-meeting layout under ``root``.

    Events go to ``events.jsonl`` by append-only writes; the document
    snapshot is replaced atomically (write + rename) so a crashed writer
    never leaves a torn head.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _dir(self, meeting_id: str) -> Path:
        safe = "".join(c for c in meeting_id if c.isalnum() or c in "-_")
        if not safe or safe != meeting_id:
            raise UnknownMeeting(meeting_id)
        return self.root / safe

    def _require(self, meeting_id: str) -> Path:
        path = self._dir(meeting_id)
        if not (path / "meta.json").exists():
            raise UnknownMeeting(meeting_id)
        return path

    @staticmethod
    def _write_atomic(path: Path, data: bytes) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def create_meeting(self, meta: MeetingMeta, transcript: Transcript) -> None:
        with self._lock:
            path = self._dir(meta.meeting_id)
            path.mkdir(parents=True, exist_ok=True)
            self._write_atomic(path / "transcript.json", canonical_bytes(transcript))
            self._write_atomic(path / "meta.json", json.dumps(meta.to_json(), sort_keys=True).encode())
            (path / "events.jsonl").touch()

    def set_status(self, meeting_id: str, status: str) -> None:
        with self._lock:
            path = self._require(meeting_id)
            meta = MeetingMeta.from_json(json.loads((path / "meta.json").read_text()))
            meta.status = status
            self._write_atomic(path / "meta.json", json.dumps(meta.to_json(), sort_keys=True).encode())

    def get_meta(self, meeting_id: str) -> MeetingMeta:
        path = self._require(meeting_id)
        return MeetingMeta.from_json(json.loads((path / "meta.json").read_text()))

    def list_meetings(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "meta.json").exists())

    def get_transcript(self, meeting_id: str) -> Transcript:
        path = self._require(meeting_id)
        return from_canonical_bytes((path / "transcript.json").read_bytes())

    def save_document(self, meeting_id: str, doc: RecapDocument) -> None:
        with self._lock:
            path = self._require(meeting_id)
            self._write_atomic(path / "document.json", to_portable(doc))

    def load_document(self, meeting_id: str) -> RecapDocument:
        path = self._require(meeting_id)
        doc_path = path / "document.json"
        if not doc_path.exists():
            raise UnknownMeeting(f"{meeting_id} has no document yet")
        return from_portable(doc_path.read_bytes())

    def save_initial_document(self, meeting_id: str, doc: RecapDocument) -> None:
        with self._lock:
            path = self._require(meeting_id)
            self._write_atomic(path / "document_v1.json", to_portable(doc))

    def load_initial_document(self, meeting_id: str) -> RecapDocument:
        path = self._require(meeting_id)
        doc_path = path / "document_v1.json"
        if not doc_path.exists():
            raise UnknownMeeting(f"{meeting_id} has no document yet")
        return from_portable(doc_path.read_bytes())

    def append_event(self, meeting_id: str, ev: FeedbackEvent) -> int:
        with self._lock:
            path = self._require(meeting_id)
            events_path = path / "events.jsonl"
            position = sum(1 for _ in events_path.open("r", encoding="utf-8"))
            with events_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(ev.to_json(), sort_keys=True) + "\n")
            return position

    def events(self, meeting_id: str) -> list[FeedbackEvent]:
        path = self._require(meeting_id)
        out = []
        with (path / "events.jsonl").open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(FeedbackEvent.from_json(json.loads(line)))
        return out
