"""The versioned recap artifact: both views, canonical bytes, Markdown.

Documents reference the transcript by content hash instead of embedding
it, so a recap can be shared without re-sharing the raw dialogue. The
portable form is canonical JSON (sorted keys, compact separators): two
structurally equal documents serialize to identical bytes on any
platform.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

from .chapters import Chapter, RollingNote
from .highlights import ACTION_ITEM, KEY_POINT, HighlightsView, Note
from .transcript import Transcript, canonical_bytes

SCHEMA_VERSION = 1

DEPTH_ONE_LINER = "one_liner"
DEPTH_NOTES = "notes"
DEPTH_FULL = "full"
SHARE_DEPTHS = (DEPTH_ONE_LINER, DEPTH_NOTES, DEPTH_FULL)


class CrossRefInvalid(ValueError):
    """A note anchor or chapter range points outside the transcript."""


class NodeNotFound(KeyError):
    """No note, rolling note, or chapter carries the requested id."""


class SchemaViolation(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def transcript_hash(t: Transcript) -> str:
    return hashlib.sha256(canonical_bytes(t)).hexdigest()


@dataclass(frozen=True)
class RecapDocument:
    meeting_id: str
    version: int
    transcript_ref: str
    utterance_count: int
    highlights: HighlightsView
    chapters: tuple[Chapter, ...]
    pipeline_config_snapshot: dict
    created_at: str | None = None
    schema_version: int = SCHEMA_VERSION

    def find_note(self, note_id: str) -> Note | None:
        return self.highlights.find(note_id)

    def find_chapter(self, chapter_id: str) -> Chapter | None:
        for ch in self.chapters:
            if ch.chapter_id == chapter_id:
                return ch
        return None

    def find_rolling(self, rolling_id: str) -> tuple[Chapter, RollingNote] | None:
        for ch in self.chapters:
            for rn in ch.rolling_notes:
                if rn.rolling_id == rolling_id:
                    return ch, rn
        return None

    def live_notes(self) -> list[Note]:
        return [n for n in self.highlights.all_notes() if not n.deleted]


@dataclass(frozen=True)
class ShareExtract:
    source: str
    rendered: str
    created_by: str
    created_at: str | None = None

    def __post_init__(self) -> None:
        if not self.rendered.strip():
            raise ValueError("rendered extract must be non-empty")


def _validate_crossrefs(doc: RecapDocument) -> None:
    n = doc.utterance_count
    for note in doc.highlights.all_notes():
        if note.anchor.end >= n or note.context.end >= n:
            raise CrossRefInvalid(f"note {note.note_id} anchored outside transcript of length {n}")
    for ch in doc.chapters:
        if ch.range.end >= n:
            raise CrossRefInvalid(f"chapter {ch.chapter_id} range outside transcript of length {n}")


def assemble(
    t: Transcript,
    highlights: HighlightsView,
    chapters: list[Chapter] | tuple[Chapter, ...],
    pipeline_config_snapshot: dict,
    created_at: str | None = None,
) -> RecapDocument:
    """Combine both views into a version-1 document, validating cross-refs."""
    doc = RecapDocument(
        meeting_id=t.meeting_id,
        version=1,
        transcript_ref=transcript_hash(t),
        utterance_count=len(t),
        highlights=highlights,
        chapters=tuple(chapters),
        pipeline_config_snapshot=pipeline_config_snapshot,
        created_at=created_at,
    )
    _validate_crossrefs(doc)
    return doc


# ---------------------------------------------------------------------------
# Portable serialization
# ---------------------------------------------------------------------------


def document_to_json(doc: RecapDocument) -> dict:
    return {
        "schema_version": doc.schema_version,
        "meeting_id": doc.meeting_id,
        "version": doc.version,
        "transcript_ref": doc.transcript_ref,
        "utterance_count": doc.utterance_count,
        "created_at": doc.created_at,
        "pipeline_config_snapshot": doc.pipeline_config_snapshot,
        "highlights": doc.highlights.to_json(),
        "chapters": [ch.to_json() for ch in doc.chapters],
    }


def to_portable(doc: RecapDocument) -> bytes:
    """Canonical bytes: sorted keys, compact separators, UTF-8."""
    return json.dumps(
        document_to_json(doc), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


_TOP_FIELDS = {
    "schema_version": int,
    "meeting_id": str,
    "version": int,
    "transcript_ref": str,
    "utterance_count": int,
    "pipeline_config_snapshot": dict,
    "highlights": dict,
    "chapters": list,
}

_NOTE_FIELDS = {
    "note_id": str,
    "kind": str,
    "summary": str,
    "anchor": list,
    "context": list,
    "position": int,
    "origin": str,
}

_CHAPTER_FIELDS = {
    "chapter_id": str,
    "range": list,
    "title": str,
    "one_liner": str,
    "timespan": list,
    "rolling_notes": list,
    "star_count": int,
    "checkbox_count": int,
    "collapsed": bool,
}

_ROLLING_FIELDS = {
    "rolling_id": str,
    "span": list,
    "summary": str,
    "markers": list,
}


def _require(raw: dict, fields: dict[str, type], path: str) -> None:
    for name, typ in fields.items():
        if name not in raw:
            raise SchemaViolation(f"{path}.{name}", "missing required field")
        value = raw[name]
        if typ is int and isinstance(value, bool):
            raise SchemaViolation(f"{path}.{name}", "expected integer, got boolean")
        if not isinstance(value, typ):
            raise SchemaViolation(f"{path}.{name}", f"expected {typ.__name__}, got {type(value).__name__}")


def from_portable(raw: bytes) -> RecapDocument:
    """Parse and validate canonical bytes; the round trip is identity.

    Raises ``SchemaViolation`` with the path of the offending field.
    """
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise SchemaViolation("", f"not a JSON document: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaViolation("", "top level must be an object")
    _require(data, _TOP_FIELDS, "")
    if data["schema_version"] != SCHEMA_VERSION:
        raise SchemaViolation(".schema_version", f"unsupported schema version {data['schema_version']}")
    hv = data["highlights"]
    for list_name in ("key_points", "action_items"):
        if list_name not in hv or not isinstance(hv[list_name], list):
            raise SchemaViolation(f".highlights.{list_name}", "missing or not a list")
        for i, note in enumerate(hv[list_name]):
            if not isinstance(note, dict):
                raise SchemaViolation(f".highlights.{list_name}[{i}]", "expected object")
            _require(note, _NOTE_FIELDS, f".highlights.{list_name}[{i}]")
    for i, ch in enumerate(data["chapters"]):
        if not isinstance(ch, dict):
            raise SchemaViolation(f".chapters[{i}]", "expected object")
        _require(ch, _CHAPTER_FIELDS, f".chapters[{i}]")
        for j, rn in enumerate(ch["rolling_notes"]):
            if not isinstance(rn, dict):
                raise SchemaViolation(f".chapters[{i}].rolling_notes[{j}]", "expected object")
            _require(rn, _ROLLING_FIELDS, f".chapters[{i}].rolling_notes[{j}]")
    try:
        doc = RecapDocument(
            meeting_id=data["meeting_id"],
            version=data["version"],
            transcript_ref=data["transcript_ref"],
            utterance_count=data["utterance_count"],
            highlights=HighlightsView.from_json(hv),
            chapters=tuple(Chapter.from_json(ch) for ch in data["chapters"]),
            pipeline_config_snapshot=data["pipeline_config_snapshot"],
            created_at=data.get("created_at"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation("", f"invalid document content: {exc}") from exc
    _validate_crossrefs(doc)
    return doc


def bump_version(doc: RecapDocument) -> RecapDocument:
    return replace(doc, version=doc.version + 1)


# ---------------------------------------------------------------------------
# Markdown rendering
# ---------------------------------------------------------------------------


def _format_clock(ms: int) -> str:
    seconds = ms // 1000
    h, rem = divmod(seconds, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}" if h else f"{m:02d}:{s:02d}"


def _marker_prefix(doc: RecapDocument, rn: RollingNote) -> str:
    live = {n.note_id: n for n in doc.live_notes()}
    symbols = []
    for note_id in rn.markers:
        note = live.get(note_id)
        if note is None:
            continue
        symbols.append("★" if note.kind == KEY_POINT else "[ ]")
    return (" ".join(symbols) + " ") if symbols else ""


def _note_bullet(note: Note) -> str:
    if note.kind == ACTION_ITEM:
        line = f"- [ ] {note.summary}"
        if note.assignee:
            line += f" — assigned to {note.assignee}"
        if note.due_date:
            line += f", due {note.due_date}"
        return line
    return f"- ★ {note.summary}"


def _render_note(doc: RecapDocument, note: Note, depth: str, transcript: Transcript | None) -> str:
    lines = [_note_bullet(note)]
    if depth == DEPTH_FULL and transcript is not None:
        for i in range(note.context.start, note.context.end + 1):
            u = transcript[i]
            lines.append(f"  > {u.speaker}: {u.text}")
    return "\n".join(lines)


def _render_chapter(doc: RecapDocument, ch: Chapter, depth: str) -> str:
    start, end = ch.timespan
    lines = [f"## {ch.title} ({_format_clock(start)}–{_format_clock(end)})"]
    if ch.one_liner:
        lines.append(f"\n{ch.one_liner}")
    if depth in (DEPTH_NOTES, DEPTH_FULL):
        lines.append("")
        for rn in ch.rolling_notes:
            lines.append(f"- {_marker_prefix(doc, rn)}{rn.summary}")
    return "\n".join(lines)


def share_extract(
    doc: RecapDocument,
    node_id: str,
    depth: str,
    transcript: Transcript | None = None,
    created_by: str = "",
    created_at: str | None = None,
) -> ShareExtract:
    """Markdown for one node at the chosen granularity.

    Notes at full depth quote their context utterances, which requires
    the transcript; without it the quotes are omitted.
    """
    if depth not in SHARE_DEPTHS:
        raise ValueError(f"unknown share depth {depth!r}")
    note = doc.find_note(node_id)
    if note is not None and not note.deleted:
        rendered = _note_bullet(note) if depth == DEPTH_ONE_LINER else _render_note(doc, note, depth, transcript)
        return ShareExtract(source=node_id, rendered=rendered, created_by=created_by, created_at=created_at)
    ch = doc.find_chapter(node_id)
    if ch is not None:
        if depth == DEPTH_ONE_LINER:
            rendered = f"**{ch.title}** — {ch.one_liner}" if ch.one_liner else f"**{ch.title}**"
        else:
            rendered = _render_chapter(doc, ch, depth)
        return ShareExtract(source=node_id, rendered=rendered, created_by=created_by, created_at=created_at)
    found = doc.find_rolling(node_id)
    if found is not None:
        _, rn = found
        rendered = f"- {_marker_prefix(doc, rn)}{rn.summary}"
        return ShareExtract(source=node_id, rendered=rendered, created_by=created_by, created_at=created_at)
    raise NodeNotFound(node_id)


def render_markdown(
    doc: RecapDocument,
    view: str = "both",
    transcript: Transcript | None = None,
) -> str:
    """Whole-document Markdown export. Tombstoned notes never render."""
    if view not in ("highlights", "hierarchical", "both"):
        raise ValueError(f"unknown view {view!r}")
    sections: list[str] = [f"# Meeting recap: {doc.meeting_id}" if doc.meeting_id else "# Meeting recap"]
    if view in ("highlights", "both"):
        key_points = [n for n in doc.highlights.key_points if not n.deleted]
        action_items = [n for n in doc.highlights.action_items if not n.deleted]
        sections.append("\n## Key points\n")
        if key_points:
            sections.append("\n".join(_note_bullet(n) for n in key_points))
        else:
            sections.append("_No key points detected._")
        sections.append("\n## Action items\n")
        if action_items:
            sections.append("\n".join(_note_bullet(n) for n in action_items))
        else:
            sections.append("_No action items detected._")
    if view in ("hierarchical", "both"):
        sections.append("\n## Chapters\n")
        for ch in doc.chapters:
            sections.append(_render_chapter(doc, ch, DEPTH_NOTES).replace("## ", "### ", 1))
            sections.append("")
    return "\n".join(sections).rstrip() + "\n"
