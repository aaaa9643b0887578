"""User feedback as an append-only event log and document transformations.

Events are never mutated or removed; the current document is the fold of
``apply`` over the log starting from the pipeline's version-1 document.
Edits and additions become strong training signals; deletions carry a
reason because their meaning is ambiguous (a completed task is not a bad
summary).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from datetime import date

from .chapters import refresh_markers
from .highlights import (
    ACTION_ITEM,
    KEY_POINT,
    ORIGIN_USER,
    HighlightsView,
    Note,
    build_highlights_view,
)
from .recapdoc import NodeNotFound, RecapDocument, bump_version
from .transcript import Span, Transcript, span_text

ADD_NOTE = "add_note"
EDIT_NOTE = "edit_note"
DELETE_NOTE = "delete_note"
MARK_IMPORTANT = "mark_important"
UNMARK_IMPORTANT = "unmark_important"
ASSIGN_TASK = "assign_task"
SET_DUE_DATE = "set_due_date"
REORDER_NOTE = "reorder_note"
EDIT_CHAPTER_TITLE = "edit_chapter_title"
EDIT_ROLLING_NOTE = "edit_rolling_note"
COLLAPSE_CHAPTER = "collapse_chapter"
EXPAND_CHAPTER = "expand_chapter"
EXPAND_CONTEXT = "expand_context"
SHARE = "share"

ACTIONS = (
    ADD_NOTE,
    EDIT_NOTE,
    DELETE_NOTE,
    MARK_IMPORTANT,
    UNMARK_IMPORTANT,
    ASSIGN_TASK,
    SET_DUE_DATE,
    REORDER_NOTE,
    EDIT_CHAPTER_TITLE,
    EDIT_ROLLING_NOTE,
    COLLAPSE_CHAPTER,
    EXPAND_CHAPTER,
    EXPAND_CONTEXT,
    SHARE,
)

REASON_DONE = "done"
REASON_REDUNDANT = "redundant"
REASON_INACCURATE = "inaccurate"
REASON_IRRELEVANT = "irrelevant"
REASON_UNSPECIFIED = "unspecified"

DELETE_REASONS = (REASON_DONE, REASON_REDUNDANT, REASON_INACCURATE, REASON_IRRELEVANT, REASON_UNSPECIFIED)

SIGNAL_POSITIVE = "positive_relevance"
SIGNAL_QUALITY = "quality_improvement"
SIGNAL_AMBIGUOUS_NEGATIVE = "ambiguous_negative"
SIGNAL_NAVIGATION = "navigation_relevance"


class StaleVersion(ValueError):
    """The event targets an older document version; the client must refetch."""


class ValidationFailure(ValueError):
    """The event payload is inconsistent with the current document."""


class IllegalAction(ValueError):
    """The action is forbidden on its target (e.g. deleting a rolling note)."""


@dataclass(frozen=True)
class FeedbackEvent:
    event_id: str
    meeting_id: str
    actor: str
    at: str
    base_version: int
    action: str
    payload: dict
    delete_reason: str | None = None

    def __post_init__(self) -> None:
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.delete_reason is not None and self.delete_reason not in DELETE_REASONS:
            raise ValueError(f"unknown delete reason {self.delete_reason!r}")

    def to_json(self) -> dict:
        return {
            "event_id": self.event_id,
            "meeting_id": self.meeting_id,
            "actor": self.actor,
            "at": self.at,
            "base_version": self.base_version,
            "action": self.action,
            "payload": self.payload,
            "delete_reason": self.delete_reason,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "FeedbackEvent":
        return cls(
            event_id=raw["event_id"],
            meeting_id=raw["meeting_id"],
            actor=raw["actor"],
            at=raw["at"],
            base_version=raw["base_version"],
            action=raw["action"],
            payload=raw["payload"],
            delete_reason=raw.get("delete_reason"),
        )


@dataclass(frozen=True)
class TrainingWeights:
    edit: float = 1.0
    add: float = 1.0
    share: float = 0.8
    navigation: float = 0.5
    ambiguous_delete: float = 0.3


@dataclass(frozen=True)
class TrainingExample:
    signal: str
    context_text: str
    original_summary: str
    target: str | None
    weight: float
    provenance: str

    def __post_init__(self) -> None:
        if self.signal == SIGNAL_QUALITY and not self.target:
            raise ValueError("quality_improvement requires a target summary")
        if self.signal == SIGNAL_AMBIGUOUS_NEGATIVE and self.weight > 0.3:
            raise ValueError("ambiguous_negative weight must be <= 0.3")

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "signal": self.signal,
            "context_text": self.context_text,
            "original_summary": self.original_summary,
            "target": self.target,
            "weight": self.weight,
            "provenance": self.provenance,
        }


class EventLog:
    """In-memory append-only log; safe under concurrent appends."""

    def __init__(self) -> None:
        self._events: list[FeedbackEvent] = []
        self._lock = threading.Lock()

    def append(self, ev: FeedbackEvent) -> int:
        with self._lock:
            self._events.append(ev)
            return len(self._events) - 1

    def events(self) -> list[FeedbackEvent]:
        with self._lock:
            return list(self._events)

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)


def record(ev: FeedbackEvent, log: EventLog, doc: RecapDocument) -> int:
    """Validate against the current document and append. Never mutates."""
    ev = normalize(ev)
    validate(ev, doc)
    return log.append(ev)


def normalize(ev: FeedbackEvent) -> FeedbackEvent:
    """Apply recording defaults: deletes without a reason get "unspecified"."""
    if ev.action == DELETE_NOTE and ev.delete_reason is None:
        return replace(ev, delete_reason=REASON_UNSPECIFIED)
    return ev


def _require_fields(payload: dict, *names: str) -> None:
    for name in names:
        if name not in payload or payload[name] is None:
            raise ValidationFailure(f"payload missing field {name!r}")


def _live_note(doc: RecapDocument, note_id: str) -> Note:
    note = doc.find_note(note_id)
    if note is None or note.deleted:
        if doc.find_rolling(note_id) is not None:
            # Rolling summaries cover the whole meeting; they are edited
            # via edit_rolling_note and can never be deleted.
            raise IllegalAction(f"{note_id} targets a rolling summary")
        raise NodeNotFound(note_id)
    return note


def validate(ev: FeedbackEvent, doc: RecapDocument) -> None:
    """Reject events that cannot apply to the current document."""
    if ev.base_version < doc.version:
        raise StaleVersion(f"event base {ev.base_version} behind document version {doc.version}")
    if ev.base_version > doc.version:
        raise ValidationFailure(f"event base {ev.base_version} ahead of document version {doc.version}")
    p = ev.payload
    if ev.action == ADD_NOTE:
        _require_fields(p, "kind", "summary")
        if p["kind"] not in (KEY_POINT, ACTION_ITEM):
            raise ValidationFailure(f"unknown note kind {p['kind']!r}")
        if not str(p["summary"]).strip():
            raise ValidationFailure("summary must be non-empty")
        if p["kind"] == KEY_POINT and (p.get("assignee") or p.get("due_date")):
            raise ValidationFailure("key points never carry assignee or due date")
        anchor = int(p.get("anchor_index", 0))
        if not 0 <= anchor < doc.utterance_count:
            raise ValidationFailure(f"anchor_index {anchor} outside transcript")
    elif ev.action == EDIT_NOTE:
        _require_fields(p, "note_id", "summary")
        if not str(p["summary"]).strip():
            raise ValidationFailure("summary must be non-empty")
        _live_note(doc, p["note_id"])
    elif ev.action == DELETE_NOTE:
        _require_fields(p, "note_id")
        _live_note(doc, p["note_id"])
        if ev.delete_reason is None:
            raise ValidationFailure("delete events carry a reason (unspecified allowed)")
    elif ev.action == MARK_IMPORTANT:
        _require_fields(p, "utterance_index", "kind")
        if p["kind"] not in (KEY_POINT, ACTION_ITEM):
            raise ValidationFailure(f"unknown note kind {p['kind']!r}")
        if not 0 <= int(p["utterance_index"]) < doc.utterance_count:
            raise ValidationFailure("utterance_index outside transcript")
    elif ev.action == UNMARK_IMPORTANT:
        _require_fields(p, "note_id")
        _live_note(doc, p["note_id"])
    elif ev.action == ASSIGN_TASK:
        _require_fields(p, "note_id", "assignee")
        note = _live_note(doc, p["note_id"])
        if note.kind != ACTION_ITEM:
            raise IllegalAction("only action items can be assigned")
    elif ev.action == SET_DUE_DATE:
        _require_fields(p, "note_id", "due_date")
        note = _live_note(doc, p["note_id"])
        if note.kind != ACTION_ITEM:
            raise IllegalAction("only action items carry due dates")
        try:
            date.fromisoformat(p["due_date"])
        except ValueError as exc:
            raise ValidationFailure(f"due_date must be ISO format: {exc}") from exc
    elif ev.action == REORDER_NOTE:
        _require_fields(p, "note_id", "new_position")
        _live_note(doc, p["note_id"])
        if int(p["new_position"]) < 0:
            raise ValidationFailure("new_position must be >= 0")
    elif ev.action == EDIT_CHAPTER_TITLE:
        _require_fields(p, "chapter_id", "title")
        if not str(p["title"]).strip():
            raise ValidationFailure("title must be non-empty")
        if doc.find_chapter(p["chapter_id"]) is None:
            raise NodeNotFound(p["chapter_id"])
    elif ev.action == EDIT_ROLLING_NOTE:
        _require_fields(p, "rolling_id", "summary")
        if not str(p["summary"]).strip():
            raise ValidationFailure("summary must be non-empty")
        if doc.find_rolling(p["rolling_id"]) is None:
            raise NodeNotFound(p["rolling_id"])
    elif ev.action in (COLLAPSE_CHAPTER, EXPAND_CHAPTER):
        _require_fields(p, "chapter_id")
        if doc.find_chapter(p["chapter_id"]) is None:
            raise NodeNotFound(p["chapter_id"])
    elif ev.action == EXPAND_CONTEXT:
        _require_fields(p, "note_id")
        _live_note(doc, p["note_id"])
    elif ev.action == SHARE:
        _require_fields(p, "node_id")
        node_id = p["node_id"]
        note = doc.find_note(node_id)
        if note is not None:
            if note.deleted:
                raise NodeNotFound(node_id)
        elif doc.find_chapter(node_id) is None and doc.find_rolling(node_id) is None:
            raise NodeNotFound(node_id)


def _with_notes(doc: RecapDocument, notes: list[Note]) -> RecapDocument:
    # Tombstones are excluded from ordering but must survive serialization;
    # they trail the live notes of their kind in stable order.
    view = build_highlights_view([n for n in notes if not n.deleted])
    tombstones = tuple(n for n in notes if n.deleted)
    view = HighlightsView(
        key_points=view.key_points + tuple(n for n in tombstones if n.kind == KEY_POINT),
        action_items=view.action_items + tuple(n for n in tombstones if n.kind == ACTION_ITEM),
    )
    return replace(doc, highlights=view, chapters=refresh_markers(doc.chapters, notes))


def _mutate_note(doc: RecapDocument, note_id: str, **changes) -> RecapDocument:
    notes = [
        replace(n, **changes) if n.note_id == note_id else n
        for n in doc.highlights.all_notes()
    ]
    return _with_notes(doc, notes)


def _display_span(anchor: int, count: int) -> Span:
    return Span(max(0, anchor - 3), anchor + 3 if anchor + 3 < count else count - 1)


def apply(doc: RecapDocument, ev: FeedbackEvent) -> RecapDocument:
    """Produce the next document version from one validated event.

    Pure: the same document and event always yield the same output, so
    replaying the log reproduces the head byte-for-byte.
    """
    ev = normalize(ev)
    validate(ev, doc)
    p = ev.payload
    action = ev.action

    if action == ADD_NOTE:
        anchor = int(p.get("anchor_index", 0))
        live = doc.live_notes()
        position = sum(1 for n in live if n.kind == p["kind"])
        note = Note(
            note_id=f"user-{ev.event_id}",
            kind=p["kind"],
            summary=str(p["summary"]).strip(),
            anchor=Span(anchor, anchor),
            context=_display_span(anchor, doc.utterance_count),
            position=position,
            origin=ORIGIN_USER,
            assignee=p.get("assignee"),
            due_date=p.get("due_date"),
        )
        new_doc = _with_notes(doc, list(doc.highlights.all_notes()) + [note])
    elif action == EDIT_NOTE:
        new_doc = _mutate_note(doc, p["note_id"], summary=str(p["summary"]).strip(), origin=ORIGIN_USER)
    elif action == DELETE_NOTE:
        new_doc = _mutate_note(doc, p["note_id"], deleted=True, delete_reason=ev.delete_reason)
    elif action == MARK_IMPORTANT:
        anchor = int(p["utterance_index"])
        live = doc.live_notes()
        position = sum(1 for n in live if n.kind == p["kind"])
        summary = str(p.get("summary") or "").strip() or f"Marked utterance {anchor}"
        note = Note(
            note_id=f"user-{ev.event_id}",
            kind=p["kind"],
            summary=summary,
            anchor=Span(anchor, anchor),
            context=_display_span(anchor, doc.utterance_count),
            position=position,
            origin=ORIGIN_USER,
        )
        new_doc = _with_notes(doc, list(doc.highlights.all_notes()) + [note])
    elif action == UNMARK_IMPORTANT:
        new_doc = _mutate_note(doc, p["note_id"], deleted=True)
    elif action == ASSIGN_TASK:
        new_doc = _mutate_note(doc, p["note_id"], assignee=str(p["assignee"]))
    elif action == SET_DUE_DATE:
        new_doc = _mutate_note(doc, p["note_id"], due_date=p["due_date"])
    elif action == REORDER_NOTE:
        target = _live_note(doc, p["note_id"])
        siblings = [
            n for n in doc.live_notes() if n.kind == target.kind and n.note_id != target.note_id
        ]
        siblings.sort(key=lambda n: n.position)
        index = min(int(p["new_position"]), len(siblings))
        siblings.insert(index, target)
        renumbered = {n.note_id: i for i, n in enumerate(siblings)}
        notes = [
            replace(n, position=renumbered[n.note_id]) if n.note_id in renumbered else n
            for n in doc.highlights.all_notes()
        ]
        new_doc = _with_notes(doc, notes)
    elif action == EDIT_CHAPTER_TITLE:
        chapters = tuple(
            replace(ch, title=str(p["title"]).strip()) if ch.chapter_id == p["chapter_id"] else ch
            for ch in doc.chapters
        )
        new_doc = replace(doc, chapters=chapters)
    elif action == EDIT_ROLLING_NOTE:
        chapters = []
        for ch in doc.chapters:
            rolling = tuple(
                replace(rn, summary=str(p["summary"]).strip(), origin=ORIGIN_USER)
                if rn.rolling_id == p["rolling_id"]
                else rn
                for rn in ch.rolling_notes
            )
            chapters.append(replace(ch, rolling_notes=rolling))
        new_doc = replace(doc, chapters=tuple(chapters))
    elif action in (COLLAPSE_CHAPTER, EXPAND_CHAPTER):
        collapsed = action == COLLAPSE_CHAPTER
        chapters = tuple(
            replace(ch, collapsed=collapsed) if ch.chapter_id == p["chapter_id"] else ch
            for ch in doc.chapters
        )
        new_doc = replace(doc, chapters=chapters)
    else:  # EXPAND_CONTEXT, SHARE: navigation-only, no content change
        new_doc = doc
    return bump_version(new_doc)


def replay(initial: RecapDocument, events: list[FeedbackEvent]) -> RecapDocument:
    doc = initial
    for ev in events:
        doc = apply(doc, ev)
    return doc


# ---------------------------------------------------------------------------
# Training export
# ---------------------------------------------------------------------------


def _note_context_text(doc: RecapDocument, note: Note, transcript: Transcript) -> str:
    return span_text(transcript, note.context, with_speakers=True)


def export_training(
    initial: RecapDocument,
    events: list[FeedbackEvent],
    transcript: Transcript,
    weights: TrainingWeights | None = None,
) -> list[TrainingExample]:
    """Map the event log onto alignment training examples.

    Edits yield quality-improvement pairs; adds and shares yield positive
    relevance; expanding context or a chapter yields navigation
    relevance. Deletes yield a low-weight ambiguous negative only when
    the reason marks the summary itself as bad (inaccurate or
    irrelevant); done / redundant / unspecified deletes export nothing.
    """
    w = weights or TrainingWeights()
    examples: list[TrainingExample] = []
    doc = initial
    for ev in events:
        p = ev.payload
        if ev.action == EDIT_NOTE:
            original = _live_note(doc, p["note_id"])
            examples.append(
                TrainingExample(
                    signal=SIGNAL_QUALITY,
                    context_text=_note_context_text(doc, original, transcript),
                    original_summary=original.summary,
                    target=str(p["summary"]).strip(),
                    weight=w.edit,
                    provenance=ev.event_id,
                )
            )
        elif ev.action == EDIT_ROLLING_NOTE:
            found = doc.find_rolling(p["rolling_id"])
            assert found is not None
            _, rn = found
            examples.append(
                TrainingExample(
                    signal=SIGNAL_QUALITY,
                    context_text=span_text(transcript, rn.span, with_speakers=True),
                    original_summary=rn.summary,
                    target=str(p["summary"]).strip(),
                    weight=w.edit,
                    provenance=ev.event_id,
                )
            )
        elif ev.action == ADD_NOTE:
            anchor = int(p.get("anchor_index", 0))
            examples.append(
                TrainingExample(
                    signal=SIGNAL_POSITIVE,
                    context_text=span_text(
                        transcript, _display_span(anchor, doc.utterance_count), with_speakers=True
                    ),
                    original_summary=str(p["summary"]).strip(),
                    target=None,
                    weight=w.add,
                    provenance=ev.event_id,
                )
            )
        elif ev.action == SHARE:
            node_id = p["node_id"]
            note = doc.find_note(node_id)
            if note is not None:
                context = _note_context_text(doc, note, transcript)
                summary = note.summary
            else:
                found = doc.find_rolling(node_id)
                if found is not None:
                    _, rn = found
                    context = span_text(transcript, rn.span, with_speakers=True)
                    summary = rn.summary
                else:
                    ch = doc.find_chapter(node_id)
                    assert ch is not None
                    context = span_text(transcript, ch.range, with_speakers=True)
                    summary = ch.one_liner or ch.title
            examples.append(
                TrainingExample(
                    signal=SIGNAL_POSITIVE,
                    context_text=context,
                    original_summary=summary,
                    target=None,
                    weight=w.share,
                    provenance=ev.event_id,
                )
            )
        elif ev.action in (EXPAND_CONTEXT, EXPAND_CHAPTER):
            if ev.action == EXPAND_CONTEXT:
                note = _live_note(doc, p["note_id"])
                context = _note_context_text(doc, note, transcript)
                summary = note.summary
            else:
                ch = doc.find_chapter(p["chapter_id"])
                assert ch is not None
                context = span_text(transcript, ch.range, with_speakers=True)
                summary = ch.one_liner or ch.title
            examples.append(
                TrainingExample(
                    signal=SIGNAL_NAVIGATION,
                    context_text=context,
                    original_summary=summary,
                    target=None,
                    weight=w.navigation,
                    provenance=ev.event_id,
                )
            )
        elif ev.action == DELETE_NOTE:
            reason = ev.delete_reason or REASON_UNSPECIFIED
            if reason in (REASON_INACCURATE, REASON_IRRELEVANT):
                original = _live_note(doc, p["note_id"])
                examples.append(
                    TrainingExample(
                        signal=SIGNAL_AMBIGUOUS_NEGATIVE,
                        context_text=_note_context_text(doc, original, transcript),
                        original_summary=original.summary,
                        target=None,
                        weight=w.ambiguous_delete,
                        provenance=ev.event_id,
                    )
                )
        doc = apply(doc, ev)
    return examples
