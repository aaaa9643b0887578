"""Highlights view: detect key points / action items, rewrite in third person.

Two-stage pipeline per note kind: an extractive classify pass over every
utterance with a ~106-token context, then an abstractive rewrite of each
kept utterance with a 512-token context. Output is a pair of ordered note
lists (key points and action items).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from . import backend as be
from .transcript import Span, Transcript, context_window, estimate_tokens, span_text

logger = logging.getLogger(__name__)

KEY_POINT = "key_point"
ACTION_ITEM = "action_item"

ORIGIN_MODEL = "model"
ORIGIN_USER = "user"


class EmptyRewrite(ValueError):
    """The rewrite backend returned a blank summary; candidate is dropped."""


@dataclass(frozen=True)
class HighlightCandidate:
    utterance_index: int
    kind: str
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.kind not in (KEY_POINT, ACTION_ITEM):
            raise ValueError(f"unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Note:
    """One key point or action item, anchored to its source utterances.

    ``anchor`` is the span the note was extracted from; ``context`` the
    wider span shown by "show context". Only action items may carry an
    assignee or due date. Deleted notes stay in the document as
    tombstones and are hidden from renderings.
    """

    note_id: str
    kind: str
    summary: str
    anchor: Span
    context: Span
    position: int
    origin: str = ORIGIN_MODEL
    assignee: str | None = None
    due_date: str | None = None
    deleted: bool = False
    delete_reason: str | None = None

    def __post_init__(self) -> None:
        if not self.summary.strip():
            raise ValueError("summary must be non-empty")
        if not self.context.contains_span(self.anchor):
            raise ValueError("anchor must lie within context")
        if self.kind == KEY_POINT and (self.assignee or self.due_date):
            raise ValueError("key points never carry assignee or due date")

    def to_json(self) -> dict:
        return {
            "note_id": self.note_id,
            "kind": self.kind,
            "summary": self.summary,
            "anchor": self.anchor.to_json(),
            "context": self.context.to_json(),
            "position": self.position,
            "origin": self.origin,
            "assignee": self.assignee,
            "due_date": self.due_date,
            "deleted": self.deleted,
            "delete_reason": self.delete_reason,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "Note":
        return cls(
            note_id=raw["note_id"],
            kind=raw["kind"],
            summary=raw["summary"],
            anchor=Span.from_json(raw["anchor"]),
            context=Span.from_json(raw["context"]),
            position=raw["position"],
            origin=raw["origin"],
            assignee=raw.get("assignee"),
            due_date=raw.get("due_date"),
            deleted=raw.get("deleted", False),
            delete_reason=raw.get("delete_reason"),
        )


@dataclass(frozen=True)
class HighlightsConfig:
    extract_context_tokens: int = 107
    abstract_context_tokens: int = 512
    max_notes: int = 10
    score_threshold: float = 0.5
    display_context_utterances: int = 3

    def __post_init__(self) -> None:
        for name in ("extract_context_tokens", "abstract_context_tokens", "max_notes", "display_context_utterances"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")


@dataclass(frozen=True)
class HighlightsView:
    key_points: tuple[Note, ...] = ()
    action_items: tuple[Note, ...] = ()

    def all_notes(self) -> tuple[Note, ...]:
        return self.key_points + self.action_items

    def find(self, note_id: str) -> Note | None:
        for note in self.all_notes():
            if note.note_id == note_id:
                return note
        return None

    def to_json(self) -> dict:
        return {
            "key_points": [n.to_json() for n in self.key_points],
            "action_items": [n.to_json() for n in self.action_items],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "HighlightsView":
        return cls(
            key_points=tuple(Note.from_json(n) for n in raw["key_points"]),
            action_items=tuple(Note.from_json(n) for n in raw["action_items"]),
        )


def _budgeted_context(t: Transcript, center: int, token_budget: int) -> str:
    """Context text for a request, guaranteed within the token budget.

    ``context_window`` keeps the sum within budget except when the center
    utterance alone exceeds it; then the text is truncated to the largest
    word count whose estimate still fits.
    """
    span = context_window(t, center, token_budget)
    text = span_text(t, span)
    if estimate_tokens(text) > token_budget:
        max_words = 3 * token_budget // 4
        text = " ".join(text.split()[:max_words])
    return text


def detect_highlights(
    t: Transcript,
    classifier,
    cfg: HighlightsConfig,
) -> list[HighlightCandidate]:
    """Score every utterance for both kinds, threshold, and cap per kind.

    Keeps at most ``max_notes`` candidates per kind (ties broken toward
    the earlier utterance); the result is chronological.
    """
    if len(t) == 0:
        raise ValueError("transcript must be non-empty")
    per_kind: dict[str, list[HighlightCandidate]] = {KEY_POINT: [], ACTION_ITEM: []}
    for u in t.utterances:
        req = be.BackendRequest(
            capability=be.CLASSIFY,
            focus_text=f"{u.speaker}: {u.text}",
            context_text=_budgeted_context(t, u.index, cfg.extract_context_tokens),
            token_budget=cfg.extract_context_tokens,
        )
        resp = classifier.invoke(req)
        for kind, score in ((KEY_POINT, resp.key_point), (ACTION_ITEM, resp.action_item)):
            if score is not None and score >= cfg.score_threshold:
                per_kind[kind].append(HighlightCandidate(u.index, kind, score))
    kept: list[HighlightCandidate] = []
    for kind in (KEY_POINT, ACTION_ITEM):
        ranked = sorted(per_kind[kind], key=lambda c: (-c.score, c.utterance_index))
        kept.extend(ranked[: cfg.max_notes])
    kept.sort(key=lambda c: (c.utterance_index, c.kind))
    return kept


def display_context(t: Transcript, index: int, cfg: HighlightsConfig) -> Span:
    k = cfg.display_context_utterances
    return Span(max(0, index - k), min(len(t) - 1, index + k))


def abstract_highlight(
    candidate: HighlightCandidate,
    t: Transcript,
    rewriter,
    cfg: HighlightsConfig,
) -> Note:
    """Rewrite one candidate utterance into a context-independent note."""
    u = t[candidate.utterance_index]
    req = be.BackendRequest(
        capability=be.REWRITE,
        focus_text=f"{u.speaker}: {u.text}",
        context_text=_budgeted_context(t, u.index, cfg.abstract_context_tokens),
        token_budget=cfg.abstract_context_tokens,
    )
    resp = rewriter.invoke(req)
    summary = (resp.text or "").strip()
    if not summary:
        raise EmptyRewrite(f"blank rewrite for utterance {u.index}")
    return Note(
        note_id=f"{'kp' if candidate.kind == KEY_POINT else 'ai'}-{u.index}",
        kind=candidate.kind,
        summary=summary,
        anchor=Span(u.index, u.index),
        context=display_context(t, u.index, cfg),
        position=0,
        origin=ORIGIN_MODEL,
        assignee=u.speaker if candidate.kind == ACTION_ITEM else None,
    )


def build_highlights_view(notes: list[Note]) -> HighlightsView:
    """Partition notes by kind and normalize positions to 0..k-1.

    Ordering honors stored positions (user reorders persist); ties fall
    back to anchor order, so freshly built model notes stay
    chronological.
    """

    def ordered(kind: str) -> tuple[Note, ...]:
        selected = [n for n in notes if n.kind == kind]
        selected.sort(key=lambda n: (n.position, n.anchor.start, n.note_id))
        return tuple(replace(n, position=i) for i, n in enumerate(selected))

    return HighlightsView(key_points=ordered(KEY_POINT), action_items=ordered(ACTION_ITEM))


def run_highlights(
    t: Transcript,
    model_backend,
    cfg: HighlightsConfig | None = None,
) -> HighlightsView:
    """Full highlights pass: detect, abstract each candidate, build the view.

    Blank rewrites drop their candidate (logged); backend failures
    propagate to the caller, which decides drop-vs-abort.
    """
    cfg = cfg or HighlightsConfig()
    candidates = detect_highlights(t, model_backend, cfg)
    notes: list[Note] = []
    counters = {KEY_POINT: 0, ACTION_ITEM: 0}
    for candidate in candidates:
        try:
            note = abstract_highlight(candidate, t, model_backend, cfg)
        except EmptyRewrite as exc:
            logger.warning("dropping candidate: %s", exc)
            continue
        notes.append(replace(note, position=counters[candidate.kind]))
        counters[candidate.kind] += 1
    return build_highlights_view(notes)
