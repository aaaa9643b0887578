"""Shared fixtures: synthetic corpora, a survey transcript, document generator."""

from __future__ import annotations

import random

import pytest

from recap.backend import StubBackend
from recap.chapters import Chapter, RollingNote, chunk_spans
from recap.highlights import ACTION_ITEM, KEY_POINT, HighlightsView, Note
from recap.recapdoc import RecapDocument, transcript_hash
from recap.transcript import Span, Transcript, parse_transcript

# Disjoint per-topic vocabularies (no stop words). Each utterance contains
# every vocabulary word exactly twice, shuffled, so term-frequency vectors
# within a topic are identical and cross-topic similarity is exactly zero.
TOPIC_VOCABS = [
    ["alpha", "bravo", "charlie", "delta"],
    ["echo", "foxtrot", "golf", "hotel"],
    ["india", "juliet", "kilo", "lima"],
    ["mike", "november", "oscar", "papa"],
]


def topic_lines(rng: random.Random, sizes: tuple[int, ...]) -> list[str]:
    """Dialogue lines for consecutive disjoint-vocabulary topics.

    Speakers cycle globally so consecutive lines never share a speaker
    (the parser would merge them otherwise).
    """
    lines: list[str] = []
    idx = 0
    for topic, size in enumerate(sizes):
        vocab = TOPIC_VOCABS[topic % len(TOPIC_VOCABS)]
        for _ in range(size):
            words = vocab * 2
            rng.shuffle(words)
            lines.append(f"P{idx % 3}: {' '.join(words)}")
            idx += 1
    return lines


def topic_transcript(rng: random.Random, sizes: tuple[int, ...], meeting_id: str = "corpus") -> Transcript:
    return parse_transcript("\n".join(topic_lines(rng, sizes)), meeting_id=meeting_id)


SURVEY_LINES = """\
Amy: good morning everyone thanks for joining the sync
Bob: let us walk through the survey project status first
Amy: the response rate is higher than expected this quarter
Carol: we decided to extend the survey window by one week
Bob: I will send the survey results by Friday
Amy: that sounds reasonable given the extra responses coming in
Carol: next up is the budget review for the data team
Bob: contractor costs came in under the original estimate
Amy: cloud spend needs a closer look before the approval
Carol: let us schedule a deep dive on infrastructure costs
"""


@pytest.fixture
def survey_transcript() -> Transcript:
    return parse_transcript(SURVEY_LINES, meeting_id="survey-sync")


@pytest.fixture
def stub_backend() -> StubBackend:
    return StubBackend()


_SUMMARY_WORDS = ["review", "deadline", "decision", "budget", "órbita", "跟进", "launch"]
_SPEAKERS = ["Amy", "Bob", "Carol"]


def random_valid_event(rng: random.Random, doc: RecapDocument, seq: int):
    """One feedback event that is valid against ``doc`` right now."""
    from recap import feedback as fb

    live = doc.live_notes()
    action_items = [x for x in live if x.kind == ACTION_ITEM]
    chapters = list(doc.chapters)
    rolling = [rn for ch in chapters for rn in ch.rolling_notes]

    choices: list[tuple[str, dict, str | None]] = [
        (
            fb.ADD_NOTE,
            {
                "kind": rng.choice([KEY_POINT, ACTION_ITEM]),
                "summary": f"user note {seq}",
                "anchor_index": rng.randrange(doc.utterance_count),
            },
            None,
        ),
        (
            fb.MARK_IMPORTANT,
            {"utterance_index": rng.randrange(doc.utterance_count), "kind": rng.choice([KEY_POINT, ACTION_ITEM])},
            None,
        ),
    ]
    if chapters:
        ch = rng.choice(chapters)
        choices.append((fb.EDIT_CHAPTER_TITLE, {"chapter_id": ch.chapter_id, "title": f"Renamed {seq}"}, None))
        choices.append((rng.choice([fb.COLLAPSE_CHAPTER, fb.EXPAND_CHAPTER]), {"chapter_id": ch.chapter_id}, None))
        choices.append((fb.SHARE, {"node_id": ch.chapter_id, "depth": "notes"}, None))
    if rolling:
        rn = rng.choice(rolling)
        choices.append((fb.EDIT_ROLLING_NOTE, {"rolling_id": rn.rolling_id, "summary": f"edited chunk {seq}"}, None))
    if live:
        note = rng.choice(live)
        choices.append((fb.EDIT_NOTE, {"note_id": note.note_id, "summary": f"edited note {seq}"}, None))
        choices.append(
            (fb.DELETE_NOTE, {"note_id": note.note_id}, rng.choice(list(fb.DELETE_REASONS) + [None]))
        )
        choices.append((fb.UNMARK_IMPORTANT, {"note_id": note.note_id}, None))
        choices.append((fb.REORDER_NOTE, {"note_id": note.note_id, "new_position": rng.randint(0, 5)}, None))
        choices.append((fb.EXPAND_CONTEXT, {"note_id": note.note_id}, None))
        choices.append((fb.SHARE, {"node_id": note.note_id, "depth": "one_liner"}, None))
    if action_items:
        note = rng.choice(action_items)
        choices.append((fb.ASSIGN_TASK, {"note_id": note.note_id, "assignee": rng.choice(_SPEAKERS)}, None))
        choices.append((fb.SET_DUE_DATE, {"note_id": note.note_id, "due_date": "2026-09-01"}, None))

    action, payload, reason = rng.choice(choices)
    return fb.FeedbackEvent(
        event_id=f"ev-{seq}",
        meeting_id=doc.meeting_id,
        actor=rng.choice(_SPEAKERS).lower(),
        at=f"2026-08-10T0{seq % 10}:00:00+00:00",
        base_version=doc.version,
        action=action,
        payload=payload,
        delete_reason=reason,
    )


def random_document(rng: random.Random) -> tuple[RecapDocument, Transcript]:
    """A structurally valid document with notes, tombstones, and chapters."""
    n = rng.randint(1, 40)
    lines = [f"{_SPEAKERS[i % 3]}: point {i} about {rng.choice(_SUMMARY_WORDS)}" for i in range(n)]
    t = parse_transcript("\n".join(lines), meeting_id=f"m{rng.randrange(10**6)}")

    notes: list[Note] = []
    positions = {KEY_POINT: 0, ACTION_ITEM: 0}
    for j in range(rng.randint(0, 6)):
        kind = rng.choice([KEY_POINT, ACTION_ITEM])
        anchor = rng.randrange(n)
        deleted = rng.random() < 0.25
        notes.append(
            Note(
                note_id=f"note-{j}",
                kind=kind,
                summary=f"{rng.choice(_SUMMARY_WORDS)} item {j}",
                anchor=Span(anchor, anchor),
                context=Span(max(0, anchor - 3), min(n - 1, anchor + 3)),
                position=positions[kind],
                origin=rng.choice(["model", "user"]),
                assignee=rng.choice(_SPEAKERS) if kind == ACTION_ITEM and rng.random() < 0.5 else None,
                due_date="2026-08-14" if kind == ACTION_ITEM and rng.random() < 0.3 else None,
                deleted=deleted,
                delete_reason=rng.choice(["done", "inaccurate"]) if deleted else None,
            )
        )
        positions[kind] += 1
    view = HighlightsView(
        key_points=tuple(x for x in notes if x.kind == KEY_POINT),
        action_items=tuple(x for x in notes if x.kind == ACTION_ITEM),
    )

    bounds = sorted({0} | {rng.randrange(1, n) for _ in range(rng.randint(0, 3))} if n > 1 else {0})
    chapters = []
    for ci, b in enumerate(bounds):
        end = (bounds[ci + 1] - 1) if ci + 1 < len(bounds) else n - 1
        seg = Span(b, end)
        rolling = tuple(
            RollingNote(
                rolling_id=f"ch-{ci}-rn-{k}",
                span=chunk,
                summary=f"chunk {ci}/{k} summary",
                markers=tuple(x.note_id for x in notes if not x.deleted and x.anchor.start in chunk),
            )
            for k, chunk in enumerate(chunk_spans(seg, 8))
        )
        live = [x for x in notes if not x.deleted and x.anchor.start in seg]
        chapters.append(
            Chapter(
                chapter_id=f"ch-{ci}",
                range=seg,
                title=f"Topic {ci}",
                one_liner=f"One line about topic {ci}",
                timespan=(t[seg.start].start, t[seg.end].start),
                rolling_notes=rolling,
                star_count=sum(1 for x in live if x.kind == KEY_POINT),
                checkbox_count=sum(1 for x in live if x.kind == ACTION_ITEM),
                collapsed=ci != 0,
            )
        )

    doc = RecapDocument(
        meeting_id=t.meeting_id,
        version=rng.randint(1, 20),
        transcript_ref=transcript_hash(t),
        utterance_count=n,
        highlights=view,
        chapters=tuple(chapters),
        pipeline_config_snapshot={"threshold": 0.5, "chunk_size": 8, "backend": "stub"},
        created_at=rng.choice([None, "2026-08-10T12:00:00+00:00"]),
    )
    return doc, t
