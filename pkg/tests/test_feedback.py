"""Event validation, document transformations, replay, training export."""

from __future__ import annotations

import random

import pytest

from recap import feedback as fb
from recap.highlights import ACTION_ITEM, KEY_POINT
from recap.pipeline import run_pipeline
from recap.recapdoc import NodeNotFound, to_portable
from recap.transcript import parse_transcript

from conftest import SURVEY_LINES, random_valid_event


@pytest.fixture
def doc(survey_transcript, stub_backend):
    return run_pipeline(survey_transcript, stub_backend)


def event(action: str, payload: dict, base: int, reason: str | None = None, eid: str = "e1") -> fb.FeedbackEvent:
    return fb.FeedbackEvent(
        event_id=eid,
        meeting_id="survey-sync",
        actor="amy",
        at="2026-08-10T10:00:00+00:00",
        base_version=base,
        action=action,
        payload=payload,
        delete_reason=reason,
    )


class TestRecord:
    def test_append_returns_position(self, doc):
        log = fb.EventLog()
        ev = event(fb.EDIT_NOTE, {"note_id": "ai-4", "summary": "Edited."}, 1)
        assert fb.record(ev, log, doc) == 0
        assert fb.record(event(fb.SHARE, {"node_id": "ai-4"}, 1, eid="e2"), log, doc) == 1
        assert [e.event_id for e in log.events()] == ["e1", "e2"]

    def test_stale_version_rejected(self, doc):
        head = fb.apply(doc, event(fb.SHARE, {"node_id": "ai-4"}, 1))
        with pytest.raises(fb.StaleVersion):
            fb.record(event(fb.EDIT_NOTE, {"note_id": "ai-4", "summary": "x"}, 1, eid="e2"), fb.EventLog(), head)

    def test_future_version_rejected(self, doc):
        with pytest.raises(fb.ValidationFailure):
            fb.validate(event(fb.SHARE, {"node_id": "ai-4"}, 7), doc)

    def test_delete_without_reason_defaults_to_unspecified(self, doc):
        log = fb.EventLog()
        fb.record(event(fb.DELETE_NOTE, {"note_id": "ai-4"}, 1), log, doc)
        assert log.events()[0].delete_reason == fb.REASON_UNSPECIFIED


class TestApply:
    def test_edit_note_sets_user_origin(self, doc):
        new = fb.apply(doc, event(fb.EDIT_NOTE, {"note_id": "ai-4", "summary": "New text."}, 1))
        note = new.find_note("ai-4")
        assert note.summary == "New text."
        assert note.origin == "user"
        assert new.version == 2

    def test_delete_is_soft(self, doc):
        new = fb.apply(doc, event(fb.DELETE_NOTE, {"note_id": "ai-4"}, 1, reason=fb.REASON_DONE))
        tomb = new.find_note("ai-4")
        assert tomb.deleted and tomb.delete_reason == fb.REASON_DONE
        assert b"ai-4" in to_portable(new)
        assert "ai-4" not in [n.note_id for n in new.live_notes()]

    def test_delete_rolling_note_is_illegal(self, doc):
        rn_id = doc.chapters[0].rolling_notes[0].rolling_id
        with pytest.raises(fb.IllegalAction):
            fb.apply(doc, event(fb.DELETE_NOTE, {"note_id": rn_id}, 1))

    def test_edit_rolling_note(self, doc):
        rn_id = doc.chapters[0].rolling_notes[0].rolling_id
        new = fb.apply(doc, event(fb.EDIT_ROLLING_NOTE, {"rolling_id": rn_id, "summary": "Chunk redone."}, 1))
        _, rn = new.find_rolling(rn_id)
        assert rn.summary == "Chunk redone."
        assert rn.origin == "user"

    def test_add_note_appends_with_user_origin(self, doc):
        new = fb.apply(
            doc,
            event(fb.ADD_NOTE, {"kind": KEY_POINT, "summary": "My own point.", "anchor_index": 2}, 1, eid="e9"),
        )
        note = new.find_note("user-e9")
        assert note.origin == "user"
        assert note.position == len([n for n in doc.live_notes() if n.kind == KEY_POINT])

    def test_add_key_point_with_assignee_rejected(self, doc):
        with pytest.raises(fb.ValidationFailure):
            fb.apply(
                doc,
                event(fb.ADD_NOTE, {"kind": KEY_POINT, "summary": "x", "assignee": "Bob"}, 1),
            )

    def test_mark_important_creates_marker_note_and_counts(self, doc):
        anchor = doc.chapters[-1].range.end
        before = sum(ch.checkbox_count for ch in doc.chapters)
        new = fb.apply(
            doc, event(fb.MARK_IMPORTANT, {"utterance_index": anchor, "kind": ACTION_ITEM}, 1, eid="e5")
        )
        assert sum(ch.checkbox_count for ch in new.chapters) == before + 1
        marked = new.find_note("user-e5")
        marker_ids = {m for ch in new.chapters for rn in ch.rolling_notes for m in rn.markers}
        assert marked.note_id in marker_ids

    def test_unmark_removes_counts(self, doc):
        target = doc.highlights.action_items[0]
        new = fb.apply(doc, event(fb.UNMARK_IMPORTANT, {"note_id": target.note_id}, 1))
        assert sum(ch.checkbox_count for ch in new.chapters) == sum(
            ch.checkbox_count for ch in doc.chapters
        ) - 1

    def test_assign_task(self, doc):
        new = fb.apply(doc, event(fb.ASSIGN_TASK, {"note_id": "ai-4", "assignee": "Carol"}, 1))
        assert new.find_note("ai-4").assignee == "Carol"

    def test_assign_key_point_illegal(self, doc):
        kp = doc.highlights.key_points[0]
        with pytest.raises(fb.IllegalAction):
            fb.apply(doc, event(fb.ASSIGN_TASK, {"note_id": kp.note_id, "assignee": "Carol"}, 1))

    def test_set_due_date_validates_iso(self, doc):
        new = fb.apply(doc, event(fb.SET_DUE_DATE, {"note_id": "ai-4", "due_date": "2026-08-14"}, 1))
        assert new.find_note("ai-4").due_date == "2026-08-14"
        with pytest.raises(fb.ValidationFailure):
            fb.apply(doc, event(fb.SET_DUE_DATE, {"note_id": "ai-4", "due_date": "Friday"}, 1))

    def test_reorder_moves_note(self, doc):
        added = fb.apply(
            doc,
            event(fb.ADD_NOTE, {"kind": ACTION_ITEM, "summary": "Second task.", "anchor_index": 0}, 1, eid="e7"),
        )
        reordered = fb.apply(
            added, event(fb.REORDER_NOTE, {"note_id": "user-e7", "new_position": 0}, 2, eid="e8")
        )
        live_ai = [n.note_id for n in reordered.highlights.action_items if not n.deleted]
        assert live_ai[0] == "user-e7"

    def test_edit_chapter_title(self, doc):
        ch_id = doc.chapters[0].chapter_id
        new = fb.apply(doc, event(fb.EDIT_CHAPTER_TITLE, {"chapter_id": ch_id, "title": "Kickoff"}, 1))
        assert new.find_chapter(ch_id).title == "Kickoff"

    def test_collapse_and_expand(self, doc):
        ch_id = doc.chapters[0].chapter_id
        collapsed = fb.apply(doc, event(fb.COLLAPSE_CHAPTER, {"chapter_id": ch_id}, 1))
        assert collapsed.find_chapter(ch_id).collapsed
        expanded = fb.apply(collapsed, event(fb.EXPAND_CHAPTER, {"chapter_id": ch_id}, 2, eid="e2"))
        assert not expanded.find_chapter(ch_id).collapsed

    def test_navigation_events_only_bump_version(self, doc):
        new = fb.apply(doc, event(fb.EXPAND_CONTEXT, {"note_id": "ai-4"}, 1))
        assert new.version == doc.version + 1
        assert new.highlights == doc.highlights
        assert new.chapters == doc.chapters

    def test_unknown_target(self, doc):
        with pytest.raises(NodeNotFound):
            fb.apply(doc, event(fb.EDIT_NOTE, {"note_id": "ai-404", "summary": "x"}, 1))

    def test_edit_deleted_note_not_found(self, doc):
        deleted = fb.apply(doc, event(fb.DELETE_NOTE, {"note_id": "ai-4"}, 1))
        with pytest.raises(NodeNotFound):
            fb.apply(deleted, event(fb.EDIT_NOTE, {"note_id": "ai-4", "summary": "x"}, 2, eid="e2"))


class TestReplay:
    def test_randomized_replay_reproduces_head(self, survey_transcript, stub_backend):
        initial = run_pipeline(survey_transcript, stub_backend)
        rng = random.Random(4242)
        for trial in range(60):
            head = initial
            events = []
            for seq in range(rng.randint(0, 12)):
                ev = random_valid_event(rng, head, seq)
                head = fb.apply(head, ev)
                events.append(ev)
            assert head.version == 1 + len(events)
            assert to_portable(fb.replay(initial, events)) == to_portable(head)

    def test_fold_is_pure(self, doc):
        events = [
            event(fb.EDIT_NOTE, {"note_id": "ai-4", "summary": "One."}, 1, eid="a"),
            event(fb.SHARE, {"node_id": "ai-4"}, 2, eid="b"),
        ]
        assert to_portable(fb.replay(doc, events)) == to_portable(fb.replay(doc, events))


class TestExportTraining:
    def test_paper_mapping_exact(self, survey_transcript, doc):
        kp = doc.highlights.key_points[0].note_id
        events = []
        head = doc

        def push(action, payload, reason=None):
            nonlocal head
            ev = event(action, payload, head.version, reason=reason, eid=f"e{len(events)}")
            events.append(ev)
            head = fb.apply(head, ev)

        push(fb.EDIT_NOTE, {"note_id": "ai-4", "summary": "Bob sends final results Friday."})
        push(fb.ADD_NOTE, {"kind": KEY_POINT, "summary": "Window extended.", "anchor_index": 3})
        push(fb.SHARE, {"node_id": "ai-4"})
        push(fb.DELETE_NOTE, {"note_id": "user-e1"}, reason=fb.REASON_DONE)
        push(fb.DELETE_NOTE, {"note_id": kp}, reason=fb.REASON_INACCURATE)

        examples = fb.export_training(doc, events, survey_transcript)
        signals = sorted(ex.signal for ex in examples)
        assert signals == [
            fb.SIGNAL_AMBIGUOUS_NEGATIVE,
            fb.SIGNAL_POSITIVE,
            fb.SIGNAL_POSITIVE,
            fb.SIGNAL_QUALITY,
        ]
        quality = next(ex for ex in examples if ex.signal == fb.SIGNAL_QUALITY)
        assert quality.target == "Bob sends final results Friday."
        assert quality.original_summary == doc.find_note("ai-4").summary
        negative = next(ex for ex in examples if ex.signal == fb.SIGNAL_AMBIGUOUS_NEGATIVE)
        assert negative.weight == 0.3

    def test_done_delete_exports_nothing(self, survey_transcript, doc):
        ev = event(fb.DELETE_NOTE, {"note_id": "ai-4"}, 1, reason=fb.REASON_DONE)
        assert fb.export_training(doc, [ev], survey_transcript) == []

    def test_unspecified_delete_excluded(self, survey_transcript, doc):
        ev = event(fb.DELETE_NOTE, {"note_id": "ai-4"}, 1)
        ev = fb.normalize(ev)
        assert fb.export_training(doc, [ev], survey_transcript) == []

    def test_empty_log(self, survey_transcript, doc):
        assert fb.export_training(doc, [], survey_transcript) == []

    def test_navigation_and_reorder_weights(self, survey_transcript, doc):
        events = []
        head = doc
        for eid, (action, payload) in enumerate(
            [
                (fb.EXPAND_CONTEXT, {"note_id": "ai-4"}),
                (fb.EXPAND_CHAPTER, {"chapter_id": doc.chapters[0].chapter_id}),
                (fb.REORDER_NOTE, {"note_id": "ai-4", "new_position": 0}),
                (fb.COLLAPSE_CHAPTER, {"chapter_id": doc.chapters[0].chapter_id}),
            ]
        ):
            ev = event(action, payload, head.version, eid=f"n{eid}")
            events.append(ev)
            head = fb.apply(head, ev)
        examples = fb.export_training(doc, events, survey_transcript)
        assert [ex.signal for ex in examples] == [fb.SIGNAL_NAVIGATION, fb.SIGNAL_NAVIGATION]
        assert all(ex.weight == 0.5 for ex in examples)

    def test_no_ambiguous_negative_above_cap(self, survey_transcript, stub_backend):
        initial = run_pipeline(survey_transcript, stub_backend)
        rng = random.Random(77)
        head = initial
        events = []
        for seq in range(40):
            ev = random_valid_event(rng, head, seq)
            head = fb.apply(head, ev)
            events.append(ev)
        for ex in fb.export_training(initial, events, survey_transcript):
            if ex.signal == fb.SIGNAL_AMBIGUOUS_NEGATIVE:
                assert ex.weight <= 0.3


class TestTombstoneInvariants:
    def test_soft_deleted_survive_serialization_hidden_from_render(self, doc, survey_transcript):
        from recap.recapdoc import render_markdown

        target = doc.highlights.action_items[0]
        head = fb.apply(doc, event(fb.DELETE_NOTE, {"note_id": target.note_id}, 1, reason=fb.REASON_REDUNDANT))
        assert target.note_id.encode() in to_portable(head)
        assert target.summary not in render_markdown(head)
