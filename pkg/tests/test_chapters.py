"""Chapter assembly: chunking, markers, timespans, expansion levels."""

from __future__ import annotations

import random

import pytest

from recap.backend import BackendFailure, BackendRequest, StubBackend
from recap.chapters import (
    FALLBACK_TITLE,
    NOTES,
    TITLE_ONLY,
    TRANSCRIPT_LINKED,
    build_chapters,
    chunk_spans,
    expand_chapter,
)
from recap.highlights import ACTION_ITEM, KEY_POINT, run_highlights
from recap.segmentation import SegmentationConfig, segment_transcript
from recap.transcript import Span, parse_transcript

from conftest import topic_transcript
from test_highlights import make_note


class TestChunkSpans:
    def test_twenty_utterance_segment(self):
        spans = chunk_spans(Span(0, 19), 8)
        assert [(s.start, s.end) for s in spans] == [(0, 7), (8, 15), (16, 19)]

    def test_offset_segment(self):
        spans = chunk_spans(Span(10, 20), 8)
        assert [(s.start, s.end) for s in spans] == [(10, 17), (18, 20)]

    def test_single_utterance(self):
        assert [(s.start, s.end) for s in chunk_spans(Span(3, 3), 8)] == [(3, 3)]


def build_fixture(rng: random.Random | None = None):
    rng = rng or random.Random(3)
    t = topic_transcript(rng, (20, 12))
    segments = [(0, 19), (20, 31)]
    notes = [
        make_note("kp-2", KEY_POINT, 2, 0),
        make_note("ai-5", ACTION_ITEM, 5, 0),
        make_note("ai-9", ACTION_ITEM, 9, 1),
        make_note("kp-25", KEY_POINT, 25, 1),
    ]
    return t, segments, notes


class TestBuildChapters:
    def test_rolling_note_spans(self, stub_backend):
        t, segments, notes = build_fixture()
        chapters = build_chapters(t, segments, notes, stub_backend)
        spans = [(rn.span.start, rn.span.end) for rn in chapters[0].rolling_notes]
        assert spans == [(0, 7), (8, 15), (16, 19)]

    def test_marker_counts(self, stub_backend):
        t, segments, notes = build_fixture()
        chapters = build_chapters(t, segments, notes, stub_backend)
        assert chapters[0].star_count == 1
        assert chapters[0].checkbox_count == 2
        assert chapters[1].star_count == 1
        assert chapters[1].checkbox_count == 0

    def test_marker_ids_land_in_owning_chunk(self, stub_backend):
        t, segments, notes = build_fixture()
        chapters = build_chapters(t, segments, notes, stub_backend)
        first_chunk = chapters[0].rolling_notes[0]
        assert set(first_chunk.markers) == {"kp-2", "ai-5"}
        second_chunk = chapters[0].rolling_notes[1]
        assert set(second_chunk.markers) == {"ai-9"}

    def test_single_utterance_transcript(self, stub_backend):
        t = parse_transcript("Amy: just the one thing")
        chapters = build_chapters(t, [(0, 0)], [], stub_backend)
        assert len(chapters) == 1
        assert [(rn.span.start, rn.span.end) for rn in chapters[0].rolling_notes] == [(0, 0)]

    def test_rolling_spans_cover_transcript(self, stub_backend):
        rng = random.Random(17)
        for _ in range(20):
            t = topic_transcript(rng, tuple(rng.randint(4, 25) for _ in range(rng.randint(1, 3))))
            segments = segment_transcript(t, SegmentationConfig(min_segment_utterances=2))
            chapters = build_chapters(t, segments, [], stub_backend)
            covered = []
            for ch in chapters:
                for rn in ch.rolling_notes:
                    assert len(rn.span) <= 8
                    covered.extend(range(rn.span.start, rn.span.end + 1))
            assert covered == list(range(len(t)))

    def test_timespans_ordered_and_disjoint(self, stub_backend):
        text = "\n".join(
            f"[00:{i // 60:02d}:{i % 60:02d}] P{i % 2}: segment text number {i}" for i in range(0, 300, 30)
        )
        t = parse_transcript(text)
        segments = [(0, 4), (5, 9)]
        chapters = build_chapters(t, segments, [], stub_backend)
        (s1, e1), (s2, e2) = chapters[0].timespan, chapters[1].timespan
        assert s1 <= e1 < s2 <= e2

    def test_collapsed_default_all_but_first(self, stub_backend):
        t, segments, notes = build_fixture()
        chapters = build_chapters(t, segments, notes, stub_backend)
        assert [ch.collapsed for ch in chapters] == [False, True]

    def test_backend_failure_falls_back(self):
        class FailingTitles:
            def __init__(self):
                self.stub = StubBackend()

            def invoke(self, request: BackendRequest):
                if request.capability == "title":
                    raise BackendFailure("http", "boom", status=500)
                return self.stub.invoke(request)

        t, segments, notes = build_fixture()
        chapters = build_chapters(t, segments, notes, FailingTitles())
        assert chapters[0].title == FALLBACK_TITLE
        assert chapters[0].one_liner == t[0].text
        # Rolling notes still built from the working rewrite capability.
        assert all(ch.rolling_notes for ch in chapters)

    def test_marker_totals_match_note_counts(self, survey_transcript, stub_backend):
        view = run_highlights(survey_transcript, stub_backend)
        segments = segment_transcript(survey_transcript, SegmentationConfig())
        chapters = build_chapters(survey_transcript, segments, list(view.all_notes()), stub_backend)
        assert sum(ch.star_count for ch in chapters) == len(view.key_points)
        assert sum(ch.checkbox_count for ch in chapters) == len(view.action_items)

    def test_requires_partition(self, stub_backend):
        t, _, notes = build_fixture()
        with pytest.raises(ValueError):
            build_chapters(t, [(0, 5)], notes, stub_backend)


class TestExpandChapter:
    def test_title_only(self, stub_backend):
        t, segments, notes = build_fixture()
        ch = build_chapters(t, segments, notes, stub_backend)[0]
        rendering = expand_chapter(ch, TITLE_ONLY)
        assert rendering.rolling_notes is None
        assert rendering.title == ch.title
        assert rendering.star_count == ch.star_count

    def test_notes_level_uncollapses(self, stub_backend):
        t, segments, notes = build_fixture()
        ch = build_chapters(t, segments, notes, stub_backend)[1]
        assert ch.collapsed
        rendering = expand_chapter(ch, NOTES)
        assert rendering.collapsed is False
        assert rendering.rolling_notes == ch.rolling_notes

    def test_transcript_linked_refs_within_span(self, stub_backend):
        t, segments, notes = build_fixture()
        ch = build_chapters(t, segments, notes, stub_backend)[0]
        rendering = expand_chapter(ch, TRANSCRIPT_LINKED, transcript=t)
        for rn in ch.rolling_notes:
            refs = rendering.utterance_refs[rn.rolling_id]
            assert refs
            for index, start_ms in refs:
                assert index in rn.span
                assert start_ms == t[index].start

    def test_transcript_linked_requires_transcript(self, stub_backend):
        t, segments, notes = build_fixture()
        ch = build_chapters(t, segments, notes, stub_backend)[0]
        with pytest.raises(ValueError):
            expand_chapter(ch, TRANSCRIPT_LINKED)
