"""Hierarchical view: per-topic chapters with titles and rolling notes.

Each segment becomes a chapter: a generated title and one-line summary,
rolling notes over sequential chunks of at most eight utterances, a
timespan, and star/checkbox marker counts mirroring the detected
highlights inside the chapter.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from . import backend as be
from .highlights import ACTION_ITEM, KEY_POINT, ORIGIN_MODEL, Note
from .segmentation import SegmentList, segments_are_partition
from .transcript import Span, Transcript, estimate_tokens, span_text

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 8
FALLBACK_TITLE = "Untitled section"

TITLE_ONLY = "title_only"
NOTES = "notes"
TRANSCRIPT_LINKED = "transcript_linked"


@dataclass(frozen=True)
class RollingNote:
    rolling_id: str
    span: Span
    summary: str
    markers: tuple[str, ...] = ()
    origin: str = ORIGIN_MODEL

    def to_json(self) -> dict:
        return {
            "rolling_id": self.rolling_id,
            "span": self.span.to_json(),
            "summary": self.summary,
            "markers": list(self.markers),
            "origin": self.origin,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "RollingNote":
        return cls(
            rolling_id=raw["rolling_id"],
            span=Span.from_json(raw["span"]),
            summary=raw["summary"],
            markers=tuple(raw["markers"]),
            origin=raw.get("origin", ORIGIN_MODEL),
        )


@dataclass(frozen=True)
class Chapter:
    chapter_id: str
    range: Span
    title: str
    one_liner: str
    timespan: tuple[int, int]
    rolling_notes: tuple[RollingNote, ...]
    star_count: int
    checkbox_count: int
    collapsed: bool

    def to_json(self) -> dict:
        return {
            "chapter_id": self.chapter_id,
            "range": self.range.to_json(),
            "title": self.title,
            "one_liner": self.one_liner,
            "timespan": list(self.timespan),
            "rolling_notes": [rn.to_json() for rn in self.rolling_notes],
            "star_count": self.star_count,
            "checkbox_count": self.checkbox_count,
            "collapsed": self.collapsed,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "Chapter":
        return cls(
            chapter_id=raw["chapter_id"],
            range=Span.from_json(raw["range"]),
            title=raw["title"],
            one_liner=raw["one_liner"],
            timespan=(raw["timespan"][0], raw["timespan"][1]),
            rolling_notes=tuple(RollingNote.from_json(rn) for rn in raw["rolling_notes"]),
            star_count=raw["star_count"],
            checkbox_count=raw["checkbox_count"],
            collapsed=raw["collapsed"],
        )


@dataclass(frozen=True)
class ChapterRendering:
    chapter_id: str
    title: str
    one_liner: str
    star_count: int
    checkbox_count: int
    collapsed: bool
    rolling_notes: tuple[RollingNote, ...] | None = None
    utterance_refs: dict[str, list[tuple[int, int]]] | None = None


def chunk_spans(segment: Span, chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[Span]:
    """Sequential chunks of at most ``chunk_size`` utterances covering the segment."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    spans = []
    start = segment.start
    while start <= segment.end:
        end = min(start + chunk_size - 1, segment.end)
        spans.append(Span(start, end))
        start = end + 1
    return spans


def _title_request(text: str, style: str, token_budget: int = 512) -> be.BackendRequest:
    words = text.split()
    max_words = 3 * token_budget // 4
    trimmed = " ".join(words[:max_words])
    return be.BackendRequest(
        capability=be.TITLE,
        focus_text=trimmed,
        context_text=trimmed,
        token_budget=token_budget,
        style=style,
    )


def _chunk_summary(t: Transcript, chunk: Span, backend, token_budget: int) -> str:
    focus = span_text(t, chunk, with_speakers=True)
    context = span_text(t, chunk)
    if estimate_tokens(context) > token_budget:
        context = " ".join(context.split()[: 3 * token_budget // 4])
    req = be.BackendRequest(
        capability=be.REWRITE,
        focus_text=focus,
        context_text=context,
        token_budget=token_budget,
    )
    try:
        text = (backend.invoke(req).text or "").strip()
    except be.BackendFailure as exc:
        logger.warning("rolling-note rewrite failed for %s: %s", chunk, exc)
        text = ""
    return text or t[chunk.start].text


def _live_anchor_counts(notes: list[Note], segment: Span) -> tuple[int, int]:
    stars = sum(1 for n in notes if not n.deleted and n.kind == KEY_POINT and n.anchor.start in segment)
    boxes = sum(1 for n in notes if not n.deleted and n.kind == ACTION_ITEM and n.anchor.start in segment)
    return stars, boxes


def build_chapters(
    t: Transcript,
    segments: SegmentList,
    notes: list[Note],
    backend,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> list[Chapter]:
    """One chapter per segment, with rolling notes, markers, and timespans.

    A backend failure on the title degrades the chapter to a fallback
    title and a raw-extract one-liner instead of aborting the pipeline.
    All chapters except the first start collapsed.
    """
    if not segments_are_partition(segments, len(t)):
        raise ValueError("segments must partition the transcript")
    chapters: list[Chapter] = []
    for seg_idx, (seg_start, seg_end) in enumerate(segments):
        segment = Span(seg_start, seg_end)
        chapter_id = f"ch-{seg_idx}"
        plain = span_text(t, segment)
        try:
            title = (backend.invoke(_title_request(plain, be.STYLE_TITLE)).text or "").strip()
            one_liner = (backend.invoke(_title_request(plain, be.STYLE_SENTENCE)).text or "").strip()
            if not title:
                raise be.BackendFailure("malformed_response", "blank title")
        except be.BackendFailure as exc:
            logger.warning("title generation failed for %s: %s", chapter_id, exc)
            title = FALLBACK_TITLE
            one_liner = t[seg_start].text
        rolling = []
        for j, chunk in enumerate(chunk_spans(segment, chunk_size)):
            markers = tuple(
                n.note_id for n in notes if not n.deleted and n.anchor.start in chunk
            )
            rolling.append(
                RollingNote(
                    rolling_id=f"{chapter_id}-rn-{j}",
                    span=chunk,
                    summary=_chunk_summary(t, chunk, backend, token_budget=512),
                    markers=markers,
                )
            )
        stars, boxes = _live_anchor_counts(notes, segment)
        first, last = t[seg_start], t[seg_end]
        chapters.append(
            Chapter(
                chapter_id=chapter_id,
                range=segment,
                title=title,
                one_liner=one_liner,
                timespan=(first.start, last.end if last.end is not None else last.start),
                rolling_notes=tuple(rolling),
                star_count=stars,
                checkbox_count=boxes,
                collapsed=seg_idx != 0,
            )
        )
    return chapters


def refresh_markers(chapters: tuple[Chapter, ...] | list[Chapter], notes: list[Note]) -> tuple[Chapter, ...]:
    """Recompute marker ids and star/checkbox counts against live notes."""
    refreshed = []
    for ch in chapters:
        stars, boxes = _live_anchor_counts(notes, ch.range)
        rolling = tuple(
            replace(
                rn,
                markers=tuple(n.note_id for n in notes if not n.deleted and n.anchor.start in rn.span),
            )
            for rn in ch.rolling_notes
        )
        refreshed.append(replace(ch, star_count=stars, checkbox_count=boxes, rolling_notes=rolling))
    return tuple(refreshed)


def expand_chapter(ch: Chapter, level: str, transcript: Transcript | None = None) -> ChapterRendering:
    """Render a chapter at the requested detail level.

    ``transcript_linked`` adds per-rolling-note utterance references
    (index, start-ms) and requires the transcript. Any level beyond
    title-only uncollapses the rendering.
    """
    if level not in (TITLE_ONLY, NOTES, TRANSCRIPT_LINKED):
        raise ValueError(f"unknown expansion level {level!r}")
    rendering = ChapterRendering(
        chapter_id=ch.chapter_id,
        title=ch.title,
        one_liner=ch.one_liner,
        star_count=ch.star_count,
        checkbox_count=ch.checkbox_count,
        collapsed=ch.collapsed if level == TITLE_ONLY else False,
    )
    if level == TITLE_ONLY:
        return rendering
    rendering = replace(rendering, rolling_notes=ch.rolling_notes)
    if level == TRANSCRIPT_LINKED:
        if transcript is None:
            raise ValueError("transcript_linked rendering requires the transcript")
        refs = {
            rn.rolling_id: [
                (i, transcript[i].start) for i in range(rn.span.start, rn.span.end + 1)
            ]
            for rn in ch.rolling_notes
        }
        rendering = replace(rendering, utterance_refs=refs)
    return rendering
