"""Transcript parsing and token-budget arithmetic.

Accepts WebVTT, SRT, and plain ``Speaker: text`` dialogue files and turns
them into a canonical, immutable utterance sequence. Every downstream
stage sizes its model inputs with the word-count token estimate defined
here (1 word = 4/3 tokens).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction

# ASR streams often split one sentence across adjacent captions; merge
# consecutive same-speaker lines when the timestamp gap is at most this.
SAME_SPEAKER_MERGE_GAP_MS = 2000

PLAIN_SPEAKER = "plain_speaker"
SRT = "srt"
WEBVTT = "webvtt"

SOURCE_FORMATS = (PLAIN_SPEAKER, SRT, WEBVTT)

# Speaker label for cues that carry no voice tag or "Name:" prefix.
DEFAULT_SPEAKER = "Speaker"


class MalformedInput(ValueError):
    """Input bytes are undecodable or contain no parseable dialogue line."""


class EmptyTranscript(ValueError):
    """Parsing produced zero utterances; callers skip the pipeline."""


class IndexOutOfRange(IndexError):
    """An utterance index fell outside the transcript."""


@dataclass(frozen=True)
class Span:
    """Inclusive range of utterance indices ``[start, end]``."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, index: int) -> bool:
        return self.start <= index <= self.end

    def contains_span(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def to_json(self) -> list[int]:
        return [self.start, self.end]

    @classmethod
    def from_json(cls, raw: list) -> "Span":
        return cls(int(raw[0]), int(raw[1]))


@dataclass(frozen=True)
class Utterance:
    """One continuous spoken unit by a single speaker.

    ``start``/``end`` are milliseconds from the meeting start; ``end`` is
    None for formats that carry no cue end time. ``word_count`` is the
    number of whitespace-delimited tokens of ``text``.
    """

    index: int
    speaker: str
    start: int
    end: int | None
    text: str
    word_count: int

    @classmethod
    def make(cls, index: int, speaker: str, start: int, end: int | None, text: str) -> "Utterance":
        text = text.strip()
        if not text:
            raise ValueError("utterance text must be non-empty")
        return cls(
            index=index,
            speaker=speaker.strip(),
            start=start,
            end=end,
            text=text,
            word_count=len(text.split()),
        )


@dataclass(frozen=True)
class Transcript:
    meeting_id: str
    utterances: tuple[Utterance, ...]
    source_format: str

    def __len__(self) -> int:
        return len(self.utterances)

    def __getitem__(self, index: int) -> Utterance:
        return self.utterances[index]

    def speakers(self) -> list[str]:
        seen: list[str] = []
        for u in self.utterances:
            if u.speaker not in seen:
                seen.append(u.speaker)
        return seen


@dataclass(frozen=True)
class TokenBudget:
    """The fixed word↔token exchange rate used for all context sizing.

    The ratio is stored as an exact rational (4/3 tokens per word) so
    budget arithmetic never drifts; 8 words is the nominal utterance
    length used when reasoning about window sizes.
    """

    tokens_per_word: Fraction = Fraction(4, 3)
    words_per_utterance_nominal: int = 8

    def __post_init__(self) -> None:
        if self.tokens_per_word != Fraction(4, 3):
            raise ValueError("tokens_per_word is fixed at 4/3")

    def tokens_for_words(self, word_count: int) -> int:
        return math.ceil(word_count * self.tokens_per_word)


def estimate_tokens(text: str) -> int:
    """Estimate the model-token cost of ``text``: ceil(words × 4/3).

    Pure word-count arithmetic, deliberately conservative (ceil) so a
    budgeted context never overflows a model window.
    """
    return tokens_for_word_count(len(text.split()))


def tokens_for_word_count(word_count: int) -> int:
    # Integer form of ceil(4w / 3).
    return -(-4 * word_count // 3)


def span_word_count(t: Transcript, span: Span) -> int:
    return sum(t[i].word_count for i in range(span.start, span.end + 1))


def span_tokens(t: Transcript, span: Span) -> int:
    """Token estimate for the concatenated text of a span (single ceil)."""
    return tokens_for_word_count(span_word_count(t, span))


def context_window(t: Transcript, center: int, token_budget: int) -> Span:
    """Grow the largest contiguous span around ``center`` within budget.

    Growth alternates one utterance before / one after, preferring the
    "before" side on ties. A side that cannot grow (transcript edge or
    budget) is skipped; growth stops when neither side fits. The span
    always contains ``center``, even if that utterance alone exceeds the
    budget.
    """
    n = len(t)
    if center < 0 or center >= n:
        raise IndexOutOfRange(f"center {center} outside transcript of length {n}")
    lo = hi = center
    words = t[center].word_count
    added_before = added_after = 0
    while True:
        prefer_before = added_before <= added_after
        grew = False
        for before in (prefer_before, not prefer_before):
            if before and lo > 0:
                candidate = words + t[lo - 1].word_count
                if tokens_for_word_count(candidate) <= token_budget:
                    lo -= 1
                    words = candidate
                    added_before += 1
                    grew = True
                    break
            elif not before and hi < n - 1:
                candidate = words + t[hi + 1].word_count
                if tokens_for_word_count(candidate) <= token_budget:
                    hi += 1
                    words = candidate
                    added_after += 1
                    grew = True
                    break
        if not grew:
            return Span(lo, hi)


def span_text(t: Transcript, span: Span, with_speakers: bool = False) -> str:
    """Newline-joined text of a span.

    Without speaker labels the word count equals the sum of the span's
    utterance word counts, so ``context_window`` budgets hold exactly.
    """
    lines = []
    for i in range(span.start, span.end + 1):
        u = t[i]
        lines.append(f"{u.speaker}: {u.text}" if with_speakers else u.text)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_PLAIN_LINE = re.compile(
    r"^\s*(?:\[(?P<h>\d{1,2}):(?P<m>\d{2}):(?P<s>\d{2})\]\s*)?(?P<speaker>[^:\[\]]{1,80}?):\s*(?P<text>\S.*)$"
)
_VTT_TIMESTAMP = re.compile(
    r"(?:(\d{1,2}):)?(\d{2}):(\d{2})[.,](\d{3})"
)
_CUE_TIMING = re.compile(
    r"^\s*(?P<start>[\d:.,]+)\s+-->\s+(?P<end>[\d:.,]+)"
)
_VOICE_TAG = re.compile(r"^<v(?:\.[^ >]*)?\s+(?P<name>[^>]+)>\s*(?P<text>.*)$", re.DOTALL)
# Cue-payload speaker prefix; requires a letter so clock-like text
# ("10:30 kickoff") is not mistaken for a name.
_CUE_SPEAKER = re.compile(r"^(?P<name>[^:\[\]]{1,80}?):\s*(?P<text>\S.*)$", re.DOTALL)


def _parse_clock_ms(token: str) -> int:
    m = _VTT_TIMESTAMP.fullmatch(token.strip())
    if not m:
        raise MalformedInput(f"bad timestamp: {token!r}")
    h = int(m.group(1) or 0)
    return ((h * 60 + int(m.group(2))) * 60 + int(m.group(3))) * 1000 + int(m.group(4))


def _strip_markup(text: str) -> str:
    return re.sub(r"</?[^>]+>", "", text).strip()


def _split_cue_speaker(payload: str) -> tuple[str, str]:
    """Extract a speaker from a cue payload: voice tag first, then ``Name:``."""
    voice = _VOICE_TAG.match(payload)
    if voice:
        return voice.group("name").strip(), _strip_markup(voice.group("text"))
    m = _CUE_SPEAKER.match(payload)
    if m and any(c.isalpha() for c in m.group("name")):
        return m.group("name").strip(), _strip_markup(m.group("text"))
    return DEFAULT_SPEAKER, _strip_markup(payload)


def _sniff_format(text: str) -> str:
    stripped = text.lstrip("﻿\n\r\t ")
    if stripped.startswith("WEBVTT"):
        return WEBVTT
    lines = [ln.strip() for ln in stripped.splitlines() if ln.strip()]
    if len(lines) >= 2 and lines[0].isdigit() and "-->" in lines[1]:
        return SRT
    return PLAIN_SPEAKER


def _parse_plain(text: str) -> list[tuple[str, int, int | None, str]]:
    rows: list[tuple[str, int, int | None, str]] = []
    last_start = 0
    saw_content = False
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        saw_content = True
        m = _PLAIN_LINE.match(line)
        if m:
            if m.group("h") is not None:
                start = (int(m.group("h")) * 3600 + int(m.group("m")) * 60 + int(m.group("s"))) * 1000
                last_start = max(last_start, start)
            rows.append((m.group("speaker").strip(), last_start, None, m.group("text").strip()))
        elif rows:
            # Continuation of the previous speaker's line.
            speaker, start, end, prev = rows[-1]
            rows[-1] = (speaker, start, end, f"{prev} {line}")
    if saw_content and not rows:
        raise MalformedInput("no parseable 'Speaker: text' lines")
    return rows


def _iter_cue_blocks(lines: list[str]) -> list[list[str]]:
    blocks: list[list[str]] = []
    block: list[str] = []
    for line in lines:
        if line.strip():
            block.append(line)
        elif block:
            blocks.append(block)
            block = []
    if block:
        blocks.append(block)
    return blocks


def _parse_cues(text: str, fmt: str) -> list[tuple[str, int, int | None, str]]:
    lines = text.splitlines()
    if fmt == WEBVTT:
        # Drop the header line and everything until the first blank line.
        body_start = 1
        while body_start < len(lines) and lines[body_start].strip():
            body_start += 1
        lines = lines[body_start:]
    rows: list[tuple[str, int, int | None, str]] = []
    for block in _iter_cue_blocks(lines):
        if block[0].strip().upper().startswith("NOTE"):
            continue
        timing_idx = None
        for i, line in enumerate(block[:2]):
            if _CUE_TIMING.match(line):
                timing_idx = i
                break
        if timing_idx is None:
            continue
        timing = _CUE_TIMING.match(block[timing_idx])
        assert timing is not None
        start = _parse_clock_ms(timing.group("start"))
        end = _parse_clock_ms(timing.group("end"))
        payload = " ".join(ln.strip() for ln in block[timing_idx + 1 :]).strip()
        if not payload:
            continue
        speaker, cue_text = _split_cue_speaker(payload)
        if cue_text:
            rows.append((speaker, start, end, cue_text))
    if not rows and any(ln.strip() for ln in lines):
        raise MalformedInput(f"no parseable cues in {fmt} input")
    return rows


def _merge_same_speaker(rows: list[tuple[str, int, int | None, str]]) -> list[tuple[str, int, int | None, str]]:
    merged: list[tuple[str, int, int | None, str]] = []
    for speaker, start, end, text in rows:
        if merged:
            p_speaker, p_start, p_end, p_text = merged[-1]
            gap = start - (p_end if p_end is not None else p_start)
            if speaker == p_speaker and gap <= SAME_SPEAKER_MERGE_GAP_MS:
                merged[-1] = (p_speaker, p_start, end, f"{p_text} {text}")
                continue
        merged.append((speaker, start, end, text))
    return merged


def parse_transcript(
    raw: bytes | str,
    format_hint: str | None = None,
    meeting_id: str = "",
) -> Transcript:
    """Parse raw transcript bytes into a canonical ``Transcript``.

    Raises ``MalformedInput`` for undecodable bytes or inputs with no
    parseable lines, and ``EmptyTranscript`` when zero utterances remain.
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInput(f"input is not valid UTF-8: {exc}") from exc
    else:
        text = raw
    if format_hint is not None and format_hint not in SOURCE_FORMATS:
        raise ValueError(f"unknown format hint {format_hint!r}")
    fmt = format_hint or _sniff_format(text)

    if fmt == PLAIN_SPEAKER:
        rows = _parse_plain(text)
    else:
        rows = _parse_cues(text, fmt)
    if not rows:
        raise EmptyTranscript("transcript has no utterances")

    rows.sort(key=lambda r: r[1])  # stable: ties keep input order
    rows = _merge_same_speaker(rows)
    utterances = tuple(
        Utterance.make(i, speaker, start, end, text)
        for i, (speaker, start, end, text) in enumerate(rows)
    )
    return Transcript(meeting_id=meeting_id, utterances=utterances, source_format=fmt)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _format_clock(ms: int) -> str:
    seconds = ms // 1000
    h, rem = divmod(seconds, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def to_plainspeaker(t: Transcript) -> str:
    """Render as plain dialogue text, one ``[HH:MM:SS] Name: text`` line each.

    For transcripts parsed from plain dialogue (second-resolution starts,
    no ends) this rendering re-parses to an identical Transcript.
    """
    lines = [f"[{_format_clock(u.start)}] {u.speaker}: {u.text}" for u in t.utterances]
    return "\n".join(lines) + "\n"


def canonical_bytes(t: Transcript) -> bytes:
    """Byte-stable structured serialization of every transcript field.

    This is the hashing/persistence form: sorted keys, compact
    separators, UTF-8. Identical transcripts serialize identically on
    any platform.
    """
    doc = {
        "meeting_id": t.meeting_id,
        "source_format": t.source_format,
        "utterances": [
            {
                "index": u.index,
                "speaker": u.speaker,
                "start": u.start,
                "end": u.end,
                "text": u.text,
                "word_count": u.word_count,
            }
            for u in t.utterances
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def from_canonical_bytes(raw: bytes) -> Transcript:
    try:
        doc = json.loads(raw.decode("utf-8"))
        utterances = tuple(
            Utterance(
                index=u["index"],
                speaker=u["speaker"],
                start=u["start"],
                end=u["end"],
                text=u["text"],
                word_count=u["word_count"],
            )
            for u in doc["utterances"]
        )
        return Transcript(
            meeting_id=doc["meeting_id"],
            utterances=utterances,
            source_format=doc["source_format"],
        )
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"bad canonical transcript: {exc}") from exc
