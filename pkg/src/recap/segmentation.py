"""Topic segmentation: sliding windows, pluggable boundary scoring, max-pooling.

The skeleton is fixed — overlapping utterance windows, a per-position
boundary score inside each window, per-position max across windows, then
thresholding into contiguous chapters. The score source is pluggable:
the bundled lexical-cohesion scorer (deterministic, default) or a remote
model behind the backend client.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from .transcript import Transcript

# Bundled stop-word list (~150 common English function words). Kept small
# and frozen so cohesion scores are reproducible across environments.
STOP_WORDS = frozenset(
    """
    a about above after again against all am an and any are aren't as at be
    because been before being below between both but by can cannot could
    couldn't did didn't do does doesn't doing don't down during each few for
    from further had hadn't has hasn't have haven't having he he'd he'll he's
    her here here's hers herself him himself his how how's i i'd i'll i'm
    i've if in into is isn't it it's its itself let's me more most mustn't my
    myself no nor not of off on once only or other ought our ours ourselves
    out over own same shan't she she'd she'll she's should shouldn't so some
    such than that that's the their theirs them themselves then there there's
    these they they'd they'll they're they've this those through to too under
    until up very was wasn't we we'd we'll we're we've were weren't what
    what's when when's where where's which while who who's whom why why's
    with won't would wouldn't you you'd you'll you're you've your yours
    yourself yourselves
    """.split()
)

_WORD = re.compile(r"[a-z0-9']+")

# Cosine of proportional term vectors is 1.0 only up to float rounding;
# depths below this are noise, not topic shifts.
_DEPTH_EPSILON = 1e-9


class TranscriptTooShort(ValueError):
    """Lexical cohesion needs at least two utterances."""


class UncoveredPosition(ValueError):
    """A transcript position was covered by no score fragment."""


class LengthMismatch(ValueError):
    """Predicted and gold segmentations cover different lengths."""


@dataclass(frozen=True)
class SegmentationConfig:
    window_utterances: int = 30
    stride_utterances: int = 10
    boundary_threshold: float = 0.5
    min_segment_utterances: int = 4

    def __post_init__(self) -> None:
        if not 0 < self.stride_utterances <= self.window_utterances:
            raise ValueError("require 0 < stride_utterances <= window_utterances")
        if not 0.0 <= self.boundary_threshold <= 1.0:
            raise ValueError("boundary_threshold must be in [0, 1]")
        if self.min_segment_utterances < 1:
            raise ValueError("min_segment_utterances must be >= 1")


@dataclass(frozen=True)
class WindowScores:
    """Boundary scores for one window: ``scores[i]`` belongs to position start+i."""

    start: int
    end: int
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.scores) != self.end - self.start + 1:
            raise ValueError("score count must match window length")


class BoundaryScorer(Protocol):
    """Scores "a new segment starts here" for each position of a window."""

    def score_window(self, t: Transcript, start: int, end: int) -> list[float]: ...


SegmentList = list[tuple[int, int]]


def sliding_windows(n: int, cfg: SegmentationConfig) -> list[tuple[int, int]]:
    """Overlapping (start, end) windows covering positions 0..n-1.

    Windows begin at multiples of the stride; the last window is clamped
    to the transcript end and generation stops once the final position is
    covered.
    """
    if n <= 0:
        return []
    windows: list[tuple[int, int]] = []
    start = 0
    while True:
        end = min(start + cfg.window_utterances, n) - 1
        windows.append((start, end))
        if end == n - 1:
            return windows
        start += cfg.stride_utterances


def aggregate_max_pool(fragments: Sequence[WindowScores], n: int) -> list[float]:
    """Per-position maximum over all fragments covering that position.

    Position 0 is forced to 1.0 (a segment always starts at the first
    utterance). Raises ``UncoveredPosition`` if any position has no
    fragment.
    """
    scores: list[float | None] = [None] * n
    for frag in fragments:
        for i, value in enumerate(frag.scores):
            pos = frag.start + i
            if pos < 0 or pos >= n:
                raise UncoveredPosition(f"fragment position {pos} outside 0..{n - 1}")
            current = scores[pos]
            if current is None or value > current:
                scores[pos] = value
    uncovered = [i for i, v in enumerate(scores) if v is None]
    if uncovered:
        raise UncoveredPosition(f"positions {uncovered[:5]} covered by no window")
    result = [float(v) for v in scores]  # type: ignore[arg-type]
    if result:
        result[0] = 1.0
    return result


def scores_to_segments(scores: Sequence[float], cfg: SegmentationConfig) -> SegmentList:
    """Threshold boundary scores into a contiguous partition of 0..n-1.

    A boundary closer than ``min_segment_utterances`` to the previously
    kept boundary is dropped (the earlier boundary wins).
    """
    n = len(scores)
    if n == 0:
        raise ValueError("scores must be non-empty")
    boundaries = [0]
    for pos in range(1, n):
        if scores[pos] >= cfg.boundary_threshold and pos - boundaries[-1] >= cfg.min_segment_utterances:
            boundaries.append(pos)
    segments = [
        (b, (boundaries[i + 1] - 1) if i + 1 < len(boundaries) else n - 1)
        for i, b in enumerate(boundaries)
    ]
    return segments


def segments_are_partition(segments: SegmentList, n: int) -> bool:
    if not segments:
        return n == 0
    if segments[0][0] != 0 or segments[-1][1] != n - 1:
        return False
    for (s1, e1), (s2, _) in zip(segments, segments[1:]):
        if e1 < s1 or s2 != e1 + 1:
            return False
    return segments[-1][1] >= segments[-1][0]


# ---------------------------------------------------------------------------
# Lexical-cohesion scorer (text-tiling)
# ---------------------------------------------------------------------------


def _content_terms(text: str) -> list[str]:
    return [w for w in _WORD.findall(text.lower()) if w not in STOP_WORDS]


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b[term] for term, count in a.items())
    norm = math.sqrt(sum(c * c for c in a.values())) * math.sqrt(sum(c * c for c in b.values()))
    return dot / norm if norm else 0.0


def lexical_cohesion_scores(t: Transcript, block_utterances: int = 6) -> list[float]:
    """Boundary scores from lexical cohesion between adjacent blocks.

    For each gap position i (1..n-1), take the cosine similarity of the
    term-frequency vectors of up to ``block_utterances`` utterances on
    each side. Depth at i is how far the similarity dips below its
    nearest local maxima on both sides; depths are normalized to [0, 1]
    by the transcript-wide maximum. Position 0 is always 1.0.
    """
    n = len(t)
    if n < 2:
        raise TranscriptTooShort("need at least 2 utterances for cohesion scoring")
    terms = [_content_terms(u.text) for u in t.utterances]

    sims: list[float] = []
    for gap in range(1, n):
        left = Counter()
        for i in range(max(0, gap - block_utterances), gap):
            left.update(terms[i])
        right = Counter()
        for i in range(gap, min(n, gap + block_utterances)):
            right.update(terms[i])
        sims.append(_cosine(left, right))

    depths = [0.0] * len(sims)
    for idx, sim in enumerate(sims):
        peak_left = sim
        for j in range(idx - 1, -1, -1):
            if sims[j] >= peak_left:
                peak_left = sims[j]
            else:
                break
        peak_right = sim
        for j in range(idx + 1, len(sims)):
            if sims[j] >= peak_right:
                peak_right = sims[j]
            else:
                break
        depth = (peak_left - sim) + (peak_right - sim)
        depths[idx] = depth if depth >= _DEPTH_EPSILON else 0.0

    max_depth = max(depths) if depths else 0.0
    scores = [0.0] * n
    scores[0] = 1.0
    if max_depth > 0:
        for gap in range(1, n):
            scores[gap] = depths[gap - 1] / max_depth
    return scores


class LexicalCohesionScorer:
    """Default scorer: text-tiling cohesion applied inside each window.

    The sub-transcript's forced 1.0 at its own position 0 is an artifact
    of whole-transcript scoring, so it is zeroed for windows that do not
    start the transcript (max-pooling restores the transcript-level 1.0
    at position 0).
    """

    def __init__(self, block_utterances: int = 6):
        self.block_utterances = block_utterances

    def score_window(self, t: Transcript, start: int, end: int) -> list[float]:
        if end == start:
            return [0.0]
        sub = Transcript(
            meeting_id=t.meeting_id,
            utterances=t.utterances[start : end + 1],
            source_format=t.source_format,
        )
        scores = lexical_cohesion_scores(sub, self.block_utterances)
        scores[0] = 0.0
        return scores


def segment_transcript(
    t: Transcript,
    cfg: SegmentationConfig,
    scorer: BoundaryScorer | None = None,
) -> SegmentList:
    """Full segmentation pass: windows → scorer → max-pool → thresholding."""
    n = len(t)
    scorer = scorer or LexicalCohesionScorer()
    fragments = [
        WindowScores(start, end, tuple(scorer.score_window(t, start, end)))
        for start, end in sliding_windows(n, cfg)
    ]
    pooled = aggregate_max_pool(fragments, n)
    return scores_to_segments(pooled, cfg)


# ---------------------------------------------------------------------------
# Evaluation metrics
# ---------------------------------------------------------------------------


def _boundary_positions(segments: SegmentList) -> set[int]:
    return {start for start, _ in segments}


def _length_of(segments: SegmentList) -> int:
    return segments[-1][1] + 1 if segments else 0


def evaluate_segmentation(
    predicted: SegmentList,
    gold: SegmentList,
    k: int | None = None,
) -> dict[str, float]:
    """Pk and WindowDiff for a predicted segmentation (0 = perfect).

    ``k`` defaults to half the mean gold segment length. Both metrics
    slide a probe of width k over positions 0..n-k-1; Pk counts probes
    whose endpoints disagree on same-segment membership, WindowDiff
    counts probes where the number of boundaries inside differs.
    """
    n = _length_of(gold)
    if _length_of(predicted) != n:
        raise LengthMismatch(f"predicted covers {_length_of(predicted)}, gold covers {n}")
    if k is None:
        k = max(1, round(n / (2 * len(gold))))
    if n <= k:
        return {"pk": 0.0, "window_diff": 0.0}

    def seg_ids(segments: SegmentList) -> list[int]:
        ids = [0] * n
        for seg_idx, (start, end) in enumerate(segments):
            for i in range(start, end + 1):
                ids[i] = seg_idx
        return ids

    pred_ids = seg_ids(predicted)
    gold_ids = seg_ids(gold)
    pred_bounds = _boundary_positions(predicted)
    gold_bounds = _boundary_positions(gold)

    pk_errors = 0
    wd_errors = 0
    probes = n - k
    for i in range(probes):
        same_pred = pred_ids[i] == pred_ids[i + k]
        same_gold = gold_ids[i] == gold_ids[i + k]
        if same_pred != same_gold:
            pk_errors += 1
        b_pred = sum(1 for j in range(i + 1, i + k + 1) if j in pred_bounds)
        b_gold = sum(1 for j in range(i + 1, i + k + 1) if j in gold_bounds)
        if b_pred != b_gold:
            wd_errors += 1
    return {"pk": pk_errors / probes, "window_diff": wd_errors / probes}
