"""End-to-end recap generation: transcript in, version-1 document out."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from . import chapters as ch
from . import highlights as hl
from . import segmentation as seg
from .backend import BackendRequest, BackendResponse, CLASSIFY
from .recapdoc import RecapDocument, assemble
from .transcript import Span, Transcript, span_text


@dataclass(frozen=True)
class PipelineConfig:
    segmentation: seg.SegmentationConfig = field(default_factory=seg.SegmentationConfig)
    highlights: hl.HighlightsConfig = field(default_factory=hl.HighlightsConfig)
    chunk_size: int = ch.DEFAULT_CHUNK_SIZE
    cohesion_block_utterances: int = 6

    def snapshot(self) -> dict:
        return {
            "segmentation": asdict(self.segmentation),
            "highlights": asdict(self.highlights),
            "chunk_size": self.chunk_size,
            "cohesion_block_utterances": self.cohesion_block_utterances,
        }


class RemoteBoundaryScorer:
    """Window scorer backed by the model service's classify capability.

    Remote boundary models answer in the classify wire shape; by adapter
    convention the boundary probability rides in the ``key_point`` slot.
    """

    def __init__(self, backend, token_budget: int = 512):
        self.backend = backend
        self.token_budget = token_budget

    def score_window(self, t: Transcript, start: int, end: int) -> list[float]:
        context = span_text(t, Span(start, min(end, len(t) - 1)))
        if len(context.split()) > 3 * self.token_budget // 4:
            context = " ".join(context.split()[: 3 * self.token_budget // 4])
        scores = []
        for i in range(start, end + 1):
            u = t[i]
            req = BackendRequest(
                capability=CLASSIFY,
                focus_text=f"{u.speaker}: {u.text}",
                context_text=context,
                token_budget=self.token_budget,
            )
            resp: BackendResponse = self.backend.invoke(req)
            scores.append(resp.key_point if resp.key_point is not None else 0.0)
        return scores


def run_pipeline(
    t: Transcript,
    backend,
    config: PipelineConfig | None = None,
    scorer=None,
    created_at: str | None = None,
) -> RecapDocument:
    """Segment, highlight, chapterize, and assemble a version-1 document.

    Deterministic with the stub backend; ``created_at`` defaults to None
    so batch output is byte-identical across runs (the service stamps
    real time).
    """
    config = config or PipelineConfig()
    if scorer is None:
        scorer = seg.LexicalCohesionScorer(config.cohesion_block_utterances)
    segments = seg.segment_transcript(t, config.segmentation, scorer)
    view = hl.run_highlights(t, backend, config.highlights)
    chapter_list = ch.build_chapters(
        t, segments, list(view.all_notes()), backend, chunk_size=config.chunk_size
    )
    return assemble(t, view, chapter_list, config.snapshot(), created_at=created_at)
