"""Shared configuration for the CLI and the HTTP service (YAML file)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backend import BackendPolicy
from .chapters import DEFAULT_CHUNK_SIZE
from .feedback import TrainingWeights
from .highlights import HighlightsConfig
from .pipeline import PipelineConfig
from .segmentation import SegmentationConfig

DEFAULT_MAX_BODY_BYTES = 10 * 1024 * 1024
SYNC_UTTERANCE_CUTOFF = 200


@dataclass(frozen=True)
class AppConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES
    sync_utterance_cutoff: int = SYNC_UTTERANCE_CUTOFF
    data_dir: str | None = None
    backend_kind: str = "stub"
    auth_token: str | None = None
    backend_policy: BackendPolicy = field(default_factory=BackendPolicy)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    training_weights: TrainingWeights = field(default_factory=TrainingWeights)


def _subconfig(cls, raw: dict | None):
    return cls(**raw) if raw else cls()


def load_config(path: str | Path | None) -> AppConfig:
    """Load an AppConfig from YAML; missing file or keys fall back to defaults."""
    if path is None:
        return AppConfig()
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    pipeline_raw = raw.get("pipeline", {}) or {}
    pipeline = PipelineConfig(
        segmentation=_subconfig(SegmentationConfig, pipeline_raw.get("segmentation")),
        highlights=_subconfig(HighlightsConfig, pipeline_raw.get("highlights")),
        chunk_size=pipeline_raw.get("chunk_size", DEFAULT_CHUNK_SIZE),
        cohesion_block_utterances=pipeline_raw.get("cohesion_block_utterances", 6),
    )
    return AppConfig(
        host=raw.get("host", "127.0.0.1"),
        port=raw.get("port", 8080),
        max_body_bytes=raw.get("max_body_bytes", DEFAULT_MAX_BODY_BYTES),
        sync_utterance_cutoff=raw.get("sync_utterance_cutoff", SYNC_UTTERANCE_CUTOFF),
        data_dir=raw.get("data_dir"),
        backend_kind=raw.get("backend", "stub"),
        auth_token=raw.get("auth_token"),
        backend_policy=_subconfig(BackendPolicy, raw.get("backend_policy")),
        pipeline=pipeline,
        training_weights=_subconfig(TrainingWeights, raw.get("training_weights")),
    )
