"""Meeting recap toolkit: highlights and hierarchical recaps from transcripts."""

__version__ = "0.1.0"

from .transcript import Transcript, Utterance, parse_transcript  # noqa: F401
from .pipeline import PipelineConfig, run_pipeline  # noqa: F401
