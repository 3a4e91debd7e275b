"""Offline feature extraction for the zsaction engine.

Wraps pretrained providers (object recognizer, sentence embedder,
caption models, definition lookup) behind narrow adapters and emits
workspace files in the engine's bit-exact formats.
"""

__version__ = "0.1.0"

from .adapters import (CaptionProvider, DefinitionSource, FrameStatRecognizer,
                       HashingSentenceEmbedder, ObjectRecognizer,
                       SentenceEmbedder, SilentCaptioner,
                       StaticDefinitionSource, TemplateCaptioner)
from .formats import ExtractionError, write_manifest, write_matrix
from .frames import probe_duration, sample_frames
from .jobs import (ExtractionJob, VideoResult, build_vocabularies,
                   extract_captions, extract_object_logits, run_job)

__all__ = [
    "CaptionProvider", "DefinitionSource", "ExtractionError", "ExtractionJob",
    "FrameStatRecognizer", "HashingSentenceEmbedder", "ObjectRecognizer",
    "SentenceEmbedder", "SilentCaptioner", "StaticDefinitionSource",
    "TemplateCaptioner", "VideoResult", "build_vocabularies",
    "extract_captions", "extract_object_logits", "probe_duration", "run_job",
    "sample_frames", "write_manifest", "write_matrix",
]
