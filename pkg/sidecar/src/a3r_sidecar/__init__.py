"""Embedding export sidecar for the retrieval re-ranking engine.

Encodes images and texts with a configurable dual encoder into the
``A3REMB01`` interchange format, and serves line-delimited JSON embedding
requests over stdio so the engine's augmentation stage can call a live
encoder.
"""

from .encoder import DEFAULT_CHECKPOINT, Checkpoint, EncoderSession, load_checkpoint
from .errors import ConfigError, InputError, SidecarError
from .preprocess import TARGET_SIZE, load_image, pad_to_square, preprocess
from .store import (
    ManifestRecord,
    read_embeddings,
    read_manifest,
    write_embeddings,
    write_manifest,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "ConfigError",
    "DEFAULT_CHECKPOINT",
    "EncoderSession",
    "InputError",
    "ManifestRecord",
    "SidecarError",
    "TARGET_SIZE",
    "load_checkpoint",
    "load_image",
    "pad_to_square",
    "preprocess",
    "read_embeddings",
    "read_manifest",
    "write_embeddings",
    "write_manifest",
    "write_report",
]
