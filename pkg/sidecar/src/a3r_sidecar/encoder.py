"""Dual-encoder sessions behind a checkpoint descriptor.

The default checkpoint is ``builtin:hash``: a deterministic feature-hash
dual encoder that needs no weights, no network, and no accelerator, so the
sidecar is fully testable offline. File checkpoints are JSON descriptors
``{"kind": "hash", "dim": D, "seed": S}`` selecting the same family with a
different output dimension and projection; a heavier model would slot in
behind the same session interface.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import ConfigError
from .preprocess import preprocess

DEFAULT_CHECKPOINT = "builtin:hash"
_BUILTIN = {"builtin:hash": {"kind": "hash", "dim": 64, "seed": 20240801}}
_GRID = 4  # pooling grid for image features
_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Checkpoint:
    """Resolved checkpoint descriptor."""

    name: str
    kind: str
    dim: int
    seed: int


def load_checkpoint(source: str) -> Checkpoint:
    """Resolve a checkpoint name or descriptor-file path."""
    if source in _BUILTIN:
        desc = _BUILTIN[source]
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                desc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"checkpoint {source}: invalid JSON ({exc.msg})")
        if not isinstance(desc, dict):
            raise ConfigError(f"checkpoint {source}: descriptor must be an object")
    kind = desc.get("kind")
    dim = desc.get("dim")
    seed = desc.get("seed")
    if kind != "hash":
        raise ConfigError(f"checkpoint {source}: unsupported kind {kind!r}")
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError(f"checkpoint {source}: dim must be a positive integer")
    if not isinstance(seed, int):
        raise ConfigError(f"checkpoint {source}: seed must be an integer")
    return Checkpoint(name=source, kind=kind, dim=dim, seed=seed)


def _token_vector(text: str, dim: int) -> np.ndarray:
    """Signed feature hashing of the token bag; '' hashes as its own token
    so every text, including the empty string, maps to a nonzero vector."""
    tokens = _TOKEN.findall(text.lower()) or [""]
    vec = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        digest = hashlib.sha256(tok.encode("utf-8")).digest()
        idx = int.from_bytes(digest[:4], "little") % dim
        sign = 1.0 if digest[4] & 1 else -1.0
        vec[idx] += sign
    return vec


def _image_features(pixels: np.ndarray) -> np.ndarray:
    """Grid-pooled channel statistics plus a bias term (always nonzero)."""
    size = pixels.shape[0]
    step = size // _GRID
    blocks = pixels[: step * _GRID, : step * _GRID, :].reshape(
        _GRID, step, _GRID, step, 3
    )
    means = blocks.mean(axis=(1, 3)).reshape(-1)
    stds = blocks.std(axis=(1, 3)).reshape(-1)
    return np.concatenate(([1.0], means, stds))


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.sqrt((rows.astype(np.float64) ** 2).sum(axis=1, keepdims=True))
    if np.any(norms < 1e-12):
        raise ConfigError("encoder produced a zero row; checkpoint is degenerate")
    return (rows / norms).astype(np.float32)


class EncoderSession:
    """One loaded dual encoder: shared output dimension for images and texts."""

    def __init__(self, checkpoint: str = DEFAULT_CHECKPOINT, device: str = "cpu",
                 batch_size: int = 32):
        if device != "cpu":
            raise ConfigError(f"device {device!r} not available for this checkpoint")
        if batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {batch_size}")
        self.checkpoint = load_checkpoint(checkpoint)
        self.device = device
        self.batch_size = batch_size
        rng = np.random.default_rng(self.checkpoint.seed)
        n_features = 1 + 2 * 3 * _GRID * _GRID
        self._image_proj = rng.normal(size=(n_features, self.checkpoint.dim))

    @property
    def dim(self) -> int:
        """Output dimension, discovered from the loaded checkpoint."""
        return self.checkpoint.dim

    def _batches(self, items: Sequence):
        for start in range(0, len(items), self.batch_size):
            yield items[start:start + self.batch_size]

    def encode_images(self, images: List) -> np.ndarray:
        """Unit-norm rows for PIL images, in input order."""
        if not images:
            return np.zeros((0, self.dim), dtype=np.float32)
        rows = []
        for batch in self._batches(images):
            feats = np.stack([_image_features(preprocess(img)) for img in batch])
            rows.append(feats @ self._image_proj)
        return _normalize_rows(np.concatenate(rows))

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Unit-norm rows for texts, in input order."""
        if not len(texts):
            return np.zeros((0, self.dim), dtype=np.float32)
        rows = []
        for batch in self._batches(list(texts)):
            rows.append(np.stack([_token_vector(t, self.dim) for t in batch]))
        return _normalize_rows(np.concatenate(rows))
