"""Plain-importable helpers for the sidecar suite: tiny PNG factories and manifests."""

from __future__ import annotations

import json

import numpy as np
from PIL import Image


def make_png(path, width: int, height: int, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)


def write_manifest_lines(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
