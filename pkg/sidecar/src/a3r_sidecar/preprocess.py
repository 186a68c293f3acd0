"""Image preparation: centered zero-padding to square, then a fixed resize.

The pad-and-resize step always runs first; whatever per-checkpoint pixel
normalization an encoder wants is applied afterwards, inside the encoder.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import InputError

TARGET_SIZE = 224


def pad_to_square(image: Image.Image) -> Image.Image:
    """Center the image on a square canvas of zeros (all channels)."""
    w, h = image.size
    side = max(w, h)
    canvas = Image.new("RGB", (side, side), (0, 0, 0))
    canvas.paste(image.convert("RGB"), ((side - w) // 2, (side - h) // 2))
    return canvas


def load_image(path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}")


def preprocess(image: Image.Image, size: int = TARGET_SIZE) -> np.ndarray:
    """Padded, resized pixel array of shape (size, size, 3), float32 in [0, 1]."""
    padded = pad_to_square(image)
    resized = padded.resize((size, size), Image.BILINEAR)
    return np.asarray(resized, dtype=np.float32) / 255.0
