"""Zero-padding and resize geometry."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from a3r_sidecar import InputError, load_image, pad_to_square, preprocess
from sidecar_helpers import make_png


def test_portrait_pads_to_long_side_centered():
    img = Image.new("RGB", (100, 200), (200, 10, 10))
    padded = pad_to_square(img)
    assert padded.size == (200, 200)
    arr = np.asarray(padded)
    assert np.all(arr[:, :50] == 0)          # left margin zero on all channels
    assert np.all(arr[:, 150:] == 0)         # right margin
    assert np.all(arr[:, 50:150] == (200, 10, 10))


def test_landscape_pads_rows():
    img = Image.new("RGB", (40, 10), (1, 2, 3))
    padded = pad_to_square(img)
    assert padded.size == (40, 40)
    arr = np.asarray(padded)
    assert np.all(arr[:15] == 0) and np.all(arr[25:] == 0)
    assert np.all(arr[15:25] == (1, 2, 3))


def test_square_input_is_unchanged():
    rng = np.random.default_rng(2)
    arr = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    img = Image.fromarray(arr)
    assert np.array_equal(np.asarray(pad_to_square(img)), arr)


def test_odd_margin_splits_floor_first():
    img = Image.new("RGB", (3, 6), (9, 9, 9))
    arr = np.asarray(pad_to_square(img))
    # 3 columns of content on a 6-wide canvas: margin 3 -> 1 left, 2 right
    assert np.all(arr[:, 0] == 0)
    assert np.all(arr[:, 1:4] == 9)
    assert np.all(arr[:, 4:] == 0)


def test_preprocess_shape_and_range(tmp_path):
    make_png(tmp_path / "x.png", 50, 120, seed=3)
    pixels = preprocess(load_image(tmp_path / "x.png"))
    assert pixels.shape == (224, 224, 3)
    assert pixels.dtype == np.float32
    assert float(pixels.min()) >= 0.0 and float(pixels.max()) <= 1.0


def test_load_image_rejects_undecodable(tmp_path):
    path = tmp_path / "broken.png"
    path.write_bytes(b"definitely not a png")
    with pytest.raises(InputError, match="broken.png"):
        load_image(path)
