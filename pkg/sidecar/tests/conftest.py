"""Shared fixtures for the sidecar suite."""

from __future__ import annotations

import pytest

from sidecar_helpers import make_png, write_manifest_lines


@pytest.fixture
def image_set(tmp_path):
    """Three decodable images of mixed shapes plus their manifest."""
    shapes = [(100, 200), (64, 64), (30, 17)]
    records = []
    for i, (w, h) in enumerate(shapes):
        path = tmp_path / f"img{i}.png"
        make_png(path, w, h, seed=i)
        records.append({"id": f"img{i}", "text": None, "image": str(path),
                        "attributes": {}, "label": None})
    manifest = tmp_path / "images.jsonl"
    write_manifest_lines(manifest, records)
    return manifest, records
