"""Writers and readers for the embedding interchange files.

This module is written against the published file contracts only — an
8-byte ``A3REMB01`` magic, little-endian u32 row/dim counts, a dtype byte
(0x01 = float32 LE) plus three zero pad bytes, then the row-major payload —
and against manifests as JSON-lines records. It shares no code with the
consumer engine; conformance is proven by the test suite loading these
files there.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import InputError

MAGIC = b"A3REMB01"
DTYPE_F32LE = 0x01


def _atomic_write(path, blob: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sidecar-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_embeddings(rows: np.ndarray, path) -> int:
    """Write a float32 matrix in the interchange format; returns rows written."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise InputError(f"embedding matrix must be 2-D, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise InputError("embedding matrix contains non-finite values")
    n, d = rows.shape
    header = MAGIC + struct.pack("<IIB3x", n, d, DTYPE_F32LE)
    _atomic_write(path, header + rows.tobytes())
    return n


def read_embeddings(path) -> np.ndarray:
    """Load an interchange file back (used for self-checks only)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC or len(blob) < 20:
        raise InputError(f"{path}: not an embedding interchange file")
    n, d, dtype = struct.unpack_from("<IIB", blob, 8)
    if dtype != DTYPE_F32LE or len(blob) != 20 + 4 * n * d:
        raise InputError(f"{path}: malformed embedding file")
    return np.frombuffer(blob, dtype="<f4", offset=20).reshape(n, d).copy()


@dataclass(frozen=True)
class ManifestRecord:
    """The subset of manifest fields the sidecar consumes."""

    id: str
    text: Optional[str] = None
    image: Optional[str] = None
    raw: dict = None

    def to_json_line(self) -> str:
        return json.dumps(self.raw, separators=(", ", ": "))


def read_manifest(path) -> List[ManifestRecord]:
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: invalid JSON ({exc.msg})")
            rid = obj.get("id")
            if not isinstance(rid, str) or not rid:
                raise InputError(f"{path}:{line_no}: record needs a non-empty id")
            if rid in seen:
                raise InputError(f"{path}:{line_no}: duplicate id {rid!r}")
            seen.add(rid)
            text = obj.get("text")
            image = obj.get("image")
            records.append(ManifestRecord(id=rid, text=text, image=image, raw=obj))
    return records


def write_manifest(records, path) -> None:
    lines = [rec.to_json_line() for rec in records]
    blob = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    _atomic_write(path, blob)


def write_report(entries, path) -> None:
    """Sidecar report: one JSON object per skipped/flagged row."""
    lines = [json.dumps(entry, separators=(", ", ": ")) for entry in entries]
    blob = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    _atomic_write(path, blob)
