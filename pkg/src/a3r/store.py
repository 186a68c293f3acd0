"""Embedding matrices, sample manifests, and their on-disk formats.

Embedding file layout (bit-exact, little-endian):

    bytes 0..7    ASCII magic ``A3REMB01``
    bytes 8..11   uint32 N (row count)
    bytes 12..15  uint32 D (embedding dimension)
    byte  16      dtype code 0x01 = IEEE-754 binary32 LE
    bytes 17..19  zero padding
    then          N * D * 4 payload bytes, row-major

Manifests are UTF-8 JSON lines, one record per line, aligned with the
companion matrix by row index.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from .errors import (
    CorruptionError,
    DataError,
    DegenerateRowError,
    FormatError,
    ManifestParseError,
    ShapeError,
    ValidationError,
)

MAGIC = b"A3REMB01"
HEADER_LEN = 20
DTYPE_F32LE = 0x01


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """N x D matrix of row embeddings, float32 in memory and on disk."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.ndim != 2:
            raise ShapeError(f"embedding matrix must be 2-D, got {v.ndim}-D")
        if v.shape[1] < 1:
            raise ShapeError("embedding dimension must be >= 1")
        if v.size and not np.isfinite(v).all():
            raise DataError("embedding matrix contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            (self.values == other.values).all()
        )


def l2_normalize(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit Euclidean norm.

    Rows with norm below 1e-12 are rejected: a zero embedding would poison
    cosine similarity downstream, so it is an error rather than a skip.
    """
    v = m.values.astype(np.float64)
    norms = np.sqrt((v * v).sum(axis=1))
    bad = np.nonzero(norms < 1e-12)[0]
    if bad.size:
        raise DegenerateRowError(int(bad[0]), float(norms[bad[0]]))
    return EmbeddingMatrix(v / norms[:, None])


def save_embeddings(m: EmbeddingMatrix, path) -> None:
    """Write ``m`` in the binary format above; overwrite atomically."""
    header = MAGIC + struct.pack("<IIB3x", m.rows, m.dim, DTYPE_F32LE)
    payload = np.ascontiguousarray(m.values, dtype="<f4").tobytes()
    _atomic_write_bytes(path, header + payload)


def load_embeddings(path) -> EmbeddingMatrix:
    """Read an embedding file, validating header, size, and finiteness."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:8]!r}, expected {MAGIC!r}")
    if len(blob) < HEADER_LEN:
        raise CorruptionError(f"{path}: truncated header ({len(blob)} bytes)")
    n, d = struct.unpack_from("<II", blob, 8)
    if blob[16] != DTYPE_F32LE:
        raise FormatError(f"{path}: unsupported dtype code 0x{blob[16]:02x}")
    if blob[17:20] != b"\x00\x00\x00":
        raise FormatError(f"{path}: nonzero header padding")
    if d < 1:
        raise FormatError(f"{path}: dimension must be >= 1, got {d}")
    expected = HEADER_LEN + 4 * n * d
    if len(blob) != expected:
        raise CorruptionError(
            f"{path}: file size {len(blob)} != expected {expected} for {n}x{d}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=HEADER_LEN).reshape(n, d)
    if data.size and not np.isfinite(data).all():
        raise DataError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(data.copy())


@dataclass(frozen=True)
class SampleRecord:
    """One retrieval sample: id plus optional text, image path, attributes, label."""

    id: str
    text: Optional[str] = None
    image: Optional[str] = None
    attributes: dict = field(default_factory=dict)
    label: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "image": self.image,
            "attributes": dict(self.attributes),
            "label": self.label,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SampleRecord":
        if not isinstance(obj, dict):
            raise ValidationError(f"record must be an object, got {type(obj).__name__}")
        rid = obj.get("id")
        if not isinstance(rid, str) or not rid:
            raise ValidationError(f"record id must be a non-empty string, got {rid!r}")
        for key in ("text", "image", "label"):
            val = obj.get(key)
            if val is not None and not isinstance(val, str):
                raise ValidationError(f"record {rid!r}: {key} must be string or null")
        attrs = obj.get("attributes") or {}
        if not isinstance(attrs, dict):
            raise ValidationError(f"record {rid!r}: attributes must be an object")
        for slot, val in attrs.items():
            if val is not None and not isinstance(val, str):
                raise ValidationError(
                    f"record {rid!r}: attribute {slot!r} must be string or null"
                )
        return cls(
            id=rid,
            text=obj.get("text"),
            image=obj.get("image"),
            attributes=dict(attrs),
            label=obj.get("label"),
        )

    def with_attributes(self, text: str, attributes: dict) -> "SampleRecord":
        return replace(self, text=text, attributes=dict(attributes))


@dataclass(frozen=True)
class Manifest:
    """Ordered sample records; row i aligns with matrix row i when paired."""

    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SampleRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> SampleRecord:
        return self.records[i]

    @property
    def ids(self) -> list:
        return [rec.id for rec in self.records]


def load_manifest(path) -> Manifest:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(path, line_no, exc.msg) from exc
            records.append(SampleRecord.from_json(obj))
    return Manifest(tuple(records))


def save_manifest(manifest: Manifest, path) -> None:
    lines = [json.dumps(rec.to_json(), ensure_ascii=False) for rec in manifest]
    text = "".join(line + "\n" for line in lines)
    _atomic_write_bytes(path, text.encode("utf-8"))


def check_aligned(matrix: EmbeddingMatrix, manifest: Manifest, what: str = "input") -> None:
    if matrix.rows != len(manifest):
        raise ValidationError(
            f"{what}: matrix has {matrix.rows} rows but manifest has "
            f"{len(manifest)} records"
        )


def _atomic_write_bytes(path, blob: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".a3r-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
