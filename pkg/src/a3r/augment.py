"""Zero-shot completion of missing attribute slots.

A record's missing slots (color, brand, type by default) are filled by
exhaustively appending every vocabulary value to the current text, embedding
all candidates, and keeping the one closest to the record's image embedding.
Slots are resolved greedily in vocabulary order, each step conditioning on
the text extended so far; ``joint=True`` instead scores the full cartesian
product of the missing slots in one pass.
"""

from __future__ import annotations

import itertools
import json
import shlex
import subprocess
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ManifestParseError,
    PreconditionError,
    ProviderError,
    ShapeError,
)
from .store import (
    EmbeddingMatrix,
    Manifest,
    SampleRecord,
    check_aligned,
    load_embeddings,
)

DEFAULT_SLOTS = ("color", "brand", "type")


@dataclass(frozen=True)
class AttributeVocabulary:
    """Slot names in fill order, and the finite value list for each slot."""

    slots: tuple
    values: dict

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if not self.slots:
            raise ConfigError("vocabulary must declare at least one slot")
        if len(set(self.slots)) != len(self.slots):
            raise ConfigError("duplicate slot names in vocabulary")
        vals = {}
        for slot in self.slots:
            slot_values = tuple(self.values.get(slot, ()))
            if not slot_values:
                raise ConfigError(f"slot {slot!r} has no values")
            if len(set(slot_values)) != len(slot_values):
                raise ConfigError(f"slot {slot!r} has duplicate values")
            vals[slot] = slot_values
        extra = set(self.values) - set(self.slots)
        if extra:
            raise ConfigError(f"values for undeclared slots: {sorted(extra)}")
        object.__setattr__(self, "values", vals)

    def to_json(self) -> dict:
        return {"slots": list(self.slots), "values": {s: list(v) for s, v in self.values.items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeVocabulary":
        if not isinstance(obj, dict) or "slots" not in obj or "values" not in obj:
            raise ConfigError("vocabulary must be an object with slots and values")
        return cls(slots=tuple(obj["slots"]), values=dict(obj["values"]))


def load_vocabulary(path) -> AttributeVocabulary:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    return AttributeVocabulary.from_json(obj)


class EmbeddingProvider(Protocol):
    """Deterministic text embedder: rows aligned to input order, L2-normalized."""

    def embed_texts(self, texts: Sequence[str]) -> EmbeddingMatrix: ...


def candidate_text(text: str, value: str) -> str:
    """Append one attribute value after the existing text (comma separator)."""
    return f"{text}, {value}"


def missing_slots(record: SampleRecord, vocab: AttributeVocabulary) -> list:
    return [s for s in vocab.slots if record.attributes.get(s) is None]


def generate_candidates(
    record: SampleRecord, vocab: AttributeVocabulary, slot: str
) -> list:
    """One candidate text per vocabulary value of ``slot``, in vocabulary order."""
    if record.text is None:
        raise PreconditionError(f"record {record.id!r} has no text to extend")
    if slot not in vocab.slots:
        raise ConfigError(f"slot {slot!r} not declared by the vocabulary")
    if record.attributes.get(slot) is not None:
        raise PreconditionError(
            f"record {record.id!r}: slot {slot!r} is already filled"
        )
    return [candidate_text(record.text, v) for v in vocab.values[slot]]


def select_best(image_embedding: np.ndarray, candidates: EmbeddingMatrix) -> int:
    """Index of the candidate with the highest dot product; ties -> lowest index."""
    img = np.asarray(image_embedding, dtype=np.float64).reshape(-1)
    if img.shape[0] != candidates.dim:
        raise ShapeError(
            f"image dim {img.shape[0]} != candidate dim {candidates.dim}"
        )
    if candidates.rows < 1:
        raise PreconditionError("need at least one candidate")
    scores = candidates.values.astype(np.float64) @ img
    return int(np.argmax(scores))


def augment_record(
    record: SampleRecord,
    vocab: AttributeVocabulary,
    image_embedding: np.ndarray,
    provider: EmbeddingProvider,
    joint: bool = False,
) -> SampleRecord:
    """Fill every missing slot of ``record``; a record with none is returned as is."""
    missing = missing_slots(record, vocab)
    if not missing:
        return record
    if record.text is None:
        raise PreconditionError(f"record {record.id!r} has no text to extend")
    if joint:
        return _augment_joint(record, vocab, image_embedding, provider, missing)

    text = record.text
    attrs = dict(record.attributes)
    for slot in missing:
        candidates = [candidate_text(text, v) for v in vocab.values[slot]]
        embedded = provider.embed_texts(candidates)
        best = select_best(image_embedding, embedded)
        text = candidates[best]
        attrs[slot] = vocab.values[slot][best]
    return record.with_attributes(text, attrs)


def _augment_joint(record, vocab, image_embedding, provider, missing):
    combos = list(itertools.product(*[vocab.values[s] for s in missing]))
    texts = []
    for combo in combos:
        text = record.text
        for value in combo:
            text = candidate_text(text, value)
        texts.append(text)
    embedded = provider.embed_texts(texts)
    best = select_best(image_embedding, embedded)
    attrs = dict(record.attributes)
    for slot, value in zip(missing, combos[best]):
        attrs[slot] = value
    return record.with_attributes(texts[best], attrs)


def augment_manifest(
    manifest: Manifest,
    vocab: AttributeVocabulary,
    images: EmbeddingMatrix,
    provider: EmbeddingProvider,
    joint: bool = False,
) -> Manifest:
    """Augment every record against its aligned image embedding row."""
    check_aligned(images, manifest, "augment input")
    out = [
        augment_record(rec, vocab, images.row(i), provider, joint=joint)
        for i, rec in enumerate(manifest)
    ]
    return Manifest(tuple(out))


@dataclass(frozen=True)
class FixtureProvider:
    """File-backed provider: a stored matrix plus a text -> row-index lookup."""

    matrix: EmbeddingMatrix
    text_to_row: dict

    def embed_texts(self, texts: Sequence[str]) -> EmbeddingMatrix:
        rows = []
        for text in texts:
            row = self.text_to_row.get(text)
            if row is None:
                raise ProviderError(f"text not in fixture provider: {text!r}")
            rows.append(row)
        if not rows:
            return EmbeddingMatrix(np.zeros((0, self.matrix.dim), dtype=np.float32))
        return EmbeddingMatrix(self.matrix.values[np.asarray(rows, dtype=np.int64)])


def provider_paths(base) -> tuple:
    """Resolve a fixture-provider base path to (matrix path, lookup path).

    Accepts the bare base, the ``.emb`` path, or the ``.jsonl`` path.
    """
    base = str(base)
    for suffix in (".emb", ".jsonl"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
            break
    return base + ".emb", base + ".jsonl"


def load_fixture_provider(base) -> FixtureProvider:
    emb_path, lookup_path = provider_paths(base)
    matrix = load_embeddings(emb_path)
    lookup = {}
    with open(lookup_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(lookup_path, line_no, exc.msg) from exc
            text, row = obj.get("text"), obj.get("row")
            if not isinstance(text, str) or not isinstance(row, int):
                raise ManifestParseError(
                    lookup_path, line_no, "expected {'text': str, 'row': int}"
                )
            if not (0 <= row < matrix.rows):
                raise ManifestParseError(
                    lookup_path, line_no, f"row {row} out of range for {matrix.rows} rows"
                )
            if text in lookup:
                raise ManifestParseError(lookup_path, line_no, f"duplicate text {text!r}")
            lookup[text] = row
    return FixtureProvider(matrix=matrix, text_to_row=lookup)


def save_fixture_provider(matrix: EmbeddingMatrix, text_to_row: dict, base) -> None:
    from .store import _atomic_write_bytes, save_embeddings

    emb_path, lookup_path = provider_paths(base)
    save_embeddings(matrix, emb_path)
    lines = "".join(
        json.dumps({"text": t, "row": r}, ensure_ascii=False) + "\n"
        for t, r in text_to_row.items()
    )
    _atomic_write_bytes(lookup_path, lines.encode("utf-8"))


class SubprocessProvider:
    """Provider backed by a child process speaking line-delimited JSON.

    Request:  {"texts": [str, ...]}\\n
    Response: {"dim": D, "rows": [[...], ...]}\\n  or  {"error": "..."}\\n
    """

    def __init__(self, command: str):
        self._command = command
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProviderError(f"cannot start provider {command!r}: {exc}") from exc

    def embed_texts(self, texts: Sequence[str]) -> EmbeddingMatrix:
        if self._proc.poll() is not None:
            raise ProviderError(
                f"provider process exited with code {self._proc.returncode}"
            )
        request = json.dumps({"texts": list(texts)}, ensure_ascii=False)
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except OSError as exc:
            raise ProviderError(f"provider I/O failed: {exc}") from exc
        if not line:
            raise ProviderError("provider closed its output stream")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"bad provider response: {exc.msg}") from exc
        if "error" in obj:
            raise ProviderError(f"provider error: {obj['error']}")
        rows, dim = obj.get("rows"), obj.get("dim")
        if not isinstance(rows, list) or not isinstance(dim, int):
            raise ProviderError("provider response must carry dim and rows")
        if len(rows) != len(texts):
            raise ProviderError(
                f"provider returned {len(rows)} rows for {len(texts)} texts"
            )
        if not rows:
            return EmbeddingMatrix(np.zeros((0, dim), dtype=np.float32))
        data = np.asarray(rows, dtype=np.float32)
        if data.ndim != 2 or data.shape[1] != dim:
            raise ProviderError(
                f"provider rows do not form a {len(rows)}x{dim} matrix"
            )
        return EmbeddingMatrix(data)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
