"""Dense similarity products and baseline top-K cosine search.

Similarity is the plain dot product; cosine semantics come from requiring
L2-normalized inputs instead of normalizing internally, so nothing is ever
silently double-normalized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ShapeError, ValidationError
from .store import EmbeddingMatrix, Manifest


def format_sig9(x: float) -> str:
    """Render a float at 9 significant digits (the canonical output precision)."""
    if x == 0.0:
        x = 0.0  # avoid "-0"
    return format(float(x), ".9g")


@dataclass(frozen=True)
class RankedList:
    """Ordered (candidate id, score) pairs for one query, best first.

    Scores are non-increasing and ids unique; ties are always broken by
    ascending original row index at construction time.
    """

    query_id: str
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        prev = None
        for cid, score in self.entries:
            if cid in seen:
                raise ValidationError(f"duplicate candidate id {cid!r} in ranking")
            seen.add(cid)
            if prev is not None and score > prev:
                raise ValidationError(
                    f"scores must be non-increasing, got {prev} then {score}"
                )
            prev = score

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list:
        return [cid for cid, _ in self.entries]

    def rank_of(self, cid: str) -> int:
        """1-based rank of a candidate id; raises KeyError if absent."""
        for pos, (c, _) in enumerate(self.entries, start=1):
            if c == cid:
                return pos
        raise KeyError(cid)

    def to_json_line(self) -> str:
        # Built by hand so scores are printed at exactly 9 significant digits.
        items = ", ".join(
            '{"id": %s, "score": %s}' % (json.dumps(cid), format_sig9(score))
            for cid, score in self.entries
        )
        return '{"query_id": %s, "ranking": [%s]}' % (json.dumps(self.query_id), items)

    @classmethod
    def from_json_line(cls, line: str) -> "RankedList":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad ranked-list line: {exc.msg}") from exc
        if not isinstance(obj, dict) or "query_id" not in obj or "ranking" not in obj:
            raise FormatError("ranked-list line must have query_id and ranking")
        entries = tuple(
            (item["id"], float(item["score"])) for item in obj["ranking"]
        )
        return cls(query_id=obj["query_id"], entries=entries)


def similarity_matrix(a: EmbeddingMatrix, b: EmbeddingMatrix) -> np.ndarray:
    """Dense product A @ B.T as float64, entry (i, j) = <a_i, b_j>."""
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return a.values.astype(np.float64) @ b.values.astype(np.float64).T


def cosine_scores(gallery: EmbeddingMatrix, query: np.ndarray) -> np.ndarray:
    """Dot product of every gallery row with one query vector, float64."""
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != gallery.dim:
        raise ShapeError(f"query dim {q.shape[0]} != gallery dim {gallery.dim}")
    return gallery.values.astype(np.float64) @ q


def ranking_order(scores: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, ties by ascending index."""
    n = scores.shape[0]
    return np.lexsort((np.arange(n), -scores))


def top_k_search(
    query: np.ndarray,
    gallery: EmbeddingMatrix,
    k: int,
    ids: Manifest,
    query_id: str = "",
) -> RankedList:
    """Top min(k, N) gallery rows by dot product with ``query``, descending."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if len(ids) != gallery.rows:
        raise ValidationError(
            f"manifest has {len(ids)} records but gallery has {gallery.rows} rows"
        )
    if gallery.rows == 0:
        return RankedList(query_id=query_id, entries=())
    scores = cosine_scores(gallery, query)
    order = ranking_order(scores)[: min(k, gallery.rows)]
    entries = tuple((ids[int(i)].id, float(scores[i])) for i in order)
    return RankedList(query_id=query_id, entries=entries)


def write_run(runs: Iterable[RankedList], path) -> None:
    from .store import _atomic_write_bytes

    text = "".join(rl.to_json_line() + "\n" for rl in runs)
    _atomic_write_bytes(path, text.encode("utf-8"))


def read_run(path) -> list:
    runs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                runs.append(RankedList.from_json_line(line))
    return runs
