"""Retrieval evaluation: AP@K / mAP@K and rank-movement reports.

AP@K follows the truncated convention: precision p(i) at every rank i where
a relevant item sits, recall steps of 1/min(|relevant|, K), so a perfect
top-K ranking scores 1 even when more than K items are relevant.  A strict
mode with denominator |relevant| is available for comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ManifestParseError, UndefinedAPError, ValidationError
from .similarity import RankedList
from .store import Manifest, _atomic_write_bytes


@dataclass(frozen=True)
class Qrels:
    """Relevance judgments: query id -> set of relevant gallery ids."""

    relevant: dict

    def __post_init__(self):
        object.__setattr__(
            self, "relevant", {q: frozenset(r) for q, r in self.relevant.items()}
        )

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.relevant

    def for_query(self, query_id: str) -> frozenset:
        return self.relevant[query_id]


def load_qrels(path) -> Qrels:
    relevant = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(path, line_no, exc.msg) from exc
            qid, rel = obj.get("query_id"), obj.get("relevant")
            if not isinstance(qid, str) or not isinstance(rel, list):
                raise ManifestParseError(
                    path, line_no, "expected {'query_id': str, 'relevant': [str, ...]}"
                )
            if qid in relevant:
                raise ValidationError(f"duplicate query id {qid!r} in qrels")
            relevant[qid] = frozenset(rel)
    return Qrels(relevant)


def save_qrels(qrels: Qrels, path) -> None:
    lines = "".join(
        json.dumps({"query_id": q, "relevant": sorted(r)}) + "\n"
        for q, r in qrels.relevant.items()
    )
    _atomic_write_bytes(path, lines.encode("utf-8"))


def qrels_from_labels(queries: Manifest, gallery: Manifest) -> Qrels:
    """Relevance by label equality between query and gallery records."""
    by_label: dict = {}
    for rec in gallery:
        if rec.label is not None:
            by_label.setdefault(rec.label, []).append(rec.id)
    relevant = {}
    for rec in queries:
        ids = by_label.get(rec.label, []) if rec.label is not None else []
        relevant[rec.id] = frozenset(ids)
    return Qrels(relevant)


def ap_at_k(
    ranking: RankedList,
    relevant: frozenset,
    k: int,
    strict_denominator: bool = False,
) -> float:
    """Average precision of the top-K entries against one relevant set."""
    if k < 1:
        raise ValidationError(f"K must be >= 1, got {k}")
    if not relevant:
        raise UndefinedAPError(
            f"query {ranking.query_id!r}: AP is undefined for an empty relevant set"
        )
    denom = len(relevant) if strict_denominator else min(len(relevant), k)
    hits = 0
    total = 0.0
    for i, (cid, _) in enumerate(ranking.entries[:k], start=1):
        if cid in relevant:
            hits += 1
            total += (hits / i) / denom
    return total


@dataclass(frozen=True)
class EvalReport:
    map_at_k: float
    per_query: tuple  # ((query_id, ap), ...) in run order
    k: int
    skipped: int      # queries with empty relevant sets, excluded from the mean

    @property
    def scored(self) -> int:
        return len(self.per_query)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "map_at_k": self.map_at_k,
            "scored_queries": self.scored,
            "skipped_queries": self.skipped,
            "per_query": [{"query_id": q, "ap": ap} for q, ap in self.per_query],
        }


def mean_ap_at_k(
    runs: Sequence[RankedList],
    qrels: Qrels,
    k: int,
    strict_denominator: bool = False,
) -> EvalReport:
    """Mean AP@K over queries with non-empty relevance; the rest are counted."""
    per_query = []
    skipped = 0
    seen = set()
    for run in runs:
        if run.query_id not in qrels:
            raise ValidationError(f"run query {run.query_id!r} is not in the qrels")
        if run.query_id in seen:
            raise ValidationError(f"duplicate run for query {run.query_id!r}")
        seen.add(run.query_id)
        rel = qrels.for_query(run.query_id)
        if not rel:
            skipped += 1
            continue
        per_query.append((run.query_id, ap_at_k(run, rel, k, strict_denominator)))
    if not per_query:
        raise ValidationError("no scorable queries (every relevant set is empty)")
    mean = sum(ap for _, ap in per_query) / len(per_query)
    return EvalReport(map_at_k=mean, per_query=tuple(per_query), k=k, skipped=skipped)


@dataclass(frozen=True)
class RankMovement:
    """Per-relevant-item rank change between two rankings of one query.

    ``moves`` holds (id, rank before, rank after, delta); delta > 0 means the
    item was promoted toward the top.
    """

    query_id: str
    moves: tuple
    promoted: int
    demoted: int
    unchanged: int

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "promoted": self.promoted,
            "demoted": self.demoted,
            "unchanged": self.unchanged,
            "moves": [
                {"id": cid, "before": b, "after": a, "delta": delta}
                for cid, b, a, delta in self.moves
            ],
        }


def rank_movement(
    before: RankedList, after: RankedList, relevant: Iterable[str]
) -> RankMovement:
    """Movement of the relevant items between two rankings of one candidate set."""
    before_ids = set(before.ids)
    after_ids = set(after.ids)
    if before_ids != after_ids:
        diff = sorted(before_ids.symmetric_difference(after_ids))[:5]
        raise ValidationError(
            f"rankings cover different candidate sets (e.g. {diff})"
        )
    before_rank = {cid: pos for pos, (cid, _) in enumerate(before.entries, start=1)}
    after_rank = {cid: pos for pos, (cid, _) in enumerate(after.entries, start=1)}
    moves = []
    promoted = demoted = unchanged = 0
    for cid in sorted(set(relevant)):
        if cid not in before_rank:
            continue  # relevant item outside both rankings carries no rank
        b, a = before_rank[cid], after_rank[cid]
        delta = b - a
        if delta > 0:
            promoted += 1
        elif delta < 0:
            demoted += 1
        else:
            unchanged += 1
        moves.append((cid, b, a, delta))
    moves.sort(key=lambda m: (m[2], m[0]))
    return RankMovement(
        query_id=before.query_id,
        moves=tuple(moves),
        promoted=promoted,
        demoted=demoted,
        unchanged=unchanged,
    )
