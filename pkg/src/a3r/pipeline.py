"""Per-query orchestration: baseline search, pool adaptation, k-reciprocal refinement.

For each query the flow is

    cosine ranking over the full gallery
      -> shortlist the top ``pool`` candidates
      -> (a3r only) adapt the query to the shortlist's principal direction
      -> k-reciprocal re-rank the shortlist against the probe
      -> append the out-of-pool remainder in its original cosine order

so the output is always a total order over the gallery.  ``method=none``
stops after the first step; ``method=krnn`` re-ranks with the raw textual
query as the probe (the ablation arm, no adaptation).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import List

import numpy as np

from .adapt import adapted_query
from .config import RerankConfig
from .errors import ValidationError
from .krnn import k_reciprocal_rerank
from .similarity import RankedList, cosine_scores, ranking_order
from .store import EmbeddingMatrix, Manifest, check_aligned


def run_query(
    q: np.ndarray,
    gallery: EmbeddingMatrix,
    ids: Manifest,
    cfg: RerankConfig,
    query_id: str = "",
) -> RankedList:
    """Rank the whole gallery for one query under ``cfg``."""
    cfg.validate()
    check_aligned(gallery, ids, "gallery")
    n = gallery.rows
    if n == 0:
        return RankedList(query_id=query_id, entries=())

    scores = cosine_scores(gallery, q)
    order = ranking_order(scores)
    if cfg.method == "none":
        entries = tuple((ids[int(i)].id, float(scores[i])) for i in order)
        return RankedList(query_id=query_id, entries=entries)

    m = n if cfg.pool == 0 else min(cfg.pool, n)
    pool_idx = order[:m]
    rest_idx = order[m:]
    pool = EmbeddingMatrix(gallery.values[pool_idx])
    pool_ids = [ids[int(i)].id for i in pool_idx]

    if cfg.method == "a3r":
        probe = adapted_query(pool, q, cfg).vector
    else:  # krnn ablation: raw textual query as probe
        probe = np.asarray(q, dtype=np.float64).reshape(-1)

    kr = cfg.kr.clamped(m)
    ranked = k_reciprocal_rerank(probe, pool, pool_ids, kr, query_id=query_id)

    entries = list(ranked.entries)
    if rest_idx.size:
        entries.extend(_appended_entries(probe, gallery, ids, rest_idx, cfg.lam, entries))
    return RankedList(query_id=query_id, entries=tuple(entries))


def _appended_entries(probe, gallery, ids, rest_idx, lam, ranked_entries):
    """Out-of-pool candidates, kept in cosine order on the re-ranked scale.

    An out-of-pool candidate shares no neighbor structure with the pool, so
    its Jaccard distance is taken as 1 and its blended score is
    lam * cos(probe, g).  A running min keeps scores non-increasing across
    the pool boundary when the adapted probe disagrees with the raw query.
    """
    rest_scores = lam * (gallery.values[rest_idx].astype(np.float64) @ probe)
    floor = ranked_entries[-1][1] if ranked_entries else np.inf
    out = []
    for j, i in enumerate(rest_idx):
        score = min(floor, float(rest_scores[j]))
        out.append((ids[int(i)].id, score))
        floor = score
    return out


def run_batch(
    queries: EmbeddingMatrix,
    query_ids: Manifest,
    gallery: EmbeddingMatrix,
    gallery_ids: Manifest,
    cfg: RerankConfig,
    workers: int = 1,
) -> List[RankedList]:
    """One ranking per query, in query-manifest order.

    Queries are independent; the result is bitwise identical for any worker
    count because each query's computation never leaves its thread.
    """
    cfg.validate()
    check_aligned(queries, query_ids, "queries")
    check_aligned(gallery, gallery_ids, "gallery")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")

    def one(i: int) -> RankedList:
        return run_query(
            queries.row(i), gallery, gallery_ids, cfg, query_id=query_ids[i].id
        )

    indices = range(queries.rows)
    if workers == 1 or queries.rows <= 1:
        return [one(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, indices))
