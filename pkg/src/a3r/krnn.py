"""k-reciprocal neighbor re-ranking over a probe-plus-candidates point set.

The probe (adapted or raw query) and the M candidates form one set of M+1
points in the shared embedding space, probe at index 0.  Re-ranking runs on
the cosine-distance matrix of that set:

  1. reciprocal sets   R(p, k)  = { g != p : g in N(p, k) and p in N(g, k) }
  2. expanded sets     R*(p, k1) adds R(q, ceil(k1/2)) for every q in
                       R(p, k1) whose half-size reciprocal set overlaps
                       R(p, ceil(k1/2)) in at least two thirds of its size
  3. sparse encoding   V_x[g] = exp(-d(x, g)) for g in R*(x, k1), else 0
  4. local expansion   V_x <- mean of V_y over the k2 nearest points to x,
                       x itself included as its own nearest
  5. Jaccard distance  d_J(probe, g) = 1 - sum_i min(V_probe, V_g) /
                       sum_i max(V_probe, V_g)   (1 when both sums are 0)
  6. blend             d* = (1 - lam) * d_J + lam * d(probe, g)

Candidates are returned by ascending d*, scores reported as 1 - d*, ties
broken by ascending original pool index.
"""

from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np

from .adapt import AdaptedQuery
from .config import KrConfig
from .errors import ShapeError, ValidationError
from .similarity import RankedList
from .store import EmbeddingMatrix


def cosine_distance_matrix(points: np.ndarray) -> np.ndarray:
    """Pairwise 1 - dot over normalized rows: symmetric, zero diagonal, [0, 2]."""
    pts = np.asarray(points, dtype=np.float64)
    d = 1.0 - pts @ pts.T
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    np.clip(d, 0.0, 2.0, out=d)
    return d


def neighbor_table(d: np.ndarray) -> np.ndarray:
    """Row p lists every other point by ascending distance, ties by index."""
    n = d.shape[0]
    idx = np.arange(n)
    table = np.empty((n, n - 1), dtype=np.int64)
    for p in range(n):
        order = np.lexsort((idx, d[p]))
        table[p] = order[order != p]
    return table


def _check_point(d: np.ndarray, p: int) -> None:
    if not (0 <= p < d.shape[0]):
        raise IndexError(f"point {p} out of range for {d.shape[0]} points")


def reciprocal_set(d: np.ndarray, p: int, k: int) -> set:
    """Mutual k-nearest-neighbor set of point ``p``."""
    _check_point(d, p)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    table = neighbor_table(d)
    return _reciprocal_from_table(table, p, k)


def expanded_set(d: np.ndarray, p: int, k1: int) -> set:
    """Reciprocal set of ``p`` expanded with strongly overlapping half-sets."""
    _check_point(d, p)
    if k1 < 1:
        raise ValidationError(f"k1 must be >= 1, got {k1}")
    table = neighbor_table(d)
    return _expanded_from_table(table, p, k1)


def _membership(table: np.ndarray, k: int) -> np.ndarray:
    """Boolean matrix: entry (p, g) marks g among the k nearest others of p."""
    n = table.shape[0]
    k = min(k, n - 1)
    member = np.zeros((n, n), dtype=bool)
    if k > 0:
        rows = np.repeat(np.arange(n), k)
        member[rows, table[:, :k].ravel()] = True
    return member


def _reciprocal_members(table: np.ndarray, k: int) -> np.ndarray:
    member = _membership(table, k)
    return member & member.T


def _reciprocal_from_table(table: np.ndarray, p: int, k: int) -> set:
    mutual = _reciprocal_members(table, k)
    return set(map(int, np.nonzero(mutual[p])[0]))


def _expanded_from_table(table: np.ndarray, p: int, k1: int) -> set:
    half = math.ceil(k1 / 2)
    mutual_full = _reciprocal_members(table, k1)
    mutual_half = _reciprocal_members(table, half)
    half_sets = [set(map(int, np.nonzero(mutual_half[x])[0])) for x in range(table.shape[0])]
    return _expand_one(mutual_full, half_sets, p)


def _expand_one(mutual_full: np.ndarray, half_sets: list, p: int) -> set:
    out = set(map(int, np.nonzero(mutual_full[p])[0]))
    p_half = half_sets[p]
    for q in sorted(out):
        q_half = half_sets[q]
        # integer form of the two-thirds overlap rule, exact by construction
        if 3 * len(p_half & q_half) >= 2 * len(q_half):
            out |= q_half
    return out


def _encode_weights(d: np.ndarray, table: np.ndarray, k1: int) -> np.ndarray:
    n = d.shape[0]
    mutual_full = _reciprocal_members(table, k1)
    half_sets = [
        set(map(int, np.nonzero(m)[0]))
        for m in _reciprocal_members(table, math.ceil(k1 / 2))
    ]
    v = np.zeros((n, n))
    for x in range(n):
        members = sorted(_expand_one(mutual_full, half_sets, x))
        if members:
            v[x, members] = np.exp(-d[x, members])
    return v


def _local_expansion(v: np.ndarray, table: np.ndarray, k2: int) -> np.ndarray:
    if k2 <= 1:
        return v
    n = v.shape[0]
    # each point's expansion neighborhood: itself plus its k2-1 nearest others
    hood = np.concatenate([np.arange(n)[:, None], table[:, : k2 - 1]], axis=1)
    return v[hood].mean(axis=1)


def k_reciprocal_rerank(
    probe: Union[AdaptedQuery, np.ndarray],
    gallery: EmbeddingMatrix,
    ids: Sequence[str],
    cfg: KrConfig,
    query_id: str = "",
) -> RankedList:
    """Re-rank ``gallery`` candidates against the probe vector.

    Inputs must be L2-normalized.  ``ids[i]`` labels gallery row i; the
    original pool index doubles as the deterministic tie-break.
    """
    probe_vec = probe.vector if isinstance(probe, AdaptedQuery) else probe
    probe_vec = np.asarray(probe_vec, dtype=np.float64).reshape(-1)
    if probe_vec.shape[0] != gallery.dim:
        raise ShapeError(f"probe dim {probe_vec.shape[0]} != gallery dim {gallery.dim}")
    m = gallery.rows
    if m < 1:
        raise ValidationError("candidate pool is empty")
    if len(ids) != m:
        raise ValidationError(f"got {len(ids)} ids for {m} candidates")
    cfg.validate(pool_size=m)

    points = np.vstack([probe_vec[None, :], gallery.values.astype(np.float64)])
    d = cosine_distance_matrix(points)
    table = neighbor_table(d)

    v = _encode_weights(d, table, cfg.k1)
    v = _local_expansion(v, table, cfg.k2)

    v_probe = v[0]
    mins = np.minimum(v_probe[None, :], v[1:]).sum(axis=1)
    maxs = np.maximum(v_probe[None, :], v[1:]).sum(axis=1)
    jaccard = np.where(maxs > 0.0, 1.0 - mins / np.where(maxs > 0.0, maxs, 1.0), 1.0)

    d_star = (1.0 - cfg.lam) * jaccard + cfg.lam * d[0, 1:]
    order = np.lexsort((np.arange(m), d_star))
    entries = tuple((ids[int(i)], float(1.0 - d_star[i])) for i in order)
    return RankedList(query_id=query_id, entries=entries)
