"""Independent reference implementations used to cross-check the package.

Everything here is written directly from the algorithm definitions, in plain
Python data structures, deliberately avoiding the package's own code paths:

* ``top_left_singular_vector_oracle`` — dense eigendecomposition of the Gram
  matrix (a different algorithm from the package's power iteration).
* ``k_reciprocal_oracle`` — literal set-by-set transliteration of the
  k-reciprocal re-ranking definition using dicts, sets, and ``math.exp``.
* ``ap_at_k_oracle`` — literal precision/recall-increment sum for AP@K,
  accumulating p(i)·Δr(i) term by term.
"""

from __future__ import annotations

import math

import numpy as np


def top_left_singular_vector_oracle(m_s: np.ndarray) -> tuple:
    """(u1, sigma1) of ``m_s`` via eigendecomposition of M_s·M_sᵀ."""
    m_s = np.asarray(m_s, dtype=np.float64)
    gram = m_s @ m_s.T
    eigvals, eigvecs = np.linalg.eigh(gram)
    u1 = eigvecs[:, -1]
    sigma1 = math.sqrt(max(float(eigvals[-1]), 0.0))
    return u1, sigma1


def _oracle_distances(points: list) -> list:
    """Cosine distance matrix as nested lists, symmetrized, zero diagonal."""
    n = len(points)
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            dot = sum(a * b for a, b in zip(points[i], points[j]))
            dist = min(max(1.0 - dot, 0.0), 2.0)
            d[i][j] = dist
            d[j][i] = dist
    return d


def _sorted_others(d: list) -> list:
    """Every point's others sorted by (distance, index); k-NN lists are prefixes."""
    n = len(d)
    return [sorted((i for i in range(n) if i != x), key=lambda i: (d[x][i], i))
            for x in range(n)]


def _nearest_others(d: list, x: int, k: int, orders: list = None) -> list:
    """The k nearest points to x, excluding x, ties by ascending index.

    ``orders`` may carry the precomputed ``_sorted_others`` table; the k-NN
    list is its length-k prefix either way.
    """
    if orders is None:
        return sorted((i for i in range(len(d)) if i != x),
                      key=lambda i: (d[x][i], i))[:k]
    return orders[x][:k]


def _reciprocal(d: list, p: int, k: int, orders: list = None,
                cache: dict = None) -> set:
    if cache is not None and (p, k) in cache:
        return cache[(p, k)]
    near_p = _nearest_others(d, p, k, orders)
    out = {g for g in near_p if p in _nearest_others(d, g, k, orders)}
    if cache is not None:
        cache[(p, k)] = out
    return out


def _expanded(d: list, p: int, k1: int, orders: list = None,
              cache: dict = None) -> set:
    half = max(1, math.ceil(k1 / 2))
    r_p = _reciprocal(d, p, k1, orders, cache)
    r_half_p = _reciprocal(d, p, half, orders, cache)
    out = set(r_p)
    for q in sorted(r_p):
        r_half_q = _reciprocal(d, q, half, orders, cache)
        # integer form of the two-thirds overlap rule, exact by construction
        if 3 * len(r_half_p & r_half_q) >= 2 * len(r_half_q):
            out |= r_half_q
    return out


def k_reciprocal_oracle(
    probe: np.ndarray,
    gallery_rows: np.ndarray,
    k1: int,
    k2: int,
    lam: float,
) -> list:
    """Re-ranked (pool index, score) pairs, written from the definition.

    Point 0 is the probe; gallery row i becomes point i+1.  Returns pairs in
    final ranking order; scores are 1 − d*.
    """
    points = [list(map(float, probe))] + [list(map(float, r)) for r in gallery_rows]
    n = len(points)
    d = _oracle_distances(points)
    orders = _sorted_others(d)
    cache = {}

    expanded = [_expanded(d, x, k1, orders, cache) for x in range(n)]
    v = [[math.exp(-d[x][g]) if g in expanded[x] else 0.0 for g in range(n)]
         for x in range(n)]

    if k2 > 1:
        hoods = [[x] + _nearest_others(d, x, k2 - 1, orders) for x in range(n)]
        v = [[sum(v[y][g] for y in hoods[x]) / len(hoods[x]) for g in range(n)]
             for x in range(n)]

    d_star = []
    for i in range(1, n):
        mins = sum(min(v[0][g], v[i][g]) for g in range(n))
        maxs = sum(max(v[0][g], v[i][g]) for g in range(n))
        jaccard = 1.0 - mins / maxs if maxs > 0.0 else 1.0
        d_star.append((1.0 - lam) * jaccard + lam * d[0][i])

    order = sorted(range(len(d_star)), key=lambda i: (d_star[i], i))
    return [(i, 1.0 - d_star[i]) for i in order]


def ap_at_k_oracle(
    ranked_ids: list,
    relevant: set,
    k: int,
    strict_denominator: bool = False,
) -> float:
    """AP@K as the literal sum of p(i)·Δr(i) with r(0) = 0."""
    if not relevant:
        raise ValueError("AP undefined for an empty relevant set")
    denom = len(relevant) if strict_denominator else min(len(relevant), k)
    hits = 0
    r_prev = 0.0
    total = 0.0
    for i, cid in enumerate(ranked_ids[:k], start=1):
        if cid in relevant:
            hits += 1
        p_i = hits / i
        r_i = hits / denom
        total += p_i * (r_i - r_prev)
        r_prev = r_i
    return total
