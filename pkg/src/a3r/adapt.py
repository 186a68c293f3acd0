"""Adapted re-ranking queries from similarity-weighted candidate embeddings.

Given a textual query q and the pool of candidate image embeddings M_c, the
adapted query is the principal direction of the similarity-weighted matrix
M_s (row i of M_c scaled by its dot product with q), mapped back into
embedding space through the candidates:

    u1 = dominant left singular vector of M_s
    adapted = normalize(sign_fix(u1 @ M_c))

Only the top singular direction is needed, so the factorization is a power
iteration on the M x M Gram operator u -> M_s (M_s^T u) rather than a full
SVD, O(M * D) per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import RerankConfig
from .errors import DegenerateInputError, ShapeError
from .store import EmbeddingMatrix

# Weighting with ||S|| below this is treated as degenerate and the raw
# query is used as the adapted query (the pipeline must always rank).
DEGENERATE_NORM = 1e-10


class WeightedCandidates(NamedTuple):
    matrix: np.ndarray        # (M, D) float64, row i = S_i * M_c[i]
    similarities: np.ndarray  # (M,) float64, S = M_c @ q


class PowerIterationResult(NamedTuple):
    vector: np.ndarray  # (M,) unit norm
    sigma: float        # top singular value estimate ||M_s^T u||
    converged: bool
    iterations: int


@dataclass(frozen=True)
class AdaptedQuery:
    """L2-normalized re-ranking query with power-iteration diagnostics.

    ``converged=False`` with ``top_singular_value == 0`` marks the fallback
    path where the adapted query is the raw textual query itself.
    """

    vector: np.ndarray
    top_singular_value: float
    iterations_used: int
    converged: bool


def weight_candidates(
    m_c: EmbeddingMatrix, q: np.ndarray, clamp: bool = False
) -> WeightedCandidates:
    """Scale each candidate row by its similarity to the query.

    With ``clamp`` set, negative similarities are zeroed first; a negatively
    similar candidate would otherwise flip its row and can corrupt the
    principal direction.
    """
    qv = np.asarray(q, dtype=np.float64).reshape(-1)
    if qv.shape[0] != m_c.dim:
        raise ShapeError(f"query dim {qv.shape[0]} != candidate dim {m_c.dim}")
    values = m_c.values.astype(np.float64)
    similarities = values @ qv
    if clamp:
        similarities = np.maximum(similarities, 0.0)
    return WeightedCandidates(values * similarities[:, None], similarities)


def top_left_singular_vector(
    m_s: np.ndarray, tol: float = 1e-7, max_iter: int = 1000
) -> PowerIterationResult:
    """Dominant left singular vector of ``m_s`` by Gram power iteration.

    Starts from the normalized all-ones vector (deterministic); if that start
    lies in the left null space, coordinate 0 is perturbed by 1e-3 and the
    vector renormalized.  Convergence is declared when successive iterates
    differ by less than ``tol`` in Euclidean norm.  Non-convergence within
    ``max_iter`` returns the best iterate with ``converged=False``; near-equal
    top singular values land here instead of looping forever.
    """
    m_s = np.asarray(m_s, dtype=np.float64)
    if m_s.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {m_s.ndim}-D")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if not np.any(m_s):
        raise DegenerateInputError("all-zero matrix has no singular direction")

    m = m_s.shape[0]
    u = np.full(m, 1.0 / np.sqrt(m))
    if _gram_norm_is_zero(m_s, u):
        u[0] += 1e-3
        u /= np.sqrt((u * u).sum())

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = m_s @ (m_s.T @ u)
        norm = np.sqrt((w * w).sum())
        if norm == 0.0:
            break
        u_next = w / norm
        step = np.sqrt(((u_next - u) ** 2).sum())
        u = u_next
        if step < tol:
            converged = True
            break

    sv = m_s.T @ u
    sigma = float(np.sqrt((sv * sv).sum()))
    return PowerIterationResult(u, sigma, converged, iterations)


def _gram_norm_is_zero(m_s: np.ndarray, u: np.ndarray) -> bool:
    v = m_s.T @ u
    return float(np.sqrt((v * v).sum())) == 0.0


def adapted_query(
    m_c: EmbeddingMatrix, q: np.ndarray, cfg: RerankConfig
) -> AdaptedQuery:
    """Adapted query for one candidate pool; falls back to ``q`` when degenerate.

    The sign of a singular vector is arbitrary, so the result is flipped if
    needed to give a non-negative dot product with the original query, then
    L2-normalized.
    """
    qv = np.asarray(q, dtype=np.float64).reshape(-1)
    weighted = weight_candidates(m_c, qv, clamp=cfg.clamp_nonnegative)
    s_norm = float(np.sqrt((weighted.similarities**2).sum()))
    if s_norm < DEGENERATE_NORM:
        return _fallback(qv)

    result = top_left_singular_vector(weighted.matrix, tol=cfg.tol, max_iter=cfg.max_iter)
    vector = result.vector @ m_c.values.astype(np.float64)
    if float(vector @ qv) < 0.0:
        vector = -vector
    norm = float(np.sqrt((vector * vector).sum()))
    if norm < DEGENERATE_NORM:
        # Weighted rows cancelled each other out; rank with the raw query.
        return _fallback(qv)
    return AdaptedQuery(
        vector=vector / norm,
        top_singular_value=result.sigma,
        iterations_used=result.iterations,
        converged=result.converged,
    )


def _fallback(qv: np.ndarray) -> AdaptedQuery:
    return AdaptedQuery(
        vector=qv.copy(),
        top_singular_value=0.0,
        iterations_used=0,
        converged=False,
    )
