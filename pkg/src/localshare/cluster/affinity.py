"""Affinity propagation (responsibility/availability message passing)."""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .result import ClusteringResult, make_rng

log = logging.getLogger(__name__)

TIE_NOISE = 1e-10


class NonConvergenceWarning(UserWarning):
    pass


def median_preference(similarity: np.ndarray) -> float:
    S = np.asarray(similarity, dtype=float)
    return float(np.median(S[~np.eye(S.shape[0], dtype=bool)]))


def affinity_propagation(
    similarity: np.ndarray,
    damping: float = 0.9,
    preference: float | None = None,
    max_iter: int = 1000,
    convergence_iter: int = 50,
    seed: int = 0,
) -> ClusteringResult:
    """Cluster by exemplar discovery on a symmetric similarity matrix.

    ``preference`` (default: median off-diagonal similarity) is written to the
    diagonal. If the messages do not settle within ``max_iter`` sweeps the
    current exemplar set is returned with ``extras["converged"] = False``.
    If no point qualifies as an exemplar, the point with the largest total
    similarity to all others is used as the single exemplar.
    """
    S = np.array(similarity, dtype=float)
    n = S.shape[0]
    if S.ndim != 2 or S.shape != (n, n):
        raise ValueError("similarity must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-12):
        raise ValueError("similarity must be symmetric")
    if not 0.5 <= damping < 1:
        raise ValueError("damping must lie in [0.5, 1)")
    pref = median_preference(S) if preference is None else float(preference)
    np.fill_diagonal(S, pref)
    rng = make_rng(seed)
    S = S + TIE_NOISE * rng.standard_normal((n, n))

    R = np.zeros((n, n))
    A = np.zeros((n, n))
    rows = np.arange(n)
    stable = 0
    last = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # responsibilities
        AS = A + S
        first = np.argmax(AS, axis=1)
        max1 = AS[rows, first]
        AS[rows, first] = -np.inf
        max2 = AS.max(axis=1)
        Rnew = S - max1[:, None]
        Rnew[rows, first] = S[rows, first] - max2
        R = damping * R + (1 - damping) * Rnew
        # availabilities
        Rp = np.maximum(R, 0)
        Rp[rows, rows] = R[rows, rows]
        col = Rp.sum(axis=0)
        Anew = col[None, :] - Rp
        diag = Anew[rows, rows].copy()
        Anew = np.minimum(Anew, 0)
        Anew[rows, rows] = diag
        A = damping * A + (1 - damping) * Anew

        exemplars = tuple(np.flatnonzero(np.diag(A) + np.diag(R) > 0))
        if exemplars == last:
            stable += 1
        else:
            stable = 0
            last = exemplars
        if stable >= convergence_iter:
            converged = True
            break

    exemplars = np.array(last if last else (), dtype=np.int64)
    Sraw = np.array(similarity, dtype=float)
    fallback = False
    if exemplars.size == 0:
        off = Sraw - np.diag(np.diag(Sraw))
        exemplars = np.array([int(np.argmax(off.sum(axis=0)))])
        fallback = True
    if not converged:
        warnings.warn(f"affinity propagation did not converge in {max_iter} iterations", NonConvergenceWarning)

    labels = np.argmax(Sraw[:, exemplars], axis=1)
    labels[exemplars] = np.arange(exemplars.size)
    return ClusteringResult(
        "affinity-propagation",
        labels,
        int(exemplars.size),
        params={
            "damping": damping,
            "preference": pref,
            "max_iter": max_iter,
            "convergence_iter": convergence_iter,
        },
        seed=seed,
        extras={
            "exemplars": exemplars.tolist(),
            "converged": converged,
            "iterations": it,
            "fallback_single_exemplar": fallback,
        },
    )
