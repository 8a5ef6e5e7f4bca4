"""k-Shape: centroid clustering under shape-based distance."""

from __future__ import annotations

import numpy as np

from ..distance import SeriesMatrix, sbd_align
from ..errors import NotNormalized
from ..shares import zscore
from .result import ClusteringResult, make_rng


def is_znormalized(values: np.ndarray, tol: float = 1e-6) -> bool:
    """Each row has mean 0 and population std 1, or is all zeros."""
    values = np.atleast_2d(values)
    mu = values.mean(axis=1)
    sd = values.std(axis=1)
    zero = np.all(values == 0, axis=1)
    return bool(np.all(zero | ((np.abs(mu) < tol) & (np.abs(sd - 1) < tol))))


def shape_extraction(members: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    """New centroid: the dominant eigenvector of Q^T S Q over the members
    aligned to ``centroid``, sign-fixed and z-normalized."""
    T = members.shape[1]
    if not np.any(centroid):
        aligned = members
    else:
        aligned = np.array([sbd_align(centroid, x)[1] for x in members])
    S = aligned.T @ aligned
    Q = np.eye(T) - np.full((T, T), 1.0 / T)
    M = Q.T @ S @ Q
    _, vecs = np.linalg.eigh(M)
    v = vecs[:, -1]
    # eigh sign is arbitrary; pick the orientation closer to the members
    if np.sum(np.linalg.norm(aligned - v, axis=1)) > np.sum(np.linalg.norm(aligned + v, axis=1)):
        v = -v
    return zscore(v)


def _assign(values, centroids):
    n, k = values.shape[0], centroids.shape[0]
    dist = np.empty((n, k))
    for i in range(n):
        for j in range(k):
            dist[i, j] = sbd_align(centroids[j], values[i])[0]
    return dist


def _kshape_single(X, k, labels, max_iter):
    n, T = X.shape
    centroids = np.zeros((k, T))
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for j in range(k):
            members = X[labels == j]
            centroids[j] = shape_extraction(members, centroids[j]) if len(members) else 0.0
        dist = _assign(X, centroids)
        new = np.argmin(dist, axis=1)
        trace.append(float(dist[np.arange(n), new].sum()))
        if np.array_equal(new, labels):
            converged = True
            break
        labels = new
    return labels, centroids, trace, converged, it


def kshape(
    data: SeriesMatrix,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    n_init: int = 10,
    require_normalized: bool = True,
) -> ClusteringResult:
    """Cluster rows of ``data`` into at most ``k`` shape clusters.

    Each run starts from a seeded random partition, then alternates centroid
    shape extraction and nearest-centroid (SBD) reassignment until the labels
    stop changing. Of ``n_init`` runs the one with the smallest total SBD to
    its centroids is kept. Empty clusters keep a zero centroid and show up as
    ``k_actual < k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = data.values
    if require_normalized and not is_znormalized(X):
        raise NotNormalized("k-Shape expects z-normalized rows")
    rng = make_rng(seed)
    best = None
    for run in range(max(1, n_init)):
        out = _kshape_single(X, k, rng.integers(0, k, size=X.shape[0]), max_iter)
        if best is None or out[2][-1] < best[2][-1] - 1e-12:
            best, best_run = out, run
    labels, centroids, trace, converged, iterations = best
    return ClusteringResult(
        "kshape",
        labels,
        k,
        params={"k": k, "max_iter": max_iter, "n_init": n_init},
        centroids=centroids,
        seed=seed,
        extras={"iterations": iterations, "converged": converged, "objective_trace": trace, "best_run": best_run},
    )
