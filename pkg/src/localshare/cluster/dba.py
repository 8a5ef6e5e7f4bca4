"""DTW barycenter averaging and time-series k-means built on it."""

from __future__ import annotations

from typing import Sequence

import numba as nb
import numpy as np

from ..distance import SeriesMatrix, _dtw_acc, _dtw_backtrack, _dtw_sq
from .result import ClusteringResult, make_rng


@nb.njit(cache=True)
def _cross_dtw_sq(A, B):
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            out[i, j] = _dtw_sq(A[i], B[j], -1)
    return out


def _dtw_sq_list(series: list[np.ndarray], ref: np.ndarray) -> np.ndarray:
    return np.array([_dtw_sq(ref, s, -1) for s in series])


def dtw_medoid(series: Sequence[np.ndarray]) -> int:
    """Index of the series with the smallest summed squared DTW to the rest."""
    m = len(series)
    cost = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            cost[i, j] = cost[j, i] = _dtw_sq(series[i], series[j], -1)
    return int(np.argmin(cost.sum(axis=1)))


def _dba_update(series: list[np.ndarray], avg: np.ndarray) -> np.ndarray:
    sums = np.zeros_like(avg)
    counts = np.zeros(avg.shape[0])
    for s in series:
        path = _dtw_backtrack(_dtw_acc(avg, s, -1))
        np.add.at(sums, path[:, 0], s[path[:, 1]])
        np.add.at(counts, path[:, 0], 1.0)
    return sums / counts


def dba(
    series: Sequence[Sequence[float]],
    init: str | int | np.ndarray = "medoid",
    max_iter: int = 30,
    tol: float = 1e-9,
    return_trace: bool = False,
):
    """Barycenter of ``series`` under DTW.

    ``init`` is ``"medoid"``, the index of a series, or an explicit starting
    sequence. Iteration stops once the objective (sum of squared DTW
    distances to the barycenter) improves by less than ``tol``. An update
    that would raise the objective is discarded, so the returned trace is
    non-increasing.
    """
    seqs = [np.ascontiguousarray(np.asarray(s, dtype=float)) for s in series]
    if not seqs:
        raise ValueError("dba needs at least one series")
    if isinstance(init, str):
        if init != "medoid":
            raise ValueError("init must be 'medoid', an index, or a sequence")
        avg = seqs[dtw_medoid(seqs)].copy()
    elif isinstance(init, (int, np.integer)):
        avg = seqs[int(init)].copy()
    else:
        avg = np.ascontiguousarray(np.asarray(init, dtype=float)).copy()
    obj = float(_dtw_sq_list(seqs, avg).sum())
    trace = [obj]
    for _ in range(max_iter):
        cand = _dba_update(seqs, avg)
        cand_obj = float(_dtw_sq_list(seqs, cand).sum())
        if cand_obj > obj:
            break
        gain = obj - cand_obj
        avg, obj = cand, cand_obj
        trace.append(obj)
        if gain < tol:
            break
    return (avg, trace) if return_trace else avg


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _cross_dtw_sq(X, X[chosen])[:, 0]
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest)) if rest.size else int(rng.integers(n))
        chosen.append(nxt)
        d2 = np.minimum(d2, _cross_dtw_sq(X, X[[nxt]])[:, 0])
    return np.array(chosen)


def tskmeans_dba(
    data: SeriesMatrix,
    k: int,
    seed: int = 0,
    max_iter: int = 50,
    dba_iter: int = 30,
    tol: float = 1e-9,
) -> ClusteringResult:
    """k-means with DTW assignment and DBA centroid updates.

    The inertia (sum of squared DTW distances to the assigned barycenter) is
    recorded after every assignment step in ``extras["inertia_trace"]``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = data.values
    n = X.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the number of series ({n})")
    rng = make_rng(seed)
    centroids = X[_kmeanspp(X, k, rng)].copy()
    labels = np.full(n, -1)
    trace: list[float] = []
    converged = False
    for it in range(max_iter):
        d2 = _cross_dtw_sq(X, centroids)
        new = np.argmin(d2, axis=1)
        cost = d2[np.arange(n), new]
        for j in range(k):
            if np.any(new == j):
                continue
            # reseed an empty cluster with the worst-fit point of a cluster that can spare it
            sizes = np.bincount(new, minlength=k)
            movable = np.flatnonzero(sizes[new] > 1)
            p = int(movable[np.argmax(cost[movable])])
            centroids[j] = X[p]
            new[p] = j
            cost[p] = 0.0
        inertia = float(cost.sum())
        done = np.array_equal(new, labels) or (trace and trace[-1] - inertia < tol)
        trace.append(inertia)
        labels = new
        if done:
            converged = True
            break
        for j in range(k):
            members = [X[i] for i in np.flatnonzero(labels == j)]
            centroids[j] = dba(members, init=centroids[j], max_iter=dba_iter)
    return ClusteringResult(
        "tskmeans-dba",
        labels,
        k,
        params={"k": k, "max_iter": max_iter, "dba_iter": dba_iter},
        centroids=centroids,
        seed=seed,
        extras={"inertia_trace": trace, "converged": converged, "iterations": len(trace)},
    )
