"""Two-step pipelines: AP then average-linkage HC, and DBA k-means then GMM."""

from __future__ import annotations

import numpy as np

from ..distance import CondensedDistanceMatrix, SeriesMatrix, _sbd_square, sbd_similarity
from ..errors import TargetTooLarge
from .affinity import affinity_propagation
from .dba import _cross_dtw_sq, tskmeans_dba
from .gmm import gmm_fit
from .hierarchy import cut_tree, hierarchical
from .result import ClusteringResult


def ap_sbd(
    data: SeriesMatrix,
    damping: float = 0.9,
    preference: float | None = None,
    max_iter: int = 1000,
    convergence_iter: int = 50,
    seed: int = 0,
    zero_norm: str = "raise",
) -> ClusteringResult:
    """Affinity propagation on negative shape-based distances."""
    S = sbd_similarity(data, zero_norm=zero_norm)
    res = affinity_propagation(S, damping, preference, max_iter, convergence_iter, seed)
    res.method = "ap-sbd"
    res.centroids = data.values[res.extras["exemplars"]].copy()
    return res


def two_step_ap_hc(
    data: SeriesMatrix,
    target_k: int,
    damping: float = 0.9,
    preference: float | None = None,
    max_iter: int = 1000,
    convergence_iter: int = 50,
    seed: int = 0,
    zero_norm: str = "raise",
) -> ClusteringResult:
    """Consolidate AP exemplars into ``target_k`` groups by average-linkage HC
    on their SBD distances; every series inherits its exemplar's group."""
    ap = ap_sbd(data, damping, preference, max_iter, convergence_iter, seed, zero_norm)
    exemplars = np.asarray(ap.extras["exemplars"])
    m = exemplars.size
    if target_k > m:
        raise TargetTooLarge(f"target_k={target_k} exceeds the {m} exemplars found")
    if m == 1:
        ex_labels = np.zeros(1, dtype=np.int64)
    else:
        D = _sbd_square(data.values[exemplars], zero_norm)
        cut = cut_tree(hierarchical(CondensedDistanceMatrix.from_square(D, "sbd"), "average"), target_k)
        ex_labels = cut.labels
    labels = ex_labels[ap.labels]
    return ClusteringResult(
        "ap-sbd+hc-average",
        labels,
        target_k,
        params={**ap.params, "target_k": target_k},
        seed=seed,
        extras={**ap.extras, "ap_clusters": m, "exemplar_labels": ex_labels.tolist()},
    )


def two_step_kmeans_gmm(
    data: SeriesMatrix,
    k: int,
    seed: int = 0,
    init_k: int | None = None,
    kmeans_iter: int = 50,
    var_floor: float = 1e-6,
    gmm_iter: int = 200,
    tol: float = 1e-6,
) -> ClusteringResult:
    """DBA k-means labels seed a ``k``-component GMM.

    With ``init_k > k`` the k-means runs with ``init_k`` clusters and its
    barycenters are merged into ``k`` groups by average-linkage HC on DTW
    distances before seeding the GMM.
    """
    init_k = k if init_k is None else init_k
    if init_k < k:
        raise ValueError("init_k must be >= k")
    km = tskmeans_dba(data, init_k, seed=seed, max_iter=kmeans_iter)
    init = km.labels
    merge_map = None
    if init_k > k:
        D = np.sqrt(_cross_dtw_sq(km.centroids, km.centroids))
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
        merge_map = cut_tree(hierarchical(CondensedDistanceMatrix.from_square(D, "dtw"), "average"), k).labels
        init = merge_map[km.labels]
    _, res = gmm_fit(data, k, init, var_floor=var_floor, max_iter=gmm_iter, tol=tol)
    res.method = "dba-kmeans+gmm"
    res.seed = seed
    res.params = {"k": k, "init_k": init_k, "var_floor": var_floor}
    res.extras.update(
        {
            "init_labels": init.tolist(),
            "kmeans_inertia_trace": km.extras["inertia_trace"],
            "merge_map": None if merge_map is None else merge_map.tolist(),
        }
    )
    return res
