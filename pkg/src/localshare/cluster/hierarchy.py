"""Agglomerative clustering on a condensed distance matrix (Lance-Williams)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distance import CondensedDistanceMatrix
from .result import ClusteringResult, relabel_by_appearance

LINKAGES = ("ward", "average")


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(eq=False)
class Dendrogram:
    n: int
    merges: list[Merge]
    linkage: str = "ward"

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def to_scipy(self) -> np.ndarray:
        """(n-1) x 4 array in scipy's linkage-matrix layout."""
        return np.array([[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float)


def _lance_williams(linkage, d_ki, d_kj, d_ij, n_i, n_j, n_k):
    if linkage == "average":
        return (n_i * d_ki + n_j * d_kj) / (n_i + n_j)
    # ward, on distances (not squared)
    tot = n_i + n_j + n_k
    val = ((n_i + n_k) * d_ki**2 + (n_j + n_k) * d_kj**2 - n_k * d_ij**2) / tot
    return np.sqrt(np.maximum(val, 0.0))


def hierarchical(condensed: CondensedDistanceMatrix, linkage: str = "ward") -> Dendrogram:
    """Generic agglomeration. On equal heights the lowest (row, col) pair of
    active slots merges first."""
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    n = condensed.n
    if n < 2:
        raise ValueError("need at least two points")
    d = condensed.square()
    d[np.tril_indices(n)] = np.inf
    # slot -> node id / size; a slot holds the merged cluster at its lower index
    node = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    full = condensed.square()
    merges = []
    for step in range(n - 1):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        h = float(d[i, j])
        ni, nj = size[i], size[j]
        others = np.flatnonzero(active)
        others = others[(others != i) & (others != j)]
        new = _lance_williams(linkage, full[others, i], full[others, j], full[i, j], ni, nj, size[others])
        full[others, i] = full[i, others] = new
        a, b = sorted((int(node[i]), int(node[j])))
        merges.append(Merge(a, b, h, int(ni + nj)))
        node[i] = n + step
        size[i] = ni + nj
        active[j] = False
        d[j, :] = np.inf
        d[:, j] = np.inf
        lo, hi = others[others < i], others[others > i]
        d[lo, i] = new[others < i]
        d[i, hi] = new[others > i]
    return Dendrogram(n, merges, linkage)


def _labels_from_merges(n: int, merges: list[Merge]) -> np.ndarray:
    parent = list(range(2 * n - 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for step, m in enumerate(merges):
        parent[find(m.left)] = n + step
        parent[find(m.right)] = n + step
    return relabel_by_appearance([find(i) for i in range(n)])


def cut_tree(d: Dendrogram, k: int) -> ClusteringResult:
    """Maxclust cut: undo the last ``k - 1`` merges."""
    if not 1 <= k <= d.n:
        raise ValueError(f"k must lie in [1, {d.n}]")
    labels = _labels_from_merges(d.n, d.merges[: d.n - k])
    return ClusteringResult(f"hc-{d.linkage}", labels, k, params={"linkage": d.linkage, "cut": "maxclust"})


def cut_height(d: Dendrogram, height: float, k_requested: int | None = None) -> ClusteringResult:
    """Keep every merge at or below ``height``; the cluster count follows from the data."""
    n_kept = 0
    while n_kept < len(d.merges) and d.merges[n_kept].height <= height:
        n_kept += 1
    kept = d.merges[:n_kept]
    labels = _labels_from_merges(d.n, kept)
    k_actual = d.n - len(kept)
    k_req = max(k_requested or k_actual, k_actual)
    return ClusteringResult(
        f"hc-{d.linkage}", labels, k_req, params={"linkage": d.linkage, "cut": "height", "height": height}
    )
