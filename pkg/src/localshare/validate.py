"""
Cluster validity indices, cluster-size balance and partition agreement.

Silhouette and Dunn read a condensed distance matrix (whatever distance the
clustering used); Davies-Bouldin and Calinski-Harabasz are centroid-based and
work in plain Euclidean vector space.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .distance import CondensedDistanceMatrix, SeriesMatrix
from .errors import CoincidentCentroids, LocalShareError, SingleCluster, ZeroDiameter, ZeroWithinScatter


def _groups(labels) -> list[np.ndarray]:
    labels = np.asarray(labels)
    return [np.flatnonzero(labels == c) for c in np.unique(labels)]


def _check_k(groups) -> None:
    if len(groups) < 2:
        raise SingleCluster("index needs at least two non-empty clusters")


def _vectors(data) -> np.ndarray:
    return data.values if isinstance(data, SeriesMatrix) else np.atleast_2d(np.asarray(data, dtype=float))


def silhouette(distances: CondensedDistanceMatrix, labels) -> float:
    groups = _groups(labels)
    _check_k(groups)
    D = distances.square()
    labels = np.asarray(labels)
    n = len(labels)
    s = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        m = own.sum()
        if m == 1:
            continue  # singleton convention: 0
        a = D[i, own].sum() / (m - 1)
        b = min(D[i, g].mean() for g in groups if labels[g[0]] != labels[i])
        top = max(a, b)
        s[i] = 0.0 if top == 0 else (b - a) / top
    return float(math.fsum(s) / n)


def davies_bouldin(data, labels) -> float:
    X = _vectors(data)
    groups = _groups(labels)
    _check_k(groups)
    cents = np.array([X[g].mean(axis=0) for g in groups])
    scatter = np.array([np.linalg.norm(X[g] - c, axis=1).mean() for g, c in zip(groups, cents)])
    sep = np.linalg.norm(cents[:, None, :] - cents[None, :, :], axis=-1)
    k = len(groups)
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0):
        raise CoincidentCentroids("two clusters share a centroid")
    ratio = np.where(off, (scatter[:, None] + scatter[None, :]) / np.where(off, sep, 1.0), -np.inf)
    return float(ratio.max(axis=1).mean())


def dunn(distances: CondensedDistanceMatrix, labels) -> float:
    groups = _groups(labels)
    _check_k(groups)
    D = distances.square()
    diam = max(D[np.ix_(g, g)].max() for g in groups)
    if diam == 0:
        raise ZeroDiameter("every cluster has zero diameter")
    sep = min(
        D[np.ix_(groups[a], groups[b])].min() for a in range(len(groups)) for b in range(a + 1, len(groups))
    )
    return float(sep / diam)


def calinski_harabasz(data, labels) -> float:
    X = _vectors(data)
    groups = _groups(labels)
    _check_k(groups)
    n, k = X.shape[0], len(groups)
    if n <= k:
        raise ValueError("Calinski-Harabasz needs more points than clusters")
    mean = X.mean(axis=0)
    W = sum(((X[g] - X[g].mean(axis=0)) ** 2).sum() for g in groups)
    B = sum(len(g) * ((X[g].mean(axis=0) - mean) ** 2).sum() for g in groups)
    if W == 0:
        raise ZeroWithinScatter("all clusters have zero within-cluster scatter")
    return float((B / (k - 1)) / (W / (n - k)))


def gini(sizes) -> float:
    """Mean-absolute-difference Gini of cluster sizes; 0 is perfectly balanced."""
    x = np.asarray(sizes, dtype=float)
    if x.size == 0 or np.any(x < 1):
        raise ValueError("sizes must be positive counts")
    k = x.size
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * k * k * x.mean()))


def adjusted_rand(labels_a, labels_b) -> float:
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label vectors must have equal length")
    n = a.size
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def pairs(v):
        v = np.asarray(v, dtype=float)
        return float((v * (v - 1) / 2).sum())

    index = pairs(table)
    sa, sb = pairs(table.sum(axis=1)), pairs(table.sum(axis=0))
    total = n * (n - 1) / 2
    expected = sa * sb / total if total else 0.0
    max_index = (sa + sb) / 2
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


@dataclass
class ValidityReport:
    silhouette: float | None
    davies_bouldin: float | None
    dunn: float | None
    calinski_harabasz: float | None
    gini: float | None
    metric_space: str
    undefined: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def validity_report(
    distances: CondensedDistanceMatrix,
    data,
    labels,
) -> ValidityReport:
    """All indices for one clustering; an index that is undefined for this
    partition is reported as ``None`` with its reason in ``undefined``."""
    undefined = {}

    def attempt(name, fn, *args):
        try:
            value = fn(*args)
        except (LocalShareError, ValueError) as exc:
            undefined[name] = f"{type(exc).__name__}: {exc}"
            return None
        return value if math.isfinite(value) else None

    sizes = [len(g) for g in _groups(labels)]
    return ValidityReport(
        silhouette=attempt("silhouette", silhouette, distances, labels),
        davies_bouldin=attempt("davies_bouldin", davies_bouldin, data, labels),
        dunn=attempt("dunn", dunn, distances, labels),
        calinski_harabasz=attempt("calinski_harabasz", calinski_harabasz, data, labels),
        gini=gini(sizes),
        metric_space=f"precomputed-{distances.metric}|vector",
        undefined=undefined,
    )


METRICS_COLUMNS = ["Method", "Clusters", "Norm.", "Silhouette", "D-B Index", "Dunn", "C-H Index"]
DETAIL_COLUMNS = ["Method", "Clusters", "Norm.", "Gini", "Metric space", "Undefined"]


def _fmt(v) -> str:
    return "" if v is None else f"{v:.4f}"


def _lead(row) -> list:
    return [row["method"], row["clusters"], "Yes" if row["normalized"] else "No"]


def write_metrics_table(rows: list[dict], fh, delimiter: str = ",") -> None:
    """Index table in the usual comparison layout. Each row is a dict with
    method, clusters, normalized and report; undefined indices are blank."""
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow(METRICS_COLUMNS)
    for row in rows:
        r: ValidityReport = row["report"]
        writer.writerow(
            _lead(row) + [_fmt(r.silhouette), _fmt(r.davies_bouldin), _fmt(r.dunn), _fmt(r.calinski_harabasz)]
        )


def write_metrics_details(rows: list[dict], fh, delimiter: str = ",") -> None:
    """Companion table: size balance, the space each index was computed in,
    and why any index is blank."""
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow(DETAIL_COLUMNS)
    for row in rows:
        r: ValidityReport = row["report"]
        why = "; ".join(f"{k}: {v}" for k, v in sorted(r.undefined.items()))
        writer.writerow(_lead(row) + [_fmt(r.gini), r.metric_space, why])
