"""Diagonal-covariance Gaussian mixture fitted by EM, initialized from hard labels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..distance import SeriesMatrix
from .result import ClusteringResult

MIN_WEIGHT = 1e-12


@dataclass(eq=False)
class GmmModel:
    k: int
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    active: np.ndarray
    log_likelihood: list = field(default_factory=list)

    def log_prob(self, X: np.ndarray) -> np.ndarray:
        """n x k joint log densities; inactive components are -inf."""
        out = np.full((X.shape[0], self.k), -np.inf)
        for j in np.flatnonzero(self.active):
            var = self.variances[j]
            diff2 = (X - self.means[j]) ** 2 / var
            out[:, j] = np.log(self.weights[j]) - 0.5 * (
                np.sum(np.log(2 * np.pi * var)) + diff2.sum(axis=1)
            )
        return out


def _logsumexp(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


def _m_step(X, resp, var_floor, active):
    nk = resp.sum(axis=0)
    active = active & (nk / X.shape[0] >= MIN_WEIGHT)
    k, T = resp.shape[1], X.shape[1]
    means = np.zeros((k, T))
    variances = np.ones((k, T))
    for j in np.flatnonzero(active):
        means[j] = resp[:, j] @ X / nk[j]
        variances[j] = np.maximum(resp[:, j] @ (X - means[j]) ** 2 / nk[j], var_floor)
    weights = np.where(active, nk, 0.0)
    weights = weights / weights.sum()
    return weights, means, variances, active


def _e_step(model: GmmModel, X):
    lp = model.log_prob(X)
    lse = _logsumexp(lp)
    resp = np.exp(lp - lse[:, None])
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, float(lse.sum())


def gmm_fit(
    data: SeriesMatrix,
    k: int,
    init_labels,
    var_floor: float = 1e-6,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> tuple[GmmModel, ClusteringResult]:
    """EM from a one-hot encoding of ``init_labels``.

    Components whose weight falls below 1e-12 are dropped; their columns in the
    responsibility matrix stay zero and ``k_actual`` shrinks accordingly.
    Stops when the mean per-series log-likelihood gain drops below ``tol``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = data.values
    n = X.shape[0]
    init_labels = np.asarray(init_labels, dtype=np.int64)
    if init_labels.shape != (n,):
        raise ValueError("init_labels must have one entry per series")
    if init_labels.min() < 0 or init_labels.max() >= k:
        raise ValueError(f"init_labels must lie in [0, {k})")
    resp = np.zeros((n, k))
    resp[np.arange(n), init_labels] = 1.0
    weights, means, variances, active = _m_step(X, resp, var_floor, np.ones(k, dtype=bool))
    model = GmmModel(k, weights, means, variances, active)
    converged = False
    for _ in range(max_iter):
        resp, ll = _e_step(model, X)
        model.log_likelihood.append(ll)
        trace = model.log_likelihood
        if len(trace) > 1 and (trace[-1] - trace[-2]) / n < tol:
            converged = True
            break
        model.weights, model.means, model.variances, model.active = _m_step(X, resp, var_floor, model.active)
    labels = np.argmax(resp, axis=1)
    removed = np.flatnonzero(~model.active).tolist()
    result = ClusteringResult(
        "gmm-diag",
        labels,
        k,
        params={"k": k, "var_floor": var_floor, "max_iter": max_iter, "tol": tol},
        centroids=model.means.copy(),
        soft=resp,
        extras={"log_likelihood_trace": list(model.log_likelihood), "converged": converged, "removed_components": removed},
    )
    return model, result
