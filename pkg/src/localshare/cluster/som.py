"""Online self-organizing map with a Gaussian neighbourhood."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..distance import SeriesMatrix
from .result import ClusteringResult, make_rng

LR_FINAL = 0.01
SIGMA_FINAL = 0.5


@dataclass(eq=False)
class SomGrid:
    rows: int
    cols: int
    weights: np.ndarray  # (rows*cols) x T, row-major over the grid
    epochs: int
    lr0: float
    sigma0: float
    qe_trace: list = field(default_factory=list)  # quantization error after each epoch
    qe_initial: float = float("nan")

    def __post_init__(self):
        if self.rows * self.cols < 2:
            raise ValueError("grid needs at least two neurons")
        if np.any(~np.isfinite(self.weights)):
            raise ValueError("non-finite SOM weights")

    @property
    def coords(self) -> np.ndarray:
        r, c = np.divmod(np.arange(self.rows * self.cols), self.cols)
        return np.stack([r, c], axis=1).astype(float)

    def bmu(self, X: np.ndarray) -> np.ndarray:
        d = ((X[:, None, :] - self.weights[None, :, :]) ** 2).sum(axis=-1)
        return np.argmin(d, axis=1)

    def quantization_error(self, X: np.ndarray) -> float:
        d = np.sqrt(((X[:, None, :] - self.weights[None, :, :]) ** 2).sum(axis=-1))
        return float(d.min(axis=1).mean())


def _pca_init(X: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Linear initialization: the grid spans +-1 std along the two leading
    principal components around the data mean."""
    mean = X.mean(axis=0)
    _, sv, vt = np.linalg.svd(X - mean, full_matrices=False)
    std = sv / np.sqrt(max(X.shape[0] - 1, 1))
    pc = [vt[i] * std[i] if i < len(std) else np.zeros_like(mean) for i in range(2)]
    # deterministic orientation for the arbitrary SVD sign
    pc = [v if v[np.argmax(np.abs(v))] >= 0 else -v for v in pc]
    a = np.linspace(-1, 1, rows) if rows > 1 else np.zeros(1)
    b = np.linspace(-1, 1, cols) if cols > 1 else np.zeros(1)
    if rows == 1:
        a, b = b, a
        return np.array([mean + ai * pc[0] for ai in a])
    return np.array([mean + ai * pc[0] + bj * pc[1] for ai in a for bj in b])


def som_train(
    data: SeriesMatrix,
    rows: int,
    cols: int,
    epochs: int = 1000,
    lr0: float = 0.5,
    seed: int = 0,
) -> SomGrid:
    """Train online: one BMU update per sample, samples reshuffled each epoch.

    The learning rate and neighbourhood radius fall linearly over all update
    steps, from ``(lr0, max(rows, cols) / 2)`` to ``(0.01, 0.5)``.
    """
    if rows * cols < 2:
        raise ValueError("grid needs at least two neurons")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    X = data.values
    n = X.shape[0]
    rng = make_rng(seed)
    weights = _pca_init(X, rows, cols)
    sigma0 = max(rows, cols) / 2.0
    grid = SomGrid(rows, cols, weights, epochs, lr0, sigma0)
    grid.qe_initial = grid.quantization_error(X)
    coords = grid.coords
    grid_d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=-1)
    total = epochs * n
    step = 0
    for _ in range(epochs):
        for idx in rng.permutation(n):
            frac = step / (total - 1) if total > 1 else 1.0
            lr = lr0 + (LR_FINAL - lr0) * frac
            sigma = sigma0 + (SIGMA_FINAL - sigma0) * frac
            x = X[idx]
            b = int(np.argmin(((weights - x) ** 2).sum(axis=1)))
            h = np.exp(-grid_d2[b] / (2.0 * sigma * sigma))
            weights += (lr * h)[:, None] * (x - weights)
            step += 1
        grid.qe_trace.append(grid.quantization_error(X))
    return grid


def som_assign(grid: SomGrid, data: SeriesMatrix, seed: int | None = None) -> ClusteringResult:
    """Label each series with the flat index of its best-matching unit."""
    labels = grid.bmu(data.values)
    return ClusteringResult(
        "som",
        labels,
        grid.rows * grid.cols,
        params={"rows": grid.rows, "cols": grid.cols, "epochs": grid.epochs, "lr0": grid.lr0},
        centroids=grid.weights.copy(),
        seed=seed,
        extras={"quantization_error": grid.qe_trace[-1] if grid.qe_trace else grid.qe_initial},
    )


def som(data: SeriesMatrix, rows: int, cols: int, epochs: int = 1000, lr0: float = 0.5, seed: int = 0):
    return som_assign(som_train(data, rows, cols, epochs, lr0, seed), data, seed)
