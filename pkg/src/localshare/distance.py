"""
Time-series distance kernels and condensed pairwise matrices.

DTW uses squared pointwise cost and returns the square root of the optimal
accumulated cost, so a zero-width band on equal-length inputs reduces to the
Euclidean distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba as nb
import numpy as np

from .errors import DegenerateMatrix, WindowTooNarrow, ZeroNorm

FFT_THRESHOLD = 64
METRICS = ("dtw", "sbd", "euclidean")


@dataclass(eq=False)
class SeriesMatrix:
    """n x T block of equal-length series with one key per row."""

    values: np.ndarray
    keys: list

    def __post_init__(self):
        self.values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if self.values.ndim != 2:
            raise ValueError("values must be 2-D (n x T)")
        if self.values.shape[1] < 2:
            raise ValueError("series length must be at least 2")
        if np.any(~np.isfinite(self.values)):
            raise ValueError("series contain missing or non-finite values")
        if self.keys is None:
            self.keys = list(range(self.values.shape[0]))
        self.keys = list(self.keys)
        if len(self.keys) != self.values.shape[0]:
            raise ValueError("one key per row required")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    def subset(self, rows) -> "SeriesMatrix":
        rows = list(rows)
        return SeriesMatrix(self.values[rows], [self.keys[i] for i in rows])


def condensed_index(i: int, j: int, n: int) -> int:
    """Position of pair (i, j), i < j, in a row-major upper-triangular array."""
    if i == j:
        raise ValueError("diagonal has no condensed entry")
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + j - i - 1


def condensed_pair(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`condensed_index`."""
    i = 0
    row_len = n - 1
    while k >= row_len:
        k -= row_len
        i += 1
        row_len -= 1
    return i, i + 1 + k


@dataclass(eq=False)
class CondensedDistanceMatrix:
    n: int
    entries: np.ndarray
    metric: str = "unknown"
    normalized: bool = False

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.shape != (self.n * (self.n - 1) // 2,):
            raise ValueError(f"expected {self.n * (self.n - 1) // 2} entries, got {self.entries.shape}")
        if np.any(self.entries < 0) or np.any(~np.isfinite(self.entries)):
            raise ValueError("distances must be finite and nonnegative")

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        return 0.0 if i == j else float(self.entries[condensed_index(i, j, self.n)])

    def square(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        out[iu] = self.entries
        out.T[iu] = self.entries
        return out

    @classmethod
    def from_square(cls, d: np.ndarray, metric: str = "unknown", normalized: bool = False):
        d = np.asarray(d, dtype=float)
        return cls(d.shape[0], d[np.triu_indices(d.shape[0], 1)], metric, normalized)

    def scaled(self, alpha: float) -> "CondensedDistanceMatrix":
        return CondensedDistanceMatrix(self.n, self.entries * alpha, self.metric, self.normalized)

    def save(self, path: str | Path) -> None:
        """Text sidecar: a JSON header line, then one entry per line."""
        header = {"n": self.n, "metric": self.metric, "normalized": self.normalized}
        lines = [json.dumps(header, sort_keys=True)] + [repr(float(v)) for v in self.entries]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CondensedDistanceMatrix":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = json.loads(lines[0])
        entries = np.array([float(v) for v in lines[1:] if v.strip()])
        return cls(header["n"], entries, header["metric"], header["normalized"])


# ---------------------------------------------------------------- DTW


@nb.njit(cache=True)
def _dtw_acc(x, y, window):
    n, m = x.shape[0], y.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo, hi = 1, m
        if window >= 0:
            lo = max(1, i - window)
            hi = min(m, i + window)
        for j in range(lo, hi + 1):
            c = (x[i - 1] - y[j - 1]) ** 2
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = c + best
    return acc


@nb.njit(cache=True)
def _dtw_sq(x, y, window):
    return _dtw_acc(x, y, window)[x.shape[0], y.shape[0]]


@nb.njit(cache=True)
def _dtw_backtrack(acc):
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = np.empty((i + j, 2), dtype=np.int64)
    k = 0
    while True:
        path[k, 0] = i - 1
        path[k, 1] = j - 1
        k += 1
        if i == 1 and j == 1:
            break
        diag = acc[i - 1, j - 1]
        up = acc[i - 1, j]
        left = acc[i, j - 1]
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return path[:k][::-1]


@nb.njit(cache=True)
def _pairwise_dtw(values, window):
    n = values.shape[0]
    out = np.empty(n * (n - 1) // 2)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            out[k] = np.sqrt(_dtw_sq(values[i], values[j], window))
            k += 1
    return out


def _check_window(nx: int, ny: int, window) -> int:
    if window is None:
        return -1
    window = int(window)
    if window < 0 or window < abs(nx - ny):
        raise WindowTooNarrow(f"window {window} excludes the corner for lengths {nx}, {ny}")
    return window


def _as_series(x) -> np.ndarray:
    x = np.ascontiguousarray(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValueError("expected a non-empty 1-D sequence")
    return x


def dtw(x: Sequence[float], y: Sequence[float], window: int | None = None) -> float:
    """DTW distance, optionally restricted to a Sakoe-Chiba band of half-width ``window``."""
    x, y = _as_series(x), _as_series(y)
    w = _check_window(len(x), len(y), window)
    return float(np.sqrt(_dtw_sq(x, y, w)))


def dtw_path(x: Sequence[float], y: Sequence[float], window: int | None = None):
    """Return ``(distance, path)``; path is an (L, 2) array of index pairs."""
    x, y = _as_series(x), _as_series(y)
    w = _check_window(len(x), len(y), window)
    acc = _dtw_acc(x, y, w)
    return float(np.sqrt(acc[-1, -1])), _dtw_backtrack(acc)


# ---------------------------------------------------------------- NCC / SBD


def ncc(x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Coefficient-normalized cross-correlation over lags -(T-1)..(T-1).

    Entry ``l + T - 1`` is ``sum_t x[t + l] * y[t] / (|x| |y|)``.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("ncc needs two 1-D sequences of equal length")
    den = np.linalg.norm(x) * np.linalg.norm(y)
    if den == 0:
        raise ZeroNorm("cross-correlation undefined for an all-zero series")
    return _cross_correlation(x, y) / den


def _cross_correlation(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    T = x.shape[0]
    if T < FFT_THRESHOLD:
        return np.correlate(x, y, "full")
    size = 1 << (2 * T - 1).bit_length()
    cc = np.fft.irfft(np.fft.rfft(x, size) * np.conj(np.fft.rfft(y, size)), size)
    return np.concatenate((cc[size - T + 1:], cc[:T]))


def shift(x: np.ndarray, lag: int) -> np.ndarray:
    """Shift right by ``lag`` (left if negative), zero-padding."""
    out = np.zeros_like(x)
    if lag >= 0:
        out[lag:] = x[: len(x) - lag]
    else:
        out[:lag] = x[-lag:]
    return out


def sbd(x: Sequence[float], y: Sequence[float]) -> float:
    """Shape-based distance, 1 minus the peak NCC; in [0, 2]."""
    d = 1.0 - float(np.max(ncc(x, y)))
    return 0.0 if -1e-12 <= d < 0 else d


def sbd_align(x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """SBD between ``x`` and ``y`` plus ``y`` shifted into best alignment with ``x``.

    An all-zero argument is treated as uncorrelated (distance 1, no shift).
    """
    den = np.linalg.norm(x) * np.linalg.norm(y)
    if den == 0:
        return 1.0, y.copy()
    cc = _cross_correlation(x, y) / den
    idx = int(np.argmax(cc))
    d = 1.0 - float(cc[idx])
    return max(d, 0.0), shift(y, idx - (len(x) - 1))


def sbd_similarity(data: SeriesMatrix, zero_norm: str = "raise") -> np.ndarray:
    """Negative SBD between all rows; the diagonal is left at 0 for the caller.

    ``zero_norm="uncorrelated"`` scores pairs involving an all-zero row as
    SBD 1 instead of raising.
    """
    return -_sbd_square(data.values, zero_norm)


def _sbd_square(values: np.ndarray, zero_norm: str = "raise") -> np.ndarray:
    if zero_norm not in ("raise", "uncorrelated"):
        raise ValueError("zero_norm must be 'raise' or 'uncorrelated'")
    n = values.shape[0]
    out = np.zeros((n, n))
    norms = np.linalg.norm(values, axis=1)
    if zero_norm == "raise" and np.any(norms == 0):
        raise ZeroNorm(f"row {int(np.argmin(norms))} is all zeros")
    for i in range(n):
        for j in range(i + 1, n):
            if norms[i] == 0 or norms[j] == 0:
                d = 1.0
            else:
                d = 1.0 - float(np.max(_cross_correlation(values[i], values[j]))) / (norms[i] * norms[j])
                d = 0.0 if d < 0 else d
            out[i, j] = out[j, i] = d
    return out


# ---------------------------------------------------------------- matrices


def pairwise_condensed(
    data: SeriesMatrix,
    metric: str = "dtw",
    window: int | None = None,
    zero_norm: str = "raise",
) -> CondensedDistanceMatrix:
    if data.n < 2:
        raise ValueError("need at least two series")
    if metric == "dtw":
        w = _check_window(data.T, data.T, window)
        entries = _pairwise_dtw(data.values, w)
    elif metric == "euclidean":
        v = data.values
        sq = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)
        entries = np.sqrt(sq[np.triu_indices(data.n, 1)])
    elif metric == "sbd":
        entries = _sbd_square(data.values, zero_norm)[np.triu_indices(data.n, 1)]
    else:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return CondensedDistanceMatrix(data.n, entries, metric, False)


def normalize_by_max(m: CondensedDistanceMatrix) -> CondensedDistanceMatrix:
    top = float(np.max(m.entries)) if m.entries.size else 0.0
    if top == 0:
        raise DegenerateMatrix("all pairwise distances are zero")
    entries = m.entries / top
    entries[m.entries == top] = 1.0
    return CondensedDistanceMatrix(m.n, entries, m.metric, True)
