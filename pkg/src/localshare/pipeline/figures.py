"""
Plain SVG figures. Output is a deterministic function of the inputs (fixed
number formatting, no timestamps), so figures can be hashed and diffed.
"""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from ..errors import MissingRawSeries
from ..validate import gini

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
ACCENT = "#d62728"
GREY = "#9a9a9a"
Z95 = 1.96


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Panel:
    """Maps data coordinates into a rectangle of the page."""

    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim = xlim
        lo, hi = ylim
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.ylim = (lo, hi)

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo or 1) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo) * self.h

    def points(self, xs, ys) -> str:
        return " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys))

    def frame(self, title: str, x_labels: Sequence[str] = ()) -> list[str]:
        out = [
            f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" height="{_f(self.h)}" '
            'fill="none" stroke="#333" stroke-width="0.8"/>',
            f'<text x="{_f(self.x0)}" y="{_f(self.y0 - 6)}" font-size="11">{escape(title)}</text>',
        ]
        lo, hi = self.ylim
        for v in np.linspace(lo, hi, 3):
            out.append(
                f'<text x="{_f(self.x0 - 4)}" y="{_f(self.py(v) + 3)}" font-size="8" text-anchor="end">{v:.2f}</text>'
            )
        if len(x_labels):
            step = max(1, len(x_labels) // 6)
            for i in range(0, len(x_labels), step):
                out.append(
                    f'<text x="{_f(self.px(i))}" y="{_f(self.y0 + self.h + 11)}" font-size="8" '
                    f'text-anchor="middle">{escape(str(x_labels[i]))}</text>'
                )
        return out


def _document(width: float, height: float, body: list[str], title: str) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}" font-family="sans-serif">\n'
        f"<title>{escape(title)}</title>\n"
    )
    return head + "\n".join(body) + "\n</svg>\n"


def cluster_mean_band(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise mean and normal 95% band (population sd over sqrt(m))."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m = values.shape[0]
    mean = values.mean(axis=0)
    half = Z95 * values.std(axis=0) / np.sqrt(m)
    return mean, mean - half, mean + half


def plot_cluster_means(
    groups: Mapping[int, np.ndarray],
    x_labels: Sequence[str] = (),
    title: str = "Cluster means with 95% CI",
) -> str:
    """One mean curve plus shaded CI band per cluster, on shared axes."""
    if any(np.asarray(v).size == 0 for v in groups.values()):
        raise ValueError("every cluster must be non-empty")
    bands = {c: cluster_mean_band(v) for c, v in sorted(groups.items())}
    lo = min(b[1].min() for b in bands.values())
    hi = max(b[2].max() for b in bands.values())
    T = len(next(iter(bands.values()))[0])
    panel = _Panel(50, 30, 520, 300, (0, T - 1), (lo, hi))
    body = panel.frame(title, x_labels)
    xs = np.arange(T)
    for i, (c, (mean, blo, bhi)) in enumerate(bands.items()):
        color = PALETTE[i % len(PALETTE)]
        size = np.atleast_2d(groups[c]).shape[0]
        poly = panel.points(list(xs) + list(xs[::-1]), list(bhi) + list(blo[::-1]))
        body.append(f'<polygon class="ci-band" data-cluster="{c}" points="{poly}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        body.append(
            f'<polyline class="cluster-mean" data-cluster="{c}" data-size="{size}" points="{panel.points(xs, mean)}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        body.append(
            f'<text class="legend" x="590" y="{_f(40 + 14 * i)}" font-size="10" fill="{color}">cluster {c} (n={size})</text>'
        )
    height = max(360, 50 + 14 * len(bands))
    return _document(720, height, body, title)


def top_representatives(members: Sequence, totals: Mapping, top_n: int) -> list:
    """Members with the largest total passengers; ties broken by key."""
    return sorted(members, key=lambda k: (-totals[k], str(k)))[:top_n]


def plot_representatives(
    labels: Sequence[int],
    keys: Sequence,
    values: np.ndarray,
    totals: Mapping,
    top_n: int = 5,
    highlight: Sequence = (),
    x_labels: Sequence[str] = (),
    title: str = "Top total pax O&D pairs per cluster",
) -> str:
    """Small multiples, one per cluster: the ``top_n`` busiest members as
    labelled lines, highlighted members in the accent colour."""
    labels = np.asarray(labels)
    keys = list(keys)
    values = np.asarray(values, dtype=float)
    row = {k: i for i, k in enumerate(keys)}
    hl = {str(h) for h in highlight}
    clusters = sorted(np.unique(labels).tolist())
    ncol = 3
    pw, ph = 220, 140
    nrow = (len(clusters) + ncol - 1) // ncol
    lo, hi = float(values.min()), float(values.max())
    T = values.shape[1]
    body = []
    for idx, c in enumerate(clusters):
        r, col = divmod(idx, ncol)
        panel = _Panel(50 + col * (pw + 60), 40 + r * (ph + 50), pw, ph, (0, T - 1), (lo, hi))
        members = [keys[i] for i in np.flatnonzero(labels == c)]
        body += panel.frame(f"cluster {c} (n={len(members)})", x_labels)
        top = top_representatives(members, totals, top_n)
        drawn = top + [k for k in members if str(k) in hl and k not in top]
        for j, k in enumerate(drawn):
            accent = str(k) in hl
            stroke = ACCENT if accent else GREY
            cls = "highlight" if accent else "representative"
            body.append(
                f'<polyline class="{cls}" data-key={quoteattr(str(k))} points="{panel.points(range(T), values[row[k]])}" '
                f'fill="none" stroke="{stroke}" stroke-width="{1.6 if accent else 0.9}"/>'
            )
            body.append(
                f'<text x="{_f(panel.x0 + panel.w + 3)}" y="{_f(panel.y0 + 9 + 9 * j)}" font-size="7" fill="{stroke}">{escape(str(k))}</text>'
            )
    width = 50 + ncol * (pw + 60)
    height = 60 + nrow * (ph + 50)
    return _document(width, height, body, title)


def plot_size_distribution(results: Sequence[tuple[str, Sequence[int]]], title: str = "O&D pairs per cluster") -> str:
    """Bar chart of cluster sizes for each (method name, sizes) entry, in the
    order given, annotated with the Gini coefficient."""
    if not results:
        raise ValueError("need at least one result")
    pw, ph = 560, 110
    body = []
    for i, (name, sizes) in enumerate(results):
        sizes = [int(s) for s in sizes]
        g = gini(sizes)
        panel = _Panel(60, 40 + i * (ph + 50), pw, ph, (0, len(sizes)), (0, max(sizes)))
        body += panel.frame(name)
        bw = pw / len(sizes)
        for j, s in enumerate(sizes):
            y = panel.py(s)
            body.append(
                f'<rect class="bar" data-size="{s}" x="{_f(panel.px(j) + 0.1 * bw)}" y="{_f(y)}" '
                f'width="{_f(0.8 * bw)}" height="{_f(panel.y0 + ph - y)}" fill="{PALETTE[i % len(PALETTE)]}"/>'
            )
        body.append(
            f'<text class="gini" data-gini="{g:.4f}" x="{_f(panel.x0 + pw - 4)}" y="{_f(panel.y0 - 6)}" '
            f'font-size="10" text-anchor="end">Gini = {g:.4f}</text>'
        )
    return _document(700, 60 + len(results) * (ph + 50), body, title)


def plot_original_magnitude_overlay(
    labels: Sequence[int],
    keys: Sequence,
    raw: Mapping,
    cluster: int,
    x_labels: Sequence[str] = (),
    highlight: Sequence = (),
    title: str | None = None,
) -> str:
    """Members of ``cluster`` (labels from a standardized run) drawn in raw
    share units on a fixed [0, 1] axis."""
    labels = np.asarray(labels)
    members = [k for k, lab in zip(keys, labels) if lab == cluster]
    missing = [k for k in members if k not in raw]
    if missing:
        raise MissingRawSeries(f"no raw series for {', '.join(map(str, missing))}")
    T = len(next(iter(raw[m] for m in members))) if members else 2
    panel = _Panel(50, 30, 520, 300, (0, T - 1), (0.0, 1.0))
    title = title or f"cluster {cluster} in original local-share units (n={len(members)})"
    body = panel.frame(title, x_labels)
    hl = {str(h) for h in highlight}
    for k in members:
        ys = np.clip(np.asarray(raw[k], dtype=float), 0.0, 1.0)
        accent = str(k) in hl
        body.append(
            f'<polyline class="{"highlight" if accent else "member"}" data-key={quoteattr(str(k))} '
            f'points="{panel.points(range(T), ys)}" fill="none" stroke="{ACCENT if accent else GREY}" '
            f'stroke-width="{1.6 if accent else 0.8}"/>'
        )
    return _document(720, 360, body, title)
