"""
Synthetic data: labelled shape families for recovery checks, and a
deterministic itinerary extract that exercises the whole pipeline.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .cluster.result import make_rng
from .distance import SeriesMatrix
from .shares import quarter_range, zscore

SHAPES = ("rise", "fall", "rise-plateau")


def shape_template(kind: str, T: int) -> np.ndarray:
    """Local-share-like curve in [0.2, 0.8] sampled at ``T`` even points."""
    return shape_curve(kind, np.linspace(0.0, 1.0, T))


def shape_curve(kind: str, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if kind == "rise":
        return 0.2 + 0.6 * t
    if kind == "fall":
        return 0.8 - 0.6 * t
    if kind == "rise-plateau":
        return 0.2 + 0.6 * np.minimum(t / 0.15, 1.0)
    if kind == "plateau-fall":
        return 0.8 - 0.6 * np.clip((t - 0.6) / 0.4, 0.0, 1.0)
    if kind == "dip":
        return 0.8 - 0.6 * np.exp(-((t - 0.5) ** 2) / 0.02)
    if kind == "step-up":
        return np.where(t < 0.5, 0.3, 0.7)
    if kind == "step-down":
        return np.where(t < 0.5, 0.7, 0.3)
    if kind == "hump":
        return 0.2 + 0.6 * np.exp(-((t - 0.5) ** 2) / 0.02)
    if kind == "flat":
        return np.full(t.shape, 0.5)
    raise ValueError(f"unknown shape {kind!r}")


def shape_dataset(
    n_per_shape: int = 20,
    T: int = 19,
    sigma: float = 0.05,
    seed: int = 7,
    shapes=SHAPES,
    standardized: bool = True,
) -> tuple[SeriesMatrix, np.ndarray]:
    """Noisy copies of each template; returns the matrix and true labels."""
    rng = make_rng(seed)
    rows, truth = [], []
    for label, kind in enumerate(shapes):
        base = shape_template(kind, T)
        for _ in range(n_per_shape):
            x = base + sigma * rng.standard_normal(T)
            rows.append(zscore(x) if standardized else x)
            truth.append(label)
    keys = [f"S{i:03d}" for i in range(len(rows))]
    return SeriesMatrix(np.array(rows), keys), np.array(truth)


FIXTURE_SHAPES = ("rise", "fall", "rise-plateau", "plateau-fall", "step-up", "step-down", "dip", "hump", "flat")

FIXTURE_CATEGORIES = {
    "ATL": "large", "ORD": "large", "DFW": "large", "DEN": "large", "MSP": "large",
    "DTW": "large", "SEA": "large", "BWI": "large", "MCO": "large", "DCA": "large",
    "MEM": "medium", "ANC": "medium", "ALB": "small", "BOI": "small", "PVD": "medium",
    "CHS": "medium", "GRR": "small", "TUL": "small", "OKC": "medium", "DSM": "small",
    "SAV": "small", "MSN": "small", "BTV": "nonhub", "EYW": "nonhub", "PSC": "nonhub",
}


def market_fixture(
    n_pairs: int = 96,
    span=((2006, 1), (2024, 3)),
    seed: int = 2024,
) -> list:
    """Deterministic itinerary records for ``n_pairs`` selectable O&D pairs
    plus a handful that the default selection rules reject.

    Every pair's quarterly local share follows one of ``FIXTURE_SHAPES``
    rescaled to a pair-specific band inside [0.05, 0.95]. Each quarter emits
    one local itinerary and two connecting itineraries ending on the pair.
    """
    from .ingest import MarketItineraryRecord

    rng = make_rng(seed)
    large = sorted(a for a, c in FIXTURE_CATEGORIES.items() if c == "large")
    others = sorted(a for a, c in FIXTURE_CATEGORIES.items() if c != "large")
    nonhub = sorted(a for a, c in FIXTURE_CATEGORIES.items() if c == "nonhub")
    quarters = quarter_range(*span)
    t = np.linspace(0.0, 1.0, len(quarters))

    # rejected by selection: non-hub only, and a pair that loses all local traffic in 2022Q3
    rejects = [
        (nonhub[0], nonhub[1], "rise", "nonhub"),
        (nonhub[2], nonhub[0], "fall", "nonhub"),
        ("ATL", "PSC", "flat", "gap"),
        ("PSC", "ATL", "hump", "gap"),
    ]
    pairs = []
    seen = {(o, d) for o, d, _, _ in rejects}
    while len(pairs) < n_pairs:
        hub = large[int(rng.integers(len(large)))]
        other = (large + others)[int(rng.integers(len(large) + len(others)))]
        if other == hub:
            continue
        o, d = (hub, other) if rng.random() < 0.5 else (other, hub)
        if (o, d) in seen:
            continue
        seen.add((o, d))
        pairs.append((o, d, FIXTURE_SHAPES[len(pairs) % len(FIXTURE_SHAPES)], "ok"))
    pairs += rejects

    records = []
    for o, d, kind, tag in pairs:
        lo = 0.05 + 0.45 * rng.random()
        hi = lo + (0.95 - lo) * (0.3 + 0.7 * rng.random())
        curve = (shape_curve(kind, t) - 0.2) / 0.6
        share = lo + (hi - lo) * curve + 0.02 * rng.standard_normal(len(t))
        share = np.clip(share, 0.02, 0.98)
        volume = 400 + 3600 * rng.random()
        via = [a for a in large + others if a not in (o, d)]
        for qi, (y, q) in enumerate(quarters):
            total = max(20.0, round(volume * (1 + 0.15 * np.sin(np.pi * q / 2)) * (1 + 0.05 * rng.standard_normal())))
            local = float(round(share[qi] * total))
            if tag == "gap" and (y, q) == (2022, 3):
                local = 0.0
            transfer = total - local
            t1 = float(round(transfer * (0.4 + 0.3 * rng.random())))
            a = via[int(rng.integers(len(via)))]
            b = via[int(rng.integers(len(via)))]
            records.append(MarketItineraryRecord(y, q, (o, d), local))
            records.append(MarketItineraryRecord(y, q, (a, o, d), t1))
            if b != a:
                records.append(MarketItineraryRecord(y, q, (b, a, o, d), transfer - t1))
            else:
                records.append(MarketItineraryRecord(y, q, (b, o, d), transfer - t1))
    return records


def write_fixture(directory: str | Path, n_pairs: int = 96, seed: int = 2024) -> dict[str, Path]:
    """Write the bundled fixture files; returns their paths by role."""
    from .ingest import write_market_file

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = market_fixture(n_pairs=n_pairs, seed=seed)
    paths = {
        "market": directory / "fixture_market.csv",
        "categories": directory / "fixture_categories.csv",
        "segments": directory / "fixture_segments.csv",
    }
    with open(paths["market"], "w", newline="", encoding="utf-8") as fh:
        write_market_file(records, fh)
    with open(paths["categories"], "w", newline="", encoding="utf-8") as fh:
        fh.write("airport,category\n")
        for code, cat in sorted(FIXTURE_CATEGORIES.items()):
            fh.write(f"{code},{cat}\n")
    _write_segments(records, paths["segments"], seed)
    return paths


def _write_segments(records, path: Path, seed: int) -> None:
    rng = make_rng(seed + 1)
    legs: dict = {}
    for r in records:
        if len(r.routing) == 2 and r.year >= 2021:
            key = (r.year, r.quarter, r.routing[0], r.routing[1])
            legs[key] = legs.get(key, 0.0) + r.passengers
    carriers = ("DL", "UA", "AA", "WN")
    buf = io.StringIO()
    buf.write("YEAR,MONTH,UNIQUE_CARRIER,ORIGIN,DEST,PASSENGERS,DEPARTURES_PERFORMED,SEATS\n")
    for (y, q, a, b), pax in sorted(legs.items()):
        carrier = carriers[int(rng.integers(len(carriers)))]
        for m in range(3 * q - 2, 3 * q + 1):
            p = 10 * round(pax / 3)  # sample expanded to full counts
            deps = max(1, round(p / 110))
            buf.write(f"{y},{m},{carrier},{a},{b},{p},{deps},{deps * 140}\n")
    path.write_text(buf.getvalue(), encoding="utf-8")
