"""
Local-share time series per directional O&D pair.

Missing shares (zero total passengers) are stored as NaN and never silently
treated as zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import MissingValues
from .ingest import AirportCategoryTable, LegCountLedger

TimePoint = tuple  # (year,) or (year, quarter)


class ODKey(NamedTuple):
    origin: str
    dest: str

    def __str__(self) -> str:
        return f"{self.origin}-{self.dest}"

    @classmethod
    def parse(cls, text: str) -> "ODKey":
        parts = [p for p in text.replace("->", "-").split("-") if p.strip()]
        if len(parts) != 2:
            raise ValueError(f"cannot parse O&D key {text!r}")
        return cls(parts[0].strip().upper(), parts[1].strip().upper())


def quarter_range(start: tuple[int, int], end: tuple[int, int]) -> list[tuple[int, int]]:
    """Inclusive list of (year, quarter) points from ``start`` to ``end``."""
    (y, q), out = start, []
    while (y, q) <= tuple(end):
        out.append((y, q))
        y, q = (y + 1, 1) if q == 4 else (y, q + 1)
    return out


DEFAULT_SPAN = ((2006, 1), (2024, 3))


@dataclass(frozen=True, eq=False)
class ShareSeries:
    key: ODKey
    index: tuple
    local: np.ndarray
    total: np.ndarray
    share: np.ndarray = field(default=None)

    def __post_init__(self):
        local = np.asarray(self.local, dtype=float)
        total = np.asarray(self.total, dtype=float)
        if not len(self.index) == len(local) == len(total):
            raise ValueError("index, local and total must have equal length")
        if np.any(local < 0) or np.any(total < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(local > total):
            raise ValueError("local exceeds total")
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(total > 0, local / np.where(total > 0, total, 1.0), np.nan)
        object.__setattr__(self, "index", tuple(tuple(p) for p in self.index))
        object.__setattr__(self, "local", local)
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "share", share)

    def __len__(self) -> int:
        return len(self.index)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.share)

    @property
    def is_quarterly(self) -> bool:
        return all(len(p) == 2 for p in self.index)

    def scaled(self, factor: float) -> "ShareSeries":
        return ShareSeries(self.key, self.index, self.local * factor, self.total * factor)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShareSeries):
            return NotImplemented
        return (
            self.key == other.key
            and self.index == other.index
            and np.array_equal(self.local, other.local)
            and np.array_equal(self.total, other.total)
        )


@dataclass(frozen=True)
class SelectionCriteria:
    activity_start: tuple[int, int] = (2021, 1)
    require_large_hub: bool = True
    min_share_exclusive: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.min_share_exclusive < 1.0:
            raise ValueError("min_share_exclusive must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class StandardizedSeries:
    key: ODKey
    values: np.ndarray


def build_quarterly_series(
    ledger: LegCountLedger, key: ODKey, span: tuple = DEFAULT_SPAN
) -> ShareSeries:
    points = quarter_range(*span)
    if not points:
        raise ValueError("empty span")
    key = ODKey(*key)
    local, total = [], []
    for y, q in points:
        nl, nt = ledger.get((key.origin, key.dest, y, q))
        local.append(nl)
        total.append(nl + nt)
    return ShareSeries(key, points, np.array(local), np.array(total))


def build_all_series(ledger: LegCountLedger, span: tuple = DEFAULT_SPAN) -> dict[ODKey, ShareSeries]:
    return {ODKey(o, d): build_quarterly_series(ledger, ODKey(o, d), span) for o, d in ledger.od_keys()}


def transfer_share(series: ShareSeries) -> np.ndarray:
    """Complement of the local share; NaN (missing) stays NaN."""
    return 1.0 - series.share


def aggregate_yearly(series: ShareSeries, drop_partial_final_year: bool = True) -> ShareSeries:
    """Sum quarterly counts per year; the share is recomputed from the sums."""
    if not series.is_quarterly:
        raise ValueError("aggregate_yearly needs a quarterly series")
    years: dict[int, list[int]] = {}
    for i, (y, _q) in enumerate(series.index):
        years.setdefault(y, []).append(i)
    order = sorted(years)
    if drop_partial_final_year and order and len(years[order[-1]]) < 4:
        order = order[:-1]
    local = [math.fsum(series.local[years[y]]) for y in order]
    total = [math.fsum(series.total[years[y]]) for y in order]
    return ShareSeries(series.key, [(y,) for y in order], np.array(local), np.array(total))


def select_od_pairs(
    all_series: Mapping[ODKey, ShareSeries],
    criteria: SelectionCriteria = SelectionCriteria(),
    categories: AirportCategoryTable | None = None,
) -> list[ODKey]:
    categories = categories or AirportCategoryTable()
    start = tuple(criteria.activity_start)
    kept = []
    for key, s in all_series.items():
        key = ODKey(*key)
        if criteria.require_large_hub and not (
            categories.is_large(key.origin) or categories.is_large(key.dest)
        ):
            continue
        window = [i for i, p in enumerate(s.index) if tuple(p) >= start]
        if not window:
            continue
        sh = s.share[window]
        if np.any(np.isnan(sh)) or np.any(sh <= criteria.min_share_exclusive):
            continue
        kept.append(key)
    return sorted(kept)


def standardize(series: ShareSeries | Sequence[float], key: ODKey | None = None) -> StandardizedSeries:
    """Z-score with the population standard deviation; constant series -> zeros."""
    if isinstance(series, ShareSeries):
        key, x = series.key, series.share
    else:
        x = np.asarray(series, dtype=float)
    if np.any(np.isnan(x)):
        raise MissingValues(f"series {key} has missing points")
    return StandardizedSeries(key, zscore(x))


def zscore(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0 or np.all(x == x[0]):
        return np.zeros_like(x)
    mu = x.mean()
    sd = np.sqrt(np.mean((x - mu) ** 2))
    if sd <= 1e-14 * max(1.0, abs(mu)):
        return np.zeros_like(x)
    return (x - mu) / sd


SERIES_COLUMNS = ["origin", "dest", "year", "quarter", "local", "total", "share"]


def write_series_table(series: Iterable[ShareSeries], fh, delimiter: str = ",") -> None:
    """One row per point; the quarter column is empty for yearly series and the
    share column is empty where missing."""
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow(SERIES_COLUMNS)
    for s in series:
        for p, lo, to, sh in zip(s.index, s.local, s.total, s.share):
            q = p[1] if len(p) == 2 else ""
            writer.writerow(
                [s.key.origin, s.key.dest, p[0], q, repr(float(lo)), repr(float(to)), "" if np.isnan(sh) else repr(float(sh))]
            )


def read_series_table(fh, delimiter: str = ",") -> dict[ODKey, ShareSeries]:
    rows: dict[ODKey, list] = {}
    for row in csv.DictReader(fh, delimiter=delimiter):
        key = ODKey(row["origin"], row["dest"])
        point = (int(row["year"]), int(row["quarter"])) if row["quarter"] else (int(row["year"]),)
        rows.setdefault(key, []).append((point, float(row["local"]), float(row["total"])))
    out = {}
    for key in sorted(rows):
        pts = rows[key]
        out[key] = ShareSeries(key, [p for p, _, _ in pts], np.array([p[1] for p in pts]), np.array([p[2] for p in pts]))
    return out
