"""
Parsing of itinerary (DB1B Market style) and segment (T100 style) extracts,
and accumulation of final-leg local/transfer passenger counts.

Inputs are delimiter-separated text with a header row. The routing column is
a colon-separated airport sequence such as ``ANC:SEA:ATL:MEM``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping

from .errors import EmptyFile, MalformedRow, MissingColumn

log = logging.getLogger(__name__)

CATEGORIES = ("Large", "Medium", "Small", "NonHub", "Unknown")

# BTS column names
DEFAULT_MARKET_SCHEMA = {
    "year": "Year",
    "quarter": "Quarter",
    "routing": "AirportGroup",
    "passengers": "Passengers",
}

DEFAULT_SEGMENT_SCHEMA = {
    "year": "YEAR",
    "month": "MONTH",
    "carrier": "UNIQUE_CARRIER",
    "origin": "ORIGIN",
    "dest": "DEST",
    "passengers": "PASSENGERS",
    "departures": "DEPARTURES_PERFORMED",
    "seats": "SEATS",
}


@dataclass(frozen=True)
class MarketItineraryRecord:
    year: int
    quarter: int
    routing: tuple[str, ...]
    passengers: float

    def __post_init__(self):
        if self.quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be 1..4, got {self.quarter}")
        if len(self.routing) < 2:
            raise ValueError("routing needs at least two airports")
        for a, b in zip(self.routing, self.routing[1:]):
            if a == b:
                raise ValueError(f"repeated consecutive airport {a}")
        if not self.passengers >= 0:
            raise ValueError(f"passengers must be >= 0, got {self.passengers}")

    @property
    def final_leg(self) -> tuple[str, str]:
        return self.routing[-2], self.routing[-1]

    @property
    def is_local(self) -> bool:
        return len(self.routing) == 2


@dataclass(frozen=True)
class SegmentRecord:
    year: int
    quarter: int
    carrier: str
    origin: str
    dest: str
    passengers: float
    departures: float
    seats: float

    def __post_init__(self):
        if self.quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be 1..4, got {self.quarter}")
        if self.origin == self.dest:
            raise ValueError(f"origin equals dest ({self.origin})")
        for name in ("passengers", "departures", "seats"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


class AirportCategoryTable:
    """Airport code -> hub category. Unlisted airports are ``Unknown``."""

    _ALIASES = {
        "large": "Large",
        "medium": "Medium",
        "small": "Small",
        "nonhub": "NonHub",
        "non-hub": "NonHub",
        "unknown": "Unknown",
    }

    def __init__(self, mapping: Mapping[str, str] | None = None):
        self._map: dict[str, str] = {}
        for code, cat in (mapping or {}).items():
            self[code] = cat

    def __setitem__(self, code: str, category: str) -> None:
        norm = self._ALIASES.get(category.strip().lower())
        if norm is None:
            raise ValueError(f"unknown airport category {category!r}")
        self._map[_norm_code(code)] = norm

    def __getitem__(self, code: str) -> str:
        return self._map.get(_norm_code(code), "Unknown")

    def __len__(self) -> int:
        return len(self._map)

    def is_large(self, code: str) -> bool:
        return self[code] == "Large"

    def items(self):
        return sorted(self._map.items())

    @classmethod
    def from_file(cls, path: str | Path, delimiter: str = ",") -> "AirportCategoryTable":
        """Read an ``airport,category`` file; a header row is optional."""
        table = cls()
        with open(path, newline="", encoding="utf-8-sig") as fh:
            for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
                if not row or not "".join(row).strip():
                    continue
                if len(row) < 2:
                    raise MalformedRow(lineno, "expected airport,category")
                code, cat = row[0], row[1]
                if lineno == 1 and cat.strip().lower() == "category":
                    continue
                try:
                    table[code] = cat
                except ValueError as exc:
                    raise MalformedRow(lineno, str(exc)) from None
        return table


def _norm_code(code: str) -> str:
    return code.strip().upper()


def month_to_quarter(month: int) -> int:
    if not 1 <= month <= 12:
        raise ValueError(f"invalid month {month}")
    return (month - 1) // 3 + 1


def _open_text(source: BinaryIO | bytes | str | Path) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8-sig")
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline="")


def _read_rows(source, schema: Mapping[str, str], delimiter: str) -> Iterator[tuple[int, dict[str, str]]]:
    fh = _open_text(source)
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFile("no header row")
        header = [h.strip() for h in header]
        col = {}
        for field, name in schema.items():
            if name not in header:
                raise MissingColumn(f"column {name!r} (for {field}) not in header")
            col[field] = header.index(name)
        for row in reader:
            lineno = reader.line_num
            if not row or not "".join(row).strip():
                continue
            if len(row) < len(header):
                yield lineno, None
                continue
            yield lineno, {field: row[i].strip() for field, i in col.items()}
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
        elif isinstance(fh, io.TextIOWrapper):
            fh.detach()


def _parse_rows(source, schema, delimiter, strict, errors, build):
    records = []
    skipped = 0
    for lineno, fields in _read_rows(source, schema, delimiter):
        try:
            if fields is None:
                raise ValueError("too few fields")
            records.append(build(fields))
        except ValueError as exc:
            err = MalformedRow(lineno, str(exc))
            if strict:
                raise err from None
            skipped += 1
            if errors is not None:
                errors.append(err)
    if skipped:
        log.warning("skipped %d malformed rows", skipped)
    return records


def _number(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def parse_market_file(
    source: BinaryIO | bytes | str | Path,
    schema: Mapping[str, str] | None = None,
    *,
    delimiter: str = ",",
    strict: bool = True,
    errors: list | None = None,
) -> list[MarketItineraryRecord]:
    """Parse an itinerary extract into records, in file order.

    With ``strict=False`` malformed rows are skipped; each one is appended to
    ``errors`` (if given) as a :class:`MalformedRow`.
    """
    schema = dict(schema or DEFAULT_MARKET_SCHEMA)

    def build(f):
        routing = tuple(_norm_code(a) for a in f["routing"].split(":"))
        if any(not a for a in routing):
            raise ValueError(f"empty airport code in routing {f['routing']!r}")
        return MarketItineraryRecord(
            year=int(f["year"]),
            quarter=int(f["quarter"]),
            routing=routing,
            passengers=_number(f["passengers"]),
        )

    return _parse_rows(source, schema, delimiter, strict, errors, build)


def parse_segment_file(
    source: BinaryIO | bytes | str | Path,
    schema: Mapping[str, str] | None = None,
    *,
    delimiter: str = ",",
    strict: bool = True,
    errors: list | None = None,
) -> list[SegmentRecord]:
    """Parse a segment extract. The schema may name either a ``month`` or a
    ``quarter`` column; months are mapped to quarters. No aggregation."""
    schema = dict(schema or DEFAULT_SEGMENT_SCHEMA)
    if ("month" in schema) == ("quarter" in schema):
        raise ValueError("segment schema needs exactly one of 'month' or 'quarter'")

    def build(f):
        if "month" in schema:
            quarter = month_to_quarter(int(f["month"]))
        else:
            quarter = int(f["quarter"])
        return SegmentRecord(
            year=int(f["year"]),
            quarter=quarter,
            carrier=f["carrier"].upper(),
            origin=_norm_code(f["origin"]),
            dest=_norm_code(f["dest"]),
            passengers=_number(f["passengers"]),
            departures=_number(f["departures"]),
            seats=_number(f["seats"]),
        )

    return _parse_rows(source, schema, delimiter, strict, errors, build)


def write_market_file(
    records: Iterable[MarketItineraryRecord],
    fh,
    schema: Mapping[str, str] | None = None,
    delimiter: str = ",",
) -> None:
    """Serialize records in the same layout :func:`parse_market_file` reads."""
    schema = dict(schema or DEFAULT_MARKET_SCHEMA)
    fields = ["year", "quarter", "routing", "passengers"]
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow([schema[f] for f in fields])
    for r in records:
        writer.writerow([r.year, r.quarter, ":".join(r.routing), repr(float(r.passengers))])


LegKey = tuple[str, str, int, int]


class LegCountLedger:
    """Final-leg passenger counts per (origin, dest, year, quarter).

    Contributions are kept per key and summed with :func:`math.fsum`, so the
    totals are correctly rounded and independent of insertion or merge order.
    """

    def __init__(self):
        self._local: dict[LegKey, list[float]] = defaultdict(list)
        self._transfer: dict[LegKey, list[float]] = defaultdict(list)

    def add(self, key: LegKey, passengers: float, local: bool) -> None:
        (self._local if local else self._transfer)[key].append(float(passengers))
        # keep both sides present so keys() sees every leg
        (self._transfer if local else self._local)[key]

    def merge(self, other: "LegCountLedger") -> "LegCountLedger":
        out = LegCountLedger()
        for src in (self, other):
            for k, v in src._local.items():
                out._local[k].extend(v)
            for k, v in src._transfer.items():
                out._transfer[k].extend(v)
        return out

    def __contains__(self, key) -> bool:
        return key in self._local

    def __getitem__(self, key: LegKey) -> tuple[float, float]:
        if key not in self._local:
            raise KeyError(key)
        return math.fsum(self._local[key]), math.fsum(self._transfer[key])

    def get(self, key: LegKey, default=(0.0, 0.0)) -> tuple[float, float]:
        return self[key] if key in self else default

    def __len__(self) -> int:
        return len(self._local)

    def keys(self) -> list[LegKey]:
        return sorted(self._local)

    def items(self):
        return [(k, self[k]) for k in self.keys()]

    def od_keys(self) -> list[tuple[str, str]]:
        return sorted({(o, d) for o, d, _, _ in self._local})

    def as_dict(self) -> dict[LegKey, tuple[float, float]]:
        return dict(self.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, LegCountLedger):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def total_passengers(self) -> float:
        return math.fsum(x for v in self._local.values() for x in v) + math.fsum(
            x for v in self._transfer.values() for x in v
        )

    def write_csv(self, fh, delimiter: str = ",") -> None:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["origin", "dest", "year", "quarter", "n_local", "n_transfer"])
        for (o, d, y, q), (nl, nt) in self.items():
            writer.writerow([o, d, y, q, repr(nl), repr(nt)])

    @classmethod
    def read_csv(cls, fh, delimiter: str = ",") -> "LegCountLedger":
        ledger = cls()
        reader = csv.DictReader(fh, delimiter=delimiter)
        for row in reader:
            key = (row["origin"], row["dest"], int(row["year"]), int(row["quarter"]))
            ledger.add(key, float(row["n_local"]), local=True)
            ledger.add(key, float(row["n_transfer"]), local=False)
        return ledger


def accumulate_leg_counts(records: Iterable[MarketItineraryRecord]) -> LegCountLedger:
    """Attribute each itinerary's passengers to its final leg: local when the
    routing is exactly that leg, transfer otherwise."""
    ledger = LegCountLedger()
    for r in records:
        o, d = r.final_leg
        ledger.add((o, d, r.year, r.quarter), r.passengers, local=r.is_local)
    return ledger
