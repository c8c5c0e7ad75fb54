"""Reading DOE-417 annual summaries exported to the normalized CSV schema.

Each data row becomes an :class:`Event`. Demand loss and customer counts are
kept as :class:`SentinelValue` so the difference between a reported zero, an
``Unknown`` and an ``N/A`` survives all the way to the measure filters.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DuplicateEventId,
    InputError,
    InvalidDate,
    InvalidRecord,
    MalformedHeader,
    RowArityMismatch,
    UnparsableValue,
)

__all__ = [
    "HEADER",
    "ALERT_CRITERIA_FIRST_YEAR",
    "RawRecord",
    "SentinelKind",
    "SentinelValue",
    "Event",
    "Provenance",
    "EventDataset",
    "parse_annual_summary",
    "parse_sentinel",
    "normalize_record",
    "load_dataset",
    "dump_dataset_json",
    "read_dataset_json",
    "dataset_to_csv",
]

HEADER: tuple[str, ...] = (
    "Year",
    "Date Event Began",
    "Time Event Began",
    "Date of Restoration",
    "Time of Restoration",
    "Area Affected",
    "NERC Region",
    "Alert Criteria",
    "Event Type",
    "Demand Loss (MW)",
    "Number of Customers Affected",
)

ALERT_CRITERIA_FIRST_YEAR = 2015

_DATE_FORMATS = ("%m/%d/%Y", "%Y-%m-%d")
_TIME_FORMATS = ("%H:%M", "%H:%M:%S", "%I:%M %p", "%I:%M:%S %p")
# Restoration cells in the DOE files sometimes carry words instead of dates.
_UNKNOWN_DATE_TOKENS = frozenset({"", "unknown", "ongoing", "n/a", "none"})
_NUMBER = re.compile(r"^\d+(?:\.\d*)?$|^\.\d+$")


@dataclass(frozen=True)
class RawRecord:
    year: int | None
    row_index: int
    fields: tuple[tuple[str, str], ...]

    def get(self, column: str) -> str:
        for name, value in self.fields:
            if name == column:
                return value
        raise KeyError(column)


class SentinelKind(str, Enum):
    ZERO = "zero"
    POSITIVE = "positive"
    UNKNOWN = "unknown"
    NOT_APPLICABLE = "n/a"
    NONE_ENTRY = "none"
    MISSING = "missing"


@dataclass(frozen=True)
class SentinelValue:
    kind: SentinelKind
    magnitude: float | None = None

    def __post_init__(self) -> None:
        if self.kind is SentinelKind.POSITIVE:
            if self.magnitude is None or not self.magnitude > 0:
                raise ValueError(f"positive sentinel needs magnitude > 0, got {self.magnitude!r}")
        elif self.magnitude is not None:
            raise ValueError(f"{self.kind.value} sentinel carries no magnitude")

    def to_text(self) -> str:
        """Inverse of :func:`parse_sentinel` for the canonical spellings."""
        if self.kind is SentinelKind.POSITIVE:
            m = self.magnitude
            return str(int(m)) if float(m).is_integer() else repr(m)
        return {
            SentinelKind.ZERO: "0",
            SentinelKind.UNKNOWN: "Unknown",
            SentinelKind.NOT_APPLICABLE: "N/A",
            SentinelKind.NONE_ENTRY: "None",
            SentinelKind.MISSING: "",
        }[self.kind]

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "magnitude": self.magnitude}

    @classmethod
    def from_json(cls, obj: dict) -> "SentinelValue":
        return cls(SentinelKind(obj["kind"]), obj.get("magnitude"))


@dataclass(frozen=True)
class Event:
    event_id: str
    year: int
    began: datetime | None
    restored: datetime | None
    area: str
    nerc_region: str
    raw_event_type: str
    alert_criteria: str | None
    demand_loss: SentinelValue
    customers_affected: SentinelValue
    # Date part alone; survives when the time cell is blank.
    began_date: date | None = None
    restored_date: date | None = None

    def to_json(self) -> dict:
        return {
            "event_id": self.event_id,
            "year": self.year,
            "began": _fmt_ts(self.began),
            "began_date": _fmt_date(self.began_date),
            "restored": _fmt_ts(self.restored),
            "restored_date": _fmt_date(self.restored_date),
            "area": self.area,
            "nerc_region": self.nerc_region,
            "raw_event_type": self.raw_event_type,
            "alert_criteria": self.alert_criteria,
            "demand_loss": self.demand_loss.to_json(),
            "customers_affected": self.customers_affected.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Event":
        return cls(
            event_id=obj["event_id"],
            year=int(obj["year"]),
            began=_parse_iso_ts(obj.get("began")),
            restored=_parse_iso_ts(obj.get("restored")),
            area=obj.get("area", ""),
            nerc_region=obj.get("nerc_region", ""),
            raw_event_type=obj["raw_event_type"],
            alert_criteria=obj.get("alert_criteria"),
            demand_loss=SentinelValue.from_json(obj["demand_loss"]),
            customers_affected=SentinelValue.from_json(obj["customers_affected"]),
            began_date=_parse_iso_date(obj.get("began_date")),
            restored_date=_parse_iso_date(obj.get("restored_date")),
        )


@dataclass(frozen=True)
class Provenance:
    file: str
    year: int
    rows: int
    rejected: int = 0


@dataclass(frozen=True)
class EventDataset:
    events: tuple[Event, ...] = ()
    provenance: tuple[Provenance, ...] = ()
    ingest_warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for ev in self.events:
            if ev.event_id in seen:
                raise DuplicateEventId(f"duplicate event_id {ev.event_id!r}")
            seen.add(ev.event_id)
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.event_id)))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "ingest_warnings", tuple(self.ingest_warnings))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def select(self, predicate) -> "EventDataset":
        return EventDataset(
            tuple(e for e in self.events if predicate(e)), self.provenance, self.ingest_warnings
        )

    def select_years(self, start: int, end: int) -> "EventDataset":
        return self.select(lambda e: start <= e.year <= end)


def _fmt_ts(ts: datetime | None) -> str | None:
    return None if ts is None else ts.strftime("%Y-%m-%dT%H:%M")


def _fmt_date(d: date | None) -> str | None:
    return None if d is None else d.isoformat()


def _parse_iso_ts(text: str | None) -> datetime | None:
    return None if text is None else datetime.strptime(text, "%Y-%m-%dT%H:%M")


def _parse_iso_date(text: str | None) -> date | None:
    return None if text is None else date.fromisoformat(text)


def _check_header(header: Sequence[str]) -> tuple[str, ...]:
    cols = tuple(c.strip().lstrip("﻿").strip() for c in header)
    if len(set(cols)) != len(cols) or set(cols) != set(HEADER):
        missing = sorted(set(HEADER) - set(cols))
        extra = sorted(set(cols) - set(HEADER))
        raise MalformedHeader(f"header does not match schema (missing={missing}, unexpected={extra})")
    return cols


def parse_annual_summary(
    content: str,
    year: int | None = None,
    *,
    strict: bool = True,
    warnings: list[str] | None = None,
) -> list[RawRecord]:
    """Split a normalized annual summary into raw records.

    ``row_index`` is the 1-based position of the row after the header. Blank
    rows are skipped but still consume their position, so indices stay tied
    to the file. In lenient mode rows with the wrong cell count are dropped
    and described in ``warnings``.
    """
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeader("empty file: no header row") from None
    cols = _check_header(header)

    records: list[RawRecord] = []
    for row_index, cells in enumerate(reader, start=1):
        if not any(c.strip() for c in cells):
            continue
        if len(cells) != len(cols):
            err = RowArityMismatch(
                f"expected {len(cols)} cells, found {len(cells)}", row_index=row_index
            )
            if strict:
                raise err
            if warnings is not None:
                warnings.append(f"skipped: {err}")
            continue
        records.append(
            RawRecord(year, row_index, tuple((c, v.strip()) for c, v in zip(cols, cells)))
        )
    return records


def parse_sentinel(raw: str, field: str = "demand") -> SentinelValue:
    """Classify a demand-loss or customers-affected cell.

    >>> parse_sentinel("1,250").magnitude
    1250.0
    """
    if field not in ("demand", "customers"):
        raise ValueError(f"field must be 'demand' or 'customers', got {field!r}")
    text = raw.strip()
    low = text.lower()
    if low == "":
        return SentinelValue(SentinelKind.MISSING)
    if low == "zero":
        return SentinelValue(SentinelKind.ZERO)
    if low == "unknown":
        return SentinelValue(SentinelKind.UNKNOWN)
    if low == "n/a":
        return SentinelValue(SentinelKind.NOT_APPLICABLE)
    if low == "none":
        return SentinelValue(SentinelKind.NONE_ENTRY)
    digits = text.replace(",", "")
    if _NUMBER.match(digits):
        value = float(digits)
        if value == 0:
            return SentinelValue(SentinelKind.ZERO)
        return SentinelValue(SentinelKind.POSITIVE, value)
    raise UnparsableValue(raw, field)


def _parse_date(text: str, column: str) -> date | None:
    if text.lower() in _UNKNOWN_DATE_TOKENS:
        return None
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    raise InvalidDate(f"{column}: cannot parse date {text!r}")


def _parse_time(text: str, column: str) -> tuple[int, int] | None:
    if text.lower() in _UNKNOWN_DATE_TOKENS:
        return None
    for fmt in _TIME_FORMATS:
        try:
            t = datetime.strptime(text.upper(), fmt)
            return t.hour, t.minute
        except ValueError:
            pass
    raise InvalidDate(f"{column}: cannot parse time {text!r}")


def _timestamp(d: date | None, hm: tuple[int, int] | None) -> datetime | None:
    if d is None or hm is None:
        return None
    return datetime(d.year, d.month, d.day, hm[0], hm[1])


def make_event_id(year: int, row_index: int, began_date: date | None) -> str:
    digest = hashlib.sha1((began_date.isoformat() if began_date else "").encode()).hexdigest()
    return f"{year}-{row_index:05d}-{digest[:8]}"


def normalize_record(raw: RawRecord, year_range: tuple[int, int] | None = None) -> Event:
    """Turn a :class:`RawRecord` into a validated :class:`Event`.

    The year comes from the record's file year when one was given, otherwise
    from the ``Year`` cell. A non-empty ``Year`` cell that disagrees with the
    file year is rejected.
    """
    try:
        year_cell = raw.get("Year")
        cell_year = None
        if year_cell:
            try:
                cell_year = int(year_cell)
            except ValueError:
                raise InvalidRecord(f"Year: not an integer: {year_cell!r}") from None
        if raw.year is not None and cell_year is not None and raw.year != cell_year:
            raise InvalidRecord(f"Year cell {cell_year} disagrees with file year {raw.year}")
        year = raw.year if raw.year is not None else cell_year
        if year is None:
            raise InvalidRecord("no year: Year cell empty and no file year given")
        if year_range is not None and not year_range[0] <= year <= year_range[1]:
            raise InvalidRecord(f"year {year} outside {year_range[0]}-{year_range[1]}")

        began_date = _parse_date(raw.get("Date Event Began"), "Date Event Began")
        began = _timestamp(began_date, _parse_time(raw.get("Time Event Began"), "Time Event Began"))
        restored_date = _parse_date(raw.get("Date of Restoration"), "Date of Restoration")
        restored = _timestamp(
            restored_date, _parse_time(raw.get("Time of Restoration"), "Time of Restoration")
        )

        alert = raw.get("Alert Criteria") or None
        if alert is not None and year < ALERT_CRITERIA_FIRST_YEAR:
            raise InvalidRecord(
                f"alert criteria present in {year}; the field exists from {ALERT_CRITERIA_FIRST_YEAR}"
            )

        return Event(
            event_id=make_event_id(year, raw.row_index, began_date),
            year=year,
            began=began,
            restored=restored,
            area=raw.get("Area Affected"),
            nerc_region=raw.get("NERC Region"),
            raw_event_type=raw.get("Event Type"),
            alert_criteria=alert,
            demand_loss=parse_sentinel(raw.get("Demand Loss (MW)"), "demand"),
            customers_affected=parse_sentinel(raw.get("Number of Customers Affected"), "customers"),
            began_date=began_date,
            restored_date=restored_date,
        )
    except InputError as err:
        if err.row_index is None:
            err.row_index = raw.row_index
        raise


def _read_text(path: Path) -> str:
    return path.read_text(encoding="utf-8-sig")


def _load_one(
    path: Path, strict: bool, year_range: tuple[int, int] | None
) -> tuple[list[Event], list[Provenance], list[str]]:
    name = str(path)
    warnings: list[str] = []
    records = parse_annual_summary(_read_text(path), None, strict=strict, warnings=warnings)
    rejected = len(warnings)
    events: list[Event] = []
    rows_per_year: dict[int, int] = {}
    for rec in records:
        try:
            ev = normalize_record(rec, year_range)
        except InputError as err:
            if strict:
                raise
            warnings.append(f"skipped: {err}")
            rejected += 1
            continue
        events.append(ev)
        rows_per_year[ev.year] = rows_per_year.get(ev.year, 0) + 1
        if ev.began is not None and ev.restored is not None and ev.restored < ev.began:
            warnings.append(f"{ev.event_id}: restoration {ev.restored} precedes beginning {ev.began}")

    prov = [Provenance(name, y, n) for y, n in sorted(rows_per_year.items())]
    if rejected:
        # Rejected rows have no trustworthy year; book them on the first entry.
        if prov:
            prov[0] = Provenance(name, prov[0].year, prov[0].rows, rejected)
        else:
            prov = [Provenance(name, 0, 0, rejected)]
    return events, prov, [f"{name}: {w}" for w in warnings]


def load_dataset(
    paths: Iterable[str | Path],
    *,
    strict: bool = True,
    year_range: tuple[int, int] | None = None,
) -> EventDataset:
    """Load and merge several annual summary files.

    Strict mode (the default) aborts on the first bad row; lenient mode drops
    it and records a warning. Rows whose restoration precedes their start are
    kept either way and flagged in ``ingest_warnings``.
    """
    events: list[Event] = []
    provenance: list[Provenance] = []
    warnings: list[str] = []
    origin: dict[str, str] = {}
    for p in paths:
        path = Path(p)
        try:
            evs, prov, warns = _load_one(path, strict, year_range)
        except InputError as err:
            if err.file is None:
                err.file = str(path)
            raise
        for ev in evs:
            if ev.event_id in origin:
                raise DuplicateEventId(
                    f"event_id {ev.event_id!r} produced by both {origin[ev.event_id]} and {path}"
                )
            origin[ev.event_id] = str(path)
        events.extend(evs)
        provenance.extend(prov)
        warnings.extend(warns)
    return EventDataset(tuple(events), tuple(provenance), tuple(warnings))


def dump_dataset_json(dataset: EventDataset) -> str:
    """Canonical serialization: sorted keys, events ordered by ``event_id``."""
    doc = {
        "events": [e.to_json() for e in dataset.events],
        "ingest_warnings": list(dataset.ingest_warnings),
        "provenance": [
            {"file": p.file, "rejected": p.rejected, "rows": p.rows, "year": p.year}
            for p in dataset.provenance
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def read_dataset_json(text: str) -> EventDataset:
    try:
        doc = json.loads(text)
        events = tuple(Event.from_json(e) for e in doc["events"])
        prov = tuple(
            Provenance(p["file"], int(p["year"]), int(p["rows"]), int(p.get("rejected", 0)))
            for p in doc.get("provenance", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a canonical dataset document: {exc}") from exc
    return EventDataset(events, prov, tuple(doc.get("ingest_warnings", [])))


def dataset_to_csv(dataset: EventDataset) -> str:
    """Write events back out in the normalized input schema."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for e in dataset.events:
        w.writerow(
            [
                e.year,
                _us_date(e.began_date),
                e.began.strftime("%H:%M") if e.began else "",
                _us_date(e.restored_date),
                e.restored.strftime("%H:%M") if e.restored else "",
                e.area,
                e.nerc_region,
                e.alert_criteria or "",
                e.raw_event_type,
                e.demand_loss.to_text(),
                e.customers_affected.to_text(),
            ]
        )
    return buf.getvalue()


def _us_date(d: date | None) -> str:
    return "" if d is None else f"{d.month}/{d.day}/{d.year}"
