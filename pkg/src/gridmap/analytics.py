"""Stage distributions, shares, timelines and the override sensitivity check.

Masses are accumulated as exact rationals. Float weights convert to
``Fraction`` without loss, so summing per partition and merging gives the
same result, to the last bit, as summing the whole dataset at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import EmptyDistribution
from .ingest import Event, EventDataset
from .mapping import (
    Axis,
    Cause,
    MappingProfile,
    OverrideRule,
    apply_alert_criteria_overrides,
    cell_cause,
    map_event,
)
from .measures import Measure, measure_filter
from .taxonomy import EventCategory, TaxonomyRuleSet, category_counts, match_key

__all__ = [
    "Measure",
    "measure_filter",
    "StageDistribution",
    "TimelinePoint",
    "TimelineSeries",
    "CellComparison",
    "SensitivityReport",
    "aggregate_stage",
    "merge_stages",
    "cause_share",
    "cell_share",
    "top_categories_share",
    "timeline",
    "sensitivity_compare",
    "alert_criteria_counts",
    "round6",
]

_SIX_PLACES = Decimal("0.000001")


def round6(value: float | Fraction) -> float:
    """Round half-even to six decimal places.

    Floats are rounded on their exact binary value; fractions on their exact
    rational value, so a mass of exactly 0.0000005 rounds to 0.
    """
    if isinstance(value, Fraction):
        with localcontext() as ctx:
            ctx.prec = 80
            dec = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        dec = Decimal(value)
    return float(dec.quantize(_SIX_PLACES, rounding=ROUND_HALF_EVEN))


def _sorted_events(events: EventDataset | Iterable[Event]) -> list[Event]:
    return sorted(events, key=lambda e: e.event_id)


@dataclass(frozen=True)
class StageDistribution:
    axis: Axis
    measure: Measure
    exact_masses: tuple[Fraction, ...]
    event_count: int

    @classmethod
    def empty(cls, axis: Axis, measure: Measure) -> "StageDistribution":
        return cls(axis, measure, tuple(Fraction(0) for _ in axis.cells), 0)

    @property
    def cells(self) -> tuple[str, ...]:
        return self.axis.cells

    @property
    def masses(self) -> dict[str, float]:
        return {c: float(m) for c, m in zip(self.axis.cells, self.exact_masses)}

    @property
    def total_mass(self) -> float:
        return float(sum(self.exact_masses, Fraction(0)))

    def mass(self, cell: str) -> float:
        return float(self.exact_masses[self.axis.cells.index(cell)])

    def merge(self, other: "StageDistribution") -> "StageDistribution":
        if other.axis is not self.axis or other.measure is not self.measure:
            raise ValueError("can only merge distributions of the same axis and measure")
        return StageDistribution(
            self.axis,
            self.measure,
            tuple(a + b for a, b in zip(self.exact_masses, other.exact_masses)),
            self.event_count + other.event_count,
        )

    def to_json(self) -> dict:
        return {
            "axis": self.axis.value,
            "measure": self.measure.value,
            "event_count": self.event_count,
            "cells": {c: round6(m) for c, m in zip(self.axis.cells, self.exact_masses)},
        }


def aggregate_stage(
    dataset: EventDataset | Iterable[Event],
    taxonomy: TaxonomyRuleSet,
    profile: MappingProfile,
    overrides: Sequence[OverrideRule] | None = None,
    measure: Measure = Measure.ALL_EVENTS,
    axis: Axis = Axis.SCOPE,
) -> StageDistribution:
    """Sum the mapped weights of every event that passes the measure filter."""
    sums = [Fraction(0)] * len(axis.cells)
    count = 0
    for ev in _sorted_events(dataset):
        if not measure_filter(ev, measure):
            continue
        mapping = map_event(ev, taxonomy.canonicalize(ev.raw_event_type), profile)
        if overrides:
            mapping = apply_alert_criteria_overrides(ev, mapping, overrides)
        for i, w in enumerate(mapping.for_axis(axis).weights):
            if w:
                sums[i] += Fraction(w)
        count += 1
    return StageDistribution(axis, measure, tuple(sums), count)


def merge_stages(parts: Iterable[StageDistribution]) -> StageDistribution:
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to merge")
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    return out


def _ratio(dist: StageDistribution, selected: Iterable[int]) -> float:
    if dist.event_count == 0:
        raise EmptyDistribution(f"no events in the {dist.axis.value} distribution ({dist.measure.value})")
    total = sum(dist.exact_masses, Fraction(0))
    if total == 0:
        raise EmptyDistribution(f"{dist.axis.value} distribution carries no mass")
    return float(sum((dist.exact_masses[i] for i in selected), Fraction(0)) / total)


def cause_share(dist: StageDistribution, cause: Cause) -> float:
    if not dist.axis.has_cause:
        raise ValueError(f"the {dist.axis.value} axis has no cause component")
    return _ratio(dist, [i for i, c in enumerate(dist.cells) if cell_cause(c) is cause])


def cell_share(dist: StageDistribution, predicate: Callable[[str], bool]) -> float:
    """Share of mass in the cells for which ``predicate(cell_key)`` is true."""
    return _ratio(dist, [i for i, c in enumerate(dist.cells) if predicate(c)])


def top_categories_share(
    dataset: EventDataset | Iterable[Event],
    taxonomy: TaxonomyRuleSet,
    measure: Measure,
    k: int,
) -> tuple[list[EventCategory], float]:
    if k < 1:
        raise ValueError("k must be positive")
    counts = category_counts(dataset, taxonomy, measure)
    total = sum(n for _, n in counts)
    if total == 0:
        raise EmptyDistribution(f"no events pass the {measure.value} measure")
    if k > len(counts):
        raise ValueError(f"k={k} exceeds the {len(counts)} categories with events")
    top = counts[:k]
    return [c for c, _ in top], sum(n for _, n in top) / total


@dataclass(frozen=True)
class TimelinePoint:
    year: int
    total: int
    nonzero_customers: int


@dataclass(frozen=True)
class TimelineSeries:
    category: str
    points: tuple[TimelinePoint, ...]

    def point(self, year: int) -> TimelinePoint:
        for p in self.points:
            if p.year == year:
                return p
        raise KeyError(year)


def timeline(
    dataset: EventDataset | Iterable[Event],
    taxonomy: TaxonomyRuleSet,
    categories: Sequence[EventCategory | str],
    years: tuple[int, int] | None = None,
) -> list[TimelineSeries]:
    """Per-year totals and nonzero-customer counts, zero-filled across the year range.

    The range defaults to the dataset's first through last year.
    """
    if not categories:
        raise ValueError("timeline needs at least one category")
    names = [c.name if isinstance(c, EventCategory) else c for c in categories]
    events = list(dataset)
    if years is None:
        if not events:
            return [TimelineSeries(n, ()) for n in names]
        years = (min(e.year for e in events), max(e.year for e in events))
    table = {(n, y): [0, 0] for n in names for y in range(years[0], years[1] + 1)}
    for ev in events:
        key = (taxonomy.canonicalize(ev.raw_event_type).name, ev.year)
        if key in table:
            table[key][0] += 1
            if measure_filter(ev, Measure.NONZERO_CUSTOMERS_AFFECTED):
                table[key][1] += 1
    return [
        TimelineSeries(
            n, tuple(TimelinePoint(y, *table[(n, y)]) for y in range(years[0], years[1] + 1))
        )
        for n in names
    ]


@dataclass(frozen=True)
class CellComparison:
    category: str
    axis: Axis
    cell: str
    event_type_mass: float
    alert_criteria_mass: float

    @property
    def difference(self) -> float:
        return abs(self.event_type_mass - self.alert_criteria_mass)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.category, self.axis.value, self.cell)


@dataclass(frozen=True)
class SensitivityReport:
    measure: Measure
    event_count: int
    cells: tuple[CellComparison, ...]
    # None when the two mappings agree everywhere.
    largest_discrepancy: tuple[str, str, str] | None

    def get(self, category: str, axis: Axis | str, cell: str) -> CellComparison:
        axis = Axis(axis)
        for c in self.cells:
            if c.category == category and c.axis is axis and c.cell == cell:
                return c
        raise KeyError((category, axis.value, cell))

    @property
    def max_difference(self) -> float:
        return max((c.difference for c in self.cells), default=0.0)


def sensitivity_compare(
    dataset: EventDataset | Iterable[Event],
    taxonomy: TaxonomyRuleSet,
    profile: MappingProfile,
    overrides: Sequence[OverrideRule],
    measure: Measure = Measure.ALL_EVENTS,
) -> SensitivityReport:
    """Aggregate every category and axis with and without the overrides.

    All events must carry alert criteria; filter to the reporting years first.
    """
    events = [e for e in _sorted_events(dataset) if measure_filter(e, measure)]
    if not events:
        raise EmptyDistribution(f"no events for sensitivity comparison ({measure.value})")
    lacking = [e.event_id for e in events if e.alert_criteria is None]
    if lacking:
        raise ValueError(f"{len(lacking)} events lack alert criteria, e.g. {lacking[0]}")

    by_cat: dict[str, list[Event]] = {}
    for e in events:
        by_cat.setdefault(taxonomy.canonicalize(e.raw_event_type).name, []).append(e)

    cells: list[CellComparison] = []
    for name in sorted(by_cat):
        subset = by_cat[name]
        for ax in sorted(Axis, key=lambda a: a.value):
            base = aggregate_stage(subset, taxonomy, profile, None, Measure.ALL_EVENTS, ax)
            alt = aggregate_stage(subset, taxonomy, profile, overrides, Measure.ALL_EVENTS, ax)
            for cell in sorted(ax.cells):
                cells.append(CellComparison(name, ax, cell, base.mass(cell), alt.mass(cell)))

    best = None
    for c in cells:
        if c.difference > 0 and (best is None or c.difference > best.difference):
            best = c
    # cells are already in lexical (category, axis, cell) order, so the first
    # maximum encountered wins ties.
    return SensitivityReport(measure, len(events), tuple(cells), best.key if best else None)


def alert_criteria_counts(
    dataset: EventDataset | Iterable[Event],
    taxonomy: TaxonomyRuleSet,
    patterns: Sequence[str],
    category: EventCategory | str | None = None,
) -> dict[str, int]:
    """Count events whose alert criteria contain each pattern (case-insensitive)."""
    name = category.name if isinstance(category, EventCategory) else category
    out = {p: 0 for p in patterns}
    for ev in dataset:
        if ev.alert_criteria is None:
            continue
        if name is not None and taxonomy.canonicalize(ev.raw_event_type).name != name:
            continue
        crit = match_key(ev.alert_criteria)
        for p in patterns:
            if match_key(p) in crit:
                out[p] += 1
    return out
