"""Per-category probability distributions over the disruption axes.

Three axes are mapped for every event category:

* scope      cause x {local, regional, global}        (6 cells)
* direction  cause x {upstream, downstream, catastrophic} (6 cells)
* domain     {physical, cyber, human}                  (3 cells)

Cause is carried jointly inside the scope and direction axes so that the two
stages can report different human/nature splits for the same events.

Cells are addressed by their wire-format keys, e.g. ``"human.local"`` or
``"cyber"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

from .errors import ConfigError, DistributionSumError, MissingCategoryEntry, UnknownCategory
from .ingest import Event
from .taxonomy import EventCategory, TaxonomyRuleSet, match_key

__all__ = [
    "Cause",
    "Scope",
    "Direction",
    "Domain",
    "Axis",
    "SUM_TOLERANCE",
    "AxisDistribution",
    "CategoryMapping",
    "MappingProfile",
    "OverrideRule",
    "EventMapping",
    "cell_cause",
    "cell_component",
    "load_mapping_profile",
    "load_overrides",
    "map_event",
    "apply_alert_criteria_overrides",
]

SUM_TOLERANCE = 1e-9


class Cause(str, Enum):
    HUMAN = "human"
    NATURE = "nature"


class Scope(str, Enum):
    LOCAL = "local"
    REGIONAL = "regional"
    GLOBAL = "global"


class Direction(str, Enum):
    UPSTREAM = "upstream"
    DOWNSTREAM = "downstream"
    CATASTROPHIC = "catastrophic"


class Domain(str, Enum):
    PHYSICAL = "physical"
    CYBER = "cyber"
    HUMAN = "human"


class Axis(str, Enum):
    SCOPE = "scope"
    DIRECTION = "direction"
    DOMAIN = "domain"

    @property
    def cells(self) -> tuple[str, ...]:
        return _CELLS[self]

    @property
    def has_cause(self) -> bool:
        return self is not Axis.DOMAIN


_CELLS: dict[Axis, tuple[str, ...]] = {
    Axis.SCOPE: tuple(f"{c.value}.{s.value}" for c in Cause for s in Scope),
    Axis.DIRECTION: tuple(f"{c.value}.{d.value}" for c in Cause for d in Direction),
    Axis.DOMAIN: tuple(d.value for d in Domain),
}


def cell_cause(cell: str) -> Cause | None:
    """Cause half of a scope/direction cell; ``None`` for domain cells."""
    if "." not in cell:
        return None
    return Cause(cell.split(".", 1)[0])


def cell_component(cell: str) -> str:
    """The non-cause half of a cell (``"local"``, ``"downstream"``, ``"cyber"``)."""
    return cell.split(".", 1)[-1]


@dataclass(frozen=True)
class AxisDistribution:
    """Weights over every cell of one axis, stored in the axis' cell order."""

    axis: Axis
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.axis.cells):
            raise ConfigError(
                f"axis {self.axis.value!r} needs {len(self.axis.cells)} weights, got {len(self.weights)}"
            )
        for cell, w in zip(self.axis.cells, self.weights):
            if not (isinstance(w, (int, float)) and math.isfinite(w) and 0.0 <= w <= 1.0):
                raise ConfigError(f"axis {self.axis.value!r} cell {cell!r}: weight {w!r} not in [0, 1]")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionSumError(self.axis.value, total)

    @classmethod
    def from_mapping(
        cls, axis: Axis, weights: Mapping[str, float], category: str | None = None
    ) -> "AxisDistribution":
        """Build from ``{cell: weight}``; omitted cells are zero, unknown cells are errors."""
        unknown = sorted(set(weights) - set(axis.cells))
        if unknown:
            who = f"category {category!r}: " if category else ""
            raise ConfigError(f"{who}unknown {axis.value} cells {unknown}; valid: {list(axis.cells)}")
        try:
            return cls(axis, tuple(float(weights.get(c, 0.0)) for c in axis.cells))
        except DistributionSumError as err:
            raise DistributionSumError(err.axis, err.total, category) from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"category {category!r} axis {axis.value!r}: {exc}") from exc

    @classmethod
    def point_mass(cls, axis: Axis, cell: str) -> "AxisDistribution":
        return cls.from_mapping(axis, {cell: 1.0})

    def weight(self, cell: str) -> float:
        return self.weights[self.axis.cells.index(cell)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.axis.cells, self.weights))


@dataclass(frozen=True)
class CategoryMapping:
    scope: AxisDistribution
    direction: AxisDistribution
    domain: AxisDistribution

    def __post_init__(self) -> None:
        for ax in Axis:
            if self.for_axis(ax).axis is not ax:
                raise ConfigError(f"{ax.value} slot holds a {self.for_axis(ax).axis.value} distribution")

    def for_axis(self, axis: Axis) -> AxisDistribution:
        return getattr(self, axis.value)


@dataclass(frozen=True)
class MappingProfile:
    entries: Mapping[str, CategoryMapping]
    version: str = ""

    def get(self, category: EventCategory | str) -> CategoryMapping:
        name = category.name if isinstance(category, EventCategory) else category
        try:
            return self.entries[name]
        except KeyError:
            raise MissingCategoryEntry(f"profile has no entry for category {name!r}") from None

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "categories": {
                name: {ax.value: m.for_axis(ax).as_dict() for ax in Axis}
                for name, m in sorted(self.entries.items())
            },
        }


@dataclass(frozen=True)
class OverrideRule:
    category: str
    criteria_pattern: str
    replacement: Mapping[Axis, AxisDistribution] = field(default_factory=dict)

    def matches(self, category: str, alert_criteria: str | None) -> bool:
        if alert_criteria is None or category != self.category:
            return False
        return match_key(self.criteria_pattern) in match_key(alert_criteria)


@dataclass(frozen=True)
class EventMapping:
    event_id: str
    category: str
    scope: AxisDistribution
    direction: AxisDistribution
    domain: AxisDistribution

    def for_axis(self, axis: Axis) -> AxisDistribution:
        return getattr(self, axis.value)


def _decode(config: str | bytes | Any, what: str) -> Any:
    if isinstance(config, (str, bytes)):
        try:
            return json.loads(config)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{what} config is not valid JSON: {exc}") from exc
    return config


def load_mapping_profile(config: str | bytes | Mapping[str, Any], taxonomy: TaxonomyRuleSet) -> MappingProfile:
    """Validate a profile document against the active taxonomy.

    Weights are never renormalized: an axis whose weights miss 1 by more than
    ``SUM_TOLERANCE`` raises :class:`DistributionSumError`.
    """
    doc = _decode(config, "profile")
    if not isinstance(doc, Mapping) or not isinstance(doc.get("categories"), Mapping):
        raise ConfigError("profile config must be an object with a 'categories' object")
    raw = doc["categories"]

    unknown = sorted(set(raw) - set(taxonomy.names))
    if unknown:
        raise UnknownCategory(f"profile names categories absent from the taxonomy: {unknown}")
    missing = [n for n in taxonomy.names if n not in raw]
    if missing:
        raise MissingCategoryEntry(f"profile lacks entries for categories: {missing}")

    entries: dict[str, CategoryMapping] = {}
    for name in taxonomy.names:
        entry_doc = raw[name]
        if not isinstance(entry_doc, Mapping):
            raise ConfigError(f"category {name!r}: entry must be an object")
        extra = sorted(set(entry_doc) - {a.value for a in Axis})
        if extra:
            raise ConfigError(f"category {name!r}: unknown axes {extra}")
        dists = {}
        for ax in Axis:
            if ax.value not in entry_doc:
                raise ConfigError(f"category {name!r}: missing {ax.value!r} distribution")
            if not isinstance(entry_doc[ax.value], Mapping):
                raise ConfigError(f"category {name!r}: {ax.value!r} must be an object")
            dists[ax.value] = AxisDistribution.from_mapping(ax, entry_doc[ax.value], name)
        entries[name] = CategoryMapping(**dists)
    return MappingProfile(entries, str(doc.get("version", "")))


def load_overrides(
    config: str | bytes | Sequence[Mapping[str, Any]], taxonomy: TaxonomyRuleSet | None = None
) -> list[OverrideRule]:
    doc = _decode(config, "overrides")
    if isinstance(doc, Mapping) and "overrides" in doc:
        doc = doc["overrides"]
    if not isinstance(doc, list):
        raise ConfigError("overrides config must be a JSON list (or an object with an 'overrides' list)")
    rules = []
    for i, item in enumerate(doc):
        try:
            category = str(item["category"])
            pattern = str(item["criteria_contains"])
            replace = item["replace"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"override #{i}: malformed entry ({exc!r})") from exc
        if taxonomy is not None and category not in taxonomy.names:
            raise UnknownCategory(f"override #{i} names unknown category {category!r}")
        if not match_key(pattern):
            raise ConfigError(f"override #{i}: empty criteria_contains")
        if not isinstance(replace, Mapping) or not replace:
            raise ConfigError(f"override #{i}: 'replace' must be a non-empty object")
        replacement = {}
        for axis_name, weights in replace.items():
            try:
                ax = Axis(axis_name)
            except ValueError:
                raise ConfigError(f"override #{i}: unknown axis {axis_name!r}") from None
            replacement[ax] = AxisDistribution.from_mapping(ax, weights, category)
        rules.append(OverrideRule(category, pattern, replacement))
    return rules


def map_event(event: Event, category: EventCategory | str, profile: MappingProfile) -> EventMapping:
    """Look up the category's distributions; event fields do not change the weights."""
    entry = profile.get(category)
    name = category.name if isinstance(category, EventCategory) else category
    return EventMapping(event.event_id, name, entry.scope, entry.direction, entry.domain)


def apply_alert_criteria_overrides(
    event: Event, base: EventMapping, overrides: Sequence[OverrideRule]
) -> EventMapping:
    """Replace whole axes using the first override that matches for each axis."""
    if event.alert_criteria is None or not overrides:
        return base
    resolved = {ax.value: base.for_axis(ax) for ax in Axis}
    for ax in Axis:
        for rule in overrides:
            if ax in rule.replacement and rule.matches(base.category, event.alert_criteria):
                resolved[ax.value] = rule.replacement[ax]
                break
    return EventMapping(base.event_id, base.category, **resolved)
