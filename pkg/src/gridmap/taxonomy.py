"""Ordered pattern rules that collapse raw DOE event-type strings into categories.

Matching is case-insensitive, whitespace-collapsed and limited to substring or
anchored-prefix tests. The first rule that matches wins; strings no rule
matches fall into the single catch-all category.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Mapping

from .errors import ConfigError, DuplicateCategoryName, EmptyRuleSet, UnknownTargetCategory
from .ingest import Event, EventDataset
from .measures import Measure, measure_filter

__all__ = [
    "EventCategory",
    "Rule",
    "TaxonomyRuleSet",
    "load_taxonomy",
    "canonicalize_event_type",
    "category_counts",
    "match_key",
]

MATCH_KINDS = ("substring", "prefix")


def match_key(text: str) -> str:
    # upper() first so that characters whose lowercase has no uppercase
    # round-trip (dotless i and friends) fold the same way as their capitals.
    return " ".join(text.upper().casefold().split())


@dataclass(frozen=True, order=True)
class EventCategory:
    name: str
    is_catch_all: bool = False

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Rule:
    match: str
    pattern: str
    target: EventCategory

    def __post_init__(self) -> None:
        if self.match not in MATCH_KINDS:
            raise ConfigError(f"rule match kind must be one of {MATCH_KINDS}, got {self.match!r}")
        if not match_key(self.pattern):
            raise ConfigError(f"rule for {self.target.name!r} has an empty pattern")

    def matches(self, key: str) -> bool:
        pat = match_key(self.pattern)
        if self.match == "prefix":
            return key.startswith(pat)
        return pat in key


@dataclass(frozen=True)
class TaxonomyRuleSet:
    rules: tuple[Rule, ...]
    categories: tuple[EventCategory, ...]
    version: str = ""

    def __post_init__(self) -> None:
        if not self.rules:
            raise EmptyRuleSet("taxonomy defines no rules")
        names = [c.name for c in self.categories]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DuplicateCategoryName(f"duplicate category names: {dupes}")
        catch_alls = [c for c in self.categories if c.is_catch_all]
        if len(catch_alls) != 1:
            raise ConfigError(f"expected exactly one catch-all category, found {len(catch_alls)}")
        declared = set(self.categories)
        for r in self.rules:
            if r.target not in declared:
                raise UnknownTargetCategory(
                    f"rule {r.match}:{r.pattern!r} targets undeclared category {r.target.name!r}"
                )

    @property
    def catch_all(self) -> EventCategory:
        return next(c for c in self.categories if c.is_catch_all)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.categories)

    def category(self, name: str) -> EventCategory:
        for c in self.categories:
            if c.name == name:
                return c
        raise KeyError(name)

    def canonicalize(self, raw: str) -> EventCategory:
        return _canonicalize(self, match_key(raw))

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "categories": [{"name": c.name, "catch_all": c.is_catch_all} for c in self.categories],
            "rules": [
                {"match": r.match, "pattern": r.pattern, "target": r.target.name} for r in self.rules
            ],
        }


@lru_cache(maxsize=65536)
def _canonicalize(rules: TaxonomyRuleSet, key: str) -> EventCategory:
    for rule in rules.rules:
        if rule.matches(key):
            return rule.target
    return rules.catch_all


def canonicalize_event_type(raw: str, rules: TaxonomyRuleSet) -> EventCategory:
    return rules.canonicalize(raw)


def load_taxonomy(config: str | bytes | Mapping[str, Any]) -> TaxonomyRuleSet:
    """Build a rule set from its JSON document (text or already-decoded)."""
    if isinstance(config, (str, bytes)):
        try:
            config = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"taxonomy config is not valid JSON: {exc}") from exc
    if not isinstance(config, Mapping):
        raise ConfigError("taxonomy config must be a JSON object")

    try:
        categories = tuple(
            EventCategory(str(c["name"]), bool(c.get("catch_all", False)))
            for c in config.get("categories", [])
        )
        names = [c.name for c in categories]
        seen: set[str] = set()
        for n in names:
            if n in seen:
                raise DuplicateCategoryName(f"duplicate category name {n!r}")
            seen.add(n)
        by_name = {c.name: c for c in categories}
        rules = []
        for r in config.get("rules", []):
            target = r["target"]
            if target not in by_name:
                raise UnknownTargetCategory(
                    f"rule {r.get('pattern')!r} targets undeclared category {target!r}"
                )
            rules.append(Rule(r.get("match", "substring"), str(r["pattern"]), by_name[target]))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed taxonomy config: {exc!r}") from exc
    if not rules:
        raise EmptyRuleSet("taxonomy defines no rules")
    return TaxonomyRuleSet(tuple(rules), categories, str(config.get("version", "")))


def category_counts(
    dataset: EventDataset | Iterable[Event],
    rules: TaxonomyRuleSet,
    measure: Measure = Measure.ALL_EVENTS,
) -> list[tuple[EventCategory, int]]:
    """Measure-filtered event counts per category.

    Only categories with at least one event appear. Sorted by count
    descending, then by name.
    """
    counts: dict[EventCategory, int] = {}
    for ev in dataset:
        if measure_filter(ev, measure):
            cat = rules.canonicalize(ev.raw_event_type)
            counts[cat] = counts.get(cat, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].name))
