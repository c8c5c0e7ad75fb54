from __future__ import annotations

import json
from pathlib import Path

import pytest

from gridmap.ingest import Event, EventDataset, SentinelKind, SentinelValue, make_event_id
from gridmap.mapping import load_mapping_profile
from gridmap.taxonomy import load_taxonomy

FIXTURES = Path(__file__).parent / "fixtures"

SW = "Severe Weather/Natural Disaster"
PA = "Physical Attack/Vandalism/Sabotage"
SO = "System Operations"
OTHER = "Other"
CATCH = "Uncategorized"


def sentinel(kind: str, magnitude: float | None = None) -> SentinelValue:
    return SentinelValue(SentinelKind(kind), magnitude)


POS = sentinel("positive", 10.0)


def make_event(
    row: int,
    event_type: str,
    *,
    year: int = 2016,
    demand: SentinelValue = POS,
    customers: SentinelValue = POS,
    criteria: str | None = None,
) -> Event:
    return Event(
        event_id=make_event_id(year, row, None),
        year=year,
        began=None,
        restored=None,
        area="",
        nerc_region="",
        raw_event_type=event_type,
        alert_criteria=criteria,
        demand_loss=demand,
        customers_affected=customers,
    )


def identity_taxonomy_doc(names=(SW, PA, SO, OTHER)) -> dict:
    """One category per name, matched by an exact prefix rule on the name itself."""
    return {
        "categories": [{"name": n, "catch_all": False} for n in names]
        + [{"name": CATCH, "catch_all": True}],
        "rules": [{"match": "prefix", "pattern": n, "target": n} for n in names],
    }


def point_profile_doc(names, scope="human.local", direction="human.upstream", domain="physical") -> dict:
    return {
        "categories": {
            n: {"scope": {scope: 1.0}, "direction": {direction: 1.0}, "domain": {domain: 1.0}}
            for n in names
        }
    }


@pytest.fixture
def identity_taxonomy():
    return load_taxonomy(identity_taxonomy_doc())


@pytest.fixture
def soft_profile_doc() -> dict:
    """Hand-written soft profile; every axis sums to 1 in exact decimal."""
    return {
        "categories": {
            SW: {
                "scope": {"human.local": 0.05, "nature.local": 0.3, "nature.regional": 0.6, "nature.global": 0.05},
                "direction": {"human.upstream": 0.1, "nature.upstream": 0.7, "nature.catastrophic": 0.2},
                "domain": {"physical": 0.5, "cyber": 0.2, "human": 0.3},
            },
            PA: {
                "scope": {"human.local": 0.8, "human.regional": 0.15, "human.global": 0.05},
                "direction": {"human.upstream": 0.9, "human.downstream": 0.1},
                "domain": {"physical": 0.6, "cyber": 0.1, "human": 0.3},
            },
            SO: {
                "scope": {"human.local": 0.5, "human.regional": 0.4, "nature.regional": 0.1},
                "direction": {"human.upstream": 0.7, "human.downstream": 0.25, "nature.upstream": 0.05},
                "domain": {"physical": 0.3, "cyber": 0.4, "human": 0.3},
            },
            OTHER: {
                "scope": {"human.local": 0.25, "human.regional": 0.25, "nature.local": 0.25, "nature.regional": 0.25},
                "direction": {"human.upstream": 0.4, "nature.upstream": 0.4, "human.catastrophic": 0.1, "nature.catastrophic": 0.1},
                "domain": {"physical": 0.34, "cyber": 0.33, "human": 0.33},
            },
            CATCH: {
                "scope": {"human.local": 0.5, "nature.local": 0.5},
                "direction": {"human.upstream": 0.5, "nature.upstream": 0.5},
                "domain": {"physical": 0.2, "cyber": 0.4, "human": 0.4},
            },
        }
    }


@pytest.fixture
def soft_profile(soft_profile_doc, identity_taxonomy):
    return load_mapping_profile(json.dumps(soft_profile_doc), identity_taxonomy)


def dataset(events) -> EventDataset:
    return EventDataset(tuple(events))


# (criterion, status, detail) lines filled by test_acceptance and echoed at the end of the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
