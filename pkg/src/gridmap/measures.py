"""Event subsets used as the denominator of every share."""

from __future__ import annotations

from enum import Enum

from .ingest import Event, SentinelKind

# "Unknown" does not rule out a nonzero impact, so it counts.
_NONZERO = frozenset({SentinelKind.POSITIVE, SentinelKind.UNKNOWN})


class Measure(str, Enum):
    ALL_EVENTS = "all"
    NONZERO_DEMAND_LOSS = "demand"
    NONZERO_CUSTOMERS_AFFECTED = "customers"


def measure_filter(event: Event, measure: Measure) -> bool:
    if measure is Measure.ALL_EVENTS:
        return True
    if measure is Measure.NONZERO_DEMAND_LOSS:
        return event.demand_loss.kind in _NONZERO
    if measure is Measure.NONZERO_CUSTOMERS_AFFECTED:
        return event.customers_affected.kind in _NONZERO
    raise ValueError(f"unknown measure {measure!r}")
