"""Disruption-source mapping for DOE-417 electric disturbance summaries."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    Measure,
    StageDistribution,
    aggregate_stage,
    cause_share,
    cell_share,
    measure_filter,
    sensitivity_compare,
    timeline,
    top_categories_share,
)
from .ingest import Event, EventDataset, load_dataset, parse_sentinel  # noqa: E402
from .mapping import Axis, Cause, load_mapping_profile, load_overrides, map_event  # noqa: E402
from .taxonomy import canonicalize_event_type, category_counts, load_taxonomy  # noqa: E402
