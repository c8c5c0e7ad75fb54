from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, strategies as st

from gridmap.config import load_default_overrides, load_default_profile, load_default_taxonomy
from gridmap.errors import ConfigError, DistributionSumError, MissingCategoryEntry, UnknownCategory
from gridmap.mapping import (
    Axis,
    AxisDistribution,
    Cause,
    apply_alert_criteria_overrides,
    cell_cause,
    cell_component,
    load_mapping_profile,
    load_overrides,
    map_event,
)
from gridmap.taxonomy import load_taxonomy

from conftest import CATCH, OTHER, PA, SO, SW, identity_taxonomy_doc, make_event, point_profile_doc

ALL = (SW, PA, SO, OTHER, CATCH)


def test_axis_cells():
    assert Axis.SCOPE.cells == (
        "human.local", "human.regional", "human.global",
        "nature.local", "nature.regional", "nature.global",
    )
    assert len(Axis.DIRECTION.cells) == 6
    assert Axis.DOMAIN.cells == ("physical", "cyber", "human")
    assert cell_cause("nature.upstream") is Cause.NATURE
    assert cell_cause("cyber") is None
    assert cell_component("human.downstream") == "downstream"


class TestAxisDistribution:
    def test_sum_error_reports_details(self):
        with pytest.raises(DistributionSumError) as info:
            AxisDistribution.from_mapping(Axis.SCOPE, {"human.local": 0.5, "nature.local": 0.47}, "X")
        assert info.value.category == "X"
        assert info.value.axis == "scope"
        assert info.value.total == pytest.approx(0.97)

    def test_tolerance_edge(self):
        AxisDistribution.from_mapping(Axis.DOMAIN, {"physical": 0.5, "cyber": 0.5 + 5e-10})
        with pytest.raises(DistributionSumError):
            AxisDistribution.from_mapping(Axis.DOMAIN, {"physical": 0.5, "cyber": 0.5 + 5e-9})

    def test_unknown_cell(self):
        with pytest.raises(ConfigError):
            AxisDistribution.from_mapping(Axis.DOMAIN, {"physical": 0.5, "social": 0.5})

    @pytest.mark.parametrize("w", [-0.1, 1.1, float("nan")])
    def test_weight_range(self, w):
        with pytest.raises(ConfigError):
            AxisDistribution.from_mapping(Axis.DOMAIN, {"physical": w, "cyber": 1 - w})

    def test_all_cells_present(self):
        d = AxisDistribution.point_mass(Axis.DIRECTION, "human.downstream")
        assert set(d.as_dict()) == set(Axis.DIRECTION.cells)
        assert d.weight("human.downstream") == 1.0
        assert sum(d.weights) == 1.0


class TestLoadProfile:
    def test_sum_097_rejected(self, identity_taxonomy):
        doc = point_profile_doc(ALL)
        doc["categories"][SO]["scope"] = {"human.local": 0.9, "human.regional": 0.07}
        with pytest.raises(DistributionSumError) as info:
            load_mapping_profile(json.dumps(doc), identity_taxonomy)
        assert info.value.category == SO
        assert info.value.axis == "scope"

    def test_point_mass_profile_loads(self, identity_taxonomy):
        prof = load_mapping_profile(point_profile_doc(ALL), identity_taxonomy)
        for name in ALL:
            entry = prof.get(name)
            assert entry.scope.weight("human.local") == 1.0
            assert entry.direction.weight("human.upstream") == 1.0
            assert entry.domain.weight("physical") == 1.0

    def test_missing_category(self, identity_taxonomy):
        with pytest.raises(MissingCategoryEntry):
            load_mapping_profile(point_profile_doc(ALL[:-1]), identity_taxonomy)

    def test_unknown_category(self, identity_taxonomy):
        with pytest.raises(UnknownCategory):
            load_mapping_profile(point_profile_doc(ALL + ("Meteor",)), identity_taxonomy)

    def test_missing_axis(self, identity_taxonomy):
        doc = point_profile_doc(ALL)
        del doc["categories"][SW]["domain"]
        with pytest.raises(ConfigError):
            load_mapping_profile(doc, identity_taxonomy)

    def test_default_profile_valid(self):
        tax = load_default_taxonomy()
        prof = load_default_profile(tax)
        assert set(prof.entries) == set(tax.names)
        for entry in prof.entries.values():
            for ax in Axis:
                d = entry.for_axis(ax)
                assert d.axis is ax
                assert abs(math.fsum(d.weights) - 1) <= 1e-9
                assert all(0 <= w <= 1 for w in d.weights)

    def test_default_profile_encodes_qualitative_claims(self):
        prof = load_default_profile()
        pa = prof.get(PA)
        human_up = pa.direction.weight("human.upstream")
        assert human_up == max(pa.direction.weights)
        sw = prof.get(SW)
        nature_scope = sum(sw.scope.weight(c) for c in Axis.SCOPE.cells if c.startswith("nature."))
        assert nature_scope > 0.5

    def test_profile_json_round_trip(self, soft_profile, identity_taxonomy):
        again = load_mapping_profile(json.dumps(soft_profile.to_json()), identity_taxonomy)
        assert again.entries == soft_profile.entries


class TestMapEvent:
    def test_point_mass(self, identity_taxonomy):
        prof = load_mapping_profile(point_profile_doc(ALL), identity_taxonomy)
        m = map_event(make_event(1, PA), identity_taxonomy.category(PA), prof)
        assert m.scope.as_dict() == {c: (1.0 if c == "human.local" else 0.0) for c in Axis.SCOPE.cells}

    def test_uniform_cause_split(self, identity_taxonomy):
        doc = point_profile_doc(ALL)
        doc["categories"][SW]["scope"] = {"human.local": 0.5, "nature.local": 0.5}
        prof = load_mapping_profile(doc, identity_taxonomy)
        m = map_event(make_event(1, SW), SW, prof)
        assert m.scope.weight("human.local") == 0.5
        assert m.scope.weight("nature.local") == 0.5

    def test_lookup_reproduces_config(self, identity_taxonomy):
        doc = point_profile_doc(ALL)
        doc["categories"][SW]["scope"] = {"nature.regional": 0.7, "nature.local": 0.3}
        prof = load_mapping_profile(doc, identity_taxonomy)
        m = map_event(make_event(1, SW), SW, prof)
        assert m.scope.weight("nature.regional") == 0.7
        assert m.scope.weight("nature.local") == 0.3
        assert sum(1 for w in m.scope.weights if w) == 2

    def test_pure_in_category(self, soft_profile):
        a = map_event(make_event(1, SW, year=2012), SW, soft_profile)
        b = map_event(make_event(2, SW, year=2020, criteria="anything"), SW, soft_profile)
        assert (a.scope, a.direction, a.domain) == (b.scope, b.direction, b.domain)

    def test_missing_category(self, soft_profile):
        with pytest.raises(MissingCategoryEntry):
            map_event(make_event(1, "Meteor"), "Meteor", soft_profile)


SHED = "Load shedding of 100 Megawatts or more implemented under emergency operational policy."


class TestOverrides:
    def overrides(self, first: str = "human.downstream", second: str = "nature.downstream"):
        return load_overrides(
            [
                {"category": SO, "criteria_contains": "load shedding", "replace": {"direction": {first: 1.0}}},
                {"category": SO, "criteria_contains": "shedding", "replace": {"direction": {second: 1.0}}},
            ]
        )

    def test_load_shedding_point_mass(self, soft_profile):
        ev = make_event(1, SO, criteria=SHED)
        base = map_event(ev, SO, soft_profile)
        out = apply_alert_criteria_overrides(ev, base, self.overrides())
        assert out.direction == AxisDistribution.point_mass(Axis.DIRECTION, "human.downstream")
        assert out.scope is base.scope
        assert out.domain is base.domain

    def test_no_criteria_is_identity(self, soft_profile):
        ev = make_event(1, SO)
        base = map_event(ev, SO, soft_profile)
        assert apply_alert_criteria_overrides(ev, base, self.overrides()) is base

    def test_first_match_wins(self, soft_profile):
        ev = make_event(1, SO, criteria=SHED)
        base = map_event(ev, SO, soft_profile)
        ab = apply_alert_criteria_overrides(ev, base, self.overrides())
        ba = apply_alert_criteria_overrides(ev, base, list(reversed(self.overrides())))
        assert ab.direction.weight("human.downstream") == 1.0
        assert ba.direction.weight("nature.downstream") == 1.0

    def test_category_scoped(self, soft_profile):
        ev = make_event(1, PA, criteria=SHED)
        base = map_event(ev, PA, soft_profile)
        assert apply_alert_criteria_overrides(ev, base, self.overrides()) == base

    def test_case_insensitive_criteria(self, soft_profile):
        ev = make_event(1, SO, criteria=SHED.upper())
        out = apply_alert_criteria_overrides(ev, map_event(ev, SO, soft_profile), self.overrides())
        assert out.direction.weight("human.downstream") == 1.0

    def test_per_axis_resolution(self, soft_profile):
        rules = load_overrides(
            [
                {"category": SO, "criteria_contains": "shed", "replace": {"domain": {"cyber": 1.0}}},
                {"category": SO, "criteria_contains": "load", "replace": {"direction": {"human.downstream": 1.0}, "domain": {"human": 1.0}}},
            ]
        )
        ev = make_event(1, SO, criteria=SHED)
        out = apply_alert_criteria_overrides(ev, map_event(ev, SO, soft_profile), rules)
        assert out.domain.weight("cyber") == 1.0
        assert out.direction.weight("human.downstream") == 1.0

    def test_bad_override_rejected(self):
        with pytest.raises(DistributionSumError):
            load_overrides([{"category": SO, "criteria_contains": "x", "replace": {"direction": {"human.downstream": 0.9}}}])
        with pytest.raises(ConfigError):
            load_overrides([{"category": SO, "criteria_contains": "x", "replace": {"flavour": {"a": 1}}}])
        with pytest.raises(ConfigError):
            load_overrides({"not": "a list"})

    def test_unknown_override_category(self):
        tax = load_taxonomy(identity_taxonomy_doc())
        with pytest.raises(UnknownCategory):
            load_overrides([{"category": "Meteor", "criteria_contains": "x", "replace": {"domain": {"cyber": 1}}}], tax)

    def test_default_overrides_cover_load_shedding_and_public_appeal(self):
        tax = load_default_taxonomy()
        rules = load_default_overrides(tax)
        so_patterns = {r.criteria_pattern for r in rules if r.category == SO}
        assert {"load shedding", "public appeal"} <= so_patterns

    @given(
        st.lists(st.integers(min_value=0, max_value=50), min_size=6, max_size=6).filter(lambda v: sum(v) > 0),
        st.booleans(),
    )
    def test_conservation_and_locality(self, ints, matches):
        tax = load_taxonomy(identity_taxonomy_doc())
        prof = load_mapping_profile(point_profile_doc(ALL), tax)
        total = sum(ints)
        weights = {c: n / total for c, n in zip(Axis.DIRECTION.cells, ints)}
        rules = load_overrides([{"category": SO, "criteria_contains": "alpha", "replace": {"direction": weights}}])
        ev = make_event(1, SO, criteria="alpha" if matches else "beta")
        base = map_event(ev, SO, prof)
        out = apply_alert_criteria_overrides(ev, base, rules)
        for ax in Axis:
            assert abs(math.fsum(out.for_axis(ax).weights) - 1) <= 1e-9
        assert out.scope.weights == base.scope.weights
        assert out.domain.weights == base.domain.weights
        if not matches:
            assert out.direction.weights == base.direction.weights
