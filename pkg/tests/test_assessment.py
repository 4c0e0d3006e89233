from __future__ import annotations

import pytest

from pillar.assessment import (
    generate_impact,
    import_threats,
    select_controls,
    set_impact,
    set_inclusion,
    shortlist_patterns,
)
from pillar.errors import AssessmentError, NotFoundError, SchemaViolationError
from pillar.gateway import LlmGateway
from pillar.model import LinddunCategory, Methodology, Session, Threat

from .conftest import make_mock


def go_threat(i: int) -> Threat:
    return Threat(methodology=Methodology.LINDDUN_GO,
                  category=LinddunCategory.LINKING,
                  title=f"threat {i}", description=f"desc {i}", card_ref=f"c{i}")


def pro_threat(i: int) -> Threat:
    from pillar.model import ThreatLocation
    return Threat(methodology=Methodology.LINDDUN_PRO,
                  category=LinddunCategory.IDENTIFYING,
                  title=f"pro {i}", description="d", location=ThreatLocation.FLOW,
                  edge_ref="e1", tree_node="I.1")


@pytest.fixture
def session(profile) -> Session:
    s = Session()
    s.profile = profile
    s.elicitation_results[Methodology.LINDDUN_GO] = [go_threat(i) for i in range(3)]
    s.elicitation_results[Methodology.LINDDUN_PRO] = [pro_threat(0)]
    return s


class TestImportThreats:
    def test_import_sets_source_and_defaults(self, session):
        threats = import_threats(session, Methodology.LINDDUN_GO)
        assert session.assessment_source is Methodology.LINDDUN_GO
        assert len(threats) == 3
        assert all(t.included is False for t in threats)

    def test_import_empty_methodology_is_error(self, session):
        with pytest.raises(AssessmentError):
            import_threats(session, Methodology.ZERO_SHOT)

    def test_reimport_switches_source_and_retains_prior_edits(self, session):
        import_threats(session, Methodology.LINDDUN_PRO)
        set_impact(session, session.working_set()[0].id, "manual impact")
        import_threats(session, Methodology.LINDDUN_GO)
        assert session.assessment_source is Methodology.LINDDUN_GO
        pro_list = session.results_for(Methodology.LINDDUN_PRO)
        assert pro_list[0].impact == "manual impact"


class TestEdits:
    def test_set_inclusion_idempotent(self, session):
        import_threats(session, Methodology.LINDDUN_GO)
        threat_id = session.working_set()[0].id
        set_inclusion(session, threat_id, True)
        set_inclusion(session, threat_id, True)
        assert session.find_threat(threat_id).included is True

    def test_set_impact_overwrites(self, session):
        import_threats(session, Methodology.LINDDUN_GO)
        threat_id = session.working_set()[1].id
        set_impact(session, threat_id, "first")
        set_impact(session, threat_id, "second")
        assert session.find_threat(threat_id).impact == "second"

    def test_unknown_threat_id_is_error(self, session):
        import_threats(session, Methodology.LINDDUN_GO)
        with pytest.raises(NotFoundError):
            set_inclusion(session, "nope", True)

    def test_edits_do_not_touch_other_lists(self, session):
        import_threats(session, Methodology.LINDDUN_GO)
        set_inclusion(session, session.working_set()[0].id, True)
        assert all(not t.included
                   for t in session.results_for(Methodology.LINDDUN_PRO))


class TestGenerateImpact:
    def test_impact_stored_verbatim(self, session):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("impact", [{"impact": "re-identification of users in exports"}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        result = generate_impact(threat, session.profile, gateway)
        assert result == "re-identification of users in exports"
        assert threat.impact == result

    def test_empty_impact_is_schema_violation(self, session):
        mock = make_mock(max_retries=1)
        gateway = LlmGateway([mock])
        mock.script("impact", [{"impact": ""}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        with pytest.raises(SchemaViolationError):
            generate_impact(threat, session.profile, gateway)

    def test_regeneration_replaces_manual_edit(self, session):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("impact", [{"impact": "generated"}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        threat.impact = "manual"
        generate_impact(threat, session.profile, gateway)
        assert threat.impact == "generated"


class TestShortlist:
    def test_scripted_shortlist(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_shortlist",
                    [{"patterns": ["Data Minimization", "Pseudonymization"]}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        shortlist = shortlist_patterns(threat, session.profile, fixture_kb, gateway)
        assert shortlist == ["Data Minimization", "Pseudonymization"]

    def test_out_of_catalog_name_is_schema_violation(self, session, fixture_kb):
        mock = make_mock(max_retries=1)
        gateway = LlmGateway([mock])
        mock.script("pattern_shortlist", [{"patterns": ["Quantum Shield"]}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        with pytest.raises(SchemaViolationError):
            shortlist_patterns(threat, session.profile, fixture_kb, gateway)

    def test_empty_shortlist_allowed(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_shortlist", [{"patterns": []}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        assert shortlist_patterns(threat, session.profile, fixture_kb, gateway) == []

    def test_deduplication_preserves_order(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_shortlist", [{"patterns": [
            "Pseudonymization", "Data Minimization", "Pseudonymization"]}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        shortlist = shortlist_patterns(threat, session.profile, fixture_kb, gateway)
        assert shortlist == ["Pseudonymization", "Data Minimization"]

    def test_cap_bounds_stage_two(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        names = [p.name for p in fixture_kb.patterns]
        mock.script("pattern_shortlist", [{"patterns": names}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        shortlist = shortlist_patterns(threat, session.profile, fixture_kb, gateway,
                                       cap=2)
        assert shortlist == names[:2]

    def test_stage_one_request_carries_briefs_never_full_text(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_shortlist", [{"patterns": []}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        shortlist_patterns(threat, session.profile, fixture_kb, gateway)
        text = mock.calls[0].text
        for pattern in fixture_kb.patterns:
            assert pattern.brief in text
            assert pattern.full_text not in text


class TestSelectControls:
    def test_two_of_three_selected(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_select", [{"controls": [
            {"pattern_name": "Data Minimization", "relevance": "less data",
             "implementation_guidance": "drop fields"},
            {"pattern_name": "Pseudonymization", "relevance": "mask ids",
             "implementation_guidance": "tokenize"},
        ]}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        shortlist = ["Data Minimization", "Pseudonymization", "Transparency Ledger"]
        controls = select_controls(threat, shortlist, fixture_kb, gateway)
        assert [c.pattern_name for c in controls] == [
            "Data Minimization", "Pseudonymization"]
        assert threat.controls == controls

    def test_selection_outside_shortlist_is_schema_violation(self, session, fixture_kb):
        mock = make_mock(max_retries=1)
        gateway = LlmGateway([mock])
        mock.script("pattern_select", [{"controls": [
            {"pattern_name": "Transparency Ledger", "relevance": "r",
             "implementation_guidance": "g"}]}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        with pytest.raises(SchemaViolationError):
            select_controls(threat, ["Data Minimization"], fixture_kb, gateway)

    def test_single_item_shortlist(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_select", [{"controls": [
            {"pattern_name": "Pseudonymization", "relevance": "r",
             "implementation_guidance": "g"}]}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        controls = select_controls(threat, ["Pseudonymization"], fixture_kb, gateway)
        assert len(controls) == 1
        assert controls[0].pattern_name == "Pseudonymization"

    def test_stage_two_carries_only_shortlisted_full_texts(self, session, fixture_kb):
        mock = make_mock()
        gateway = LlmGateway([mock])
        mock.script("pattern_select", [{"controls": []}])
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        select_controls(threat, ["Data Minimization"], fixture_kb, gateway)
        text = mock.calls[0].text
        assert fixture_kb.pattern("Data Minimization").full_text in text
        assert fixture_kb.pattern("Pseudonymization").full_text not in text
        assert fixture_kb.pattern("Transparency Ledger").full_text not in text

    def test_empty_shortlist_rejected(self, session, fixture_kb, mock_gateway):
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        with pytest.raises(AssessmentError):
            select_controls(threat, [], fixture_kb, mock_gateway)

    def test_shortlist_outside_catalog_rejected(self, session, fixture_kb, mock_gateway):
        threat = session.results_for(Methodology.LINDDUN_GO)[0]
        with pytest.raises(AssessmentError):
            select_controls(threat, ["Nonexistent"], fixture_kb, mock_gateway)
