"""Impact assessment: import elicited threats, manage inclusion decisions,
generate impact text, and select privacy-pattern control measures.

Control selection is two-stage to bound token cost: stage 1 sees only the
one-paragraph pattern briefs and shortlists candidate names; stage 2 sees the
full text of the shortlisted patterns only and makes the final selection with
implementation guidance.
"""

from __future__ import annotations

from typing import Any

from .errors import AssessmentError, NotFoundError
from .gateway import LlmGateway, ProviderSelector, StructuredRequest, TextPart
from .kb import KnowledgeBase, PrivacyPattern
from .model import ApplicationProfile, ControlMeasure, Methodology, Session, Threat
from . import prompts

DEFAULT_SHORTLIST_CAP = 10


def import_threats(session: Session, methodology: Methodology) -> list[Threat]:
    """Select one methodology's results as the assessment working set.

    Importing a different methodology replaces the working set; edits made to
    previously imported threats stay on them in their original result list.
    """
    results = session.results_for(methodology)
    if not results:
        raise AssessmentError(
            f"no elicitation results for {methodology.value}; run it first")
    session.assessment_source = methodology
    return results


def working_threat(session: Session, threat_id: str) -> Threat:
    """The working-set threat with this id, or a not-found error."""
    if session.assessment_source is None:
        raise AssessmentError("no assessment source; import threats first")
    threat = session.find_threat(threat_id)
    if threat is None:
        raise NotFoundError(f"threat {threat_id!r} is not in the working set")
    return threat


def set_inclusion(session: Session, threat_id: str, included: bool) -> Threat:
    threat = working_threat(session, threat_id)
    threat.included = included
    return threat


def set_impact(session: Session, threat_id: str, text: str) -> Threat:
    threat = working_threat(session, threat_id)
    threat.impact = text
    return threat


# ---------------------------------------------------------------------------
# LLM-backed generation
# ---------------------------------------------------------------------------

IMPACT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {"impact": {"type": "string", "minLength": 1}},
    "required": ["impact"],
    "additionalProperties": False,
}


def _threat_block(threat: Threat) -> str:
    lines = [
        f"Threat: {threat.title}",
        f"Category: {threat.category.display_name}",
        f"Description: {threat.description}",
    ]
    if threat.location is not None:
        lines.append(f"Location: {threat.location.value} of edge {threat.edge_ref}")
    if threat.tree_node:
        lines.append(f"Threat tree node: {threat.tree_node}")
    return "\n".join(lines)


def generate_impact(
    threat: Threat,
    profile: ApplicationProfile,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
) -> str:
    """Generate impact text and store it on the threat (still user-editable).

    Regeneration overwrites any manual edit; callers wanting confirmation
    semantics enforce them before calling.
    """
    request = StructuredRequest(
        purpose_tag="impact",
        system_prompt=prompts.impact_system_prompt(),
        user_parts=[TextPart(
            _threat_block(threat) + "\n\n" + prompts.system_description_block(profile, None))],
        response_schema=IMPACT_SCHEMA,
        temperature=0.0,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    threat.impact = response.document["impact"]
    return threat.impact


def _shortlist_schema(catalog: tuple[PrivacyPattern, ...]) -> dict[str, Any]:
    return {
        "type": "object",
        "properties": {
            "patterns": {
                "type": "array",
                "items": {"type": "string", "enum": [p.name for p in catalog]},
            },
        },
        "required": ["patterns"],
        "additionalProperties": False,
    }


def shortlist_patterns(
    threat: Threat,
    profile: ApplicationProfile,
    kb: KnowledgeBase,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
    cap: int = DEFAULT_SHORTLIST_CAP,
) -> list[str]:
    """Stage 1: shortlist candidate patterns from their briefs only.

    The request never carries a pattern's full text. Names outside the
    catalog are schema violations. The deduplicated, order-preserving result
    is capped to bound stage-2 cost.
    """
    if not kb.patterns:
        raise AssessmentError("the privacy-pattern catalog is empty")
    briefs = "\n".join(f"- {p.name}: {p.brief}" for p in kb.patterns)
    request = StructuredRequest(
        purpose_tag="pattern_shortlist",
        system_prompt=prompts.pattern_shortlist_system_prompt(),
        user_parts=[TextPart(
            _threat_block(threat)
            + "\n\n" + prompts.system_description_block(profile, None)
            + "\n\nPattern catalog:\n" + briefs)],
        response_schema=_shortlist_schema(kb.patterns),
        temperature=0.0,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    shortlist: list[str] = []
    for name in response.document["patterns"]:
        if name not in shortlist:
            shortlist.append(name)
    return shortlist[:cap]


def _controls_schema(shortlist: list[str]) -> dict[str, Any]:
    return {
        "type": "object",
        "properties": {
            "controls": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "pattern_name": {"type": "string", "enum": list(shortlist)},
                        "relevance": {"type": "string", "minLength": 1},
                        "implementation_guidance": {"type": "string", "minLength": 1},
                    },
                    "required": ["pattern_name", "relevance", "implementation_guidance"],
                    "additionalProperties": False,
                },
            },
        },
        "required": ["controls"],
        "additionalProperties": False,
    }


def select_controls(
    threat: Threat,
    shortlist: list[str],
    kb: KnowledgeBase,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
) -> list[ControlMeasure]:
    """Stage 2: final selection among the shortlisted patterns.

    The request carries the full text of shortlisted patterns only; the
    response is constrained to the shortlist. The selection is stored on the
    threat.
    """
    if not shortlist:
        raise AssessmentError("the shortlist is empty; run stage 1 first")
    unknown = [name for name in shortlist if name not in kb.pattern_index]
    if unknown:
        raise AssessmentError(f"shortlist names outside the catalog: {unknown}")
    full_texts = "\n\n".join(
        f"### {name}\n{kb.pattern(name).full_text}" for name in shortlist)
    request = StructuredRequest(
        purpose_tag="pattern_select",
        system_prompt=prompts.pattern_select_system_prompt(),
        user_parts=[TextPart(
            _threat_block(threat) + "\n\nCandidate patterns:\n\n" + full_texts)],
        response_schema=_controls_schema(shortlist),
        temperature=0.0,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    controls = [
        ControlMeasure(
            pattern_name=item["pattern_name"],
            relevance=item["relevance"],
            implementation_guidance=item["implementation_guidance"],
        )
        for item in response.document["controls"]
    ]
    threat.controls = controls
    return controls
