"""Threat elicitation: zero-shot modeling, GO card simulation (single- and
multi-agent with judge), and PRO per-edge analysis.

Multi-agent debates follow a strict protocol: in round 1 each persona sees
the card and the system description; in round r > 1 each persona additionally
sees the aggregated verdicts of round r-1 (the previous analysis); after the
final round a judge receives the final aggregate and closes the card. A
debate of p personas over r rounds therefore costs exactly p*r + 1 calls.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .dfd import Dfd, DfdEdge
from .errors import DebateAbortedError, GatewayError, PillarError
from .gateway import (
    LlmGateway,
    ProviderSelector,
    StructuredRequest,
    TextPart,
)
from .kb import GoCard, KnowledgeBase, applicable_locations, draw_cards
from .model import (
    LinddunCategory,
    Methodology,
    Session,
    Threat,
    ThreatLocation,
    validate_profile,
)
from . import prompts

logger = logging.getLogger(__name__)

DEFAULT_ROUNDS = 2
AGENT_TEMPERATURE = 0.7  # debate-style calls want diversity
CLASSIFY_TEMPERATURE = 0.0  # classification-style calls want determinism

CATEGORY_VALUES = [c.value for c in LinddunCategory]


# ---------------------------------------------------------------------------
# Personas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgentPersona:
    persona_id: str
    display_name: str
    system_prompt: str


def load_personas(path: str | Path | None = None) -> list[AgentPersona]:
    """Load the persona roster from personas.json (bundled default roster)."""
    if path is None:
        raw = resources.files("pillar").joinpath("assets/personas.json").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    doc = json.loads(raw)
    personas = [AgentPersona(p["persona_id"], p["display_name"], p["system_prompt"])
                for p in doc.get("personas", [])]
    seen: set[str] = set()
    for persona in personas:
        if persona.persona_id in seen:
            raise PillarError(f"duplicate persona_id {persona.persona_id!r} in roster")
        seen.add(persona.persona_id)
    return personas


# ---------------------------------------------------------------------------
# Verdicts and transcripts
# ---------------------------------------------------------------------------

GO_VERDICT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "threat_present": {"type": "boolean"},
        "reason": {"type": "string", "minLength": 1},
    },
    "required": ["threat_present", "reason"],
    "additionalProperties": False,
}


@dataclass
class GoVerdict:
    threat_present: bool
    reason: str
    provider_id: str
    persona_id: str | None = None

    def __post_init__(self):
        if not self.reason:
            raise ValueError("verdict reason must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "threat_present": self.threat_present,
            "reason": self.reason,
            "provider_id": self.provider_id,
            "persona_id": self.persona_id,
        }


@dataclass
class DebateTranscript:
    card_id: str
    rounds: list[list[GoVerdict]] = field(default_factory=list)
    judge: GoVerdict | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "card_id": self.card_id,
            "rounds": [[v.to_dict() for v in round_] for round_ in self.rounds],
            "judge": self.judge.to_dict() if self.judge else None,
        }


def format_previous_analysis(personas: list[AgentPersona],
                             verdicts: list[GoVerdict]) -> str:
    """Serialize one round's verdicts in roster order, for the next round."""
    lines = []
    for persona, verdict in zip(personas, verdicts):
        word = "present" if verdict.threat_present else "absent"
        lines.append(f"{persona.display_name}: {word}, {verdict.reason}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Zero-shot threat model
# ---------------------------------------------------------------------------

ZERO_SHOT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "threats": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "category": {"type": "string", "enum": CATEGORY_VALUES},
                    "title": {"type": "string", "minLength": 1},
                    "description": {"type": "string", "minLength": 1},
                },
                "required": ["category", "title", "description"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["threats"],
    "additionalProperties": False,
}


def zero_shot_threat_model(
    profile,
    dfd: Dfd | None,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
) -> list[Threat]:
    """Single-prompt elicitation covering all seven categories."""
    _require_describable(profile, dfd)
    request = StructuredRequest(
        purpose_tag="zero_shot",
        system_prompt=prompts.zero_shot_system_prompt(),
        user_parts=[TextPart(prompts.system_description_block(profile, dfd))],
        response_schema=ZERO_SHOT_SCHEMA,
        temperature=CLASSIFY_TEMPERATURE,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    return [
        Threat(
            methodology=Methodology.ZERO_SHOT,
            category=LinddunCategory(item["category"]),
            title=item["title"],
            description=item["description"],
        )
        for item in response.document["threats"]
    ]


def _require_describable(profile, dfd: Dfd | None):
    has_description = bool(profile.description.strip())
    has_dfd = dfd is not None and bool(dfd.edges)
    if not has_description and not has_dfd:
        raise PillarError("elicitation needs a system description or a DFD")
    if has_description:
        errors = [i for i in validate_profile(profile) if i.severity.value == "error"]
        if errors:
            raise PillarError(
                "profile is not elicitation-ready: " + "; ".join(i.message for i in errors))


# ---------------------------------------------------------------------------
# LINDDUN GO
# ---------------------------------------------------------------------------

def go_single_agent(
    card: GoCard,
    profile,
    dfd: Dfd | None,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
    persona: AgentPersona | None = None,
    previous_analysis: str | None = None,
    purpose_tag: str = "go_single_agent",
    temperature: float = CLASSIFY_TEMPERATURE,
) -> GoVerdict:
    """One present/absent judgment for one card.

    Also the building block of the multi-agent debate, which passes a persona
    and the previous round's analysis.
    """
    parts = [prompts.card_block(card), prompts.system_description_block(profile, dfd)]
    if previous_analysis is not None:
        parts.append("Previous analysis:\n" + previous_analysis)
    parts.append(prompts.go_agent_task())
    system_prompt = persona.system_prompt if persona else (
        "You are a privacy threat analyst assessing one threat card against a system.")
    request = StructuredRequest(
        purpose_tag=purpose_tag,
        system_prompt=system_prompt,
        user_parts=[TextPart("\n\n".join(parts))],
        response_schema=GO_VERDICT_SCHEMA,
        temperature=temperature,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    return GoVerdict(
        threat_present=response.document["threat_present"],
        reason=response.document["reason"],
        provider_id=response.provider_id,
        persona_id=persona.persona_id if persona else None,
    )


def go_multi_agent(
    card: GoCard,
    profile,
    dfd: Dfd | None,
    personas: list[AgentPersona],
    rounds: int,
    gateway: LlmGateway,
    *,
    provider_mode: ProviderSelector | None = None,
    rng: random.Random | None = None,
) -> DebateTranscript:
    """Simulate the team debate for one card and close it with a judge.

    With a random provider mode the provider is drawn independently per agent
    call; per-call seeds come from ``rng`` so a seeded run is reproducible.
    """
    if not personas:
        raise PillarError("multi-agent debate needs at least one persona")
    if rounds < 1:
        raise PillarError(f"rounds must be >= 1, got {rounds}")
    selector = provider_mode or ProviderSelector.random_enabled()

    def call_seed() -> int | None:
        return rng.randrange(2**32) if rng is not None else None

    transcript = DebateTranscript(card_id=card.id)
    previous: str | None = None
    for round_number in range(1, rounds + 1):
        verdicts: list[GoVerdict] = []
        for persona in personas:
            try:
                verdict = go_single_agent(
                    card, profile, dfd, gateway,
                    selector=selector,
                    seed=call_seed(),
                    persona=persona,
                    previous_analysis=previous,
                    purpose_tag="go_agent",
                    temperature=AGENT_TEMPERATURE,
                )
            except GatewayError as exc:
                raise DebateAbortedError(
                    f"agent {persona.persona_id!r} failed in round {round_number}: {exc}",
                    card_id=card.id, completed_rounds=transcript.rounds) from exc
            verdicts.append(verdict)
        transcript.rounds.append(verdicts)
        previous = format_previous_analysis(personas, verdicts)

    judge_parts = [
        prompts.card_block(card),
        prompts.system_description_block(profile, dfd),
        "Final analysis:\n" + previous,
    ]
    request = StructuredRequest(
        purpose_tag="go_judge",
        system_prompt=prompts.go_judge_system_prompt(),
        user_parts=[TextPart("\n\n".join(judge_parts))],
        response_schema=GO_VERDICT_SCHEMA,
        temperature=CLASSIFY_TEMPERATURE,
        seed=call_seed(),
        provider_selector=selector,
    )
    try:
        response = gateway.complete_structured(request)
    except GatewayError as exc:
        raise DebateAbortedError(
            f"judge failed: {exc}", card_id=card.id,
            completed_rounds=transcript.rounds) from exc
    transcript.judge = GoVerdict(
        threat_present=response.document["threat_present"],
        reason=response.document["reason"],
        provider_id=response.provider_id,
    )
    return transcript


@dataclass
class GoRunResult:
    outcomes: list[tuple[GoCard, GoVerdict | DebateTranscript]]
    threats: list[Threat]
    failures: list[dict[str, str]]  # card_id -> error summary


def run_linddun_go(
    session: Session,
    kb: KnowledgeBase,
    gateway: LlmGateway,
    *,
    n_cards: int,
    multi_agent: bool = False,
    personas: list[AgentPersona] | None = None,
    rounds: int = DEFAULT_ROUNDS,
    seed: int | None = None,
    selector: ProviderSelector | None = None,
) -> GoRunResult:
    """Draw cards and run the chosen GO mode per card.

    Cards whose (judge) verdict is present become LINDDUN_GO threats in the
    session, replacing the previous GO run. Per-card failures are recorded
    and the batch continues.
    """
    _require_describable(session.profile, session.dfd)
    cards = draw_cards(kb.deck, n_cards, seed)
    rng = random.Random(seed)
    roster = personas if personas is not None else load_personas()

    outcomes: list[tuple[GoCard, GoVerdict | DebateTranscript]] = []
    threats: list[Threat] = []
    failures: list[dict[str, str]] = []
    transcripts: list[dict[str, Any]] = []
    for card in cards:
        try:
            if multi_agent:
                transcript = go_multi_agent(
                    card, session.profile, session.dfd, roster, rounds, gateway,
                    provider_mode=selector, rng=rng)
                outcomes.append((card, transcript))
                transcripts.append(transcript.to_dict())
                final = transcript.judge
            else:
                final = go_single_agent(
                    card, session.profile, session.dfd, gateway,
                    selector=selector, seed=rng.randrange(2**32))
                outcomes.append((card, final))
        except (GatewayError, DebateAbortedError) as exc:
            logger.warning("GO card %s failed: %s", card.id, exc)
            failures.append({"card_id": card.id, "error": str(exc)})
            continue
        if final is not None and final.threat_present:
            threats.append(Threat(
                methodology=Methodology.LINDDUN_GO,
                category=card.category,
                title=card.title,
                description=final.reason,
                card_ref=card.id,
            ))
    session.elicitation_results[Methodology.LINDDUN_GO] = threats
    if multi_agent:
        session.go_transcripts = transcripts
    return GoRunResult(outcomes=outcomes, threats=threats, failures=failures)


# ---------------------------------------------------------------------------
# LINDDUN PRO
# ---------------------------------------------------------------------------

@dataclass
class ProFinding:
    edge_ref: str
    location: ThreatLocation
    category: LinddunCategory
    tree_node: str
    title: str
    description: str


@dataclass
class ProRunResult:
    findings: list[ProFinding]
    failures: list[dict[str, str]]  # per (category, location) errors


def _pro_schema(node_ids: list[str]) -> dict[str, Any]:
    return {
        "type": "object",
        "properties": {
            "tree_node": {"type": "string", "enum": node_ids},
            "title": {"type": "string", "minLength": 1},
            "description": {"type": "string", "minLength": 1},
        },
        "required": ["tree_node", "title", "description"],
        "additionalProperties": False,
    }


_LOCATION_ORDER = [ThreatLocation.SOURCE, ThreatLocation.FLOW, ThreatLocation.DESTINATION]


def pro_analyze_edge(
    edge: DfdEdge,
    flow_description: str,
    categories: set[LinddunCategory] | list[LinddunCategory],
    kb: KnowledgeBase,
    profile,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
) -> ProRunResult:
    """Per-edge PRO analysis over the requested categories.

    The mapping table gates the work: for each category, only the admitted
    locations generate a request, each carrying the system description, the
    edge, the flow description, and the category's threat tree. The response
    is constrained to that tree's node ids, so an out-of-tree node is a
    schema violation the gateway retries and then surfaces.
    """
    if not flow_description.strip():
        raise PillarError("flow_description must be non-empty")
    if not categories:
        raise PillarError("select at least one category to analyze")
    rng = random.Random(seed)
    ordered = [c for c in LinddunCategory if c in set(categories)]

    findings: list[ProFinding] = []
    failures: list[dict[str, str]] = []
    for category in ordered:
        admitted = applicable_locations(kb.mapping, edge, category)
        tree = kb.trees.trees[category]
        schema = _pro_schema(kb.trees.node_ids(category))
        for location in _LOCATION_ORDER:
            if location not in admitted:
                continue
            parts = [
                prompts.system_description_block(profile, None),
                prompts.edge_block(edge, flow_description),
                f"Threat category: {category.display_name}",
                f"Location to assess: {location.value}",
                "Threat tree:\n" + prompts.render_tree(tree),
            ]
            request = StructuredRequest(
                purpose_tag="pro_edge_analysis",
                system_prompt=prompts.pro_system_prompt(),
                user_parts=[TextPart("\n\n".join(parts))],
                response_schema=schema,
                temperature=CLASSIFY_TEMPERATURE,
                seed=rng.randrange(2**32) if seed is not None else None,
                provider_selector=selector or ProviderSelector.random_enabled(),
            )
            try:
                response = gateway.complete_structured(request)
            except GatewayError as exc:
                logger.warning("PRO pair (%s, %s) on edge %s failed: %s",
                               category.value, location.value, edge.id, exc)
                failures.append({
                    "category": category.value,
                    "location": location.value,
                    "error": str(exc),
                })
                continue
            findings.append(ProFinding(
                edge_ref=edge.id,
                location=location,
                category=category,
                tree_node=response.document["tree_node"],
                title=response.document["title"],
                description=response.document["description"],
            ))
    return ProRunResult(findings=findings, failures=failures)


def pro_findings_to_threats(findings: list[ProFinding]) -> list[Threat]:
    return [
        Threat(
            methodology=Methodology.LINDDUN_PRO,
            category=f.category,
            title=f.title,
            description=f.description,
            location=f.location,
            edge_ref=f.edge_ref,
            tree_node=f.tree_node,
        )
        for f in findings
    ]
