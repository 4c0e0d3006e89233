"""Prompt construction shared by elicitation, assessment and DFD generation.

Everything here is a pure function of domain objects, so prompts are
deterministic and auditable in the mock provider's call log.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .model import ApplicationProfile, LinddunCategory

if TYPE_CHECKING:
    from .dfd import Dfd, DfdEdge
    from .kb import GoCard, ThreatTreeNode

ALL_CATEGORY_NAMES = ", ".join(c.display_name for c in LinddunCategory)


def profile_summary(profile: ApplicationProfile) -> str:
    """Render the application profile as the system-description prompt block."""
    app_type = profile.app_type.value
    if profile.app_type_label:
        app_type += f" ({profile.app_type_label})"
    lines = [
        f"Application type: {app_type}",
        f"Description: {profile.description}",
    ]
    if profile.data_policy:
        lines.append(f"Data policy: {profile.data_policy}")
    if profile.authentication_methods:
        lines.append("Authentication methods: " + ", ".join(profile.authentication_methods))
    if profile.data_types:
        lines.append("Collected data types:")
        for row in profile.data_types:
            facts = [row.category or "uncategorized",
                     f"collected from {row.collected_from or 'unspecified'}",
                     "stored" if row.stored else "not stored",
                     "encrypted at rest" if row.encrypted_at_rest else "not encrypted at rest",
                     "shared with third parties" if row.shared_with_third_parties
                     else "not shared with third parties"]
            if row.notes:
                facts.append(row.notes)
            lines.append(f"  - {row.name}: " + "; ".join(facts))
    return "\n".join(lines)


def dfd_summary(dfd: Dfd) -> str:
    lines = ["Data flow diagram edges:"]
    for edge in dfd.edges:
        boundary = " [crosses trust boundary]" if edge.crosses_trust_boundary else ""
        lines.append(
            f"  {edge.id}: {edge.from_name} ({edge.from_kind.value}) -> "
            f"{edge.to_name} ({edge.to_kind.value}), data: {edge.data_label}{boundary}")
    return "\n".join(lines)


def system_description_block(profile: ApplicationProfile, dfd: Dfd | None) -> str:
    parts = ["System description:", profile_summary(profile)]
    if dfd is not None and dfd.edges:
        parts.append(dfd_summary(dfd))
    return "\n\n".join(parts)


def card_block(card: GoCard) -> str:
    lines = [
        f"Threat card: {card.title}",
        f"Category: {card.category.display_name}",
        f"Card description: {card.description}",
    ]
    if card.hotspots:
        lines.append("Hotspots to examine: " + "; ".join(card.hotspots))
    lines.append(f"Question: {card.elicitation_question}")
    return "\n".join(lines)


def render_tree(node: ThreatTreeNode, depth: int = 0) -> str:
    lines = [f"{'  ' * depth}{node.node_id} {node.label}: {node.description}"]
    for child in node.children:
        lines.append(render_tree(child, depth + 1))
    return "\n".join(lines)


def edge_block(edge: DfdEdge, flow_description: str) -> str:
    return "\n".join([
        f"DFD edge under analysis: {edge.from_name} ({edge.from_kind.value}) -> "
        f"{edge.to_name} ({edge.to_kind.value})",
        f"Data in transit: {edge.data_label}",
        f"Crosses trust boundary: {'yes' if edge.crosses_trust_boundary else 'no'}",
        f"Flow description: {flow_description}",
    ])


# -- system prompts ---------------------------------------------------------

def dfd_generation_system_prompt() -> str:
    return (
        "You are a security architect. Extract a data flow diagram from the "
        "given material as a list of directed edges. Endpoint kinds are "
        "entity (external actor), process (computation), or data_store "
        "(persistence). Mark crosses_trust_boundary true when a flow leaves "
        "one trust zone for another. Use short consistent node names."
    )


def zero_shot_system_prompt() -> str:
    return (
        "You are a privacy threat modeling assistant. Identify privacy "
        "threats in the described system, covering every one of these "
        f"categories: {ALL_CATEGORY_NAMES}. Report at least one threat per "
        "category that plausibly applies, each with a short title and a "
        "concrete description grounded in the system details."
    )


def go_agent_task() -> str:
    return (
        "Decide whether the threat on this card is present in the described "
        "system. Answer with your verdict and the concrete reason, grounded "
        "in the system details and your own area of expertise."
    )


def go_judge_system_prompt() -> str:
    return (
        "You are the judge closing a privacy threat analysis. You receive the "
        "final opinions of all analysts. Your only task is to determine the "
        "final verdict: whether the card's threat is present in the system, "
        "and the decisive reason."
    )


def pro_system_prompt() -> str:
    return (
        "You are a privacy threat analyst performing a systematic per-edge "
        "assessment. Using the provided threat tree, identify the most "
        "probable threat of the given category at the given location of the "
        "edge (source, data flow, or destination). Choose the single most "
        "specific applicable tree node and describe the threat concretely."
    )


def impact_system_prompt() -> str:
    return (
        "You are a privacy impact assessor. Write a brief impact assessment "
        "for the given threat in the described system: who is affected, what "
        "harm results, and how severe it is."
    )


def pattern_shortlist_system_prompt() -> str:
    return (
        "You select privacy patterns. From the catalog summaries below, list "
        "the names of the patterns potentially relevant to mitigating the "
        "given threat. Return names exactly as written, most relevant first."
    )


def pattern_select_system_prompt() -> str:
    return (
        "You are choosing final control measures. From the full pattern "
        "descriptions below, select the patterns worth implementing against "
        "the given threat. For each, explain its relevance and give concrete "
        "guidance on how to implement it in this system."
    )
