"""Shared fixtures: a small synthetic knowledge base and mock gateways.

All tests run against these fixtures, never against the bundled production
assets, so correctness does not depend on asset content.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from pillar import kb as kbmod
from pillar.dfd import Dfd, DfdEdge, DfdNodeKind
from pillar.gateway import LlmGateway, MockProvider, ProviderCapabilities, ProviderConfig
from pillar.model import ApplicationProfile, AppType, DataTypeRow, LinddunCategory

CATEGORIES = [c.value for c in LinddunCategory]

FIXTURE_DECK = {
    "cards": [
        {
            "id": f"fix-{i}",
            "title": f"Fixture card {i}",
            "category": CATEGORIES[i % len(CATEGORIES)],
            "description": f"Synthetic threat description {i}.",
            "hotspots": [f"hotspot {i}a", f"hotspot {i}b"],
            "elicitation_question": f"Is fixture threat {i} present?",
        }
        for i in range(5)
    ]
}

# linking applies only to process and data_flow; detecting applies nowhere.
FIXTURE_MAPPING = {
    "entity": {
        "linking": False, "identifying": True, "non_repudiation": False,
        "detecting": False, "data_disclosure": False, "unawareness": True,
        "non_compliance": False,
    },
    "process": {
        "linking": True, "identifying": True, "non_repudiation": True,
        "detecting": False, "data_disclosure": False, "unawareness": False,
        "non_compliance": True,
    },
    "data_store": {
        "linking": False, "identifying": True, "non_repudiation": True,
        "detecting": False, "data_disclosure": True, "unawareness": False,
        "non_compliance": True,
    },
    "data_flow": {
        "linking": True, "identifying": True, "non_repudiation": False,
        "detecting": False, "data_disclosure": True, "unawareness": False,
        "non_compliance": True,
    },
}


def _tree(node_id: str, children: list | None = None) -> dict:
    return {
        "node_id": node_id,
        "label": f"label {node_id}",
        "description": f"description {node_id}",
        "children": children or [],
    }


FIXTURE_TREES = {
    "trees": {
        "linking": _tree("L", [
            _tree("L.1", [_tree("L.1.1"), _tree("L.1.2")]),
            _tree("L.2"),
        ]),
        "identifying": _tree("I", [_tree("I.1")]),
        "non_repudiation": _tree("NR", [_tree("NR.1")]),
        "detecting": _tree("D", [_tree("D.1")]),
        "data_disclosure": _tree("DD", [_tree("DD.1"), _tree("DD.2")]),
        "unawareness": _tree("U", [_tree("U.1")]),
        "non_compliance": _tree("NC", [_tree("NC.1")]),
    }
}

FIXTURE_PATTERNS = {
    "patterns": [
        {
            "name": "Data Minimization",
            "brief": "BRIEF-DM collect less data.",
            "full_text": "FULLTEXT-DM-a91f detailed minimization guidance.",
            "related_categories": ["data_disclosure", "linking"],
        },
        {
            "name": "Pseudonymization",
            "brief": "BRIEF-PS replace identifiers with tokens.",
            "full_text": "FULLTEXT-PS-b22c detailed pseudonymization guidance.",
            "related_categories": ["identifying"],
        },
        {
            "name": "Transparency Ledger",
            "brief": "BRIEF-TL record processing visibly.",
            "full_text": "FULLTEXT-TL-c3d7 detailed transparency guidance.",
            "related_categories": ["unawareness"],
        },
    ]
}


def write_fixture_kb(target: Path, *, deck=None, mapping=None, trees=None,
                     patterns=None) -> Path:
    target.mkdir(parents=True, exist_ok=True)
    (target / kbmod.GO_DECK_FILE).write_text(
        json.dumps(deck or FIXTURE_DECK), encoding="utf-8")
    (target / kbmod.MAPPING_TABLE_FILE).write_text(
        json.dumps(mapping or FIXTURE_MAPPING), encoding="utf-8")
    (target / kbmod.THREAT_TREES_FILE).write_text(
        json.dumps(trees or FIXTURE_TREES), encoding="utf-8")
    (target / kbmod.PRIVACY_PATTERNS_FILE).write_text(
        json.dumps(patterns or FIXTURE_PATTERNS), encoding="utf-8")
    return target


@pytest.fixture(scope="session")
def fixture_kb_dir(tmp_path_factory) -> Path:
    return write_fixture_kb(tmp_path_factory.mktemp("kb"))


@pytest.fixture(scope="session")
def fixture_kb(fixture_kb_dir) -> kbmod.KnowledgeBase:
    return kbmod.load_knowledge_base(fixture_kb_dir)


@pytest.fixture
def mock_provider() -> MockProvider:
    return MockProvider()


@pytest.fixture
def mock_gateway(mock_provider) -> LlmGateway:
    return LlmGateway([mock_provider])


def make_mock(provider_id: str = "mock", *, vision: bool = True,
              native: bool = False, max_retries: int = 3,
              enabled: bool = True) -> MockProvider:
    return MockProvider(ProviderConfig(
        provider_id=provider_id,
        kind="mock",
        model_name="mock-1",
        capabilities=ProviderCapabilities(vision=vision, native_structured_output=native),
        max_retries=max_retries,
        enabled=enabled,
    ))


@pytest.fixture
def profile() -> ApplicationProfile:
    return ApplicationProfile(
        app_type=AppType.WEB,
        description="A clinic portal where patients book visits and read results.",
        data_policy="Records retained for five years.",
        authentication_methods=["password", "oauth"],
        data_types=[
            DataTypeRow(name="email", category="contact", collected_from="patient",
                        stored=True, encrypted_at_rest=True),
            DataTypeRow(name="lab results", category="health", collected_from="lab",
                        stored=True, encrypted_at_rest=True,
                        shared_with_third_parties=False),
        ],
    )


@pytest.fixture
def simple_dfd() -> Dfd:
    return Dfd(edges=[
        DfdEdge(id="e1", from_name="Patient", from_kind=DfdNodeKind.ENTITY,
                to_name="Portal", to_kind=DfdNodeKind.PROCESS,
                data_label="credentials", crosses_trust_boundary=True),
        DfdEdge(id="e2", from_name="Portal", from_kind=DfdNodeKind.PROCESS,
                to_name="Records", to_kind=DfdNodeKind.DATA_STORE,
                data_label="visit notes", crosses_trust_boundary=False),
    ])
