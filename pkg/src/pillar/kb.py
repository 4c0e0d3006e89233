"""LINDDUN data assets: GO card deck, PRO mapping table, threat trees,
privacy-pattern catalog.

Assets live in a directory of four JSON files (see assets/SCHEMA.md); the
bundled defaults can be overridden with ``--kb-dir`` / ``PILLAR_KB_DIR``.
All invariants are verified at load time and the load is all-or-nothing.
The loaded knowledge base is immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

from .dfd import DfdEdge, DfdNodeKind
from .errors import CardCountError, KnowledgeBaseError, NotFoundError
from .model import LinddunCategory, ThreatLocation

GO_DECK_FILE = "go_deck.json"
MAPPING_TABLE_FILE = "mapping_table.json"
THREAT_TREES_FILE = "threat_trees.json"
PRIVACY_PATTERNS_FILE = "privacy_patterns.json"


class ElementKind(str, Enum):
    """DFD element kinds the mapping table is keyed by.

    ``data_flow`` is the synthetic kind for the edge itself; the other three
    mirror DfdNodeKind.
    """

    ENTITY = "entity"
    PROCESS = "process"
    DATA_STORE = "data_store"
    DATA_FLOW = "data_flow"

    @classmethod
    def from_node_kind(cls, kind: DfdNodeKind) -> ElementKind:
        return cls(kind.value)


@dataclass(frozen=True)
class GoCard:
    id: str
    title: str
    category: LinddunCategory
    description: str
    hotspots: tuple[str, ...]
    elicitation_question: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "category": self.category.value,
            "description": self.description,
            "hotspots": list(self.hotspots),
            "elicitation_question": self.elicitation_question,
        }


@dataclass(frozen=True)
class MappingTable:
    """Total boolean map (element kind, category) -> threat applicability."""

    entries: dict[tuple[ElementKind, LinddunCategory], bool]

    def applicable(self, kind: ElementKind, category: LinddunCategory) -> bool:
        return self.entries[(kind, category)]


@dataclass(frozen=True)
class ThreatTreeNode:
    node_id: str
    label: str
    description: str
    children: tuple[ThreatTreeNode, ...] = ()

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class ThreatTreeSet:
    trees: dict[LinddunCategory, ThreatTreeNode]
    index: dict[str, tuple[LinddunCategory, ThreatTreeNode]]

    def node_ids(self, category: LinddunCategory) -> list[str]:
        return [n.node_id for n in self.trees[category].walk()]


@dataclass(frozen=True)
class PrivacyPattern:
    name: str
    brief: str
    full_text: str
    related_categories: tuple[LinddunCategory, ...] = ()


@dataclass(frozen=True)
class KnowledgeBase:
    deck: tuple[GoCard, ...]
    mapping: MappingTable
    trees: ThreatTreeSet
    patterns: tuple[PrivacyPattern, ...]
    pattern_index: dict[str, PrivacyPattern] = field(default_factory=dict)

    def pattern(self, name: str) -> PrivacyPattern:
        try:
            return self.pattern_index[name]
        except KeyError:
            raise NotFoundError(f"privacy pattern {name!r} is not in the catalog") from None

    def card(self, card_id: str) -> GoCard:
        for card in self.deck:
            if card.id == card_id:
                return card
        raise NotFoundError(f"GO card {card_id!r} is not in the deck")


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _read_json(asset_dir: Path, name: str) -> Any:
    path = asset_dir / name
    if not path.is_file():
        raise KnowledgeBaseError("file is missing", file=name)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise KnowledgeBaseError(f"malformed document: {exc}", file=name) from exc


def _require(condition: bool, message: str, *, file: str, location: str | None = None):
    if not condition:
        raise KnowledgeBaseError(message, file=file, location=location)


def _load_deck(asset_dir: Path) -> tuple[GoCard, ...]:
    doc = _read_json(asset_dir, GO_DECK_FILE)
    _require(isinstance(doc, dict) and isinstance(doc.get("cards"), list),
             "expected object with a 'cards' array", file=GO_DECK_FILE)
    cards: list[GoCard] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["cards"]):
        loc = f"cards[{i}]"
        _require(isinstance(raw, dict), "card entry must be an object",
                 file=GO_DECK_FILE, location=loc)
        card_id = raw.get("id", "")
        _require(isinstance(card_id, str) and bool(card_id), "card id is empty",
                 file=GO_DECK_FILE, location=loc)
        _require(card_id not in seen, f"duplicate card id {card_id!r}",
                 file=GO_DECK_FILE, location=loc)
        seen.add(card_id)
        try:
            category = LinddunCategory(raw.get("category", ""))
        except ValueError:
            raise KnowledgeBaseError(f"unknown category {raw.get('category')!r}",
                                     file=GO_DECK_FILE, location=loc) from None
        for text_field in ("title", "description", "elicitation_question"):
            value = raw.get(text_field, "")
            _require(isinstance(value, str) and bool(value.strip()),
                     f"{text_field} is empty", file=GO_DECK_FILE, location=loc)
        hotspots_raw = raw.get("hotspots", [])
        _require(isinstance(hotspots_raw, list), "hotspots must be an array",
                 file=GO_DECK_FILE, location=loc)
        hotspots = tuple(hotspots_raw)
        _require(all(isinstance(h, str) and h.strip() for h in hotspots),
                 "hotspot text is empty", file=GO_DECK_FILE, location=loc)
        cards.append(GoCard(
            id=card_id,
            title=raw["title"],
            category=category,
            description=raw["description"],
            hotspots=hotspots,
            elicitation_question=raw["elicitation_question"],
        ))
    return tuple(cards)


def _load_mapping(asset_dir: Path) -> MappingTable:
    doc = _read_json(asset_dir, MAPPING_TABLE_FILE)
    _require(isinstance(doc, dict), "expected an object keyed by element kind",
             file=MAPPING_TABLE_FILE)
    entries: dict[tuple[ElementKind, LinddunCategory], bool] = {}
    for kind_key, row in doc.items():
        try:
            kind = ElementKind(kind_key)
        except ValueError:
            raise KnowledgeBaseError(f"unknown element kind {kind_key!r}",
                                     file=MAPPING_TABLE_FILE, location=kind_key) from None
        _require(isinstance(row, dict), "expected an object keyed by category",
                 file=MAPPING_TABLE_FILE, location=kind_key)
        for cat_key, value in row.items():
            try:
                category = LinddunCategory(cat_key)
            except ValueError:
                raise KnowledgeBaseError(
                    f"unknown category {cat_key!r}", file=MAPPING_TABLE_FILE,
                    location=f"{kind_key}.{cat_key}") from None
            _require(isinstance(value, bool), "applicability must be boolean",
                     file=MAPPING_TABLE_FILE, location=f"{kind_key}.{cat_key}")
            entries[(kind, category)] = value
    missing = [(k.value, c.value) for k in ElementKind for c in LinddunCategory
               if (k, c) not in entries]
    _require(not missing,
             f"table is not total; missing {len(missing)} entries, first: {missing[:3]}",
             file=MAPPING_TABLE_FILE)
    return MappingTable(entries=entries)


def _parse_tree_node(raw: dict[str, Any], *, file: str, location: str) -> ThreatTreeNode:
    _require(isinstance(raw, dict), "tree node must be an object",
             file=file, location=location)
    node_id = raw.get("node_id", "")
    _require(isinstance(node_id, str) and bool(node_id), "node_id is empty",
             file=file, location=location)
    children_raw = raw.get("children", [])
    _require(isinstance(children_raw, list), "children must be an array",
             file=file, location=location)
    children = tuple(
        _parse_tree_node(child, file=file, location=f"{location}.children[{i}]")
        for i, child in enumerate(children_raw)
    )
    return ThreatTreeNode(
        node_id=node_id,
        label=str(raw.get("label", "")),
        description=str(raw.get("description", "")),
        children=children,
    )


def _check_ancestry(node: ThreatTreeNode, *, file: str):
    for child in node.children:
        _require(child.node_id.startswith(node.node_id + "."),
                 f"node {child.node_id!r} does not extend its parent {node.node_id!r}",
                 file=file, location=child.node_id)
        suffix = child.node_id[len(node.node_id) + 1:]
        _require(bool(suffix) and "." not in suffix,
                 f"node {child.node_id!r} must add exactly one dotted segment "
                 f"under {node.node_id!r}", file=file, location=child.node_id)
        _check_ancestry(child, file=file)


def _load_trees(asset_dir: Path) -> ThreatTreeSet:
    doc = _read_json(asset_dir, THREAT_TREES_FILE)
    _require(isinstance(doc, dict) and isinstance(doc.get("trees"), dict),
             "expected object with a 'trees' map", file=THREAT_TREES_FILE)
    trees: dict[LinddunCategory, ThreatTreeNode] = {}
    index: dict[str, tuple[LinddunCategory, ThreatTreeNode]] = {}
    for cat_key, raw_root in doc["trees"].items():
        try:
            category = LinddunCategory(cat_key)
        except ValueError:
            raise KnowledgeBaseError(f"unknown category {cat_key!r}",
                                     file=THREAT_TREES_FILE, location=cat_key) from None
        root = _parse_tree_node(raw_root, file=THREAT_TREES_FILE, location=cat_key)
        _require(root.node_id == category.letter,
                 f"root id {root.node_id!r} does not match category letter "
                 f"{category.letter!r}", file=THREAT_TREES_FILE, location=root.node_id)
        _check_ancestry(root, file=THREAT_TREES_FILE)
        for node in root.walk():
            _require(node.node_id not in index,
                     f"duplicate node id {node.node_id!r} across the tree set",
                     file=THREAT_TREES_FILE, location=node.node_id)
            index[node.node_id] = (category, node)
        trees[category] = root
    missing = [c.value for c in LinddunCategory if c not in trees]
    _require(not missing, f"missing trees for categories: {missing}",
             file=THREAT_TREES_FILE)
    return ThreatTreeSet(trees=trees, index=index)


def _load_patterns(asset_dir: Path) -> tuple[PrivacyPattern, ...]:
    doc = _read_json(asset_dir, PRIVACY_PATTERNS_FILE)
    _require(isinstance(doc, dict) and isinstance(doc.get("patterns"), list),
             "expected object with a 'patterns' array", file=PRIVACY_PATTERNS_FILE)
    patterns: list[PrivacyPattern] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["patterns"]):
        loc = f"patterns[{i}]"
        _require(isinstance(raw, dict), "pattern entry must be an object",
                 file=PRIVACY_PATTERNS_FILE, location=loc)
        name = raw.get("name", "")
        _require(isinstance(name, str) and bool(name.strip()), "pattern name is empty",
                 file=PRIVACY_PATTERNS_FILE, location=loc)
        _require(name not in seen, f"duplicate pattern name {name!r}",
                 file=PRIVACY_PATTERNS_FILE, location=loc)
        seen.add(name)
        for text_field in ("brief", "full_text"):
            value = raw.get(text_field, "")
            _require(isinstance(value, str) and bool(value.strip()),
                     f"{text_field} is empty", file=PRIVACY_PATTERNS_FILE, location=loc)
        related_raw = raw.get("related_categories", [])
        _require(isinstance(related_raw, list), "related_categories must be an array",
                 file=PRIVACY_PATTERNS_FILE, location=loc)
        try:
            related = tuple(LinddunCategory(c) for c in related_raw)
        except ValueError as exc:
            raise KnowledgeBaseError(f"unknown category in related_categories: {exc}",
                                     file=PRIVACY_PATTERNS_FILE, location=loc) from None
        patterns.append(PrivacyPattern(
            name=name, brief=raw["brief"], full_text=raw["full_text"],
            related_categories=related))
    return tuple(patterns)


def load_knowledge_base(asset_dir: str | Path) -> KnowledgeBase:
    """Load and verify all four asset files; any violation aborts the load."""
    asset_dir = Path(asset_dir)
    if not asset_dir.is_dir():
        raise KnowledgeBaseError(f"asset directory {asset_dir} does not exist",
                                 file=str(asset_dir))
    deck = _load_deck(asset_dir)
    mapping = _load_mapping(asset_dir)
    trees = _load_trees(asset_dir)
    patterns = _load_patterns(asset_dir)
    return KnowledgeBase(
        deck=deck, mapping=mapping, trees=trees, patterns=patterns,
        pattern_index={p.name: p for p in patterns},
    )


def bundled_asset_dir() -> Path:
    """Directory of the assets shipped inside the package."""
    return Path(str(resources.files("pillar").joinpath("assets")))


def load_default_knowledge_base() -> KnowledgeBase:
    return load_knowledge_base(bundled_asset_dir())


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def draw_cards(deck: list[GoCard] | tuple[GoCard, ...], n: int,
               seed: int | None = None) -> list[GoCard]:
    """Draw n distinct cards; deterministic under a fixed seed."""
    if n < 0 or n > len(deck):
        raise CardCountError(
            f"cannot draw {n} cards from a deck of {len(deck)}")
    return random.Random(seed).sample(list(deck), n)


def applicable_locations(table: MappingTable, edge: DfdEdge,
                         category: LinddunCategory) -> set[ThreatLocation]:
    """Locations on an edge where the mapping table admits this category.

    source follows the from-endpoint kind, destination the to-endpoint kind,
    flow the synthetic data_flow kind.
    """
    result: set[ThreatLocation] = set()
    if table.applicable(ElementKind.from_node_kind(edge.from_kind), category):
        result.add(ThreatLocation.SOURCE)
    if table.applicable(ElementKind.DATA_FLOW, category):
        result.add(ThreatLocation.FLOW)
    if table.applicable(ElementKind.from_node_kind(edge.to_kind), category):
        result.add(ThreatLocation.DESTINATION)
    return result


def lookup_tree_node(trees: ThreatTreeSet, node_id: str) -> ThreatTreeNode:
    try:
        return trees.index[node_id][1]
    except KeyError:
        raise NotFoundError(f"threat tree node {node_id!r} not found") from None


def tree_category(trees: ThreatTreeSet, node_id: str) -> LinddunCategory:
    try:
        return trees.index[node_id][0]
    except KeyError:
        raise NotFoundError(f"threat tree node {node_id!r} not found") from None
