"""Data-flow-diagram model: CSV codec, validation lints, DOT rendering,
and LLM-assisted generation from a description or an image.

Node identity is the (name, kind) pair; the node set is derived from edge
endpoints rather than kept as a separate table.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import (
    CsvFormatError,
    DfdValidationError,
    PayloadTooLargeError,
    UnsupportedMediaTypeError,
)
from .gateway import (
    ImagePart,
    LlmGateway,
    ProviderSelector,
    StructuredRequest,
    TextPart,
)
from .model import ApplicationProfile, Severity, ValidationIssue
from .prompts import dfd_generation_system_prompt, profile_summary


class DfdNodeKind(str, Enum):
    ENTITY = "entity"
    PROCESS = "process"
    DATA_STORE = "data_store"


@dataclass
class DfdEdge:
    """One directed data flow between two typed endpoints."""

    id: str
    from_name: str
    from_kind: DfdNodeKind
    to_name: str
    to_kind: DfdNodeKind
    data_label: str = ""
    crosses_trust_boundary: bool = False

    def endpoints(self) -> tuple[tuple[str, DfdNodeKind], tuple[str, DfdNodeKind]]:
        return (self.from_name, self.from_kind), (self.to_name, self.to_kind)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "from_name": self.from_name,
            "from_kind": self.from_kind.value,
            "to_name": self.to_name,
            "to_kind": self.to_kind.value,
            "data_label": self.data_label,
            "crosses_trust_boundary": self.crosses_trust_boundary,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DfdEdge:
        return cls(
            id=data["id"],
            from_name=data["from_name"],
            from_kind=DfdNodeKind(data["from_kind"]),
            to_name=data["to_name"],
            to_kind=DfdNodeKind(data["to_kind"]),
            data_label=data.get("data_label", ""),
            crosses_trust_boundary=bool(data.get("crosses_trust_boundary", False)),
        )


@dataclass
class Dfd:
    """Edge-based data flow diagram; the node set is the union of endpoints."""

    edges: list[DfdEdge] = field(default_factory=list)

    def nodes(self) -> list[tuple[str, DfdNodeKind]]:
        """Distinct (name, kind) endpoints in first-appearance order."""
        seen: list[tuple[str, DfdNodeKind]] = []
        for edge in self.edges:
            for endpoint in edge.endpoints():
                if endpoint not in seen:
                    seen.append(endpoint)
        return seen

    def edge_by_id(self, edge_id: str) -> DfdEdge | None:
        for edge in self.edges:
            if edge.id == edge_id:
                return edge
        return None

    def to_dict(self) -> dict[str, Any]:
        return {"edges": [e.to_dict() for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Dfd:
        return cls(edges=[DfdEdge.from_dict(e) for e in data.get("edges", [])])


# ---------------------------------------------------------------------------
# CSV codec
# ---------------------------------------------------------------------------

CSV_HEADER = ["from", "from_kind", "to", "to_kind", "data", "trust_boundary"]

_KIND_TOKENS = {k.value: k for k in DfdNodeKind}
_BOOL_TOKENS = {"true": True, "false": False, "1": True, "0": False}


def parse_edges_csv(text: str) -> Dfd:
    """Parse the edge-table CSV interchange format.

    Required header: ``from,from_kind,to,to_kind,data,trust_boundary``.
    Kinds parse case-insensitively from {entity, process, data_store};
    trust_boundary from {true, false, 0, 1}. Edge ids are assigned e1, e2, ...
    in row order. Errors name the offending 1-based row number.
    """
    reader = csv.reader(io.StringIO(text.lstrip("\ufeff"), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("document is empty; expected header row "
                             + ",".join(CSV_HEADER), row=1) from None
    normalized = [col.strip().lower() for col in header]
    if normalized != CSV_HEADER:
        raise CsvFormatError(
            f"bad header {header!r}; expected {','.join(CSV_HEADER)}", row=1)

    edges: list[DfdEdge] = []
    for index, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise CsvFormatError(
                f"row {index} has {len(row)} fields, expected {len(CSV_HEADER)}", row=index)
        from_name, from_kind_tok, to_name, to_kind_tok, data_label, boundary_tok = row
        from_kind = _KIND_TOKENS.get(from_kind_tok.strip().lower())
        if from_kind is None:
            raise CsvFormatError(
                f"row {index}: unknown kind {from_kind_tok.strip()!r} "
                f"(expected one of {', '.join(_KIND_TOKENS)})", row=index)
        to_kind = _KIND_TOKENS.get(to_kind_tok.strip().lower())
        if to_kind is None:
            raise CsvFormatError(
                f"row {index}: unknown kind {to_kind_tok.strip()!r} "
                f"(expected one of {', '.join(_KIND_TOKENS)})", row=index)
        boundary = _BOOL_TOKENS.get(boundary_tok.strip().lower())
        if boundary is None:
            raise CsvFormatError(
                f"row {index}: bad trust_boundary {boundary_tok.strip()!r} "
                "(expected true, false, 0 or 1)", row=index)
        edges.append(DfdEdge(
            id=f"e{len(edges) + 1}",
            from_name=from_name,
            from_kind=from_kind,
            to_name=to_name,
            to_kind=to_kind,
            data_label=data_label,
            crosses_trust_boundary=boundary,
        ))
    return Dfd(edges=edges)


def encode_edges_csv(dfd: Dfd) -> str:
    """Encode a DFD as the CSV interchange format (stable row order).

    ``parse_edges_csv(encode_edges_csv(d))`` equals ``d`` up to edge ids.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for edge in dfd.edges:
        writer.writerow([
            edge.from_name,
            edge.from_kind.value,
            edge.to_name,
            edge.to_kind.value,
            edge.data_label,
            "true" if edge.crosses_trust_boundary else "false",
        ])
    return out.getvalue()


# ---------------------------------------------------------------------------
# Validation lints
# ---------------------------------------------------------------------------

# Closed code set for validate_dfd
EMPTY_NODE_NAME = "EMPTY_NODE_NAME"
DUPLICATE_EDGE_ID = "DUPLICATE_EDGE_ID"
NO_PROCESS_ENDPOINT = "NO_PROCESS_ENDPOINT"
SELF_LOOP = "SELF_LOOP"
EMPTY_DATA_LABEL = "EMPTY_DATA_LABEL"
EMPTY_GENERATED_DFD = "EMPTY_GENERATED_DFD"


def validate_dfd(dfd: Dfd) -> list[ValidationIssue]:
    """Lint a DFD.

    Errors: empty endpoint names, duplicate edge ids. Warnings: no process
    endpoint on an edge, self-loops, empty data labels. Pure and
    order-insensitive over edge permutations.
    """
    issues: list[ValidationIssue] = []
    seen_ids: set[str] = set()
    for edge in dfd.edges:
        if edge.id in seen_ids:
            issues.append(ValidationIssue(
                Severity.ERROR, DUPLICATE_EDGE_ID,
                f"duplicate edge id {edge.id!r}", edge_ref=edge.id))
        seen_ids.add(edge.id)
        if not edge.from_name.strip() or not edge.to_name.strip():
            issues.append(ValidationIssue(
                Severity.ERROR, EMPTY_NODE_NAME,
                f"edge {edge.id} has an empty endpoint name", edge_ref=edge.id))
        kinds = {edge.from_kind, edge.to_kind}
        if DfdNodeKind.PROCESS not in kinds:
            issues.append(ValidationIssue(
                Severity.WARNING, NO_PROCESS_ENDPOINT,
                f"edge {edge.id} ({edge.from_kind.value} to {edge.to_kind.value}) "
                "has no process endpoint", edge_ref=edge.id))
        if (edge.from_name, edge.from_kind) == (edge.to_name, edge.to_kind):
            issues.append(ValidationIssue(
                Severity.WARNING, SELF_LOOP,
                f"edge {edge.id} is a self-loop on {edge.from_name!r}", edge_ref=edge.id))
        if not edge.data_label.strip():
            issues.append(ValidationIssue(
                Severity.WARNING, EMPTY_DATA_LABEL,
                f"edge {edge.id} has no data label", edge_ref=edge.id))
    return issues


def dfd_errors(dfd: Dfd) -> list[ValidationIssue]:
    return [i for i in validate_dfd(dfd) if i.severity is Severity.ERROR]


# ---------------------------------------------------------------------------
# DOT rendering
# ---------------------------------------------------------------------------

_SHAPES = {
    DfdNodeKind.ENTITY: "box",
    DfdNodeKind.PROCESS: "ellipse",
    DfdNodeKind.DATA_STORE: "cylinder",
}

HIGHLIGHT_COLOR = "crimson"


def _dot_quote(text: str) -> str:
    escaped = (text.replace("\\", "\\\\").replace('"', '\\"')
               .replace("\r", "\\n").replace("\n", "\\n"))
    return f'"{escaped}"'


def render_dot(dfd: Dfd, *, rankdir: str = "LR", highlight_edge: str | None = None) -> str:
    """Emit the DFD as a Graphviz DOT digraph.

    One node statement per distinct (name, kind) endpoint with the
    conventional shapes (entity=box, process=ellipse, data_store=cylinder),
    one edge statement per DfdEdge labeled with its data label.
    Trust-boundary-crossing edges are dashed; the highlighted edge, if any,
    is colored. Raises DfdValidationError if the DFD has validation errors.
    """
    errors = dfd_errors(dfd)
    if errors:
        raise DfdValidationError(errors)
    if rankdir not in {"LR", "TB", "RL", "BT"}:
        rankdir = "LR"

    node_ids: dict[tuple[str, DfdNodeKind], str] = {}
    lines = ["digraph dfd {", f"  rankdir={rankdir};"]
    for name, kind in dfd.nodes():
        node_id = f"n{len(node_ids)}"
        node_ids[(name, kind)] = node_id
        lines.append(f"  {node_id} [label={_dot_quote(name)}, shape={_SHAPES[kind]}];")
    for edge in dfd.edges:
        attrs = [f"label={_dot_quote(edge.data_label)}"]
        if edge.crosses_trust_boundary:
            attrs.append("style=dashed")
        if highlight_edge is not None and edge.id == highlight_edge:
            attrs.append(f"color={HIGHLIGHT_COLOR}")
            attrs.append("penwidth=2")
        source = node_ids[(edge.from_name, edge.from_kind)]
        target = node_ids[(edge.to_name, edge.to_kind)]
        lines.append(f"  {source} -> {target} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# LLM-assisted generation
# ---------------------------------------------------------------------------

KIND_VALUES = [k.value for k in DfdNodeKind]

EDGE_LIST_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "from_name": {"type": "string", "minLength": 1},
                    "from_kind": {"type": "string", "enum": KIND_VALUES},
                    "to_name": {"type": "string", "minLength": 1},
                    "to_kind": {"type": "string", "enum": KIND_VALUES},
                    "data_label": {"type": "string"},
                    "crosses_trust_boundary": {"type": "boolean"},
                },
                "required": ["from_name", "from_kind", "to_name", "to_kind",
                             "data_label", "crosses_trust_boundary"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["edges"],
    "additionalProperties": False,
}

DEFAULT_MAX_IMAGE_BYTES = 8 * 1024 * 1024
_IMAGE_MEDIA_TYPES = {"png": "image/png", "jpeg": "image/jpeg",
                      "image/png": "image/png", "image/jpeg": "image/jpeg",
                      "jpg": "image/jpeg"}


def _edges_from_document(document: dict[str, Any]) -> Dfd:
    edges = [
        DfdEdge(
            id=f"e{i + 1}",
            from_name=item["from_name"],
            from_kind=DfdNodeKind(item["from_kind"]),
            to_name=item["to_name"],
            to_kind=DfdNodeKind(item["to_kind"]),
            data_label=item.get("data_label", ""),
            crosses_trust_boundary=bool(item.get("crosses_trust_boundary", False)),
        )
        for i, item in enumerate(document.get("edges", []))
    ]
    return Dfd(edges=edges)


def _generation_issues(dfd: Dfd) -> list[ValidationIssue]:
    issues = validate_dfd(dfd)
    if not dfd.edges:
        issues.append(ValidationIssue(
            Severity.WARNING, EMPTY_GENERATED_DFD,
            "the model returned no edges; the DFD is empty"))
    return issues


def generate_dfd_from_description(
    profile: ApplicationProfile,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
) -> tuple[Dfd, list[ValidationIssue]]:
    """Ask the configured model for an edge list matching the profile.

    Returns the parsed DFD plus validation issues; the caller decides whether
    to merge or replace. An empty edge list is a warning, not an error.
    """
    request = StructuredRequest(
        purpose_tag="dfd_from_description",
        system_prompt=dfd_generation_system_prompt(),
        user_parts=[TextPart(
            "Derive the data flow diagram for the following system.\n\n"
            + profile_summary(profile))],
        response_schema=EDGE_LIST_SCHEMA,
        temperature=0.0,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    dfd = _edges_from_document(response.document)
    return dfd, _generation_issues(dfd)


def generate_dfd_from_image(
    image: bytes,
    media_type: str,
    gateway: LlmGateway,
    *,
    selector: ProviderSelector | None = None,
    seed: int | None = None,
    max_bytes: int = DEFAULT_MAX_IMAGE_BYTES,
) -> tuple[Dfd, list[ValidationIssue]]:
    """Same contract as generate_dfd_from_description but reads a diagram image.

    Only png/jpeg payloads up to ``max_bytes`` are accepted; the gateway never
    routes the request to a provider without vision capability.
    """
    normalized = _IMAGE_MEDIA_TYPES.get(media_type.strip().lower())
    if normalized is None:
        raise UnsupportedMediaTypeError(
            f"unsupported image media type {media_type!r}; expected png or jpeg")
    if len(image) > max_bytes:
        raise PayloadTooLargeError(
            f"image payload of {len(image)} bytes exceeds the {max_bytes} byte limit")
    request = StructuredRequest(
        purpose_tag="dfd_from_image",
        system_prompt=dfd_generation_system_prompt(),
        user_parts=[
            TextPart("Derive the data flow diagram shown in this image."),
            ImagePart(data=image, media_type=normalized),
        ],
        response_schema=EDGE_LIST_SCHEMA,
        temperature=0.0,
        seed=seed,
        provider_selector=selector or ProviderSelector.random_enabled(),
    )
    response = gateway.complete_structured(request)
    dfd = _edges_from_document(response.document)
    return dfd, _generation_issues(dfd)
