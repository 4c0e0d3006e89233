"""Core domain types: LINDDUN categories, application profile, threats, sessions.

The session is the persistent unit of work. It serializes to a single JSON
document (snake_case fields, ``schema_version`` at top level) and round-trips
losslessly, preserving unknown top-level fields written by the same schema
version.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import TYPE_CHECKING, Any

from .errors import VersionMismatchError

if TYPE_CHECKING:
    from .dfd import Dfd

SCHEMA_VERSION = 1


def now_iso() -> str:
    """Current UTC time as ISO-8601 with a Z suffix."""
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def new_id() -> str:
    return uuid.uuid4().hex


class LinddunCategory(str, Enum):
    LINKING = "linking"
    IDENTIFYING = "identifying"
    NON_REPUDIATION = "non_repudiation"
    DETECTING = "detecting"
    DATA_DISCLOSURE = "data_disclosure"
    UNAWARENESS = "unawareness"
    NON_COMPLIANCE = "non_compliance"

    @property
    def letter(self) -> str:
        """Short code used as the root id of this category's threat tree."""
        return _CATEGORY_LETTERS[self]

    @property
    def display_name(self) -> str:
        return _CATEGORY_NAMES[self]


_CATEGORY_LETTERS = {
    LinddunCategory.LINKING: "L",
    LinddunCategory.IDENTIFYING: "I",
    LinddunCategory.NON_REPUDIATION: "NR",
    LinddunCategory.DETECTING: "D",
    LinddunCategory.DATA_DISCLOSURE: "DD",
    LinddunCategory.UNAWARENESS: "U",
    LinddunCategory.NON_COMPLIANCE: "NC",
}

_CATEGORY_NAMES = {
    LinddunCategory.LINKING: "Linking",
    LinddunCategory.IDENTIFYING: "Identifying",
    LinddunCategory.NON_REPUDIATION: "Non-repudiation",
    LinddunCategory.DETECTING: "Detecting",
    LinddunCategory.DATA_DISCLOSURE: "Data Disclosure",
    LinddunCategory.UNAWARENESS: "Unawareness",
    LinddunCategory.NON_COMPLIANCE: "Non-compliance",
}


class Methodology(str, Enum):
    ZERO_SHOT = "zero_shot"
    LINDDUN_GO = "linddun_go"
    LINDDUN_PRO = "linddun_pro"


class AppType(str, Enum):
    WEB = "web"
    MOBILE = "mobile"
    DESKTOP = "desktop"
    IOT = "iot"
    OTHER = "other"


class ThreatLocation(str, Enum):
    SOURCE = "source"
    FLOW = "flow"
    DESTINATION = "destination"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass
class ValidationIssue:
    """A single finding from profile or DFD validation.

    ``code`` is drawn from the closed sets documented on the validators.
    Issues are data, not failures: validators never raise.
    """

    severity: Severity
    code: str
    message: str
    edge_ref: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
            "edge_ref": self.edge_ref,
        }


@dataclass
class DataTypeRow:
    """One row of the collected-data table in the application profile."""

    name: str
    category: str = ""
    collected_from: str = ""
    stored: bool = False
    encrypted_at_rest: bool = False
    shared_with_third_parties: bool = False
    notes: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "category": self.category,
            "collected_from": self.collected_from,
            "stored": self.stored,
            "encrypted_at_rest": self.encrypted_at_rest,
            "shared_with_third_parties": self.shared_with_third_parties,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DataTypeRow:
        return cls(
            name=data.get("name", ""),
            category=data.get("category", ""),
            collected_from=data.get("collected_from", ""),
            stored=bool(data.get("stored", False)),
            encrypted_at_rest=bool(data.get("encrypted_at_rest", False)),
            shared_with_third_parties=bool(data.get("shared_with_third_parties", False)),
            notes=data.get("notes", ""),
        )


@dataclass
class ApplicationProfile:
    """Textual system description driving all elicitation prompts."""

    app_type: AppType = AppType.WEB
    app_type_label: str = ""
    description: str = ""
    data_policy: str = ""
    authentication_methods: list[str] = field(default_factory=list)
    data_types: list[DataTypeRow] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "app_type": self.app_type.value,
            "app_type_label": self.app_type_label,
            "description": self.description,
            "data_policy": self.data_policy,
            "authentication_methods": list(self.authentication_methods),
            "data_types": [row.to_dict() for row in self.data_types],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ApplicationProfile:
        return cls(
            app_type=AppType(data.get("app_type", "web")),
            app_type_label=data.get("app_type_label", ""),
            description=data.get("description", ""),
            data_policy=data.get("data_policy", ""),
            authentication_methods=list(data.get("authentication_methods", [])),
            data_types=[DataTypeRow.from_dict(r) for r in data.get("data_types", [])],
        )


# Closed code set for validate_profile
PROFILE_DESCRIPTION_EMPTY = "PROFILE_DESCRIPTION_EMPTY"
DUPLICATE_DATA_TYPE = "DUPLICATE_DATA_TYPE"
DATA_TYPE_NAME_EMPTY = "DATA_TYPE_NAME_EMPTY"
NO_DATA_TYPES = "NO_DATA_TYPES"


def validate_profile(profile: ApplicationProfile) -> list[ValidationIssue]:
    """Check a profile before elicitation.

    Errors (block elicitation): empty description, duplicate or empty
    data-type names. Warnings: empty data-type table.
    """
    issues: list[ValidationIssue] = []
    if not profile.description.strip():
        issues.append(ValidationIssue(
            Severity.ERROR, PROFILE_DESCRIPTION_EMPTY, "application description is empty"))
    seen: set[str] = set()
    for row in profile.data_types:
        name = row.name.strip()
        if not name:
            issues.append(ValidationIssue(
                Severity.ERROR, DATA_TYPE_NAME_EMPTY, "data type row has an empty name"))
            continue
        if name in seen:
            issues.append(ValidationIssue(
                Severity.ERROR, DUPLICATE_DATA_TYPE, f"duplicate data type name: {name!r}"))
        seen.add(name)
    if not profile.data_types:
        issues.append(ValidationIssue(
            Severity.WARNING, NO_DATA_TYPES, "no collected data types are listed"))
    return issues


def profile_is_elicitation_ready(profile: ApplicationProfile) -> bool:
    return not any(i.severity is Severity.ERROR for i in validate_profile(profile))


@dataclass
class ControlMeasure:
    """A privacy pattern selected as mitigation for one threat."""

    pattern_name: str
    relevance: str = ""
    implementation_guidance: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "pattern_name": self.pattern_name,
            "relevance": self.relevance,
            "implementation_guidance": self.implementation_guidance,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ControlMeasure:
        return cls(
            pattern_name=data.get("pattern_name", ""),
            relevance=data.get("relevance", ""),
            implementation_guidance=data.get("implementation_guidance", ""),
        )


@dataclass
class Threat:
    """A normalized elicited threat.

    Construction enforces the methodology-specific field rules, so no
    constructor call can yield an invalid threat:

    - location and edge_ref are present iff methodology is LINDDUN_PRO;
    - card_ref is present iff methodology is LINDDUN_GO.

    ``included``, ``impact`` and ``controls`` are working state owned by the
    assessment phase.
    """

    methodology: Methodology
    category: LinddunCategory
    title: str
    description: str
    id: str = field(default_factory=new_id)
    location: ThreatLocation | None = None
    edge_ref: str | None = None
    tree_node: str | None = None
    card_ref: str | None = None
    included: bool = False
    impact: str | None = None
    controls: list[ControlMeasure] = field(default_factory=list)

    def __post_init__(self):
        if self.methodology is Methodology.LINDDUN_PRO:
            if self.location is None or self.edge_ref is None:
                raise ValueError("PRO threats require both location and edge_ref")
        elif self.location is not None or self.edge_ref is not None:
            raise ValueError(
                f"location/edge_ref are only valid for PRO threats, not {self.methodology.value}")
        if (self.card_ref is not None) != (self.methodology is Methodology.LINDDUN_GO):
            raise ValueError("card_ref is required for GO threats and invalid otherwise")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "methodology": self.methodology.value,
            "category": self.category.value,
            "title": self.title,
            "description": self.description,
            "location": self.location.value if self.location else None,
            "edge_ref": self.edge_ref,
            "tree_node": self.tree_node,
            "card_ref": self.card_ref,
            "included": self.included,
            "impact": self.impact,
            "controls": [c.to_dict() for c in self.controls],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Threat:
        location = data.get("location")
        return cls(
            id=data["id"],
            methodology=Methodology(data["methodology"]),
            category=LinddunCategory(data["category"]),
            title=data.get("title", ""),
            description=data.get("description", ""),
            location=ThreatLocation(location) if location else None,
            edge_ref=data.get("edge_ref"),
            tree_node=data.get("tree_node"),
            card_ref=data.get("card_ref"),
            included=bool(data.get("included", False)),
            impact=data.get("impact"),
            controls=[ControlMeasure.from_dict(c) for c in data.get("controls", [])],
        )


@dataclass
class ReportMeta:
    """General information printed at the head of the final report."""

    app_name: str = ""
    author: str = ""
    organization: str = ""
    date: str = ""
    scope_notes: str = ""
    include_dfd: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "app_name": self.app_name,
            "author": self.author,
            "organization": self.organization,
            "date": self.date,
            "scope_notes": self.scope_notes,
            "include_dfd": self.include_dfd,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ReportMeta:
        return cls(
            app_name=data.get("app_name", ""),
            author=data.get("author", ""),
            organization=data.get("organization", ""),
            date=data.get("date", ""),
            scope_notes=data.get("scope_notes", ""),
            include_dfd=bool(data.get("include_dfd", True)),
        )


def _empty_results() -> dict[Methodology, list[Threat]]:
    return {m: [] for m in Methodology}


@dataclass
class Session:
    """Persistent unit of work tying profile, DFD, elicitation and report state.

    Mutated only by its owning request handler; one writer at a time per
    session (enforced by the service layer).
    """

    id: str = field(default_factory=new_id)
    created_at: str = field(default_factory=now_iso)
    updated_at: str = field(default_factory=now_iso)
    profile: ApplicationProfile = field(default_factory=ApplicationProfile)
    dfd: Dfd | None = None
    elicitation_results: dict[Methodology, list[Threat]] = field(default_factory=_empty_results)
    assessment_source: Methodology | None = None
    report_meta: ReportMeta = field(default_factory=ReportMeta)
    go_transcripts: list[dict[str, Any]] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    # Unknown top-level fields seen in a stored document; re-emitted verbatim.
    extra: dict[str, Any] = field(default_factory=dict)

    _KNOWN_FIELDS = frozenset({
        "id", "created_at", "updated_at", "profile", "dfd", "elicitation_results",
        "assessment_source", "report_meta", "go_transcripts", "schema_version",
    })

    def touch(self) -> None:
        self.updated_at = now_iso()

    def results_for(self, methodology: Methodology) -> list[Threat]:
        return self.elicitation_results.setdefault(methodology, [])

    def working_set(self) -> list[Threat]:
        """Threats under assessment (the assessment_source result list)."""
        if self.assessment_source is None:
            return []
        return self.results_for(self.assessment_source)

    def find_threat(self, threat_id: str) -> Threat | None:
        for threat in self.working_set():
            if threat.id == threat_id:
                return threat
        return None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "schema_version": self.schema_version,
            "id": self.id,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "profile": self.profile.to_dict(),
            "dfd": self.dfd.to_dict() if self.dfd is not None else None,
            "elicitation_results": {
                m.value: [t.to_dict() for t in threats]
                for m, threats in sorted(self.elicitation_results.items(),
                                         key=lambda kv: kv[0].value)
            },
            "assessment_source":
                self.assessment_source.value if self.assessment_source else None,
            "report_meta": self.report_meta.to_dict(),
            "go_transcripts": list(self.go_transcripts),
        }
        doc.update(self.extra)
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Session:
        from .dfd import Dfd  # deferred: dfd imports this module

        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise VersionMismatchError(version, SCHEMA_VERSION)
        results = _empty_results()
        for key, threats in doc.get("elicitation_results", {}).items():
            results[Methodology(key)] = [Threat.from_dict(t) for t in threats]
        source = doc.get("assessment_source")
        extra = {k: v for k, v in doc.items() if k not in cls._KNOWN_FIELDS}
        return cls(
            id=doc["id"],
            created_at=doc.get("created_at", now_iso()),
            updated_at=doc.get("updated_at", now_iso()),
            profile=ApplicationProfile.from_dict(doc.get("profile", {})),
            dfd=Dfd.from_dict(doc["dfd"]) if doc.get("dfd") else None,
            elicitation_results=results,
            assessment_source=Methodology(source) if source else None,
            report_meta=ReportMeta.from_dict(doc.get("report_meta", {})),
            go_transcripts=list(doc.get("go_transcripts", [])),
            schema_version=version,
            extra=extra,
        )
