"""Exception hierarchy shared by all modules.

Every error carries a stable ``code`` so the HTTP layer can emit
problem-details JSON without string-matching messages.
"""

from __future__ import annotations

from typing import Any


class PillarError(Exception):
    """Base class for all domain errors."""

    code = "PILLAR_ERROR"

    def __init__(self, message: str, *, detail: Any = None):
        super().__init__(message)
        self.detail = detail

    def to_problem(self) -> dict[str, Any]:
        return {"code": self.code, "message": str(self), "detail": self.detail}


class NotFoundError(PillarError):
    code = "NOT_FOUND"


class VersionMismatchError(PillarError):
    """A stored document's schema_version does not match this writer's."""

    code = "SCHEMA_VERSION_MISMATCH"

    def __init__(self, found: int, expected: int):
        super().__init__(
            f"document schema_version {found} is incompatible with supported version {expected}",
            detail={"found": found, "expected": expected},
        )
        self.found = found
        self.expected = expected


class CsvFormatError(PillarError):
    code = "CSV_FORMAT"

    def __init__(self, message: str, *, row: int | None = None):
        super().__init__(message, detail={"row": row})
        self.row = row


class DfdValidationError(PillarError):
    """Raised when an operation requires an error-free DFD."""

    code = "DFD_INVALID"

    def __init__(self, issues):
        super().__init__(
            "DFD has validation errors: " + "; ".join(i.message for i in issues),
            detail=[i.to_dict() for i in issues],
        )
        self.issues = list(issues)


class KnowledgeBaseError(PillarError):
    code = "KB_INVALID"

    def __init__(self, message: str, *, file: str | None = None, location: str | None = None):
        where = " ".join(p for p in (file, location and f"({location})") if p)
        super().__init__(f"{where}: {message}" if where else message,
                         detail={"file": file, "location": location})
        self.file = file
        self.location = location


class CardCountError(PillarError):
    code = "CARD_COUNT_RANGE"


class ProviderSelectionError(PillarError):
    code = "PROVIDER_SELECTION"


class NoVisionProviderError(PillarError):
    code = "NO_VISION_PROVIDER"


class PayloadTooLargeError(PillarError):
    code = "PAYLOAD_TOO_LARGE"


class UnsupportedMediaTypeError(PillarError):
    code = "UNSUPPORTED_MEDIA_TYPE"


class GatewayError(PillarError):
    """Base for errors surfaced by an LLM provider call."""

    code = "GATEWAY"

    def __init__(self, message: str, *, provider_id: str, purpose_tag: str, detail: Any = None):
        super().__init__(
            f"[provider={provider_id} purpose={purpose_tag}] {message}", detail=detail
        )
        self.provider_id = provider_id
        self.purpose_tag = purpose_tag


class SchemaViolationError(GatewayError):
    """Provider output failed schema validation after all retries."""

    code = "SCHEMA_VIOLATION"

    def __init__(self, message: str, *, provider_id: str, purpose_tag: str,
                 attempts: int, raw_text: str):
        super().__init__(message, provider_id=provider_id, purpose_tag=purpose_tag,
                         detail={"attempts": attempts})
        self.attempts = attempts
        self.raw_text = raw_text


class GatewayTimeoutError(GatewayError):
    code = "TIMEOUT"


class AuthenticationError(GatewayError):
    code = "AUTHENTICATION"


class TransportError(GatewayError):
    code = "TRANSPORT"


class DebateAbortedError(PillarError):
    """An agent call failed mid-debate; carries the rounds completed so far."""

    code = "DEBATE_ABORTED"

    def __init__(self, message: str, *, card_id: str, completed_rounds):
        super().__init__(message, detail={"card_id": card_id,
                                          "completed_rounds": len(completed_rounds)})
        self.card_id = card_id
        self.completed_rounds = completed_rounds


class AssessmentError(PillarError):
    code = "ASSESSMENT"


class ReportError(PillarError):
    code = "REPORT"


class StorageError(PillarError):
    code = "STORAGE"

    def __init__(self, message: str, *, path: str | None = None):
        super().__init__(message, detail={"path": path})
        self.path = path
