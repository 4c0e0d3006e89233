"""PILLAR: an LLM-assisted LINDDUN privacy threat modeling workbench."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ApplicationProfile,
    ControlMeasure,
    DataTypeRow,
    LinddunCategory,
    Methodology,
    ReportMeta,
    Session,
    Threat,
    ThreatLocation,
    validate_profile,
)
