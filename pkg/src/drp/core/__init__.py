"""Shared domain types, validation, wire codec, and text rendering."""

from .codec import (
    CONTEXT_SCHEMA,
    FINDINGS_SCHEMA,
    REQUEST_SCHEMA,
    decode,
    decode_context,
    decode_findings,
    decode_request,
    encode,
)
from .errors import (
    DecodeError,
    DrpError,
    InvariantViolation,
    MissingRequired,
    StorageError,
    TransitionError,
    TypeMismatch,
    ValidationError,
)
from .render import render_text
from .types import (
    Alert,
    AlertAnnotation,
    AnalyzerDescriptor,
    CauseCategory,
    ChangeEvent,
    Confidence,
    Context,
    ContextValue,
    DiagnoseRequest,
    Direction,
    EventKind,
    FindingSection,
    Findings,
    FindingStatus,
    InputSchema,
    RequestStatus,
    SchemaParam,
    SectionPayload,
    TimeseriesPoint,
    ValueTag,
    Widget,
    can_transition,
)
from .validate import parse_value, validate_context

__all__ = [
    "Alert",
    "AlertAnnotation",
    "AnalyzerDescriptor",
    "CauseCategory",
    "ChangeEvent",
    "Confidence",
    "Context",
    "ContextValue",
    "CONTEXT_SCHEMA",
    "DecodeError",
    "DiagnoseRequest",
    "Direction",
    "DrpError",
    "EventKind",
    "FindingSection",
    "Findings",
    "FindingStatus",
    "FINDINGS_SCHEMA",
    "InputSchema",
    "InvariantViolation",
    "MissingRequired",
    "RequestStatus",
    "REQUEST_SCHEMA",
    "SchemaParam",
    "SectionPayload",
    "StorageError",
    "TimeseriesPoint",
    "TransitionError",
    "TypeMismatch",
    "ValidationError",
    "ValueTag",
    "Widget",
    "can_transition",
    "decode",
    "decode_context",
    "decode_findings",
    "decode_request",
    "encode",
    "parse_value",
    "render_text",
    "validate_context",
]
