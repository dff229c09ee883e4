"""Post-processing tier: actions on completed analyses, SLO causes, insights."""

from .actions import ANNOTATION_AUTHOR, JsonlLog, annotate_alert
from .builtin import (
    AnnotateAlertProcessor,
    CreateTaskProcessor,
    NotifyProcessor,
    register_builtin,
)
from .insights import InsightsReport, aggregate_insights, classify_slo_cause
from .runner import (
    PostProcessOutcome,
    PostProcessRequest,
    PostProcessRunner,
    StatefulAlreadyAttempted,
)

__all__ = [
    "ANNOTATION_AUTHOR",
    "AnnotateAlertProcessor",
    "CreateTaskProcessor",
    "InsightsReport",
    "JsonlLog",
    "NotifyProcessor",
    "PostProcessOutcome",
    "PostProcessRequest",
    "PostProcessRunner",
    "StatefulAlreadyAttempted",
    "aggregate_insights",
    "annotate_alert",
    "classify_slo_cause",
    "register_builtin",
]
