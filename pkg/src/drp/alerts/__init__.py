"""Alert rules, evaluation ticks, and analyzer auto-trigger."""

from .rules import (
    DEFAULT_POSTPROCESSOR,
    AlertEngine,
    AlertRule,
    AnalyzerBinding,
    build_inputs,
    rule_from_obj,
    rule_to_obj,
)

__all__ = [
    "AlertEngine",
    "AlertRule",
    "AnalyzerBinding",
    "DEFAULT_POSTPROCESSOR",
    "build_inputs",
    "rule_from_obj",
    "rule_to_obj",
]
