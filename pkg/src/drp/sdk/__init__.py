"""Analyzer authoring surface: interfaces, registry, toolkit, scaffolding."""

from .analyzer import Action, ActionKind, Analyzer, PostProcessor
from .builder import FindingsBuilder
from .registry import (
    AnalyzerRegistry,
    DuplicateId,
    PostProcessorRegistry,
    UnknownAnalyzer,
    UnknownPostProcessor,
)
from .scaffold import InvalidName, ScaffoldExists, bootstrap_template
from .toolkit import (
    ChildFailed,
    CycleDetected,
    DataSource,
    LiveDataSource,
    Toolkit,
    TraceRecorder,
    deserialize_events,
    deserialize_rows,
    deserialize_ts_result,
    serialize_events,
    serialize_rows,
    serialize_ts_result,
)

__all__ = [
    "Action",
    "ActionKind",
    "Analyzer",
    "AnalyzerRegistry",
    "ChildFailed",
    "CycleDetected",
    "DataSource",
    "DuplicateId",
    "FindingsBuilder",
    "InvalidName",
    "LiveDataSource",
    "PostProcessor",
    "PostProcessorRegistry",
    "ScaffoldExists",
    "Toolkit",
    "TraceRecorder",
    "UnknownAnalyzer",
    "UnknownPostProcessor",
    "bootstrap_template",
    "deserialize_events",
    "deserialize_rows",
    "deserialize_ts_result",
    "serialize_events",
    "serialize_rows",
    "serialize_ts_result",
]
