"""Domain types shared by every subsystem.

All types here are immutable after construction and validate their
invariants eagerly, so a value that exists is a value that is legal.
Timestamps are integer milliseconds since the Unix epoch, UTC.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Mapping, Optional, Sequence

from .errors import InvariantViolation


class ValueTag(str, Enum):
    STRING = "STRING"
    INT = "INT"
    FLOAT = "FLOAT"
    BOOL = "BOOL"
    TIMESTAMP = "TIMESTAMP"
    STRING_LIST = "STRING_LIST"


@dataclass(frozen=True)
class ContextValue:
    """A typed investigation parameter: the tag says what the payload is."""

    tag: ValueTag
    value: Any

    def __post_init__(self):
        tag, value = self.tag, self.value
        ok = False
        if tag is ValueTag.STRING:
            ok = isinstance(value, str)
        elif tag is ValueTag.INT:
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif tag is ValueTag.FLOAT:
            ok = (
                isinstance(value, float)
                and not isinstance(value, bool)
                and math.isfinite(value)
            )
        elif tag is ValueTag.BOOL:
            ok = isinstance(value, bool)
        elif tag is ValueTag.TIMESTAMP:
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif tag is ValueTag.STRING_LIST:
            ok = isinstance(value, (list, tuple)) and all(
                isinstance(v, str) for v in value
            )
            if ok:
                object.__setattr__(self, "value", tuple(value))
        if not ok:
            raise InvariantViolation(f"value {value!r} does not match tag {tag.value}")

    @staticmethod
    def string(v: str) -> "ContextValue":
        return ContextValue(ValueTag.STRING, v)

    @staticmethod
    def of_int(v: int) -> "ContextValue":
        return ContextValue(ValueTag.INT, v)

    @staticmethod
    def of_float(v: float) -> "ContextValue":
        return ContextValue(ValueTag.FLOAT, float(v))

    @staticmethod
    def of_bool(v: bool) -> "ContextValue":
        return ContextValue(ValueTag.BOOL, v)

    @staticmethod
    def timestamp(ms: int) -> "ContextValue":
        return ContextValue(ValueTag.TIMESTAMP, ms)

    @staticmethod
    def string_list(vs: Sequence[str]) -> "ContextValue":
        return ContextValue(ValueTag.STRING_LIST, tuple(vs))


class Context:
    """Ordered, immutable key -> ContextValue map carrying investigation parameters."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, ContextValue] | None = None):
        items: dict[str, ContextValue] = {}
        for key, value in (entries or {}).items():
            if not isinstance(key, str) or not key:
                raise InvariantViolation("context keys must be non-empty strings")
            if not isinstance(value, ContextValue):
                raise InvariantViolation(f"context value for {key!r} is not typed")
            if key in items:
                raise InvariantViolation(f"duplicate context key {key!r}")
            items[key] = value
        self._entries = items

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Context):
            return NotImplemented
        return list(self.items()) == list(other.items())

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v.value!r}" for k, v in self.items())
        return f"Context({inner})"

    def get(self, key: str) -> Optional[ContextValue]:
        return self._entries.get(key)

    def __getitem__(self, key: str) -> ContextValue:
        return self._entries[key]

    def value_of(self, key: str, default: Any = None) -> Any:
        cv = self._entries.get(key)
        return default if cv is None else cv.value

    def items(self) -> Iterator[tuple[str, ContextValue]]:
        return iter(self._entries.items())

    def keys(self) -> Iterator[str]:
        return iter(self._entries.keys())

    def with_entries(self, overrides: Mapping[str, ContextValue]) -> "Context":
        """New Context with overrides applied; self is untouched."""
        merged = dict(self._entries)
        merged.update(overrides)
        return Context(merged)

    def content_hash(self) -> str:
        blob = json.dumps(
            [[k, v.tag.value, list(v.value) if v.tag is ValueTag.STRING_LIST else v.value]
             for k, v in self.items()],
            separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SchemaParam:
    name: str
    tag: ValueTag
    required: bool = False
    default: Optional[ContextValue] = None
    description: str = ""

    def __post_init__(self):
        if not self.name:
            raise InvariantViolation("schema param name must be non-empty")
        if self.required and self.default is not None:
            raise InvariantViolation(f"required param {self.name!r} must not have a default")
        if self.default is not None and self.default.tag is not self.tag:
            raise InvariantViolation(
                f"default for {self.name!r} is tagged {self.default.tag.value}, expected {self.tag.value}"
            )


@dataclass(frozen=True)
class InputSchema:
    """Declared inputs of an analyzer; drives validation and form generation."""

    params: tuple[SchemaParam, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise InvariantViolation("schema param names must be unique")

    def param(self, name: str) -> Optional[SchemaParam]:
        for p in self.params:
            if p.name == name:
                return p
        return None


class FindingStatus(str, Enum):
    OK = "OK"
    ISSUE_FOUND = "ISSUE_FOUND"
    INCONCLUSIVE = "INCONCLUSIVE"
    ERROR = "ERROR"


class Confidence(str, Enum):
    HIGH = "HIGH"
    MEDIUM = "MEDIUM"
    LOW = "LOW"


class Widget(str, Enum):
    TEXT = "TEXT"
    KEY_VALUE = "KEY_VALUE"
    TABLE = "TABLE"
    RANKED_LIST = "RANKED_LIST"
    TIMESERIES = "TIMESERIES"


def _plain(value: Any) -> Any:
    """Normalize payload data to plain JSON shapes (tuples become lists)."""
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, Enum):
        return value.value
    return value


@dataclass(frozen=True)
class SectionPayload:
    """Self-describing machine payload: a schema id plus plain JSON data."""

    schema_id: str
    data: Any

    def __post_init__(self):
        object.__setattr__(self, "data", _plain(self.data))


def _check_widget_payload(widget: Widget, payload: SectionPayload) -> None:
    data = payload.data
    if widget is Widget.TEXT:
        if not isinstance(data, str):
            raise InvariantViolation("TEXT payload data must be a string")
    elif widget is Widget.KEY_VALUE:
        if not isinstance(data, Mapping) or not all(isinstance(k, str) for k in data):
            raise InvariantViolation("KEY_VALUE payload data must be a string-keyed map")
    elif widget is Widget.TABLE:
        if (
            not isinstance(data, Mapping)
            or not isinstance(data.get("columns"), (list, tuple))
            or not isinstance(data.get("rows"), (list, tuple))
        ):
            raise InvariantViolation("TABLE payload needs 'columns' and 'rows'")
        width = len(data["columns"])
        for row in data["rows"]:
            if not isinstance(row, (list, tuple)) or len(row) != width:
                raise InvariantViolation("TABLE rows must all match the column count")
    elif widget is Widget.RANKED_LIST:
        if not isinstance(data, Mapping) or not isinstance(data.get("items"), (list, tuple)):
            raise InvariantViolation("RANKED_LIST payload needs an 'items' list")
        scores = []
        for item in data["items"]:
            if not isinstance(item, Mapping) or "label" not in item or "score" not in item:
                raise InvariantViolation("RANKED_LIST items need 'label' and 'score'")
            scores.append(float(item["score"]))
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise InvariantViolation("RANKED_LIST items must be sorted by score descending")
    elif widget is Widget.TIMESERIES:
        if not isinstance(data, Mapping) or not isinstance(data.get("points"), (list, tuple)):
            raise InvariantViolation("TIMESERIES payload needs a 'points' list")
        last = None
        for pt in data["points"]:
            if not isinstance(pt, (list, tuple)) or len(pt) != 2:
                raise InvariantViolation("TIMESERIES points must be (timestamp, value) pairs")
            ts = pt[0]
            if last is not None and ts < last:
                raise InvariantViolation("TIMESERIES timestamps must be ascending")
            last = ts


@dataclass(frozen=True)
class FindingSection:
    """One renderable unit of evidence inside a Findings value."""

    title: str
    body: str
    widget: Widget
    payload: SectionPayload
    child_refs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "child_refs", tuple(self.child_refs))
        _check_widget_payload(self.widget, self.payload)


@dataclass(frozen=True)
class Findings:
    """Structured output of one analysis run."""

    status: FindingStatus
    summary: str = ""
    sections: tuple[FindingSection, ...] = ()
    confidence: Optional[Confidence] = None

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))
        if self.status is FindingStatus.ERROR and not self.summary:
            raise InvariantViolation("ERROR findings must carry a non-empty summary")

    def child_refs(self) -> list[str]:
        refs: list[str] = []
        for section in self.sections:
            refs.extend(section.child_refs)
        return refs


@dataclass(frozen=True)
class AnalyzerDescriptor:
    """Registry-facing identity and contract of one analyzer version."""

    analyzer_id: str
    version: str
    group_id: str
    input_schema: InputSchema = InputSchema()
    allowlisted: bool = False
    timeout_ms: int = 60_000
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if not self.analyzer_id:
            raise InvariantViolation("analyzer_id must be non-empty")
        if self.timeout_ms <= 0:
            raise InvariantViolation("timeout_ms must be > 0")


class RequestStatus(str, Enum):
    QUEUED = "QUEUED"
    RUNNING = "RUNNING"
    SUCCESS = "SUCCESS"
    FAILED = "FAILED"


LEGAL_TRANSITIONS: frozenset[tuple[RequestStatus, RequestStatus]] = frozenset(
    {
        (RequestStatus.QUEUED, RequestStatus.RUNNING),
        (RequestStatus.RUNNING, RequestStatus.SUCCESS),
        (RequestStatus.RUNNING, RequestStatus.FAILED),
        # lease expiry hands the entry back to the queue
        (RequestStatus.RUNNING, RequestStatus.QUEUED),
    }
)


def can_transition(current: RequestStatus, target: RequestStatus) -> bool:
    return (current, target) in LEGAL_TRANSITIONS


@dataclass(frozen=True)
class DiagnoseRequest:
    """Persisted unit of work; the queue holds these through their lifecycle.

    Also known as a queue entry: the same value is what `encode`/`decode`
    round-trip on the wire.
    """

    request_id: str
    analyzer_id: str
    context: Context
    enqueued_at: int
    status: RequestStatus = RequestStatus.QUEUED
    attempt: int = 0
    lease_expiry: Optional[int] = None
    postprocessor_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "postprocessor_ids", tuple(self.postprocessor_ids))
        if (self.lease_expiry is not None) != (self.status is RequestStatus.RUNNING):
            raise InvariantViolation("lease_expiry is set iff status is RUNNING")


@dataclass(frozen=True)
class TimeseriesPoint:
    metric: str
    dimensions: Mapping[str, str]
    ts: int
    value: float

    def __post_init__(self):
        if not self.metric:
            raise InvariantViolation("metric must be non-empty")
        object.__setattr__(self, "dimensions", dict(self.dimensions))
        v = self.value
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise InvariantViolation(f"point value must be finite, got {v!r}")
        object.__setattr__(self, "value", float(v))


class EventKind(str, Enum):
    CODE_CHANGE = "CODE_CHANGE"
    CONFIG_CHANGE = "CONFIG_CHANGE"
    DEPLOY = "DEPLOY"
    OTHER = "OTHER"


@dataclass(frozen=True)
class ChangeEvent:
    event_id: str
    kind: EventKind
    ts: int
    title: str
    text: str = ""
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.event_id:
            raise InvariantViolation("event_id must be non-empty")
        object.__setattr__(self, "attributes", dict(self.attributes))


class Direction(str, Enum):
    ABOVE = "ABOVE"
    BELOW = "BELOW"


@dataclass(frozen=True)
class AlertAnnotation:
    author: str
    ts: int
    text: str
    link: str = ""
    source_request_id: str = ""


@dataclass(frozen=True)
class Alert:
    alert_id: str
    metric: str
    filters: Mapping[str, str]
    threshold: float
    direction: Direction
    window_ms: int
    fired_at: int
    context_hints: Mapping[str, str] = field(default_factory=dict)
    annotations: tuple[AlertAnnotation, ...] = ()

    def __post_init__(self):
        if self.window_ms <= 0:
            raise InvariantViolation("window_ms must be > 0")
        object.__setattr__(self, "filters", dict(self.filters))
        object.__setattr__(self, "context_hints", dict(self.context_hints))
        object.__setattr__(self, "annotations", tuple(self.annotations))

    def with_annotation(self, annotation: AlertAnnotation) -> "Alert":
        """Append-only: returns a copy with one more annotation."""
        return Alert(
            alert_id=self.alert_id,
            metric=self.metric,
            filters=self.filters,
            threshold=self.threshold,
            direction=self.direction,
            window_ms=self.window_ms,
            fired_at=self.fired_at,
            context_hints=self.context_hints,
            annotations=self.annotations + (annotation,),
        )


class CauseCategory(str, Enum):
    NETWORK = "NETWORK"
    CLIENT = "CLIENT"
    SERVER = "SERVER"
    DEPENDENCY = "DEPENDENCY"
    CODE_CHANGE = "CODE_CHANGE"
    CONFIG_CHANGE = "CONFIG_CHANGE"
    CAPACITY = "CAPACITY"
    UNKNOWN = "UNKNOWN"
