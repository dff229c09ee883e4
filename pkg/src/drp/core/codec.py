"""Wire encoding for Context, Findings, and DiagnoseRequest.

The format is UTF-8 JSON with an explicit top-level ``schema`` field, so a
consumer can decode any of the three value kinds without out-of-band type
information. Published schemas live in ``docs/wire/`` and evolve additively.
"""

from __future__ import annotations

import json
from typing import Any, Union

from .errors import DecodeError, InvariantViolation
from .types import (
    Alert,
    AlertAnnotation,
    Confidence,
    Context,
    ContextValue,
    DiagnoseRequest,
    Direction,
    FindingSection,
    Findings,
    FindingStatus,
    RequestStatus,
    SectionPayload,
    ValueTag,
    Widget,
)

CONTEXT_SCHEMA = "drp.context/1"
FINDINGS_SCHEMA = "drp.findings/1"
REQUEST_SCHEMA = "drp.diagnose_request/1"

WireValue = Union[Context, Findings, DiagnoseRequest]


def context_to_obj(ctx: Context) -> dict:
    entries = []
    for key, cv in ctx.items():
        value = list(cv.value) if cv.tag is ValueTag.STRING_LIST else cv.value
        entries.append({"key": key, "tag": cv.tag.value, "value": value})
    return {"schema": CONTEXT_SCHEMA, "entries": entries}


def context_from_obj(obj: Any) -> Context:
    entries = _expect(obj, "entries", list)
    out: dict[str, ContextValue] = {}
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise DecodeError(0, f"entries[{i}] is not an object")
        key = entry.get("key")
        tag_name = entry.get("tag")
        try:
            tag = ValueTag(tag_name)
        except ValueError:
            raise DecodeError(0, f"entries[{i}].tag {tag_name!r} is unknown")
        value = entry.get("value")
        if tag is ValueTag.FLOAT and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        try:
            out[key] = ContextValue(tag, value)
        except InvariantViolation as exc:
            raise DecodeError(0, f"entries[{i}]: {exc}")
        except TypeError:
            raise DecodeError(0, f"entries[{i}].key {key!r} is not a string")
    try:
        return Context(out)
    except InvariantViolation as exc:
        raise DecodeError(0, str(exc))


def findings_to_obj(findings: Findings) -> dict:
    return {
        "schema": FINDINGS_SCHEMA,
        "status": findings.status.value,
        "summary": findings.summary,
        "confidence": findings.confidence.value if findings.confidence else None,
        "sections": [
            {
                "title": s.title,
                "body": s.body,
                "widget": s.widget.value,
                "payload": {"schema_id": s.payload.schema_id, "data": s.payload.data},
                "child_refs": list(s.child_refs),
            }
            for s in findings.sections
        ],
    }


def findings_from_obj(obj: Any) -> Findings:
    status = _enum(obj, "status", FindingStatus)
    confidence_raw = obj.get("confidence")
    confidence = None
    if confidence_raw is not None:
        try:
            confidence = Confidence(confidence_raw)
        except ValueError:
            raise DecodeError(0, f"confidence {confidence_raw!r} is unknown")
    sections = []
    for i, sec in enumerate(_expect(obj, "sections", list)):
        if not isinstance(sec, dict):
            raise DecodeError(0, f"sections[{i}] is not an object")
        try:
            widget = Widget(sec.get("widget"))
        except ValueError:
            raise DecodeError(0, f"sections[{i}].widget {sec.get('widget')!r} is unknown")
        payload_obj = sec.get("payload")
        if not isinstance(payload_obj, dict) or "schema_id" not in payload_obj:
            raise DecodeError(0, f"sections[{i}].payload must carry a schema_id")
        try:
            sections.append(
                FindingSection(
                    title=str(sec.get("title", "")),
                    body=str(sec.get("body", "")),
                    widget=widget,
                    payload=SectionPayload(payload_obj["schema_id"], payload_obj.get("data")),
                    child_refs=tuple(sec.get("child_refs", ())),
                )
            )
        except InvariantViolation as exc:
            raise DecodeError(0, f"sections[{i}]: {exc}")
    try:
        return Findings(
            status=status,
            summary=str(obj.get("summary", "")),
            sections=tuple(sections),
            confidence=confidence,
        )
    except InvariantViolation as exc:
        raise DecodeError(0, str(exc))


def request_to_obj(request: DiagnoseRequest) -> dict:
    return {
        "schema": REQUEST_SCHEMA,
        "request_id": request.request_id,
        "analyzer_id": request.analyzer_id,
        "context": context_to_obj(request.context),
        "enqueued_at": request.enqueued_at,
        "status": request.status.value,
        "attempt": request.attempt,
        "lease_expiry": request.lease_expiry,
        "postprocessor_ids": list(request.postprocessor_ids),
    }


def request_from_obj(obj: Any) -> DiagnoseRequest:
    status = _enum(obj, "status", RequestStatus)
    context_obj = _expect(obj, "context", dict)
    try:
        return DiagnoseRequest(
            request_id=str(_expect(obj, "request_id", str)),
            analyzer_id=str(_expect(obj, "analyzer_id", str)),
            context=context_from_obj(context_obj),
            enqueued_at=int(_expect(obj, "enqueued_at", int)),
            status=status,
            attempt=int(obj.get("attempt", 0)),
            lease_expiry=obj.get("lease_expiry"),
            postprocessor_ids=tuple(obj.get("postprocessor_ids", ())),
        )
    except InvariantViolation as exc:
        raise DecodeError(0, str(exc))


def alert_to_obj(alert: Alert) -> dict:
    return {
        "alert_id": alert.alert_id,
        "metric": alert.metric,
        "filters": dict(alert.filters),
        "threshold": alert.threshold,
        "direction": alert.direction.value,
        "window_ms": alert.window_ms,
        "fired_at": alert.fired_at,
        "context_hints": dict(alert.context_hints),
        "annotations": [
            {
                "author": a.author,
                "ts": a.ts,
                "text": a.text,
                "link": a.link,
                "source_request_id": a.source_request_id,
            }
            for a in alert.annotations
        ],
    }


def alert_from_obj(obj: Any) -> Alert:
    return Alert(
        alert_id=obj["alert_id"],
        metric=obj["metric"],
        filters=obj.get("filters", {}),
        threshold=float(obj["threshold"]),
        direction=Direction(obj["direction"]),
        window_ms=int(obj["window_ms"]),
        fired_at=int(obj["fired_at"]),
        context_hints=obj.get("context_hints", {}),
        annotations=tuple(
            AlertAnnotation(
                author=a.get("author", ""),
                ts=int(a.get("ts", 0)),
                text=a.get("text", ""),
                link=a.get("link", ""),
                source_request_id=a.get("source_request_id", ""),
            )
            for a in obj.get("annotations", ())
        ),
    )


def encode(value: WireValue) -> bytes:
    """Serialize a Context, Findings, or DiagnoseRequest to wire bytes."""
    if isinstance(value, Context):
        obj = context_to_obj(value)
    elif isinstance(value, Findings):
        obj = findings_to_obj(value)
    elif isinstance(value, DiagnoseRequest):
        obj = request_to_obj(value)
    else:
        raise TypeError(f"cannot encode {type(value).__name__}")
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


_DECODERS = {
    CONTEXT_SCHEMA: context_from_obj,
    FINDINGS_SCHEMA: findings_from_obj,
    REQUEST_SCHEMA: request_from_obj,
}


def decode(data: bytes) -> WireValue:
    """Inverse of encode: dispatches on the embedded schema field."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DecodeError(exc.start, "invalid utf-8")
    except json.JSONDecodeError as exc:
        raise DecodeError(exc.pos, exc.msg)
    if not isinstance(obj, dict):
        raise DecodeError(0, "top-level value must be an object")
    schema = obj.get("schema")
    decoder = _DECODERS.get(schema)
    if decoder is None:
        raise DecodeError(0, f"unknown schema {schema!r}")
    return decoder(obj)


def decode_context(data: bytes) -> Context:
    return _typed(decode(data), Context)


def decode_findings(data: bytes) -> Findings:
    return _typed(decode(data), Findings)


def decode_request(data: bytes) -> DiagnoseRequest:
    return _typed(decode(data), DiagnoseRequest)


def _typed(value: WireValue, kind: type) -> Any:
    if not isinstance(value, kind):
        raise DecodeError(0, f"expected {kind.__name__}, decoded {type(value).__name__}")
    return value


def _expect(obj: Any, key: str, kind: type) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise DecodeError(0, f"missing field {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise DecodeError(0, f"field {key!r} must be {kind.__name__}")
    if not isinstance(value, kind):
        raise DecodeError(0, f"field {key!r} must be {kind.__name__}")
    return value


def _enum(obj: Any, key: str, enum_cls: Any) -> Any:
    raw = _expect(obj, key, str)
    try:
        return enum_cls(raw)
    except ValueError:
        raise DecodeError(0, f"field {key!r} has unknown value {raw!r}")
