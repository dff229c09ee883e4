"""HTTP+JSON surface over a DrpService.

Every endpoint is a thin translation layer: the service methods hold all
semantics, so an embedded (--local) caller and an HTTP caller behave
identically.
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..alerts.rules import rule_from_obj, rule_to_obj
from ..core.codec import alert_to_obj, context_to_obj, findings_to_obj
from ..core.errors import DrpError, ValidationError
from ..core.types import AnalyzerDescriptor
from ..sdk.registry import UnknownAnalyzer
from .dag import CyclicDag, DagNode, DagPolicy
from .queue import QueueFull, UnknownRequest
from .service import DrpService, PeekResult, SyncTimeout


class DiagnoseBody(BaseModel):
    analyzer_id: str
    inputs: dict[str, str] = Field(default_factory=dict)
    postprocessors: list[str] = Field(default_factory=list)


class DiagnoseSyncBody(DiagnoseBody):
    timeout_ms: int = 30_000


class DagNodeBody(BaseModel):
    name: str
    analyzer_id: str
    overrides: dict[str, str] = Field(default_factory=dict)
    depends_on: list[str] = Field(default_factory=list)


class DagBody(BaseModel):
    nodes: list[DagNodeBody]
    policy: str = "FAIL_FAST"


class AlertRuleBody(BaseModel):
    rule_id: str
    metric: str
    filters: dict[str, str] = Field(default_factory=dict)
    threshold: float
    direction: str
    window_ms: int
    analyzer_binding: Optional[dict[str, Any]] = None


class EvaluateBody(BaseModel):
    now: Optional[int] = None


def descriptor_to_obj(desc: AnalyzerDescriptor) -> dict:
    return {
        "analyzer_id": desc.analyzer_id,
        "version": desc.version,
        "group_id": desc.group_id,
        "allowlisted": desc.allowlisted,
        "timeout_ms": desc.timeout_ms,
        "tags": list(desc.tags),
        "input_schema": {
            "params": [
                {
                    "name": p.name,
                    "tag": p.tag.value,
                    "required": p.required,
                    "default": None
                    if p.default is None
                    else (
                        list(p.default.value)
                        if isinstance(p.default.value, tuple)
                        else p.default.value
                    ),
                    "description": p.description,
                }
                for p in desc.input_schema.params
            ]
        },
    }


def peek_to_obj(peek: PeekResult) -> dict:
    obj: dict[str, Any] = {"request_id": peek.request_id, "status": peek.status.value}
    if peek.findings is not None:
        obj["findings"] = findings_to_obj(peek.findings)
    if peek.error is not None:
        obj["error"] = peek.error.to_obj()
    if peek.context is not None:
        obj["context"] = context_to_obj(peek.context)
    return obj


def create_app(service: DrpService, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="drp", version="0.1.0")

    @app.post("/v1/diagnose")
    def diagnose(body: DiagnoseBody):
        try:
            request_id = service.submit_diagnose(
                body.analyzer_id, body.inputs, tuple(body.postprocessors)
            )
        except UnknownAnalyzer as exc:
            raise HTTPException(404, str(exc))
        except ValidationError as exc:
            raise HTTPException(400, str(exc))
        except QueueFull as exc:
            raise HTTPException(429, str(exc))
        return {"request_id": request_id}

    @app.post("/v1/diagnose:sync")
    def diagnose_sync(body: DiagnoseSyncBody):
        try:
            peek = service.diagnose_sync(
                body.analyzer_id, body.inputs, body.timeout_ms, tuple(body.postprocessors)
            )
        except SyncTimeout as exc:
            return JSONResponse({"request_id": exc.request_id}, status_code=408)
        except UnknownAnalyzer as exc:
            raise HTTPException(404, str(exc))
        except ValidationError as exc:
            raise HTTPException(400, str(exc))
        except QueueFull as exc:
            raise HTTPException(429, str(exc))
        return peek_to_obj(peek)

    @app.get("/v1/diagnose/{request_id}")
    def peek(request_id: str):
        try:
            return peek_to_obj(service.peek_diagnose_status(request_id))
        except UnknownRequest as exc:
            raise HTTPException(404, str(exc))

    @app.get("/v1/analyzers")
    def analyzers():
        return {"analyzers": [descriptor_to_obj(d) for d in service.registry.list_descriptors()]}

    @app.post("/v1/dag")
    def dag(body: DagBody):
        nodes = [
            DagNode(
                name=n.name,
                analyzer_id=n.analyzer_id,
                overrides=n.overrides,
                depends_on=tuple(n.depends_on),
            )
            for n in body.nodes
        ]
        try:
            policy = DagPolicy(body.policy)
            outcomes = service.run_dag(nodes, policy)
        except CyclicDag as exc:
            raise HTTPException(400, str(exc))
        except (ValueError, DrpError) as exc:
            raise HTTPException(400, str(exc))
        return {"nodes": {name: outcome.to_obj() for name, outcome in outcomes.items()}}

    @app.get("/v1/history")
    def history(analyzer_id: str, since: int = 0):
        records = service.query_history(analyzer_id, since)
        return {
            "records": [
                {
                    "request_id": r.request_id,
                    "analyzer_id": r.analyzer_id,
                    "analyzer_version": r.analyzer_version,
                    "status": r.status.value,
                    "finished_at": r.finished_at,
                    "attempt_count": r.attempt_count,
                    "overhead_ms": r.overhead_ms,
                }
                for r in records
            ]
        }

    @app.get("/v1/insights")
    def insights(start: int, end: int):
        try:
            return service.insights(start, end).to_obj()
        except DrpError as exc:
            raise HTTPException(400, str(exc))

    @app.post("/v1/alert-rules")
    def add_rule(body: AlertRuleBody):
        try:
            rule = rule_from_obj(body.model_dump())
            service.alert_engine.add_rule(rule)
        except DrpError as exc:
            raise HTTPException(400, str(exc))
        return {"rule_id": rule.rule_id}

    @app.get("/v1/alert-rules")
    def list_rules():
        return {"rules": [rule_to_obj(r) for r in service.alert_engine.rules()]}

    @app.get("/v1/alerts")
    def list_alerts():
        return {"alerts": [alert_to_obj(a) for a in service.alerts.list_alerts()]}

    @app.post("/v1/alerts/evaluate")
    def evaluate(body: EvaluateBody):
        now = body.now if body.now is not None else service.clock()
        fired = service.alert_engine.evaluate_rules(now)
        return {"fired": [alert_to_obj(a) for a in fired]}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
