"""The post-processing tier: its own queue, worker loop, and retry policy.

Post-processors run after an analysis reaches SUCCESS. The tier rides the
same lease-based queue store as the analyzer backend but in a separate
file, so slow actions never hold analyzer throughput back. Stateless
processors retry up to the configured limit; stateful ones are attempted
exactly once no matter what.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from ..core.types import Context, ContextValue, DiagnoseRequest, Findings, RequestStatus
from ..sdk.analyzer import Action, ActionKind
from ..sdk.registry import PostProcessorRegistry, UnknownPostProcessor
from ..telemetry.stores import AlertStore, UnknownAlert
from ..backend.queue import QueueStore, now_ms
from ..backend.results import ResultStore
from .actions import JsonlLog, annotate_alert


@dataclass(frozen=True)
class PostProcessRequest:
    pp_request_id: str
    source_request_id: str
    postprocessor_id: str
    status: RequestStatus
    attempt: int


@dataclass(frozen=True)
class PostProcessOutcome:
    pp_request_id: str
    source_request_id: str
    postprocessor_id: str
    status: RequestStatus
    attempts: int
    error: Optional[str] = None
    actions_applied: int = 0


class PostProcessRunner:
    def __init__(
        self,
        registry: PostProcessorRegistry,
        results: ResultStore,
        alerts: AlertStore,
        tasks: JsonlLog,
        notifications: JsonlLog,
        queue_path: Optional[Path | str] = None,
        outcomes_path: Optional[Path | str] = None,
        claims_path: Optional[Path | str] = None,
        max_retries: int = 3,
        clock: Callable[[], int] = now_ms,
        result_link: Callable[[str], str] = lambda rid: f"/v1/diagnose/{rid}",
    ):
        self.registry = registry
        self.results = results
        self.alerts = alerts
        self.tasks = tasks
        self.notifications = notifications
        self.queue = QueueStore(queue_path, max_depth=100_000, clock=clock)
        self.outcomes_log = JsonlLog(outcomes_path)
        # stateful processors claim their request before the first invocation,
        # so even a crashed worker cannot lead to a second one
        self.claims_log = JsonlLog(claims_path)
        self._claimed = {rec["pp_request_id"] for rec in self.claims_log.records()}
        self.max_retries = max_retries
        self.clock = clock
        self.result_link = result_link
        self._lock = threading.Lock()
        self.invocation_counts: dict[str, int] = {}
        self._alert_locks: dict[str, threading.Lock] = {}

    # -- queue plumbing -----------------------------------------------------

    def enqueue(self, source_request_id: str, postprocessor_ids: tuple[str, ...]) -> list[str]:
        """One PostProcessRequest per processor; returns their ids."""
        out = []
        for pp_id in postprocessor_ids:
            pp_request_id = f"pp-{uuid.uuid4().hex[:12]}"
            context = Context(
                {
                    "source_request_id": ContextValue.string(source_request_id),
                }
            )
            self.queue.submit(pp_request_id, pp_id, context)
            out.append(pp_request_id)
        return out

    def entry_to_request(self, entry: DiagnoseRequest) -> PostProcessRequest:
        return PostProcessRequest(
            pp_request_id=entry.request_id,
            source_request_id=entry.context.value_of("source_request_id", ""),
            postprocessor_id=entry.analyzer_id,
            status=entry.status,
            attempt=entry.attempt,
        )

    def run_one(self, worker_id: str, lease_ms: int = 60_000) -> Optional[PostProcessOutcome]:
        entry = self.queue.dequeue_reserve(worker_id, lease_ms)
        if entry is None:
            return None
        return self.execute_postprocessor(entry, worker_id)

    def drain(self, worker_id: str = "pp-inline") -> list[PostProcessOutcome]:
        """Process until the queue is empty (used by tests and --local mode)."""
        outcomes = []
        while True:
            outcome = self.run_one(worker_id)
            if outcome is None:
                return outcomes
            outcomes.append(outcome)

    # -- execution ------------------------------------------------------------

    def execute_postprocessor(
        self, entry: DiagnoseRequest, worker_id: str
    ) -> PostProcessOutcome:
        request = self.entry_to_request(entry)
        attempts = entry.attempt + 1
        try:
            outcome = self._attempt(request, attempts)
        except Exception as exc:  # processor or action failure
            stateful = self._is_stateful(request.postprocessor_id)
            retryable = not stateful and attempts < self.max_retries
            if retryable:
                self.queue.requeue_for_retry(entry.request_id, worker_id)
                return PostProcessOutcome(
                    request.pp_request_id, request.source_request_id,
                    request.postprocessor_id, RequestStatus.QUEUED, attempts, str(exc),
                )
            outcome = PostProcessOutcome(
                request.pp_request_id, request.source_request_id,
                request.postprocessor_id, RequestStatus.FAILED, attempts, str(exc),
            )
        self.queue.complete(entry.request_id, worker_id, outcome.status)
        self.outcomes_log.append(
            {
                "pp_request_id": outcome.pp_request_id,
                "source_request_id": outcome.source_request_id,
                "postprocessor_id": outcome.postprocessor_id,
                "status": outcome.status.value,
                "attempts": outcome.attempts,
                "error": outcome.error,
                "actions_applied": outcome.actions_applied,
            }
        )
        return outcome

    def _is_stateful(self, pp_id: str) -> bool:
        try:
            return self.registry.resolve(pp_id).stateful
        except UnknownPostProcessor:
            return True  # unknown processors must not be retried blindly

    def _attempt(self, request: PostProcessRequest, attempts: int) -> PostProcessOutcome:
        processor = self.registry.resolve(request.postprocessor_id)
        record = self.results.latest_for_request(request.source_request_id)
        if record is None:
            raise UnknownPostProcessorSource(request.source_request_id)
        findings = record.findings
        if findings is None:
            raise UnknownPostProcessorSource(
                f"{request.source_request_id} has no findings (status {record.status.value})"
            )
        source_request = DiagnoseRequest(
            request_id=record.request_id,
            analyzer_id=record.analyzer_id,
            context=record.context,
            enqueued_at=record.enqueued_at,
            status=record.status,
            attempt=max(0, record.attempt_count - 1),
        )
        if processor.stateful:
            with self._lock:
                if request.pp_request_id in self._claimed:
                    raise StatefulAlreadyAttempted(request.pp_request_id)
                self._claimed.add(request.pp_request_id)
            self.claims_log.append({"pp_request_id": request.pp_request_id})
        with self._lock:
            self.invocation_counts[request.pp_request_id] = (
                self.invocation_counts.get(request.pp_request_id, 0) + 1
            )
        actions = processor.process(findings, source_request)
        applied = 0
        for action in actions or ():
            self._apply(action, findings, request)
            applied += 1
        return PostProcessOutcome(
            request.pp_request_id,
            request.source_request_id,
            request.postprocessor_id,
            RequestStatus.SUCCESS,
            attempts,
            actions_applied=applied,
        )

    def _apply(self, action: Action, findings: Findings, request: PostProcessRequest) -> None:
        now = self.clock()
        if action.kind is ActionKind.ANNOTATE_ALERT:
            alert_id = action.payload.get("alert_id", "")
            if not alert_id:
                raise UnknownAlert("(missing alert_id in action payload)")
            with self._alert_lock(alert_id):  # actions on one alert are serialized
                annotate_alert(
                    self.alerts,
                    alert_id,
                    findings,
                    action.payload.get("link") or self.result_link(request.source_request_id),
                    source_request_id=request.source_request_id,
                    now=now,
                )
        elif action.kind is ActionKind.CREATE_TASK:
            self.tasks.append(
                {
                    "ts": now,
                    "source_request_id": request.source_request_id,
                    "title": action.payload.get("title", findings.summary),
                    "body": action.payload.get("body", ""),
                    "link": self.result_link(request.source_request_id),
                }
            )
        elif action.kind is ActionKind.NOTIFY:
            self.notifications.append(
                {
                    "ts": now,
                    "source_request_id": request.source_request_id,
                    "channel": action.payload.get("channel", "oncall"),
                    "text": action.payload.get("text", findings.summary),
                }
            )

    def _alert_lock(self, alert_id: str) -> threading.Lock:
        with self._lock:
            lock = self._alert_locks.get(alert_id)
            if lock is None:
                lock = self._alert_locks[alert_id] = threading.Lock()
            return lock


class UnknownPostProcessorSource(Exception):
    pass


class StatefulAlreadyAttempted(Exception):
    """A stateful processor's single shot was already spent."""
