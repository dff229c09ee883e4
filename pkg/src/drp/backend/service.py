"""The execution service: submission API, worker pool, results, post-processing.

One DrpService owns every store under its home directory. Worker threads
lease entries off the queue, run them through the Executor, and write
exactly one ResultRecord per request (keyed, idempotent) before removing
the queue entry, so crashes between those steps only ever cause re-runs,
never duplicates. `--local` embedders call the same methods the HTTP API
wraps; there is no separate code path.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ..alerts.rules import AlertEngine
from ..config import DrpConfig
from ..core.errors import DrpError
from ..core.types import Context, DiagnoseRequest, Findings, RequestStatus
from ..core.validate import validate_context
from ..postprocess.actions import JsonlLog
from ..postprocess.builtin import register_builtin
from ..postprocess.insights import InsightsReport, aggregate_insights
from ..postprocess.runner import PostProcessRunner
from ..sdk.analyzer import Analyzer, PostProcessor
from ..sdk.registry import AnalyzerRegistry, PostProcessorRegistry
from ..sdk.toolkit import LiveDataSource
from ..telemetry.queries import TimeRange
from ..telemetry.stores import AlertStore, EventStore, TimeseriesStore
from .bundles import BundleManifest, BundleResolver, write_bundle_artifact
from .dag import DagNode, DagPolicy, NodeOutcome, run_dag
from .executor import Executor, ExecutionOutcome, FaultHook, WorkerCrash
from .queue import QueueStore, UnknownRequest, now_ms
from .results import ErrorClass, ErrorInfo, ResultRecord, ResultStore, TraceStore

log = logging.getLogger("drp.backend")

RETRYABLE_CLASSES = frozenset(
    {ErrorClass.ANALYZER_EXCEPTION, ErrorClass.INFRA, ErrorClass.TIMEOUT}
)


class SyncTimeout(DrpError):
    """Sync call did not finish in time; poll with the carried request id."""

    def __init__(self, request_id: str):
        super().__init__(f"request {request_id} still in flight; poll for the result")
        self.request_id = request_id


@dataclass(frozen=True)
class PeekResult:
    request_id: str
    status: RequestStatus
    findings: Optional[Findings] = None
    error: Optional[ErrorInfo] = None
    context: Optional[Context] = None  # additive; lets callers re-run with edits


class DrpService:
    def __init__(
        self,
        config: Optional[DrpConfig] = None,
        fault_hook: Optional[FaultHook] = None,
        clock=now_ms,
    ):
        self.config = config or DrpConfig()
        home = Path(self.config.home)
        home.mkdir(parents=True, exist_ok=True)
        self.home = home
        self.clock = clock

        self.registry = AnalyzerRegistry()
        self.pp_registry = PostProcessorRegistry()
        register_builtin(self.pp_registry)

        telemetry_dir = home / "telemetry"
        self.timeseries = TimeseriesStore(telemetry_dir / "points.jsonl")
        self.events = EventStore(telemetry_dir / "events.jsonl")
        self.alerts = AlertStore(telemetry_dir / "alerts.jsonl")
        self.source = LiveDataSource(self.timeseries, self.events, self.alerts)

        self.queue = QueueStore(
            home / "queue.jsonl", max_depth=self.config.backend.queue_max_depth, clock=clock
        )
        self.results = ResultStore(home / "results.jsonl")
        self.traces = TraceStore(home / "traces")
        self.bundles = BundleResolver(cache_dir=home / "bundles" / "cache")
        self._bundle_entries: dict[str, dict[str, str]] = {}
        self._bundle_src = home / "bundles" / "src"

        self.executor = Executor(
            registry=self.registry,
            bundles=self.bundles,
            source=self.source,
            data_dir=home,
            default_timeout_ms=self.config.backend.default_timeout_ms,
            clock=clock,
            fault_hook=fault_hook,
            analysis_config=self.config.analysis,
        )
        self.tasks = JsonlLog(home / "tasks.jsonl")
        self.notifications = JsonlLog(home / "notifications.jsonl")
        self.postprocess = PostProcessRunner(
            registry=self.pp_registry,
            results=self.results,
            alerts=self.alerts,
            tasks=self.tasks,
            notifications=self.notifications,
            queue_path=home / "pp_queue.jsonl",
            outcomes_path=home / "pp_outcomes.jsonl",
            claims_path=home / "pp_claims.jsonl",
            max_retries=self.config.postprocess.max_retries,
            clock=clock,
        )
        self.alert_engine = AlertEngine(
            timeseries=self.timeseries,
            alerts=self.alerts,
            submit=self.submit_diagnose,
            describe=self.registry.descriptor,
        )

        self._fault_hook = fault_hook
        self._terminal_events: dict[str, threading.Event] = {}
        self._events_lock = threading.Lock()
        self._workers: list[threading.Thread] = []
        self._stop = threading.Event()
        self.preloaded_groups: set[str] = set()

    # -- registration ---------------------------------------------------------

    def register_analyzer(
        self, impl: Analyzer, subprocess_entry: Optional[str] = None
    ) -> Analyzer:
        """Register an analyzer and keep its group's bundle manifest current.

        subprocess_entry is the importable "module:ClassName" the bundle
        artifact records; without it the analyzer can only run in-process.
        """
        self.registry.register(impl)
        descriptor = impl.describe()
        group = descriptor.group_id
        entries = self._bundle_entries.setdefault(group, {})
        artifact_path = None
        if subprocess_entry is not None:
            entries[descriptor.analyzer_id] = subprocess_entry
        if entries:
            artifact_path = write_bundle_artifact(
                self._bundle_src / f"{group}.json", group, descriptor.version, entries
            )
        known = {descriptor.analyzer_id}
        if self.bundles.group_of(descriptor.analyzer_id) is None:
            for manifest in self.bundles.manifests():
                if manifest.group_id == group:
                    known.update(manifest.analyzer_ids)
        self.bundles.add_manifest(
            BundleManifest(
                group_id=group,
                analyzer_ids=tuple(sorted(known | set(entries))),
                artifact_path=artifact_path,
                version=descriptor.version,
            )
        )
        return impl

    def register_postprocessor(self, impl: PostProcessor) -> PostProcessor:
        return self.pp_registry.register(impl)

    # -- lifecycle ---------------------------------------------------------------

    def start(self, worker_count: Optional[int] = None) -> None:
        counts = self.results.run_counts()
        self.preloaded_groups = self.bundles.preload(counts)
        self._stop.clear()
        n = worker_count if worker_count is not None else self.config.backend.worker_count
        for i in range(n):
            thread = threading.Thread(
                target=self._worker_loop, args=(f"worker-{i}",), daemon=True,
                name=f"drp-worker-{i}",
            )
            thread.start()
            self._workers.append(thread)
        pp_thread = threading.Thread(
            target=self._postprocess_loop, args=("pp-worker-0",), daemon=True,
            name="drp-pp-worker",
        )
        pp_thread.start()
        self._workers.append(pp_thread)

    def stop(self) -> None:
        self._stop.set()
        for thread in self._workers:
            thread.join(timeout=5)
        self._workers.clear()

    # -- submission surface -----------------------------------------------------

    def submit_diagnose(
        self,
        analyzer_id: str,
        raw_inputs: Mapping[str, str],
        postprocessor_ids: Sequence[str] = (),
    ) -> str:
        analyzer = self.registry.resolve(analyzer_id)  # UnknownAnalyzer surfaces
        schema = analyzer.describe().input_schema
        context = validate_context(schema, dict(raw_inputs))
        request_id = f"req-{uuid.uuid4().hex[:16]}"
        with self._events_lock:
            self._terminal_events[request_id] = threading.Event()
        try:
            self.queue.submit(request_id, analyzer_id, context, tuple(postprocessor_ids))
        except DrpError:
            with self._events_lock:
                self._terminal_events.pop(request_id, None)
            raise
        return request_id

    def peek_diagnose_status(self, request_id: str) -> PeekResult:
        try:
            status = self.queue.status_of(request_id)
            if status in (RequestStatus.QUEUED, RequestStatus.RUNNING):
                context = self.queue.get(request_id).context
                return PeekResult(request_id, status, context=context)
        except UnknownRequest:
            pass
        record = self.results.latest_for_request(request_id)
        if record is None:
            raise UnknownRequest(request_id)
        return PeekResult(
            request_id, record.status, record.findings, record.error, record.context
        )

    def diagnose_sync(
        self,
        analyzer_id: str,
        raw_inputs: Mapping[str, str],
        timeout_ms: int = 30_000,
        postprocessor_ids: Sequence[str] = (),
    ) -> PeekResult:
        request_id = self.submit_diagnose(analyzer_id, raw_inputs, postprocessor_ids)
        if not self.wait_terminal(request_id, timeout_ms):
            raise SyncTimeout(request_id)
        return self.peek_diagnose_status(request_id)

    def wait_terminal(self, request_id: str, timeout_ms: int) -> bool:
        with self._events_lock:
            event = self._terminal_events.get(request_id)
        if event is None:
            # not submitted through this instance; fall back to polling state
            try:
                return self.peek_diagnose_status(request_id).status in (
                    RequestStatus.SUCCESS,
                    RequestStatus.FAILED,
                )
            except UnknownRequest:
                return False
        return event.wait(timeout_ms / 1000.0)

    def run_dag(
        self, nodes: Sequence[DagNode], policy: DagPolicy = DagPolicy.FAIL_FAST
    ) -> dict[str, NodeOutcome]:
        return run_dag(self, nodes, policy)

    def query_history(self, analyzer_id: str, since_ts: int = 0) -> list[ResultRecord]:
        return self.results.query_history(analyzer_id, since_ts)

    def insights(self, start_ts: int, end_ts: int) -> InsightsReport:
        window = TimeRange(start_ts, end_ts)
        return aggregate_insights(self.results.all_top_level(), window)

    def load_scenario(self, bundle) -> None:
        """Copy a generated scenario's stores and rules into this service."""
        from ..alerts.rules import rule_from_obj
        from ..core.types import TimeseriesPoint
        from ..telemetry.queries import EventQuery

        for metric in bundle.timeseries.metrics():
            self.timeseries.ingest_points(
                TimeseriesPoint(metric, dims, ts, value)
                for ts, dims, value in bundle.timeseries.raw_rows(metric)
            )
        self.events.ingest_events(
            bundle.events.query_events(EventQuery(range=TimeRange(0, 4_000_000_000_000)))
        )
        for alert in bundle.alerts.list_alerts():
            self.alerts.ingest_alert(alert)
        for rule_obj in bundle.alert_rules:
            self.alert_engine.add_rule(rule_from_obj(rule_obj))

    # -- worker internals ----------------------------------------------------------

    def _lease_ms(self) -> int:
        return int(self.config.backend.lease_factor * self.config.backend.default_timeout_ms)

    def _worker_loop(self, worker_id: str) -> None:
        poll_s = self.config.backend.poll_interval_ms / 1000.0
        while not self._stop.is_set():
            entry = self.queue.dequeue_reserve(worker_id, self._lease_ms())
            if entry is None:
                self._stop.wait(poll_s)
                continue
            try:
                self.process_entry(entry, worker_id)
            except WorkerCrash:
                continue  # simulated death: abandon; lease expiry recovers the entry
            except Exception:
                log.exception("worker %s failed on %s", worker_id, entry.request_id)

    def _postprocess_loop(self, worker_id: str) -> None:
        poll_s = self.config.backend.poll_interval_ms / 1000.0
        while not self._stop.is_set():
            outcome = self.postprocess.run_one(worker_id)
            if outcome is None:
                self._stop.wait(poll_s)

    def process_entry(self, entry: DiagnoseRequest, worker_id: str) -> None:
        """Execute one leased entry: retry, or write records and finish."""
        try:
            descriptor = self.registry.descriptor(entry.analyzer_id)
            needed_lease = int(self.config.backend.lease_factor * descriptor.timeout_ms)
            if needed_lease > self._lease_ms():
                self.queue.extend_lease(
                    entry.request_id, worker_id, self.clock() + needed_lease
                )
        except DrpError:
            descriptor = None

        outcome = self.executor.execute(entry)

        if (
            outcome.error is not None
            and outcome.error.error_class in RETRYABLE_CLASSES
            and entry.attempt + 1 < self.config.backend.max_attempts
        ):
            self.queue.requeue_for_retry(entry.request_id, worker_id)
            return

        status = RequestStatus.SUCCESS if outcome.succeeded else RequestStatus.FAILED
        version = descriptor.version if descriptor else ""
        record = ResultRecord(
            record_key=entry.request_id,
            request_id=entry.request_id,
            analyzer_id=entry.analyzer_id,
            analyzer_version=version,
            context=entry.context,
            status=status,
            findings=outcome.findings,
            error=outcome.error,
            enqueued_at=entry.enqueued_at,
            started_at=outcome.started_at,
            finished_at=outcome.finished_at,
            analyzer_runtime_ms=outcome.analyzer_runtime_ms,
            attempt_count=entry.attempt + 1,
            chain_trace=tuple(outcome.chain_records),
            data_access_reads=len(outcome.trace_entries),
            trace_ref=entry.request_id,
            parent_ref=None,
        )
        self.traces.write(entry.request_id, outcome.trace_entries)
        self._write_child_records(entry, outcome)
        self.results.write_if_absent(record)
        if self._fault_hook:
            self._fault_hook("post_result_write", entry)
        completed = self.queue.complete(entry.request_id, worker_id, status)
        if self._fault_hook:
            self._fault_hook("post_complete", entry)
        if completed and status is RequestStatus.SUCCESS and entry.postprocessor_ids:
            self.postprocess.enqueue(entry.request_id, entry.postprocessor_ids)
        self._signal_terminal(entry.request_id)

    def _write_child_records(self, entry: DiagnoseRequest, outcome: ExecutionOutcome) -> None:
        for child in outcome.child_runs:
            try:
                version = self.registry.descriptor(child.child_id).version
            except DrpError:
                version = ""
            child_status = (
                RequestStatus.SUCCESS if child.findings is not None else RequestStatus.FAILED
            )
            error = None
            if child.findings is None:
                error = ErrorInfo(
                    ErrorClass.ANALYZER_EXCEPTION,
                    child.error_message or "chained analyzer failed",
                    attempt_count=1,
                )
            self.results.write_if_absent(
                ResultRecord(
                    record_key=child.ref,
                    request_id=entry.request_id,
                    analyzer_id=child.child_id,
                    analyzer_version=version,
                    context=child.context,
                    status=child_status,
                    findings=child.findings,
                    error=error,
                    enqueued_at=outcome.started_at,
                    started_at=outcome.started_at,
                    finished_at=outcome.started_at + child.runtime_ms,
                    analyzer_runtime_ms=child.runtime_ms,
                    attempt_count=1,
                    parent_ref=entry.request_id,
                )
            )

    def _signal_terminal(self, request_id: str) -> None:
        with self._events_lock:
            event = self._terminal_events.get(request_id)
        if event is not None:
            event.set()

    # -- maintenance ---------------------------------------------------------------

    def close(self) -> None:
        self.stop()
        self.queue.close()
        self.results.close()
        self.postprocess.queue.close()
