"""Runs one leased queue entry to an outcome.

Allowlisted analyzers execute in-process on a helper thread that is
abandoned at timeout (Python threads cannot be killed); all others run as
subprocesses speaking the one-line-JSON stdio protocol and are terminated
at timeout. The executor never raises past its outcome: every failure is
folded into an ErrorInfo whose class drives the retry decision upstream.
"""

from __future__ import annotations

import json
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from ..core.codec import context_to_obj, findings_from_obj
from ..core.errors import DecodeError
from ..core.types import Context, DiagnoseRequest, Findings
from ..sdk.analyzer import Analyzer
from ..sdk.registry import AnalyzerRegistry, UnknownAnalyzer
from ..sdk.toolkit import DataSource, Toolkit, TraceRecorder
from .bundles import BundleResolver, FetchError, UnknownBundle
from .results import ErrorClass, ErrorInfo
from .subproc import classify_exception


class WorkerCrash(Exception):
    """Raised by fault-injection hooks to simulate a worker dying mid-flight."""


FaultHook = Callable[[str, DiagnoseRequest], None]


@dataclass
class ChildRun:
    """Captured chained-child execution, persisted as a sub-record."""

    child_id: str
    ref: str
    context: Context
    findings: Optional[Findings]
    error_message: Optional[str]
    runtime_ms: int


@dataclass
class ExecutionOutcome:
    findings: Optional[Findings]
    error: Optional[ErrorInfo]
    started_at: int
    finished_at: int
    analyzer_runtime_ms: int
    trace_entries: list[dict] = field(default_factory=list)
    chain_records: list[dict] = field(default_factory=list)
    child_runs: list[ChildRun] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return self.error is None


class Executor:
    def __init__(
        self,
        registry: AnalyzerRegistry,
        bundles: BundleResolver,
        source: DataSource,
        data_dir: Path,
        default_timeout_ms: int = 60_000,
        clock: Callable[[], int] = lambda: int(time.time() * 1000),
        fault_hook: Optional[FaultHook] = None,
        analysis_config=None,
    ):
        self.registry = registry
        self.bundles = bundles
        self.source = source
        self.data_dir = Path(data_dir)
        self.default_timeout_ms = default_timeout_ms
        self.clock = clock
        self.fault_hook = fault_hook
        self.analysis_config = analysis_config

    def _fault(self, point: str, entry: DiagnoseRequest) -> None:
        if self.fault_hook is not None:
            self.fault_hook(point, entry)

    def execute(self, entry: DiagnoseRequest) -> ExecutionOutcome:
        started_at = self.clock()
        self._fault("pre_execute", entry)
        child_runs: list[ChildRun] = []

        try:
            analyzer = self.registry.resolve(entry.analyzer_id)
            descriptor = analyzer.describe()
        except UnknownAnalyzer as exc:
            return self._failed(entry, started_at, ErrorClass.INFRA, str(exc))
        timeout_ms = descriptor.timeout_ms or self.default_timeout_ms

        try:
            handle = self.bundles.resolve(entry.analyzer_id)
        except (UnknownBundle, FetchError) as exc:
            return self._failed(entry, started_at, ErrorClass.INFRA, str(exc))

        if descriptor.allowlisted:
            return self._run_in_process(entry, analyzer, timeout_ms, started_at, child_runs)
        if handle.cached_artifact is None:
            return self._failed(
                entry, started_at, ErrorClass.INFRA,
                f"analyzer {entry.analyzer_id!r} is not allowlisted and its bundle "
                f"has no artifact to run as a subprocess",
            )
        return self._run_subprocess(entry, handle.cached_artifact, timeout_ms, started_at)

    def _failed(
        self, entry: DiagnoseRequest, started_at: int, error_class: ErrorClass, message: str
    ) -> ExecutionOutcome:
        finished = self.clock()
        return ExecutionOutcome(
            findings=None,
            error=ErrorInfo(error_class, message, attempt_count=entry.attempt + 1),
            started_at=started_at,
            finished_at=finished,
            analyzer_runtime_ms=0,
        )

    # -- in-process path ----------------------------------------------------

    def _run_in_process(
        self,
        entry: DiagnoseRequest,
        analyzer: Analyzer,
        timeout_ms: int,
        started_at: int,
        child_runs: list[ChildRun],
    ) -> ExecutionOutcome:
        trace = TraceRecorder()

        def chain_sink(child_id, ref, ctx, findings, error_message, runtime_ms):
            child_runs.append(ChildRun(child_id, ref, ctx, findings, error_message, runtime_ms))

        def chain_resolver(analyzer_id: str) -> Analyzer:
            # lazy bundle resolution at chain time; ad-hoc registrations may
            # legitimately have no manifest
            try:
                self.bundles.resolve(analyzer_id)
            except UnknownBundle:
                pass
            return self.registry.resolve(analyzer_id)

        toolkit = Toolkit(
            context=entry.context,
            source=self.source,
            resolver=chain_resolver,
            request_id=entry.request_id,
            trace=trace,
            call_stack=(entry.analyzer_id,),
            chain_sink=chain_sink,
            analysis_config=self.analysis_config,
        )
        box: dict = {}
        done = threading.Event()

        def _run():
            run_started = time.time()
            try:
                box["findings"] = analyzer.analyze(entry.context, toolkit)
            except BaseException as exc:
                box["exc"] = exc
            finally:
                box["runtime_ms"] = int((time.time() - run_started) * 1000)
                done.set()

        thread = threading.Thread(
            target=_run, name=f"analyze-{entry.request_id}", daemon=True
        )
        thread.start()
        finished_in_time = done.wait(timeout_ms / 1000.0)
        # snapshot shared state before the (possibly still running) thread moves on
        trace_entries = list(trace.entries)
        chain_records = list(toolkit.chain_records)
        child_snapshot = list(child_runs)
        finished_at = self.clock()
        if not finished_in_time:
            return ExecutionOutcome(
                findings=None,
                error=ErrorInfo(
                    ErrorClass.TIMEOUT,
                    f"analyzer exceeded {timeout_ms} ms (in-process thread abandoned)",
                    attempt_count=entry.attempt + 1,
                ),
                started_at=started_at,
                finished_at=finished_at,
                analyzer_runtime_ms=timeout_ms,
                trace_entries=trace_entries,
                chain_records=chain_records,
                child_runs=child_snapshot,
            )
        runtime_ms = box.get("runtime_ms", 0)
        if "exc" in box:
            exc = box["exc"]
            return ExecutionOutcome(
                findings=None,
                error=ErrorInfo(
                    classify_exception(exc), str(exc), attempt_count=entry.attempt + 1
                ),
                started_at=started_at,
                finished_at=finished_at,
                analyzer_runtime_ms=runtime_ms,
                trace_entries=trace_entries,
                chain_records=chain_records,
                child_runs=child_snapshot,
            )
        return ExecutionOutcome(
            findings=box["findings"],
            error=None,
            started_at=started_at,
            finished_at=finished_at,
            analyzer_runtime_ms=runtime_ms,
            trace_entries=trace_entries,
            chain_records=chain_records,
            child_runs=child_snapshot,
        )

    # -- subprocess path ------------------------------------------------------

    def _run_subprocess(
        self,
        entry: DiagnoseRequest,
        artifact: Path,
        timeout_ms: int,
        started_at: int,
    ) -> ExecutionOutcome:
        request_line = json.dumps(
            {
                "request_id": entry.request_id,
                "analyzer_id": entry.analyzer_id,
                "context": context_to_obj(entry.context),
                "data_dir": str(self.data_dir),
            },
            separators=(",", ":"),
        )
        run_started = time.time()
        proc = subprocess.Popen(
            [sys.executable, "-m", "drp.backend.subproc", str(artifact)],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            stdout, stderr = proc.communicate(request_line + "\n", timeout=timeout_ms / 1000.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            return ExecutionOutcome(
                findings=None,
                error=ErrorInfo(
                    ErrorClass.TIMEOUT,
                    f"subprocess exceeded {timeout_ms} ms and was killed",
                    attempt_count=entry.attempt + 1,
                ),
                started_at=started_at,
                finished_at=self.clock(),
                analyzer_runtime_ms=timeout_ms,
            )
        runtime_ms = int((time.time() - run_started) * 1000)
        finished_at = self.clock()
        line = stdout.strip().splitlines()[-1] if stdout.strip() else ""
        if not line:
            return ExecutionOutcome(
                findings=None,
                error=ErrorInfo(
                    ErrorClass.INFRA,
                    f"subprocess exited {proc.returncode} without a response line: "
                    f"{stderr.strip()[:500]}",
                    attempt_count=entry.attempt + 1,
                ),
                started_at=started_at,
                finished_at=finished_at,
                analyzer_runtime_ms=runtime_ms,
            )
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            return ExecutionOutcome(
                findings=None,
                error=ErrorInfo(
                    ErrorClass.INFRA, f"malformed subprocess response: {exc}",
                    attempt_count=entry.attempt + 1,
                ),
                started_at=started_at,
                finished_at=finished_at,
                analyzer_runtime_ms=runtime_ms,
            )
        trace_entries = response.get("trace", [])
        chain_records = response.get("chain", [])
        child_runs = self._parse_child_runs(response.get("child_runs", []))
        if response.get("status") == "SUCCESS":
            try:
                findings = findings_from_obj(response["findings"])
            except (KeyError, DecodeError) as exc:
                return ExecutionOutcome(
                    findings=None,
                    error=ErrorInfo(
                        ErrorClass.ANALYZER_EXCEPTION,
                        f"subprocess findings invalid: {exc}",
                        attempt_count=entry.attempt + 1,
                    ),
                    started_at=started_at,
                    finished_at=finished_at,
                    analyzer_runtime_ms=runtime_ms,
                    trace_entries=trace_entries,
                    chain_records=chain_records,
                    child_runs=child_runs,
                )
            return ExecutionOutcome(
                findings=findings,
                error=None,
                started_at=started_at,
                finished_at=finished_at,
                analyzer_runtime_ms=runtime_ms,
                trace_entries=trace_entries,
                chain_records=chain_records,
                child_runs=child_runs,
            )
        err = response.get("error", {})
        return ExecutionOutcome(
            findings=None,
            error=ErrorInfo(
                ErrorClass(err.get("class", "ANALYZER_EXCEPTION")),
                err.get("message", "analyzer failed"),
                attempt_count=entry.attempt + 1,
            ),
            started_at=started_at,
            finished_at=finished_at,
            analyzer_runtime_ms=runtime_ms,
            trace_entries=trace_entries,
            chain_records=chain_records,
            child_runs=child_runs,
        )

    @staticmethod
    def _parse_child_runs(raw: list) -> list[ChildRun]:
        from ..core.codec import context_from_obj, findings_from_obj

        out: list[ChildRun] = []
        for item in raw:
            try:
                out.append(
                    ChildRun(
                        child_id=item["child_id"],
                        ref=item["ref"],
                        context=context_from_obj(item["context"]),
                        findings=(
                            findings_from_obj(item["findings"])
                            if item.get("findings")
                            else None
                        ),
                        error_message=item.get("error"),
                        runtime_ms=item.get("runtime_ms", 0),
                    )
                )
            except (KeyError, DecodeError):
                continue  # a malformed child record must not sink the parent result
        return out
