"""Backtesting: replay recorded runs against a candidate analyzer version.

Replay is hermetic: the candidate's toolkit answers every data access from
the trace recorded at original execution time and never touches live
stores. Infrastructure-shaped problems (missing traces, unrecorded
queries, timeouts) skip the case without affecting the gate; only logic
failures block.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Optional

from ..core.errors import StorageError
from ..core.types import Alert, ChangeEvent
from ..sdk.analyzer import Analyzer
from ..sdk.registry import UnknownAnalyzer
from ..sdk.toolkit import (
    DataSource,
    Toolkit,
    TraceRecorder,
    deserialize_events,
    deserialize_rows,
    deserialize_ts_result,
)
from ..backend.results import (
    NON_LOGIC_CLASSES,
    ResultStore,
    TraceStore,
    TraceUnavailable,
)
from ..backend.subproc import classify_exception
from ..core.codec import alert_from_obj
from ..telemetry.queries import EventQuery, TimeRange, TimeseriesQuery


class ReplayMiss(StorageError):
    """The candidate asked for data the original run never touched."""


class ReplayDataSource(DataSource):
    def __init__(self, entries: list[dict]):
        self._by_fp: dict[str, dict] = {}
        for entry in entries:
            self._by_fp.setdefault(entry["fp"], entry)

    def _lookup(self, fingerprint: str) -> dict:
        entry = self._by_fp.get(fingerprint)
        if entry is None:
            raise ReplayMiss(f"no recorded answer for {fingerprint!r}")
        return entry

    def run_ts_query(self, q: TimeseriesQuery):
        return deserialize_ts_result(self._lookup(q.fingerprint())["result"])

    def run_event_query(self, q: EventQuery) -> list[ChangeEvent]:
        return deserialize_events(self._lookup(q.fingerprint())["result"])

    def fetch_alert(self, alert_id: str) -> Alert:
        return alert_from_obj(self._lookup(f"alert:{alert_id}")["result"])

    def fetch_rows(self, metric: str, time_range: TimeRange, filters: Mapping[str, str]):
        fp = ",".join(f"{k}={v}" for k, v in sorted(filters.items()))
        key = f"rows:{metric}:{time_range.start_ts}-{time_range.end_ts}:[{fp}]"
        return deserialize_rows(self._lookup(key)["result"])


class Verdict(str, Enum):
    PASS = "PASS"
    LOGIC_FAIL = "LOGIC_FAIL"
    SKIPPED_INFRA = "SKIPPED_INFRA"


class Gate(str, Enum):
    PASS = "PASS"
    BLOCK = "BLOCK"


@dataclass(frozen=True)
class BacktestCase:
    request_id: str
    verdict: Verdict
    detail: str = ""


@dataclass(frozen=True)
class BacktestReport:
    analyzer_id: str
    candidate_version: str
    window_days: int
    cases: tuple[BacktestCase, ...]
    gate: Gate
    warning: str = ""

    def to_obj(self) -> dict:
        return {
            "analyzer_id": self.analyzer_id,
            "candidate_version": self.candidate_version,
            "window_days": self.window_days,
            "cases": [
                {"request_id": c.request_id, "verdict": c.verdict.value, "detail": c.detail}
                for c in self.cases
            ],
            "gate": self.gate.value,
            "warning": self.warning,
        }


DAY_MS = 24 * 60 * 60 * 1000


class Backtester:
    def __init__(
        self,
        results: ResultStore,
        traces: TraceStore,
        resolver: Optional[Callable[[str], Analyzer]] = None,
        clock: Callable[[], int] = lambda: int(time.time() * 1000),
        parallelism: int = 4,
        analysis_config=None,
    ):
        self.results = results
        self.traces = traces
        self.resolver = resolver
        self.clock = clock
        self.parallelism = max(1, parallelism)
        self.analysis_config = analysis_config

    def backtest(
        self, analyzer_id: str, candidate: Analyzer, window_days: int = 30
    ) -> BacktestReport:
        descriptor = candidate.describe()
        since = self.clock() - window_days * DAY_MS
        history = self.results.query_history(analyzer_id, since_ts=since)
        if not history:
            return BacktestReport(
                analyzer_id=analyzer_id,
                candidate_version=descriptor.version,
                window_days=window_days,
                cases=(),
                gate=Gate.PASS,
                warning=f"no history for {analyzer_id!r} in the last {window_days} days",
            )
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            cases = list(
                pool.map(
                    lambda record: self._replay_case(record, candidate, descriptor.timeout_ms),
                    history,
                )
            )
        gate = Gate.BLOCK if any(c.verdict is Verdict.LOGIC_FAIL for c in cases) else Gate.PASS
        return BacktestReport(
            analyzer_id=analyzer_id,
            candidate_version=descriptor.version,
            window_days=window_days,
            cases=tuple(cases),
            gate=gate,
        )

    def _replay_case(self, record, candidate: Analyzer, timeout_ms: int) -> BacktestCase:
        try:
            entries = self.traces.load(record.trace_ref or record.request_id)
        except TraceUnavailable as exc:
            return BacktestCase(record.request_id, Verdict.SKIPPED_INFRA, str(exc))
        source = ReplayDataSource(entries)

        def resolver(analyzer_id: str) -> Analyzer:
            if self.resolver is None:
                raise UnknownAnalyzer(analyzer_id)
            return self.resolver(analyzer_id)

        toolkit = Toolkit(
            context=record.context,
            source=source,
            resolver=resolver,
            request_id=f"backtest-{record.request_id}",
            trace=TraceRecorder(),
            call_stack=(record.analyzer_id,),
            analysis_config=self.analysis_config,
        )
        box: dict = {}
        done = threading.Event()

        def _run():
            try:
                box["findings"] = candidate.analyze(record.context, toolkit)
            except BaseException as exc:
                box["exc"] = exc
            finally:
                done.set()

        thread = threading.Thread(target=_run, daemon=True)
        thread.start()
        if not done.wait(timeout_ms / 1000.0):
            # same budget as production; replay timeouts are environment-shaped
            return BacktestCase(
                record.request_id, Verdict.SKIPPED_INFRA, f"timed out after {timeout_ms} ms"
            )
        if "exc" in box:
            exc = box["exc"]
            error_class = classify_exception(exc)
            if error_class in NON_LOGIC_CLASSES:
                return BacktestCase(
                    record.request_id, Verdict.SKIPPED_INFRA,
                    f"{error_class.value}: {exc}",
                )
            return BacktestCase(
                record.request_id, Verdict.LOGIC_FAIL, f"{error_class.value}: {exc}"
            )
        return BacktestCase(record.request_id, Verdict.PASS)
