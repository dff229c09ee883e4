"""The toolkit handed to a running analyzer.

Every piece of data an analyzer sees flows through here, which is what
makes runs recordable: each access is appended to a trace of
(fingerprint, result) pairs that backtests later replay hermetically.
The toolkit also carries the chaining entry point with call-stack cycle
detection and scoped context overrides.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

from ..analysis import correlate, detect_anomalies, dimensional_analysis, rank_events
from ..config import AnalysisConfig
from ..core.codec import alert_to_obj
from ..core.errors import DrpError
from ..core.types import (
    Alert,
    ChangeEvent,
    Context,
    ContextValue,
    EventKind,
    Findings,
    FindingStatus,
)
from ..telemetry.queries import EventQuery, TimeRange, TimeseriesQuery
from ..telemetry.stores import AlertStore, EventStore, TimeseriesStore
from .analyzer import Analyzer
from .builder import FindingsBuilder


class CycleDetected(DrpError):
    def __init__(self, path: Sequence[str]):
        super().__init__(f"analyzer chain cycle: {' -> '.join(path)}")
        self.path = list(path)


class ChildFailed(DrpError):
    """A chained analyzer raised; the parent may catch this and continue."""

    def __init__(self, child_id: str, cause: BaseException):
        super().__init__(f"chained analyzer {child_id!r} failed: {cause}")
        self.child_id = child_id
        self.cause = cause


TsResult = dict[tuple[str, ...], list[tuple[int, float]]]
Rows = list[tuple[dict[str, str], int, float]]


def serialize_ts_result(result: TsResult) -> dict:
    return {
        "series": [
            {"key": list(key), "points": [[ts, v] for ts, v in points]}
            for key, points in sorted(result.items())
        ]
    }


def deserialize_ts_result(obj: Mapping) -> TsResult:
    return {
        tuple(entry["key"]): [(p[0], p[1]) for p in entry["points"]]
        for entry in obj["series"]
    }


def serialize_events(events: Sequence[ChangeEvent]) -> dict:
    return {
        "events": [
            {
                "event_id": e.event_id,
                "kind": e.kind.value,
                "ts": e.ts,
                "title": e.title,
                "text": e.text,
                "attributes": dict(e.attributes),
            }
            for e in events
        ]
    }


def deserialize_events(obj: Mapping) -> list[ChangeEvent]:
    return [
        ChangeEvent(
            event_id=e["event_id"],
            kind=EventKind(e["kind"]),
            ts=e["ts"],
            title=e["title"],
            text=e.get("text", ""),
            attributes=e.get("attributes", {}),
        )
        for e in obj["events"]
    ]


def serialize_rows(rows: Rows) -> dict:
    return {"rows": [[dict(dims), ts, value] for dims, ts, value in rows]}


def deserialize_rows(obj: Mapping) -> Rows:
    return [(r[0], r[1], r[2]) for r in obj["rows"]]


@dataclass
class TraceRecorder:
    """Accumulates the data accesses of one request (chained children included)."""

    entries: list[dict] = field(default_factory=list)

    def record(self, kind: str, fingerprint: str, result_obj: Any) -> None:
        self.entries.append({"kind": kind, "fp": fingerprint, "result": result_obj})

    @property
    def reads(self) -> int:
        return len(self.entries)


class DataSource:
    """Where the toolkit's reads actually go; swapped out for trace replay."""

    def run_ts_query(self, q: TimeseriesQuery) -> TsResult:
        raise NotImplementedError

    def run_event_query(self, q: EventQuery) -> list[ChangeEvent]:
        raise NotImplementedError

    def fetch_alert(self, alert_id: str) -> Alert:
        raise NotImplementedError

    def fetch_rows(self, metric: str, time_range: TimeRange,
                   filters: Mapping[str, str]) -> Rows:
        raise NotImplementedError


class LiveDataSource(DataSource):
    def __init__(self, timeseries: TimeseriesStore, events: EventStore, alerts: AlertStore):
        self.timeseries = timeseries
        self.events = events
        self.alerts = alerts

    def run_ts_query(self, q: TimeseriesQuery) -> TsResult:
        return self.timeseries.query_timeseries(q)

    def run_event_query(self, q: EventQuery) -> list[ChangeEvent]:
        return self.events.query_events(q)

    def fetch_alert(self, alert_id: str) -> Alert:
        return self.alerts.get(alert_id)

    def fetch_rows(self, metric: str, time_range: TimeRange,
                   filters: Mapping[str, str]) -> Rows:
        return [
            (dict(dims), ts, value)
            for ts, dims, value in self.timeseries.raw_rows(metric)
            if time_range.contains(ts)
            and all(dims.get(k) == v for k, v in filters.items())
        ]


class _ChainState:
    """Shared across one request's whole chain tree."""

    def __init__(self, request_id: str):
        self.request_id = request_id
        self.counter = 0
        self.records: list[dict] = []

    def next_ref(self) -> str:
        self.counter += 1
        return f"{self.request_id}.c{self.counter}"


ChainSink = Callable[[str, str, Context, Optional[Findings], Optional[str], int], None]


class Toolkit:
    def __init__(
        self,
        context: Context,
        source: DataSource,
        resolver: Callable[[str], Analyzer],
        request_id: str = "local",
        trace: Optional[TraceRecorder] = None,
        call_stack: tuple[str, ...] = (),
        chain_state: Optional[_ChainState] = None,
        chain_sink: Optional[ChainSink] = None,
        logger: Optional[logging.Logger] = None,
        analysis_config: Optional[AnalysisConfig] = None,
    ):
        self.context = context
        self._source = source
        self._resolver = resolver
        self.request_id = request_id
        self.trace = trace if trace is not None else TraceRecorder()
        self._call_stack = call_stack
        self._chain_state = chain_state or _ChainState(request_id)
        self._chain_sink = chain_sink
        self.log = logger or logging.getLogger("drp.analyzer")
        self.analysis_config = analysis_config or AnalysisConfig()

    # -- data access (recorded) ------------------------------------------

    def query_timeseries(self, q: TimeseriesQuery) -> TsResult:
        result = self._source.run_ts_query(q)
        self.trace.record("ts_query", q.fingerprint(), serialize_ts_result(result))
        return result

    def query_events(self, q: EventQuery) -> list[ChangeEvent]:
        result = self._source.run_event_query(q)
        self.trace.record("ev_query", q.fingerprint(), serialize_events(result))
        return result

    def get_alert(self, alert_id: str) -> Alert:
        alert = self._source.fetch_alert(alert_id)
        self.trace.record("alert_get", f"alert:{alert_id}", alert_to_obj(alert))
        return alert

    def fetch_rows(self, metric: str, time_range: TimeRange,
                   filters: Optional[Mapping[str, str]] = None) -> Rows:
        filters = dict(filters or {})
        rows = self._source.fetch_rows(metric, time_range, filters)
        fp = ",".join(f"{k}={v}" for k, v in sorted(filters.items()))
        self.trace.record(
            "rows",
            f"rows:{metric}:{time_range.start_ts}-{time_range.end_ts}:[{fp}]",
            serialize_rows(rows),
        )
        return rows

    # -- analysis (pure functions, not recorded; config supplies defaults) --

    def detect_anomalies(self, series, window_n: Optional[int] = None,
                         k: Optional[float] = None):
        cfg = self.analysis_config
        return detect_anomalies(
            series,
            window_n=window_n if window_n is not None else cfg.window_n,
            k=k if k is not None else cfg.k,
        )

    correlate = staticmethod(correlate)

    def dimensional_analysis(self, rows, baseline, anomalous, max_depth: int = 3,
                             top_k: int = 5, beam_width: Optional[int] = None):
        return dimensional_analysis(
            rows, baseline, anomalous, max_depth=max_depth, top_k=top_k,
            beam_width=beam_width if beam_width is not None else self.analysis_config.beam_width,
        )

    def rank_events(self, events, alert, context=None,
                    weights: tuple[float, float, float] = (0.4, 0.4, 0.2)):
        cfg = self.analysis_config
        return rank_events(
            events, alert, context, weights,
            tau_ms=cfg.tau_ms, high_cut=cfg.high_cut, medium_cut=cfg.medium_cut,
        )

    # -- findings ---------------------------------------------------------

    @staticmethod
    def findings(status: FindingStatus) -> FindingsBuilder:
        return FindingsBuilder(status)

    # -- chaining ----------------------------------------------------------

    @property
    def chain_records(self) -> list[dict]:
        return self._chain_state.records

    def chain(self, child_id: str, overrides: Mapping[str, ContextValue]) -> Findings:
        """Run another analyzer with scoped context overrides.

        The child sees the parent context plus overrides; the parent context
        is untouched afterwards. The child implementation is resolved lazily
        at call time. Failures surface as ChildFailed, which the parent may
        catch to degrade gracefully.
        """
        path = (*self._call_stack, child_id)
        if child_id in self._call_stack:
            raise CycleDetected(path)
        child = self._resolver(child_id)  # lazy: resolved only when chained
        child_ctx = self.context.with_entries(dict(overrides))
        ref = self._chain_state.next_ref()
        child_toolkit = Toolkit(
            context=child_ctx,
            source=self._source,
            resolver=self._resolver,
            request_id=self.request_id,
            trace=self.trace,
            call_stack=path,
            chain_state=self._chain_state,
            chain_sink=self._chain_sink,
            logger=self.log,
            analysis_config=self.analysis_config,
        )
        started = time.time()
        try:
            findings = child.analyze(child_ctx, child_toolkit)
        except CycleDetected:
            raise
        except Exception as exc:
            runtime_ms = int((time.time() - started) * 1000)
            self._chain_state.records.append(
                {"child_id": child_id, "ref": ref, "depth": len(path) - 1, "error": str(exc)}
            )
            if self._chain_sink:
                self._chain_sink(child_id, ref, child_ctx, None, str(exc), runtime_ms)
            raise ChildFailed(child_id, exc)
        runtime_ms = int((time.time() - started) * 1000)
        self._chain_state.records.append(
            {"child_id": child_id, "ref": ref, "depth": len(path) - 1, "error": None}
        )
        if self._chain_sink:
            self._chain_sink(child_id, ref, child_ctx, findings, None, runtime_ms)
        return findings

    def last_chain_ref(self) -> str:
        return self._chain_state.records[-1]["ref"]
