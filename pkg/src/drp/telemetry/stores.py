"""File-backed telemetry stores: timeseries points, change events, alerts.

Each store is an append-only JSON-lines file plus an in-memory index.
Stores support concurrent readers with a single writer; writes are atomic
at batch granularity (one lock-held append per batch). Passing ``path=None``
keeps a store purely in memory, which the test suites use for bulk data.
"""

from __future__ import annotations

import json
import math
import threading
from pathlib import Path
from typing import Iterable, Optional

from ..core.codec import alert_from_obj, alert_to_obj
from ..core.errors import DrpError, InvariantViolation, StorageError
from ..core.types import Alert, AlertAnnotation, ChangeEvent, EventKind, TimeseriesPoint
from .queries import Agg, EventQuery, TimeseriesQuery, nearest_rank_percentile


class UnknownMetric(DrpError):
    def __init__(self, metric: str):
        super().__init__(f"unknown metric {metric!r}")
        self.metric = metric


class UnknownAlert(DrpError):
    def __init__(self, alert_id: str):
        super().__init__(f"unknown alert {alert_id!r}")
        self.alert_id = alert_id


class _JsonlFile:
    """Append-only JSONL persistence shared by the concrete stores."""

    def __init__(self, path: Optional[Path]):
        self.path = Path(path) if path else None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, records: Iterable[dict]) -> None:
        if not self.path:
            return
        try:
            with self.path.open("a", encoding="utf-8") as fh:
                for record in records:
                    fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        except OSError as exc:
            raise StorageError(f"append to {self.path}: {exc}")

    def load(self) -> list[dict]:
        if not self.path or not self.path.exists():
            return []
        try:
            with self.path.open("r", encoding="utf-8") as fh:
                return [json.loads(line) for line in fh if line.strip()]
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"load from {self.path}: {exc}")


class TimeseriesStore:
    """Holds raw metric points and answers bucketed aggregate queries."""

    def __init__(self, path: Optional[Path | str] = None):
        self._file = _JsonlFile(Path(path) if path else None)
        self._lock = threading.RLock()
        # metric -> list of (ts, dimensions, value); kept in ingestion order
        self._points: dict[str, list[tuple[int, dict[str, str], float]]] = {}
        self._dims: dict[str, set[str]] = {}
        for rec in self._file.load():
            self._index(rec["metric"], rec["ts"], rec["dims"], rec["value"])

    def _index(self, metric: str, ts: int, dims: dict, value: float) -> None:
        self._points.setdefault(metric, []).append((ts, dims, value))
        self._dims.setdefault(metric, set()).update(dims.keys())

    def ingest_points(self, points: Iterable[TimeseriesPoint]) -> int:
        batch = list(points)
        for p in batch:
            if not isinstance(p, TimeseriesPoint):
                raise InvariantViolation(f"not a TimeseriesPoint: {p!r}")
        with self._lock:
            self._file.append(
                {"metric": p.metric, "ts": p.ts, "dims": dict(p.dimensions), "value": p.value}
                for p in batch
            )
            for p in batch:
                self._index(p.metric, p.ts, dict(p.dimensions), p.value)
        return len(batch)

    def metrics(self) -> list[str]:
        with self._lock:
            return sorted(self._points)

    def dimensions_of(self, metric: str) -> set[str]:
        with self._lock:
            if metric not in self._points:
                raise UnknownMetric(metric)
            return set(self._dims.get(metric, set()))

    def raw_rows(self, metric: str) -> list[tuple[int, dict[str, str], float]]:
        """All stored rows for a metric, in ingestion order."""
        with self._lock:
            if metric not in self._points:
                raise UnknownMetric(metric)
            return list(self._points[metric])

    def query_timeseries(
        self, q: TimeseriesQuery
    ) -> dict[tuple[str, ...], list[tuple[int, float]]]:
        """One series per distinct group key, buckets on the step_ms grid.

        Buckets are epoch-aligned (bucket = ts - ts % step_ms), empty buckets
        are omitted, and SUM/COUNT are exact; AVG is SUM/COUNT and P99 the
        nearest-rank percentile within the bucket.
        """
        with self._lock:
            if q.metric not in self._points:
                raise UnknownMetric(q.metric)
            known_dims = self._dims.get(q.metric, set())
            for dim in q.group_by:
                if dim not in known_dims:
                    raise InvariantViolation(
                        f"group_by dimension {dim!r} not present on metric {q.metric!r}"
                    )
            rows = self._points[q.metric]
            grouped: dict[tuple[str, ...], dict[int, list[float]]] = {}
            for ts, dims, value in rows:
                if not q.range.contains(ts):
                    continue
                if any(dims.get(k) != v for k, v in q.filters.items()):
                    continue
                key = tuple(dims.get(d, "") for d in q.group_by)
                bucket = ts - ts % q.step_ms
                grouped.setdefault(key, {}).setdefault(bucket, []).append(value)
        out: dict[tuple[str, ...], list[tuple[int, float]]] = {}
        for key, buckets in grouped.items():
            series = []
            for bucket in sorted(buckets):
                values = buckets[bucket]
                if q.agg is Agg.SUM:
                    agg = math.fsum(values)
                elif q.agg is Agg.COUNT:
                    agg = float(len(values))
                elif q.agg is Agg.AVG:
                    agg = math.fsum(values) / len(values)
                else:
                    agg = nearest_rank_percentile(values, 99.0)
                series.append((bucket, agg))
            out[key] = series
        return out


class EventStore:
    """Change events (code, config, deploys) keyed by event id."""

    def __init__(self, path: Optional[Path | str] = None):
        self._file = _JsonlFile(Path(path) if path else None)
        self._lock = threading.RLock()
        self._events: dict[str, ChangeEvent] = {}
        for rec in self._file.load():
            ev = ChangeEvent(
                event_id=rec["event_id"],
                kind=EventKind(rec["kind"]),
                ts=rec["ts"],
                title=rec["title"],
                text=rec.get("text", ""),
                attributes=rec.get("attributes", {}),
            )
            self._events[ev.event_id] = ev

    def ingest_events(self, events: Iterable[ChangeEvent]) -> int:
        batch = list(events)
        with self._lock:
            for ev in batch:
                if ev.event_id in self._events:
                    raise InvariantViolation(f"duplicate event_id {ev.event_id!r}")
            self._file.append(
                {
                    "event_id": ev.event_id,
                    "kind": ev.kind.value,
                    "ts": ev.ts,
                    "title": ev.title,
                    "text": ev.text,
                    "attributes": dict(ev.attributes),
                }
                for ev in batch
            )
            for ev in batch:
                self._events[ev.event_id] = ev
        return len(batch)

    def get(self, event_id: str) -> Optional[ChangeEvent]:
        with self._lock:
            return self._events.get(event_id)

    def query_events(self, q: EventQuery) -> list[ChangeEvent]:
        """Events matching every filter, ascending by (ts, event_id)."""
        needle = q.text_query.lower() if q.text_query else None
        with self._lock:
            candidates = list(self._events.values())
        out = []
        for ev in candidates:
            if not q.range.contains(ev.ts):
                continue
            if q.kinds is not None and ev.kind not in q.kinds:
                continue
            if any(ev.attributes.get(k) != v for k, v in q.attribute_filters.items()):
                continue
            if needle is not None and needle not in f"{ev.title}\n{ev.text}".lower():
                continue
            out.append(ev)
        out.sort(key=lambda e: (e.ts, e.event_id))
        return out


class AlertStore:
    """Fired alerts plus their append-only annotation history."""

    def __init__(self, path: Optional[Path | str] = None):
        self._file = _JsonlFile(Path(path) if path else None)
        self._lock = threading.RLock()
        self._alerts: dict[str, Alert] = {}
        for rec in self._file.load():
            if rec.get("type") == "annotation":
                alert = self._alerts.get(rec["alert_id"])
                if alert is not None:
                    self._alerts[rec["alert_id"]] = alert.with_annotation(
                        AlertAnnotation(
                            author=rec["author"],
                            ts=rec["ts"],
                            text=rec["text"],
                            link=rec.get("link", ""),
                            source_request_id=rec.get("source_request_id", ""),
                        )
                    )
            else:
                alert = alert_from_obj(rec["alert"])
                self._alerts[alert.alert_id] = alert

    def ingest_alert(self, alert: Alert) -> int:
        with self._lock:
            self._file.append([{"type": "alert", "alert": alert_to_obj(alert)}])
            self._alerts[alert.alert_id] = alert
        return 1

    def get(self, alert_id: str) -> Alert:
        with self._lock:
            alert = self._alerts.get(alert_id)
        if alert is None:
            raise UnknownAlert(alert_id)
        return alert

    def list_alerts(self) -> list[Alert]:
        with self._lock:
            return sorted(self._alerts.values(), key=lambda a: (a.fired_at, a.alert_id))

    def annotate(self, alert_id: str, annotation: AlertAnnotation) -> Alert:
        """Append one annotation; identical source_request_id is deduplicated."""
        with self._lock:
            alert = self._alerts.get(alert_id)
            if alert is None:
                raise UnknownAlert(alert_id)
            if annotation.source_request_id and any(
                a.source_request_id == annotation.source_request_id
                for a in alert.annotations
            ):
                return alert
            updated = alert.with_annotation(annotation)
            self._file.append(
                [
                    {
                        "type": "annotation",
                        "alert_id": alert_id,
                        "author": annotation.author,
                        "ts": annotation.ts,
                        "text": annotation.text,
                        "link": annotation.link,
                        "source_request_id": annotation.source_request_id,
                    }
                ]
            )
            self._alerts[alert_id] = updated
            return updated
