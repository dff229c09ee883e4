"""Immutable run history: one ResultRecord per terminal execution.

Records are the substrate for peeking terminal outcomes, backtesting,
insights, and the bundle preload heuristic. Writes are keyed by
(record key, attempt) and deduplicated, which combined with at-least-once
execution yields exactly-once terminal records. Data-access traces are
large, so they live in their own per-request files referenced from the
record.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from ..core.codec import (
    context_from_obj,
    context_to_obj,
    findings_from_obj,
    findings_to_obj,
)
from ..core.errors import DrpError
from ..core.types import Context, Findings, RequestStatus


class ErrorClass(str, Enum):
    TIMEOUT = "TIMEOUT"
    ANALYZER_EXCEPTION = "ANALYZER_EXCEPTION"
    INFRA = "INFRA"
    VALIDATION = "VALIDATION"


NON_LOGIC_CLASSES = frozenset({ErrorClass.TIMEOUT, ErrorClass.INFRA})


@dataclass(frozen=True)
class ErrorInfo:
    error_class: ErrorClass
    message: str
    attempt_count: int = 1

    def to_obj(self) -> dict:
        return {
            "class": self.error_class.value,
            "message": self.message,
            "attempt_count": self.attempt_count,
        }

    @staticmethod
    def from_obj(obj: dict) -> "ErrorInfo":
        return ErrorInfo(ErrorClass(obj["class"]), obj["message"], obj.get("attempt_count", 1))


@dataclass(frozen=True)
class ResultRecord:
    record_key: str  # request_id for top-level runs, chain ref for children
    request_id: str
    analyzer_id: str
    analyzer_version: str
    context: Context
    status: RequestStatus  # SUCCESS or FAILED
    findings: Optional[Findings]
    error: Optional[ErrorInfo]
    enqueued_at: int
    started_at: int
    finished_at: int
    analyzer_runtime_ms: int
    attempt_count: int
    chain_trace: tuple[dict, ...] = ()
    data_access_reads: int = 0
    trace_ref: str = ""
    parent_ref: Optional[str] = None

    @property
    def overhead_ms(self) -> int:
        return max(0, (self.finished_at - self.enqueued_at) - self.analyzer_runtime_ms)

    def to_obj(self) -> dict:
        return {
            "record_key": self.record_key,
            "request_id": self.request_id,
            "analyzer_id": self.analyzer_id,
            "analyzer_version": self.analyzer_version,
            "context": context_to_obj(self.context),
            "status": self.status.value,
            "findings": findings_to_obj(self.findings) if self.findings else None,
            "error": self.error.to_obj() if self.error else None,
            "enqueued_at": self.enqueued_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "analyzer_runtime_ms": self.analyzer_runtime_ms,
            "attempt_count": self.attempt_count,
            "chain_trace": list(self.chain_trace),
            "data_access_reads": self.data_access_reads,
            "trace_ref": self.trace_ref,
            "parent_ref": self.parent_ref,
        }

    @staticmethod
    def from_obj(obj: dict) -> "ResultRecord":
        return ResultRecord(
            record_key=obj["record_key"],
            request_id=obj["request_id"],
            analyzer_id=obj["analyzer_id"],
            analyzer_version=obj["analyzer_version"],
            context=context_from_obj(obj["context"]),
            status=RequestStatus(obj["status"]),
            findings=findings_from_obj(obj["findings"]) if obj.get("findings") else None,
            error=ErrorInfo.from_obj(obj["error"]) if obj.get("error") else None,
            enqueued_at=obj["enqueued_at"],
            started_at=obj["started_at"],
            finished_at=obj["finished_at"],
            analyzer_runtime_ms=obj["analyzer_runtime_ms"],
            attempt_count=obj["attempt_count"],
            chain_trace=tuple(obj.get("chain_trace", ())),
            data_access_reads=obj.get("data_access_reads", 0),
            trace_ref=obj.get("trace_ref", ""),
            parent_ref=obj.get("parent_ref"),
        )


class ResultStore:
    def __init__(self, path: Optional[Path | str] = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._by_key: dict[tuple[str, int], ResultRecord] = {}
        self._fh = None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                with self.path.open("r", encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            record = ResultRecord.from_obj(json.loads(line))
                            self._by_key.setdefault(
                                (record.record_key, record.attempt_count), record
                            )
            self._fh = self.path.open("a", encoding="utf-8")

    def write_if_absent(self, record: ResultRecord) -> bool:
        """Idempotent keyed write; returns False when the key already exists."""
        key = (record.record_key, record.attempt_count)
        with self._lock:
            if key in self._by_key:
                return False
            self._by_key[key] = record
            if self._fh is not None:
                self._fh.write(json.dumps(record.to_obj(), separators=(",", ":")) + "\n")
                self._fh.flush()
            return True

    def latest_for_request(self, record_key: str) -> Optional[ResultRecord]:
        with self._lock:
            matches = [r for (k, _), r in self._by_key.items() if k == record_key]
        if not matches:
            return None
        return max(matches, key=lambda r: r.attempt_count)

    def records_for_request(self, record_key: str) -> list[ResultRecord]:
        with self._lock:
            return sorted(
                (r for (k, _), r in self._by_key.items() if k == record_key),
                key=lambda r: r.attempt_count,
            )

    def query_history(self, analyzer_id: str, since_ts: int = 0) -> list[ResultRecord]:
        """Top-level terminal records for an analyzer, ascending by finish time."""
        with self._lock:
            records = [
                r
                for r in self._by_key.values()
                if r.analyzer_id == analyzer_id
                and r.parent_ref is None
                and r.finished_at >= since_ts
            ]
        records.sort(key=lambda r: (r.finished_at, r.record_key))
        return records

    def all_top_level(self) -> list[ResultRecord]:
        with self._lock:
            records = [r for r in self._by_key.values() if r.parent_ref is None]
        records.sort(key=lambda r: (r.finished_at, r.record_key))
        return records

    def run_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for record in self.all_top_level():
            counts[record.analyzer_id] = counts.get(record.analyzer_id, 0) + 1
        return counts

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


class TraceUnavailable(DrpError):
    """The recorded data-access trace cannot be loaded (removed or corrupt)."""


class TraceStore:
    """One JSON file per request holding the recorded data accesses."""

    def __init__(self, root: Optional[Path | str] = None):
        self.root = Path(root) if root else None
        self._memory: dict[str, dict] = {}
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)

    def write(self, request_id: str, entries: list[dict]) -> str:
        payload = {"request_id": request_id, "entries": entries}
        if self.root:
            path = self.root / f"{request_id}.json"
            if not path.exists():  # idempotent alongside the keyed record write
                tmp = path.with_suffix(".tmp")
                tmp.write_text(json.dumps(payload, separators=(",", ":")))
                tmp.rename(path)
        else:
            self._memory.setdefault(request_id, payload)
        return request_id

    def load(self, trace_ref: str) -> list[dict]:
        if self.root:
            path = self.root / f"{trace_ref}.json"
            try:
                return json.loads(path.read_text())["entries"]
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                raise TraceUnavailable(f"trace {trace_ref!r}: {exc}")
        payload = self._memory.get(trace_ref)
        if payload is None:
            raise TraceUnavailable(f"trace {trace_ref!r} not stored")
        return payload["entries"]
