"""Persistent request queue with lease-based reservation.

A single write-ahead JSONL file records every state change; an in-memory
index is rebuilt from it on open, so a crashed service resumes where it
stopped. All mutations happen under one lock and respect the request
status machine: QUEUED -> RUNNING -> (SUCCESS | FAILED), with RUNNING ->
QUEUED on lease expiry or retry. A reservation is exclusive until its
lease expires; expired leases silently return entries to the queue with
their attempt count unchanged.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from ..core.codec import context_to_obj, context_from_obj
from ..core.errors import DrpError, TransitionError
from ..core.types import Context, DiagnoseRequest, RequestStatus, can_transition


class QueueFull(DrpError):
    pass


class UnknownRequest(DrpError):
    def __init__(self, request_id: str):
        super().__init__(f"unknown request {request_id!r}")
        self.request_id = request_id


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class _EntryState:
    request_id: str
    analyzer_id: str
    context: Context
    enqueued_at: int
    postprocessor_ids: tuple[str, ...]
    status: RequestStatus
    attempt: int = 0
    lease_expiry: Optional[int] = None
    worker_id: Optional[str] = None

    def snapshot(self) -> DiagnoseRequest:
        return DiagnoseRequest(
            request_id=self.request_id,
            analyzer_id=self.analyzer_id,
            context=self.context,
            enqueued_at=self.enqueued_at,
            status=self.status,
            attempt=self.attempt,
            lease_expiry=self.lease_expiry if self.status is RequestStatus.RUNNING else None,
            postprocessor_ids=self.postprocessor_ids,
        )

    def transition(self, target: RequestStatus) -> None:
        if not can_transition(self.status, target):
            raise TransitionError(f"{self.status.value} -> {target.value} is not legal")
        self.status = target


@dataclass(frozen=True)
class LeaseInterval:
    """One reservation, for the mutual-exclusion harness."""

    request_id: str
    worker_id: str
    granted_at: int
    lease_expiry: int
    released_at: Optional[int]  # None while live; expiry bounds it regardless


class QueueStore:
    def __init__(
        self,
        path: Optional[Path | str] = None,
        max_depth: int = 10_000,
        clock: Callable[[], int] = now_ms,
    ):
        self.path = Path(path) if path else None
        self.max_depth = max_depth
        self._clock = clock
        self._lock = threading.Lock()
        self._entries: dict[str, _EntryState] = {}
        self._pending: list[str] = []  # QUEUED ids, oldest first
        self._terminal: dict[str, RequestStatus] = {}
        self._lease_log: list[LeaseInterval] = []
        self._fh = None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                self._replay()
            self._fh = self.path.open("a", encoding="utf-8")

    # -- persistence -------------------------------------------------------

    def _append(self, record: dict) -> None:
        if self._fh is not None:
            self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
            self._fh.flush()

    def _replay(self) -> None:
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    self._apply(json.loads(line))

    def _apply(self, rec: dict) -> None:
        op = rec["op"]
        if op == "enqueue":
            entry = _EntryState(
                request_id=rec["request_id"],
                analyzer_id=rec["analyzer_id"],
                context=context_from_obj(rec["context"]),
                enqueued_at=rec["enqueued_at"],
                postprocessor_ids=tuple(rec.get("postprocessor_ids", ())),
                status=RequestStatus.QUEUED,
            )
            self._entries[entry.request_id] = entry
            self._pending.append(entry.request_id)
        elif op == "reserve":
            entry = self._entries[rec["request_id"]]
            entry.status = RequestStatus.RUNNING
            entry.lease_expiry = rec["lease_expiry"]
            entry.worker_id = rec["worker_id"]
            if rec["request_id"] in self._pending:
                self._pending.remove(rec["request_id"])
        elif op == "requeue":
            entry = self._entries[rec["request_id"]]
            entry.status = RequestStatus.QUEUED
            entry.attempt = rec["attempt"]
            entry.lease_expiry = None
            entry.worker_id = None
            if rec["request_id"] not in self._pending:
                self._pending.append(rec["request_id"])
        elif op == "extend":
            entry = self._entries[rec["request_id"]]
            entry.lease_expiry = rec["lease_expiry"]
        elif op == "terminal":
            self._entries.pop(rec["request_id"], None)
            if rec["request_id"] in self._pending:
                self._pending.remove(rec["request_id"])
            self._terminal[rec["request_id"]] = RequestStatus(rec["status"])

    # -- lease bookkeeping ---------------------------------------------------

    def _grant(self, entry: _EntryState, worker_id: str, lease_expiry: int, now: int) -> None:
        self._lease_log.append(
            LeaseInterval(entry.request_id, worker_id, now, lease_expiry, None)
        )

    def _release(self, request_id: str, now: int) -> None:
        for i in range(len(self._lease_log) - 1, -1, -1):
            interval = self._lease_log[i]
            if interval.request_id == request_id and interval.released_at is None:
                self._lease_log[i] = LeaseInterval(
                    interval.request_id, interval.worker_id, interval.granted_at,
                    interval.lease_expiry, now,
                )
                break

    def lease_history(self) -> list[LeaseInterval]:
        with self._lock:
            return list(self._lease_log)

    # -- operations ----------------------------------------------------------

    def submit(
        self,
        request_id: str,
        analyzer_id: str,
        context: Context,
        postprocessor_ids: tuple[str, ...] = (),
    ) -> DiagnoseRequest:
        with self._lock:
            now = self._clock()
            depth = len(self._entries)
            if depth >= self.max_depth:
                raise QueueFull(f"queue depth {depth} at configured max {self.max_depth}")
            entry = _EntryState(
                request_id=request_id,
                analyzer_id=analyzer_id,
                context=context,
                enqueued_at=now,
                postprocessor_ids=tuple(postprocessor_ids),
                status=RequestStatus.QUEUED,
            )
            self._entries[request_id] = entry
            self._pending.append(request_id)
            self._append(
                {
                    "op": "enqueue",
                    "request_id": request_id,
                    "analyzer_id": analyzer_id,
                    "context": context_to_obj(context),
                    "enqueued_at": now,
                    "postprocessor_ids": list(postprocessor_ids),
                }
            )
            return entry.snapshot()

    def _expire_stale(self, now: int) -> None:
        # expired leases revert to QUEUED with attempt unchanged
        for entry in self._entries.values():
            if (
                entry.status is RequestStatus.RUNNING
                and entry.lease_expiry is not None
                and entry.lease_expiry <= now
            ):
                entry.transition(RequestStatus.QUEUED)
                entry.lease_expiry = None
                entry.worker_id = None
                self._pending.append(entry.request_id)
                self._append(
                    {"op": "requeue", "request_id": entry.request_id, "attempt": entry.attempt}
                )

    def dequeue_reserve(self, worker_id: str, lease_ms: int) -> Optional[DiagnoseRequest]:
        """Atomically reserve the oldest QUEUED entry, or None when empty."""
        with self._lock:
            now = self._clock()
            self._expire_stale(now)
            while self._pending:
                request_id = self._pending[0]
                entry = self._entries.get(request_id)
                if entry is None or entry.status is not RequestStatus.QUEUED:
                    self._pending.pop(0)
                    continue
                self._pending.pop(0)
                entry.transition(RequestStatus.RUNNING)
                entry.lease_expiry = now + lease_ms
                entry.worker_id = worker_id
                self._grant(entry, worker_id, entry.lease_expiry, now)
                self._append(
                    {
                        "op": "reserve",
                        "request_id": request_id,
                        "worker_id": worker_id,
                        "lease_expiry": entry.lease_expiry,
                    }
                )
                return entry.snapshot()
            return None

    def extend_lease(self, request_id: str, worker_id: str, lease_expiry: int) -> bool:
        with self._lock:
            entry = self._entries.get(request_id)
            if (
                entry is None
                or entry.status is not RequestStatus.RUNNING
                or entry.worker_id != worker_id
            ):
                return False
            entry.lease_expiry = max(entry.lease_expiry or 0, lease_expiry)
            for i in range(len(self._lease_log) - 1, -1, -1):
                interval = self._lease_log[i]
                if interval.request_id == request_id and interval.released_at is None:
                    self._lease_log[i] = LeaseInterval(
                        interval.request_id, interval.worker_id, interval.granted_at,
                        entry.lease_expiry, None,
                    )
                    break
            self._append(
                {"op": "extend", "request_id": request_id, "lease_expiry": entry.lease_expiry}
            )
            return True

    def _holds_live_lease(self, entry: _EntryState, worker_id: str, now: int) -> bool:
        return (
            entry.status is RequestStatus.RUNNING
            and entry.worker_id == worker_id
            and entry.lease_expiry is not None
            and entry.lease_expiry > now
        )

    def requeue_for_retry(self, request_id: str, worker_id: str) -> bool:
        """Put a failed execution back with attempt+1; only the lease holder may."""
        with self._lock:
            now = self._clock()
            entry = self._entries.get(request_id)
            if entry is None or not self._holds_live_lease(entry, worker_id, now):
                return False
            entry.transition(RequestStatus.QUEUED)
            entry.attempt += 1
            entry.lease_expiry = None
            entry.worker_id = None
            self._release(request_id, now)
            self._pending.append(request_id)
            self._append({"op": "requeue", "request_id": request_id, "attempt": entry.attempt})
            return True

    def complete(self, request_id: str, worker_id: str, status: RequestStatus) -> bool:
        """Terminal transition; removes the entry. Only the lease holder may."""
        if status not in (RequestStatus.SUCCESS, RequestStatus.FAILED):
            raise TransitionError(f"{status.value} is not terminal")
        with self._lock:
            now = self._clock()
            entry = self._entries.get(request_id)
            if entry is None or not self._holds_live_lease(entry, worker_id, now):
                return False
            entry.transition(status)
            self._release(request_id, now)
            del self._entries[request_id]
            self._terminal[request_id] = status
            self._append({"op": "terminal", "request_id": request_id, "status": status.value})
            return True

    def status_of(self, request_id: str) -> RequestStatus:
        with self._lock:
            now = self._clock()
            entry = self._entries.get(request_id)
            if entry is not None:
                if (
                    entry.status is RequestStatus.RUNNING
                    and entry.lease_expiry is not None
                    and entry.lease_expiry <= now
                ):
                    return RequestStatus.QUEUED
                return entry.status
            status = self._terminal.get(request_id)
            if status is None:
                raise UnknownRequest(request_id)
            return status

    def get(self, request_id: str) -> DiagnoseRequest:
        with self._lock:
            entry = self._entries.get(request_id)
            if entry is None:
                raise UnknownRequest(request_id)
            return entry.snapshot()

    def depth(self) -> int:
        with self._lock:
            return len(self._entries)

    def pending_count(self) -> int:
        with self._lock:
            return sum(
                1 for e in self._entries.values() if e.status is RequestStatus.QUEUED
            )

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None
