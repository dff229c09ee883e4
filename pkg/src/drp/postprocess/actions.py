"""Action application: alert annotations, task creation, notifications."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from ..core.types import AlertAnnotation, Findings
from ..telemetry.stores import AlertStore

ANNOTATION_AUTHOR = "drp"


class JsonlLog:
    """Append-only JSONL sink used for tasks and notifications."""

    def __init__(self, path: Optional[Path | str] = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._records: list[dict] = []
        if self.path and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                self._records = [json.loads(line) for line in fh if line.strip()]

    def append(self, record: dict) -> None:
        with self._lock:
            self._records.append(record)
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def records(self) -> list[dict]:
        with self._lock:
            return list(self._records)


def annotate_alert(
    alerts: AlertStore,
    alert_id: str,
    findings: Findings,
    result_link: str,
    source_request_id: str,
    now: int,
):
    """Append one findings annotation; repeats for the same source request
    are deduplicated by the store."""
    annotation = AlertAnnotation(
        author=ANNOTATION_AUTHOR,
        ts=now,
        text=findings.summary or findings.status.value,
        link=result_link,
        source_request_id=source_request_id,
    )
    return alerts.annotate(alert_id, annotation)
