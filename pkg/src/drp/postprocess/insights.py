"""SLO cause classification and windowed insights aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..core.types import CauseCategory, EventKind, Findings, Widget
from ..telemetry.queries import TimeRange
from ..backend.results import ResultRecord

DAY_MS = 24 * 60 * 60 * 1000

_EVENT_KIND_CAUSES = {
    EventKind.CODE_CHANGE.value: CauseCategory.CODE_CHANGE,
    EventKind.CONFIG_CHANGE.value: CauseCategory.CONFIG_CHANGE,
}


def classify_slo_cause(findings: Findings) -> CauseCategory:
    """Deterministic cause attribution from a findings value.

    An explicit `cause` key in any KEY_VALUE section wins; otherwise the
    kind of the top ranked event decides (code/config changes map to their
    categories); otherwise UNKNOWN.
    """
    for section in findings.sections:
        if section.widget is Widget.KEY_VALUE:
            raw = section.payload.data.get("cause")
            if isinstance(raw, str):
                try:
                    return CauseCategory(raw.upper())
                except ValueError:
                    continue
    for section in findings.sections:
        if section.widget is Widget.RANKED_LIST:
            items = section.payload.data.get("items", [])
            if items:
                kind = items[0].get("kind")
                cause = _EVENT_KIND_CAUSES.get(kind)
                if cause is not None:
                    return cause
    return CauseCategory.UNKNOWN


@dataclass(frozen=True)
class InsightsReport:
    window: TimeRange
    ranked: tuple[tuple[CauseCategory, int, float], ...]
    daily: tuple[tuple[int, tuple[tuple[CauseCategory, int, float], ...]], ...] = ()

    def to_obj(self) -> dict:
        return {
            "window": {"start_ts": self.window.start_ts, "end_ts": self.window.end_ts},
            "ranked": [
                {"cause": c.value, "count": n, "share": share}
                for c, n, share in self.ranked
            ],
            "daily": [
                {
                    "day_start_ts": day,
                    "ranked": [
                        {"cause": c.value, "count": n, "share": share}
                        for c, n, share in ranked
                    ],
                }
                for day, ranked in self.daily
            ],
        }


def _rank(causes: Sequence[CauseCategory]) -> tuple[tuple[CauseCategory, int, float], ...]:
    counts: dict[CauseCategory, int] = {}
    for cause in causes:
        counts[cause] = counts.get(cause, 0) + 1
    total = sum(counts.values())
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].value))
    return tuple((cause, n, n / total) for cause, n in ranked)


def aggregate_insights(records: Iterable[ResultRecord], window: TimeRange) -> InsightsReport:
    """Rank causes over all successful records finishing inside the window;
    spans longer than a day also get per-day buckets."""
    in_window = [
        r for r in records
        if window.contains(r.finished_at) and r.findings is not None
    ]
    causes = [classify_slo_cause(r.findings) for r in in_window]
    ranked = _rank(causes) if causes else ()
    daily = ()
    if window.duration_ms > DAY_MS:
        buckets: dict[int, list[CauseCategory]] = {}
        for record, cause in zip(in_window, causes):
            day = record.finished_at - record.finished_at % DAY_MS
            buckets.setdefault(day, []).append(cause)
        daily = tuple((day, _rank(buckets[day])) for day in sorted(buckets))
    return InsightsReport(window=window, ranked=ranked, daily=daily)
