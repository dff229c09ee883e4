"""Fluent construction of Findings values."""

from __future__ import annotations

from typing import Any, Optional, Sequence

from ..core.errors import InvariantViolation
from ..core.types import (
    Confidence,
    FindingSection,
    Findings,
    FindingStatus,
    SectionPayload,
    Widget,
)


class FindingsBuilder:
    """Accumulates sections in insertion order; build() may run only once."""

    def __init__(self, status: FindingStatus):
        self._status = status
        self._summary = ""
        self._confidence: Optional[Confidence] = None
        self._sections: list[FindingSection] = []
        self._built = False

    def set_status(self, status: FindingStatus) -> "FindingsBuilder":
        self._status = status
        return self

    def set_summary(self, summary: str) -> "FindingsBuilder":
        self._summary = summary
        return self

    def set_confidence(self, confidence: Confidence) -> "FindingsBuilder":
        self._confidence = confidence
        return self

    def add_section(
        self,
        title: str,
        widget: Widget,
        payload: SectionPayload,
        body: str = "",
        child_refs: Sequence[str] = (),
    ) -> "FindingsBuilder":
        self._sections.append(
            FindingSection(title=title, body=body, widget=widget, payload=payload,
                           child_refs=tuple(child_refs))
        )
        return self

    def add_text(
        self, title: str, text: str, body: str = "", child_refs: Sequence[str] = ()
    ) -> "FindingsBuilder":
        return self.add_section(
            title, Widget.TEXT, SectionPayload("drp.text/1", text), body, child_refs
        )

    def add_key_value(self, title: str, data: dict[str, Any], body: str = "") -> "FindingsBuilder":
        return self.add_section(title, Widget.KEY_VALUE, SectionPayload("drp.kv/1", data), body)

    def add_table(
        self, title: str, columns: Sequence[str], rows: Sequence[Sequence[Any]], body: str = ""
    ) -> "FindingsBuilder":
        payload = SectionPayload("drp.table/1", {"columns": list(columns),
                                                 "rows": [list(r) for r in rows]})
        return self.add_section(title, Widget.TABLE, payload, body)

    def add_ranked_list(
        self, title: str, items: Sequence[dict[str, Any]], body: str = "",
        child_refs: Sequence[str] = (),
    ) -> "FindingsBuilder":
        payload = SectionPayload("drp.ranked/1", {"items": [dict(i) for i in items]})
        return self.add_section(title, Widget.RANKED_LIST, payload, body, child_refs)

    def add_timeseries(
        self, title: str, points: Sequence[tuple[int, float]], body: str = ""
    ) -> "FindingsBuilder":
        payload = SectionPayload("drp.series/1", {"points": [[ts, v] for ts, v in points]})
        return self.add_section(title, Widget.TIMESERIES, payload, body)

    def build(self) -> Findings:
        if self._built:
            raise InvariantViolation("build() may be called only once")
        self._built = True
        return Findings(
            status=self._status,
            summary=self._summary,
            sections=tuple(self._sections),
            confidence=self._confidence,
        )
