"""Plain-text rendering of Findings for the CLI and logs."""

from __future__ import annotations

import textwrap

from .errors import InvariantViolation
from .types import FindingSection, Findings, Widget


def render_text(findings: Findings, width: int = 100) -> str:
    """Render findings as deterministic plain text.

    Identical findings always render to byte-identical strings; nothing
    here consults clocks, locale, or terminal state.
    """
    if width < 40:
        raise InvariantViolation("render width must be >= 40")
    lines: list[str] = []
    status_line = f"status: {findings.status.value}"
    if findings.confidence is not None:
        status_line += f"  confidence: {findings.confidence.value}"
    lines.append(status_line)
    if findings.summary:
        lines.extend(textwrap.wrap(findings.summary, width=width) or [""])
    for section in findings.sections:
        lines.append("")
        lines.append(f"== {section.title} ==")
        if section.body:
            lines.extend(textwrap.wrap(section.body, width=width))
        lines.extend(_render_widget(section, width))
        if section.child_refs:
            lines.append("  children: " + ", ".join(section.child_refs))
    return "\n".join(lines) + "\n"


def _render_widget(section: FindingSection, width: int) -> list[str]:
    data = section.payload.data
    if section.widget is Widget.TEXT:
        return ["  " + line for line in textwrap.wrap(str(data), width=width - 2)]
    if section.widget is Widget.KEY_VALUE:
        return [f"  {key} = {value}" for key, value in data.items()]
    if section.widget is Widget.TABLE:
        return _render_table(data["columns"], data["rows"])
    if section.widget is Widget.RANKED_LIST:
        out = []
        for rank, item in enumerate(data["items"], start=1):
            line = f"  {rank}. {item['label']}  [score={float(item['score']):.4f}"
            if "confidence" in item:
                line += f" {item['confidence']}"
            line += "]"
            if item.get("annotation"):
                line += f" {item['annotation']}"
            out.append(line)
        return out
    if section.widget is Widget.TIMESERIES:
        points = data["points"]
        if not points:
            return ["  (empty series)"]
        values = [p[1] for p in points]
        return [
            f"  {len(points)} points  ts {points[0][0]}..{points[-1][0]}"
            f"  min={min(values):g} max={max(values):g}"
        ]
    return []


def _render_table(columns: list, rows: list) -> list[str]:
    headers = [str(c) for c in columns]
    str_rows = [[_cell(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in str_rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row: list[str]) -> str:
        return "  " + " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    sep = "  " + "-+-".join("-" * w for w in widths)
    return [fmt(headers), sep] + [fmt(r) for r in str_rows]


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)
