/**
 * Findings renderers, one per widget kind.
 *
 * Rendering is a pure function of the findings value: no clocks, no
 * randomness, no layout thrash — the same fixture yields the same DOM
 * on every reload.
 */

import type { ErrorInfo, FindingSection, Findings } from "./api.js";

interface TableData {
  columns: unknown[];
  rows: unknown[][];
}

interface RankedItem {
  label: string;
  score: number;
  confidence?: string;
  annotation?: string;
  kind?: string;
  event_id?: string;
}

interface RankedData {
  items: RankedItem[];
}

interface SeriesData {
  points: [number, number][];
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderText(data: unknown): HTMLElement {
  return el("pre", "widget-text", String(data));
}

function renderKeyValue(data: Record<string, unknown>): HTMLElement {
  const grid = el("dl", "widget-kv");
  for (const [key, value] of Object.entries(data)) {
    grid.append(el("dt", undefined, key), el("dd", undefined, String(value)));
  }
  return grid;
}

function renderTable(data: TableData): HTMLElement {
  const table = el("table", "widget-table");
  const head = table.createTHead().insertRow();
  for (const column of data.columns) {
    const th = document.createElement("th");
    th.textContent = String(column);
    head.append(th);
  }
  const body = table.createTBody();
  for (const row of data.rows) {
    const tr = body.insertRow();
    for (const cell of row) tr.insertCell().textContent = String(cell);
  }
  return table;
}

function renderRankedList(data: RankedData): HTMLElement {
  const list = el("ol", "widget-ranked");
  for (const item of data.items) {
    const entry = el("li", "ranked-item");
    const bar = el("div", "score-bar");
    bar.style.width = `${Math.round(Math.max(0, Math.min(1, item.score)) * 100)}%`;
    const label = el("span", "ranked-label", item.label);
    const score = el("span", "ranked-score", item.score.toFixed(4));
    entry.append(bar, label, score);
    if (item.confidence) {
      entry.append(
        el("span", `badge badge-${item.confidence.toLowerCase()}`, item.confidence),
      );
    }
    if (item.annotation) entry.append(el("small", "ranked-annotation", item.annotation));
    list.append(entry);
  }
  return list;
}

function renderTimeseries(data: SeriesData): HTMLElement {
  const wrap = el("div", "widget-series");
  const points = data.points;
  if (points.length === 0) {
    wrap.append(el("p", "empty-state", "(empty series)"));
    return wrap;
  }
  const width = 600;
  const height = 120;
  const pad = 4;
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const coords = points
    .map(([x, y]) => {
      const px = pad + ((x - xMin) / xSpan) * (width - 2 * pad);
      const py = height - pad - ((y - yMin) / ySpan) * (height - 2 * pad);
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "series-chart");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", coords);
  line.setAttribute("fill", "none");
  svg.append(line);
  wrap.append(svg);
  wrap.append(
    el(
      "small",
      "series-range",
      `${points.length} points, ${yMin} .. ${yMax}`,
    ),
  );
  return wrap;
}

function renderWidget(section: FindingSection): HTMLElement {
  const data = section.payload.data;
  switch (section.widget) {
    case "TEXT":
      return renderText(data);
    case "KEY_VALUE":
      return renderKeyValue(data as Record<string, unknown>);
    case "TABLE":
      return renderTable(data as TableData);
    case "RANKED_LIST":
      return renderRankedList(data as RankedData);
    case "TIMESERIES":
      return renderTimeseries(data as SeriesData);
  }
}

export function renderFindings(findings: Findings, linkBase = "#/request/"): HTMLElement {
  const root = el("article", "findings");
  const header = el("header", "findings-header");
  header.append(el("span", `status status-${findings.status.toLowerCase()}`, findings.status));
  if (findings.confidence) {
    header.append(
      el("span", `badge badge-${findings.confidence.toLowerCase()}`, findings.confidence),
    );
  }
  root.append(header);
  if (findings.summary) root.append(el("p", "findings-summary", findings.summary));
  for (const section of findings.sections) {
    const block = el("section", "finding-section");
    block.append(el("h3", undefined, section.title));
    if (section.body) block.append(el("p", "section-body", section.body));
    block.append(renderWidget(section));
    if (section.child_refs.length > 0) {
      const links = el("nav", "drill-downs");
      for (const ref of section.child_refs) {
        const link = el("a", "drill-down", `sub-analysis ${ref}`);
        link.setAttribute("href", `${linkBase}${encodeURIComponent(ref)}`);
        links.append(link);
      }
      block.append(links);
    }
    root.append(block);
  }
  return root;
}

export function renderError(error: ErrorInfo): HTMLElement {
  const panel = el("div", "error-panel");
  panel.append(el("strong", "error-class", error.class));
  panel.append(el("span", "error-attempts", ` after ${error.attempt_count} attempt(s)`));
  panel.append(el("p", "error-message", error.message));
  return panel;
}
