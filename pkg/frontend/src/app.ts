/**
 * Hash-routed views: analyzer catalog, run form, live request view with
 * drill-downs, alerts, and insights. All state derives from API responses.
 */

import { ApiClient, type ContextEntry, type PeekResponse } from "./api.js";
import { buildRunForm } from "./form.js";
import { renderError, renderFindings } from "./render.js";
import { pollRequest, type PollHandle } from "./poll.js";

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

function contextToPrefill(entries: ContextEntry[]): Record<string, string> {
  const prefill: Record<string, string> = {};
  for (const entry of entries) {
    prefill[entry.key] = Array.isArray(entry.value)
      ? (entry.value as unknown[]).join(",")
      : String(entry.value);
  }
  return prefill;
}

export class App {
  private activePoll: PollHandle | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly navigate: (hash: string) => void = (hash) => {
      window.location.hash = hash;
    },
  ) {}

  async route(hash: string): Promise<void> {
    this.activePoll?.stop();
    this.activePoll = null;
    const path = hash.replace(/^#\/?/, "");
    const [page, ...rest] = path.split("/");
    this.root.replaceChildren(this.nav(page || "catalog"));
    try {
      if (page === "" || page === "catalog") await this.catalogView();
      else if (page === "run") await this.runView(decodeURIComponent(rest.join("/")));
      else if (page === "request") await this.requestView(decodeURIComponent(rest.join("/")));
      else if (page === "alerts") await this.alertsView();
      else if (page === "insights") await this.insightsView(rest[0]);
      else this.root.append(el("p", "empty-state", `no such page: ${page}`));
    } catch (error) {
      this.root.append(el("p", "error-panel", String(error)));
    }
  }

  private nav(active: string): HTMLElement {
    const bar = el("nav", "topnav");
    for (const [label, hash] of [
      ["analyzers", "#/catalog"],
      ["alerts", "#/alerts"],
      ["insights", "#/insights"],
    ] as const) {
      const link = el("a", hash.includes(active) ? "active" : "", label);
      link.setAttribute("href", hash);
      bar.append(link);
    }
    return bar;
  }

  private async catalogView(): Promise<void> {
    const analyzers = await this.api.listAnalyzers();
    const view = el("main", "catalog");
    view.append(el("h2", undefined, "Analyzers"));
    if (analyzers.length === 0) {
      view.append(el("p", "empty-state", "no analyzers registered"));
    }
    const list = el("ul", "catalog-list");
    for (const descriptor of analyzers) {
      const item = el("li", "catalog-item");
      const link = el("a", "analyzer-link", descriptor.analyzer_id);
      link.setAttribute("href", `#/run/${encodeURIComponent(descriptor.analyzer_id)}`);
      item.append(
        link,
        el("span", "analyzer-version", `@${descriptor.version}`),
        el("span", "analyzer-group", descriptor.group_id),
      );
      list.append(item);
    }
    view.append(list);
    this.root.append(view);
  }

  private async runView(analyzerId: string): Promise<void> {
    const analyzers = await this.api.listAnalyzers();
    const descriptor = analyzers.find((d) => d.analyzer_id === analyzerId);
    const view = el("main", "run");
    if (!descriptor) {
      view.append(el("p", "error-panel", `unknown analyzer ${analyzerId}`));
      this.root.append(view);
      return;
    }
    view.append(el("h2", undefined, `Run ${analyzerId}`));
    const prefillRaw = sessionStorage.getItem(`prefill:${analyzerId}`);
    const prefill = prefillRaw ? (JSON.parse(prefillRaw) as Record<string, string>) : undefined;
    sessionStorage.removeItem(`prefill:${analyzerId}`);
    const form = buildRunForm(descriptor, {
      prefill,
      onSubmit: (inputs) => {
        this.api
          .submit(analyzerId, inputs)
          .then((requestId) => this.navigate(`#/request/${encodeURIComponent(requestId)}`))
          .catch((error) => {
            const panel = view.querySelector(".submit-error") ?? el("p", "submit-error");
            panel.textContent = String(error);
            view.append(panel);
          });
      },
    });
    view.append(form);
    this.root.append(view);
  }

  private async requestView(requestId: string): Promise<void> {
    const view = el("main", "request");
    view.append(el("h2", undefined, `Request ${requestId}`));
    const statusLine = el("p", "poll-status", "loading...");
    const body = el("div", "request-body");
    view.append(statusLine, body);
    this.root.append(view);

    const update = (peek: PeekResponse) => {
      statusLine.textContent = `status: ${peek.status}`;
      statusLine.className = `poll-status status-${peek.status.toLowerCase()}`;
      body.replaceChildren();
      if (peek.findings) {
        body.append(renderFindings(peek.findings));
      }
      if (peek.error) {
        body.append(renderError(peek.error));
      }
      if (peek.status === "SUCCESS" || peek.status === "FAILED") {
        body.append(this.rerunButton(peek));
      }
    };

    this.activePoll = pollRequest(this.api, requestId, update);
    await this.activePoll.done.catch((error) => {
      statusLine.textContent = String(error);
    });
  }

  private rerunButton(peek: PeekResponse): HTMLElement {
    const button = el("button", "rerun", "re-run with changes");
    button.addEventListener("click", () => {
      const entries = peek.context?.entries ?? [];
      const analyzer = this.analyzerOf(peek);
      if (!analyzer) return;
      sessionStorage.setItem(
        `prefill:${analyzer}`,
        JSON.stringify(contextToPrefill(entries)),
      );
      this.navigate(`#/run/${encodeURIComponent(analyzer)}`);
    });
    return button;
  }

  private analyzerOf(peek: PeekResponse): string | null {
    // the analyzer id rides in the context when submitted via a bound rule;
    // otherwise derive it from the catalog link the user came from
    const entry = peek.context?.entries.find((e) => e.key === "analyzer_id");
    if (entry) return String(entry.value);
    const fromHash = sessionStorage.getItem(`analyzer-of:${peek.request_id}`);
    return fromHash;
  }

  private async alertsView(): Promise<void> {
    const alerts = await this.api.alerts();
    const view = el("main", "alerts");
    view.append(el("h2", undefined, "Alerts"));
    if (alerts.length === 0) {
      view.append(el("p", "empty-state", "no alerts fired"));
    }
    for (const alert of alerts) {
      const card = el("section", "alert-card");
      card.append(
        el("h3", undefined, alert.alert_id),
        el(
          "p",
          "alert-meta",
          `${alert.metric} ${alert.direction} ${alert.threshold} at ${alert.fired_at}`,
        ),
      );
      if (alert.annotations.length === 0) {
        card.append(el("p", "empty-state", "no findings yet"));
      }
      for (const annotation of alert.annotations) {
        const row = el("div", "annotation");
        row.append(el("span", "annotation-text", annotation.text));
        if (annotation.source_request_id) {
          const link = el("a", "annotation-link", "view analysis");
          link.setAttribute(
            "href",
            `#/request/${encodeURIComponent(annotation.source_request_id)}`,
          );
          row.append(link);
        }
        card.append(row);
      }
      view.append(card);
    }
    this.root.append(view);
  }

  private async insightsView(windowSpec?: string): Promise<void> {
    const days = windowSpec === "7d" ? 7 : windowSpec === "30d" ? 30 : 1;
    const end = Date.now();
    const report = await this.api.insights(end - days * 86_400_000, end);
    const view = el("main", "insights");
    view.append(el("h2", undefined, `Top alert causes (last ${days}d)`));
    const picker = el("nav", "window-picker");
    for (const option of ["1d", "7d", "30d"]) {
      const link = el("a", option === `${days}d` ? "active" : "", option);
      link.setAttribute("href", `#/insights/${option}`);
      picker.append(link);
    }
    view.append(picker);
    if (report.ranked.length === 0) {
      view.append(el("p", "empty-state", "no analyses in window"));
    } else {
      const chart = el("div", "cause-chart");
      for (const row of report.ranked) {
        const bar = el("div", "cause-row");
        const fill = el("div", "cause-bar");
        fill.style.width = `${Math.round(row.share * 100)}%`;
        bar.append(
          el("span", "cause-name", row.cause),
          fill,
          el("span", "cause-count", `${row.count} (${(row.share * 100).toFixed(0)}%)`),
        );
        chart.append(bar);
      }
      view.append(chart);
    }
    this.root.append(view);
  }
}
