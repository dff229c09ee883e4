/**
 * Typed client for the backend's /v1 JSON API.
 *
 * The UI never computes findings itself: everything rendered comes from
 * these responses. Unknown fields are ignored (the wire contract evolves
 * additively).
 */

export type ValueTag = "STRING" | "INT" | "FLOAT" | "BOOL" | "TIMESTAMP" | "STRING_LIST";

export interface SchemaParam {
  name: string;
  tag: ValueTag;
  required: boolean;
  default: unknown;
  description: string;
}

export interface AnalyzerDescriptor {
  analyzer_id: string;
  version: string;
  group_id: string;
  allowlisted: boolean;
  timeout_ms: number;
  tags: string[];
  input_schema: { params: SchemaParam[] };
}

export type FindingStatus = "OK" | "ISSUE_FOUND" | "INCONCLUSIVE" | "ERROR";
export type Widget = "TEXT" | "KEY_VALUE" | "TABLE" | "RANKED_LIST" | "TIMESERIES";
export type Confidence = "HIGH" | "MEDIUM" | "LOW";

export interface FindingSection {
  title: string;
  body: string;
  widget: Widget;
  payload: { schema_id: string; data: unknown };
  child_refs: string[];
}

export interface Findings {
  schema: string;
  status: FindingStatus;
  summary: string;
  confidence: Confidence | null;
  sections: FindingSection[];
}

export interface ErrorInfo {
  class: string;
  message: string;
  attempt_count: number;
}

export type RequestStatus = "QUEUED" | "RUNNING" | "SUCCESS" | "FAILED";

export interface ContextEntry {
  key: string;
  tag: ValueTag;
  value: unknown;
}

export interface PeekResponse {
  request_id: string;
  status: RequestStatus;
  findings?: Findings;
  error?: ErrorInfo;
  context?: { schema: string; entries: ContextEntry[] };
}

export interface AlertAnnotation {
  author: string;
  ts: number;
  text: string;
  link: string;
  source_request_id: string;
}

export interface Alert {
  alert_id: string;
  metric: string;
  filters: Record<string, string>;
  threshold: number;
  direction: "ABOVE" | "BELOW";
  window_ms: number;
  fired_at: number;
  context_hints: Record<string, string>;
  annotations: AlertAnnotation[];
}

export interface InsightsRow {
  cause: string;
  count: number;
  share: number;
}

export interface InsightsReport {
  window: { start_ts: number; end_ts: number };
  ranked: InsightsRow[];
  daily: { day_start_ts: number; ranked: InsightsRow[] }[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  listAnalyzers(): Promise<AnalyzerDescriptor[]> {
    return this.get<{ analyzers: AnalyzerDescriptor[] }>("/v1/analyzers").then(
      (body) => body.analyzers,
    );
  }

  submit(
    analyzerId: string,
    inputs: Record<string, string>,
    postprocessors: string[] = [],
  ): Promise<string> {
    return this.post<{ request_id: string }>("/v1/diagnose", {
      analyzer_id: analyzerId,
      inputs,
      postprocessors,
    }).then((body) => body.request_id);
  }

  peek(requestId: string): Promise<PeekResponse> {
    return this.get<PeekResponse>(`/v1/diagnose/${encodeURIComponent(requestId)}`);
  }

  alerts(): Promise<Alert[]> {
    return this.get<{ alerts: Alert[] }>("/v1/alerts").then((body) => body.alerts);
  }

  insights(startTs: number, endTs: number): Promise<InsightsReport> {
    return this.get<InsightsReport>(`/v1/insights?start=${startTs}&end=${endTs}`);
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.base + path).then((r) => asJson<T>(r));
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<T>(r));
  }
}
