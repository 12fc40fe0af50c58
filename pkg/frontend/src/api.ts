/**
 * Typed client for the service API. The console renders payload fields
 * verbatim and never aggregates on its own, so every number on screen is
 * traceable to a response that passed through this client (tests instrument
 * `onResponse` to assert exactly that).
 */

export interface ColumnSpec {
  name: string;
  kind: "text" | "integer" | "real" | "timestamp" | string;
}

export interface TableData {
  columns: ColumnSpec[];
  rows: (string | number | null)[][];
}

export type ChartKind = "bar" | "line" | "pie" | "histogram";

export interface ChartData {
  title: string;
  kind: ChartKind;
  x_labels: string[];
  values: number[];
}

export interface ReportPayload {
  name: string;
  table: TableData;
  chart: ChartData | null;
}

export interface ReportParamSpec {
  name: string;
  kind: string;
  required: boolean;
}

export interface CatalogEntry {
  name: string;
  title: string;
  params: ReportParamSpec[];
}

export interface IncidentSummary {
  incident_id: number;
  date: string;
  host: string;
  ip: string | null;
  type: string;
  email_id: number;
  comments: string;
}

export interface IncidentListPayload {
  items: IncidentSummary[];
  total: number;
}

export interface IncidentDetailPayload {
  incident_id: number;
  date: string;
  comments: string;
  host: { name: string; ip?: string | null; owner_name?: string; owner_email?: string };
  type: { name: string; description: string };
  email: { email_id: number; date: string; comments: string; source?: string };
}

export interface FlowRecordPayload {
  start: number;
  duration: number;
  protocol: string;
  src_ip: string;
  src_port: number;
  dst_ip: string;
  dst_port: number;
  packets: number;
  bytes: number;
  flags: string;
}

export interface FlowSearchPayload {
  source_id: string;
  ip: string;
  port: number | null;
  start: string;
  end: string;
  records: FlowRecordPayload[];
  truncated: boolean;
  from_cache: boolean;
  parse_errors: number;
  fetched_at: string;
}

export interface SourcePayload {
  source_id: string;
  display_name: string;
  transport: string;
}

export interface SessionPayload {
  token: string;
  username: string;
  role: "admin" | "normal";
  expires_at: string;
}

export interface UserPayload {
  username: string;
  role: string;
}

export interface AuditEntryPayload {
  timestamp: string;
  actor: string;
  action: string;
  entity: string;
  detail: string;
}

export type IncidentFilters = Partial<{
  host: string;
  type: string;
  since: string;
  until: string;
  limit: number;
  offset: number;
}>;

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export class UnauthorizedError extends ApiError {
  constructor(detail: string) {
    super(401, detail);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  token: string | null = null;
  /** Invoked once per 401 so the app can bounce to login. */
  onUnauthorized: (() => void) | null = null;
  /** Test hook: observes every (path, payload) this client returns. */
  onResponse: ((path: string, payload: unknown) => void) | null = null;

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(): Record<string, string> {
    const out: Record<string, string> = {};
    if (this.token) out["Authorization"] = `Bearer ${this.token}`;
    return out;
  }

  private async raw(method: string, path: string, body?: unknown,
                    contentType?: string): Promise<Response> {
    const init: RequestInit = { method, headers: this.headers() };
    if (body !== undefined) {
      if (contentType === "text/plain") {
        (init.headers as Record<string, string>)["Content-Type"] = "text/plain";
        init.body = String(body);
      } else {
        (init.headers as Record<string, string>)["Content-Type"] = "application/json";
        init.body = JSON.stringify(body);
      }
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (resp.status === 401) {
      if (this.onUnauthorized) this.onUnauthorized();
      throw new UnauthorizedError(await safeDetail(resp));
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await safeDetail(resp));
    }
    return resp;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.raw(method, path, body);
    const payload = (await resp.json()) as T;
    if (this.onResponse) this.onResponse(path, payload);
    return payload;
  }

  async login(username: string, password: string): Promise<SessionPayload> {
    const session = await this.request<SessionPayload>(
      "POST", "/api/login", { username, password });
    this.token = session.token;
    return session;
  }

  async logout(): Promise<void> {
    try {
      await this.raw("POST", "/api/logout");
    } finally {
      this.token = null;
    }
  }

  incidents(filters: IncidentFilters = {}): Promise<IncidentListPayload> {
    return this.request("GET", "/api/incidents" + queryString(filters));
  }

  incident(id: number): Promise<IncidentDetailPayload> {
    return this.request("GET", `/api/incidents/${id}`);
  }

  reportCatalog(): Promise<CatalogEntry[]> {
    return this.request("GET", "/api/reports");
  }

  report(name: string, params: Record<string, string> = {}): Promise<ReportPayload> {
    return this.request("GET", `/api/reports/${name}` + queryString(params));
  }

  reportTsvUrl(name: string, params: Record<string, string> = {}): string {
    return this.baseUrl + `/api/reports/${name}.tsv` + queryString(params);
  }

  async reportTsv(name: string, params: Record<string, string> = {}): Promise<string> {
    const resp = await this.raw("GET", `/api/reports/${name}.tsv` + queryString(params));
    return resp.text();
  }

  query(sql: string): Promise<ReportPayload> {
    return this.request("POST", "/api/query", { sql });
  }

  incidentFlows(id: number, source: string,
                window: "hour" | "day" | "week"): Promise<FlowSearchPayload> {
    return this.request(
      "GET", `/api/incidents/${id}/flows` + queryString({ source, window }));
  }

  sources(): Promise<SourcePayload[]> {
    return this.request("GET", "/api/sources");
  }

  users(): Promise<UserPayload[]> {
    return this.request("GET", "/api/users");
  }

  createUser(username: string, password: string, role: string): Promise<UserPayload> {
    return this.request("POST", "/api/users", { username, password, role });
  }

  audit(limit = 100): Promise<AuditEntryPayload[]> {
    return this.request("GET", "/api/audit" + queryString({ limit }));
  }

  async ingestAlert(raw: string): Promise<{ incident_id: number; deduplicated: boolean }> {
    const resp = await this.raw("POST", "/api/alerts", raw, "text/plain");
    return (await resp.json()) as { incident_id: number; deduplicated: boolean };
  }
}

function queryString(params: Record<string, unknown>): string {
  const pairs: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value === undefined || value === null || value === "") continue;
    pairs.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
  }
  return pairs.length ? `?${pairs.join("&")}` : "";
}

async function safeDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    return body.detail ?? `HTTP ${resp.status}`;
  } catch {
    return `HTTP ${resp.status}`;
  }
}

/**
 * Discards stale responses: each in-flight request family stamps a sequence
 * number and only the most recent one is accepted on arrival.
 */
export class LatestOnly {
  private latest = 0;

  stamp(): number {
    return ++this.latest;
  }

  accept(seq: number): boolean {
    return seq === this.latest;
  }
}
