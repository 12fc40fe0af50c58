/** Shared fakes: a routable fetch stub and canned payloads. */

import { ApiClient } from "../src/api.js";
import { ConsoleApp } from "../src/app.js";
import type {
  FlowSearchPayload,
  IncidentDetailPayload,
  IncidentListPayload,
  ReportPayload,
} from "../src/api.js";

export type RouteTable = Record<string, unknown | ((init?: RequestInit) => unknown)>;

export interface FakeFetch {
  fetch: (input: string, init?: RequestInit) => Promise<Response>;
  calls: string[];
}

/** Keys are "METHOD path" with the query string included when it matters. */
export function fakeFetch(routes: RouteTable): FakeFetch {
  const calls: string[] = [];
  return {
    calls,
    fetch: async (input: string, init?: RequestInit): Promise<Response> => {
      const method = init?.method ?? "GET";
      const key = `${method} ${input}`;
      calls.push(key);
      const short = `${method} ${input.split("?")[0]}`;
      const handler = key in routes ? routes[key]
        : short in routes ? routes[short] : undefined;
      if (handler === undefined) {
        return jsonResponse({ detail: `no such route: ${key}` }, 404);
      }
      const value = typeof handler === "function"
        ? (handler as (init?: RequestInit) => unknown)(init) : handler;
      if (value instanceof Response) return value;
      return jsonResponse(value);
    },
  };
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function textResponse(payload: string, status = 200): Response {
  return new Response(payload, { status });
}

export const SESSIONS = {
  admin: { token: "tok-admin", username: "root", role: "admin",
           expires_at: "2004-03-10T13:00:00Z" },
  normal: { token: "tok-normal", username: "alice", role: "normal",
            expires_at: "2004-03-10T13:00:00Z" },
};

export const INCIDENTS: IncidentListPayload = {
  total: 3,
  items: [
    { incident_id: 1, date: "2004-03-01T10:00:00Z", host: "w.x.y.z",
      ip: "10.0.0.5", type: "scan", email_id: 1, comments: "first scan seen" },
    { incident_id: 2, date: "2004-03-02T11:30:00Z", host: "db01.core.campus.net",
      ip: "10.0.0.6", type: "dos", email_id: 1, comments: "flood" },
    { incident_id: 3, date: "2004-03-03T12:00:00Z", host: "attacker.ext.example.net",
      ip: "198.51.100.9", type: "scan", email_id: 1, comments: "outbound sweep" },
  ],
};

export const DETAIL_ADMIN: IncidentDetailPayload = {
  incident_id: 3,
  date: "2004-03-03T12:00:00Z",
  comments: "outbound sweep",
  host: { name: "attacker.ext.example.net", ip: "198.51.100.9",
          owner_name: "Pat Operator", owner_email: "pat@ops.example.net" },
  type: { name: "scan", description: "port scan" },
  email: { email_id: 1, date: "2004-03-03", comments: "alert",
           source: "HOST: attacker.ext.example.net\nTYPE: scan\n" },
};

export const DETAIL_NORMAL: IncidentDetailPayload = {
  incident_id: 3,
  date: "2004-03-03T12:00:00Z",
  comments: "outbound sweep",
  host: { name: "attacker.ext.example.net", ip: "198.51.100.9" },
  type: { name: "scan", description: "port scan" },
  email: { email_id: 1, date: "2004-03-03", comments: "alert" },
};

export const FLOWS: FlowSearchPayload = {
  source_id: "netflow",
  ip: "198.51.100.9",
  port: null,
  start: "2004-03-03T11:30:00Z",
  end: "2004-03-03T12:30:00Z",
  records: [
    { start: 1078312200, duration: 1.5, protocol: "tcp",
      src_ip: "198.51.100.9", src_port: 40000, dst_ip: "10.0.0.20",
      dst_port: 22, packets: 10, bytes: 1200, flags: "S" },
    { start: 1078312500, duration: 1.5, protocol: "tcp",
      src_ip: "198.51.100.9", src_port: 40001, dst_ip: "10.0.0.21",
      dst_port: 22, packets: 10, bytes: 1200, flags: "S" },
    { start: 1078312800, duration: 1.5, protocol: "tcp",
      src_ip: "10.0.0.22", src_port: 22, dst_ip: "198.51.100.9",
      dst_port: 40002, packets: 10, bytes: 1200, flags: "SA" },
  ],
  truncated: false,
  from_cache: false,
  parse_errors: 0,
  fetched_at: "2004-03-10T12:00:00Z",
};

export const REPORT: ReportPayload = {
  name: "frequent_types",
  table: {
    columns: [
      { name: "type", kind: "text" },
      { name: "count", kind: "integer" },
      { name: "pct", kind: "real" },
    ],
    rows: [["dos", 1, 33.33333333333333], ["scan", 2, 66.66666666666666]],
  },
  chart: {
    title: "Incident type frequency",
    kind: "pie",
    x_labels: ["dos", "scan"],
    values: [33.33333333333333, 66.66666666666666],
  },
};

export const CATALOG = [
  { name: "frequent_types", title: "Incident type frequency", params: [] },
  { name: "host_history", title: "Incident history for one host",
    params: [{ name: "host", kind: "str", required: true }] },
];

export function standardRoutes(): RouteTable {
  return {
    "POST /api/login": (init?: RequestInit) => {
      const body = JSON.parse(String(init?.body)) as { username: string };
      return SESSIONS[body.username === "root" ? "admin" : "normal"];
    },
    "POST /api/logout": { ok: true },
    "GET /api/incidents": INCIDENTS,
    "GET /api/incidents/3": DETAIL_NORMAL,
    "GET /api/reports": CATALOG,
    "GET /api/reports/frequent_types": REPORT,
    "GET /api/sources": [{ source_id: "netflow",
                           display_name: "Campus NetFlow",
                           transport: "remote" }],
  };
}

export async function appWith(routes: RouteTable): Promise<{
  app: ConsoleApp; api: ApiClient; root: HTMLElement; calls: string[];
}> {
  const fake = fakeFetch(routes);
  const api = new ApiClient("", fake.fetch);
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new ConsoleApp(root, api);
  await app.start();
  return { app, api, root, calls: fake.calls };
}

export async function loginAs(app: ConsoleApp, root: HTMLElement,
                              username: string): Promise<void> {
  const inputs = root.querySelectorAll<HTMLInputElement>(".login-form input");
  inputs[0].value = username;
  inputs[1].value = "pw";
  root.querySelector<HTMLFormElement>(".login-form")!
    .dispatchEvent(new Event("submit", { cancelable: true }));
  await settle();
}

/** Let queued promise callbacks run. */
export async function settle(rounds = 12): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await Promise.resolve();
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}
