/** DOM behavior of the console shell and views (stubbed API). */

import { beforeEach, describe, expect, it } from "vitest";

import {
  DETAIL_ADMIN,
  FLOWS,
  INCIDENTS,
  REPORT,
  appWith,
  jsonResponse,
  loginAs,
  settle,
  standardRoutes,
} from "./helpers.js";

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("incident browser", () => {
  it("renders payload rows and total verbatim (no own aggregation)", async () => {
    const { app, api, root } = await appWith(standardRoutes());
    const payloads: unknown[] = [];
    api.onResponse = (_path, payload) => payloads.push(payload);
    await loginAs(app, root, "alice");
    const status = root.querySelector<HTMLElement>(".status")!;
    expect(status.dataset.total).toBe(String(INCIDENTS.total));
    const cells = Array.from(
      root.querySelectorAll(".incident-table tbody td"))
      .map((td) => td.textContent);
    for (const item of INCIDENTS.items) {
      expect(cells).toContain(item.date);
      expect(cells).toContain(item.host);
      expect(cells).toContain(item.comments);
    }
    // every rendered cell string exists somewhere in a payload this client saw
    const payloadText = JSON.stringify(payloads);
    for (const cell of cells) {
      expect(cell === "" || payloadText.includes(cell as string)).toBe(true);
    }
  });

  it("row click opens the detail view", async () => {
    const routes = standardRoutes();
    routes["GET /api/incidents/1"] = {
      ...DETAIL_ADMIN, incident_id: 1,
    };
    const { app, root } = await appWith(routes);
    await loginAs(app, root, "alice");
    root.querySelector<HTMLTableRowElement>(".incident-table tbody tr")!
      .click();
    await settle();
    expect(root.querySelector("h2")!.textContent).toBe("Incident #1");
  });

  it("filter submit preserves entered filters in state", async () => {
    const { app, root } = await appWith(standardRoutes());
    await loginAs(app, root, "alice");
    const inputs = root.querySelectorAll<HTMLInputElement>(".filters input");
    inputs[0].value = "w.x.y.z";
    root.querySelector<HTMLFormElement>(".filters")!
      .dispatchEvent(new Event("submit", { cancelable: true }));
    await settle();
    expect(app.state.filters.host).toBe("w.x.y.z");
  });
});

describe("role gating", () => {
  it("normal sessions see no admin affordances in the DOM", async () => {
    const { app, root } = await appWith(standardRoutes());
    await loginAs(app, root, "alice");
    expect(root.querySelector(".nav-admin")).toBeNull();
    // detail view: no NetFlows action
    app.state.selectedIncident = 3;
    await app.enterView("incident-detail");
    await settle();
    expect(root.querySelector(".show-netflows")).toBeNull();
    expect(root.querySelector(".drilldown")).toBeNull();
    // report builder: no free-form query box
    await app.enterView("reports");
    await settle();
    expect(root.querySelector(".query-box")).toBeNull();
  });

  it("admin views are refused, not hidden, for normal sessions", async () => {
    const { app, root } = await appWith(standardRoutes());
    await loginAs(app, root, "alice");
    const before = app.state.activeView;
    const entered = await app.enterView("admin");
    expect(entered).toBe(false);
    expect(app.state.activeView).toBe(before);
    expect(root.querySelector(".capability-notice")).not.toBeNull();
  });

  it("admin sessions get the drill-down and query box", async () => {
    const routes = standardRoutes();
    routes["GET /api/incidents/3"] = DETAIL_ADMIN;
    const { app, root } = await appWith(routes);
    await loginAs(app, root, "root");
    expect(root.querySelector(".nav-admin")).not.toBeNull();
    app.state.selectedIncident = 3;
    await app.enterView("incident-detail");
    await settle();
    expect(root.querySelector(".show-netflows")).not.toBeNull();
    expect(root.textContent).toContain("Raw alert message");
    await app.enterView("reports");
    await settle();
    expect(root.querySelector(".query-box")).not.toBeNull();
  });
});

describe("flows drill-down", () => {
  it("renders returned records with direction and port columns", async () => {
    const routes = standardRoutes();
    routes["GET /api/incidents/3"] = DETAIL_ADMIN;
    routes["GET /api/incidents/3/flows"] = FLOWS;
    const { app, root } = await appWith(routes);
    await loginAs(app, root, "root");
    app.state.selectedIncident = 3;
    await app.enterView("incident-detail");
    await settle();
    root.querySelector<HTMLButtonElement>(".show-netflows")!.click();
    await settle();
    expect(app.state.activeView).toBe("flows");
    const header = Array.from(root.querySelectorAll(".flow-table th"))
      .map((th) => th.textContent);
    expect(header).toContain("direction");
    expect(header).toContain("src_port");
    expect(header).toContain("dst_port");
    const rows = root.querySelectorAll(".flow-table tbody tr");
    expect(rows).toHaveLength(3);
    const directions = Array.from(rows).map((r) => r.children[1].textContent);
    expect(directions).toEqual(["outbound", "outbound", "inbound"]);
  });
});

describe("report builder", () => {
  it("toggles between table and chart renderings of one payload", async () => {
    const { app, root } = await appWith(standardRoutes());
    await loginAs(app, root, "root");
    await app.enterView("reports");
    await settle();
    root.querySelector<HTMLFormElement>(".report-picker")!
      .dispatchEvent(new Event("submit", { cancelable: true }));
    await settle();
    const tablePane = root.querySelector<HTMLElement>(".pane-table")!;
    const chartPane = root.querySelector<HTMLElement>(".pane-chart")!;
    expect(tablePane.style.display).toBe("");
    expect(chartPane.style.display).toBe("none");
    expect(chartPane.querySelector("svg")).not.toBeNull();
    root.querySelector<HTMLButtonElement>(".toggle-chart")!.click();
    expect(chartPane.style.display).toBe("");
    expect(tablePane.style.display).toBe("none");
    // table cells come straight from the payload
    const cells = Array.from(root.querySelectorAll(".pane-table td"))
      .map((td) => td.textContent);
    expect(cells).toContain(String(REPORT.table.rows[0][2]));
  });

  it("query errors render verbatim", async () => {
    const routes = standardRoutes();
    routes["POST /api/query"] = () =>
      jsonResponse({ detail: "forbidden keyword: delete" }, 422);
    const { app, root } = await appWith(routes);
    await loginAs(app, root, "root");
    await app.enterView("reports");
    await settle();
    const sql = root.querySelector<HTMLTextAreaElement>(".sql-input")!;
    sql.value = "delete from incidents";
    sql.closest("form")!.dispatchEvent(new Event("submit", { cancelable: true }));
    await settle();
    expect(root.querySelector(".query-box .error")!.textContent)
      .toBe("forbidden keyword: delete");
  });
});

describe("session expiry", () => {
  it("bounces to login, keeps filters, and restores the view after re-login", async () => {
    const routes = standardRoutes();
    let expired = false;
    routes["GET /api/incidents"] = () =>
      expired ? jsonResponse({ detail: "expired" }, 401)
              : jsonResponse(INCIDENTS);
    const { app, root } = await appWith(routes);
    await loginAs(app, root, "alice");
    app.state.filters = { host: "w.x.y.z" };
    expired = true;
    await app.enterView("incidents"); // triggers the 401
    await settle();
    expect(app.state.activeView).toBe("login");
    expect(app.state.filters.host).toBe("w.x.y.z");
    expect(root.querySelector(".login-form")).not.toBeNull();
    expired = false;
    await loginAs(app, root, "alice");
    expect(app.state.activeView).toBe("incidents");
    expect(app.state.filters.host).toBe("w.x.y.z");
  });
});

describe("stale responses", () => {
  it("a slow earlier incident load never overwrites a newer one", async () => {
    const routes = standardRoutes();
    let release: (() => void) | null = null;
    let calls = 0;
    routes["GET /api/incidents"] = () => {
      calls++;
      if (calls === 2) {
        // second load: a stale response we hold back, then release later
        return new Promise<Response>((resolve) => {
          release = () => resolve(jsonResponse(
            { items: [], total: 999 }));
        }) as unknown as Response;
      }
      return jsonResponse(INCIDENTS);
    };
    const { app, root } = await appWith(routes);
    await loginAs(app, root, "alice");
    // fire a second load (will hang) then a third (completes with INCIDENTS)
    const form = root.querySelector<HTMLFormElement>(".filters")!;
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await settle();
    release!();
    await settle();
    const status = root.querySelector<HTMLElement>(".status")!;
    expect(status.dataset.total).toBe(String(INCIDENTS.total)); // not 999
  });
});
