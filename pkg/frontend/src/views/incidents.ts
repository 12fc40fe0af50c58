/**
 * Incident browser and detail view. The detail view carries the forensic
 * drill-down for admins: a "Show NetFlows" action per configured source
 * with an hour/day/week window selector.
 */

import { ApiError, LatestOnly } from "../api.js";
import type { FlowSearchPayload, IncidentDetailPayload } from "../api.js";
import { element, formatCell, renderTable } from "../tables.js";
import type { ViewContext } from "../app.js";

const PAGE_SIZE = 25;
const listRequests = new LatestOnly();

export function renderIncidentBrowser(container: HTMLElement,
                                      ctx: ViewContext): Promise<void> {
  const { doc, state } = ctx;
  container.appendChild(element(doc, "h2", undefined, "Incidents"));

  const controls = element(doc, "form", "filters");
  const host = textInput(doc, "host", state.filters.host);
  const type = textInput(doc, "type", state.filters.type);
  const since = textInput(doc, "since (ISO)", state.filters.since);
  const until = textInput(doc, "until (ISO)", state.filters.until);
  const apply = element(doc, "button", undefined, "Apply filters");
  apply.type = "submit";
  controls.append(host, type, since, until, apply);
  container.appendChild(controls);

  const status = element(doc, "div", "status");
  const error = element(doc, "div", "error");
  const tableHolder = element(doc, "div", "incident-table");
  const pager = element(doc, "div", "pager");
  container.append(status, error, tableHolder, pager);

  controls.addEventListener("submit", (event) => {
    event.preventDefault();
    state.filters = {
      host: host.value || undefined,
      type: type.value || undefined,
      since: since.value || undefined,
      until: until.value || undefined,
      offset: 0,
    };
    void load();
  });

  async function load(): Promise<void> {
    const seq = listRequests.stamp();
    error.textContent = "";
    try {
      const page = await ctx.api.incidents({
        ...state.filters,
        limit: PAGE_SIZE,
        offset: state.filters.offset ?? 0,
      });
      if (!listRequests.accept(seq)) return; // stale response, discard
      tableHolder.replaceChildren();
      pager.replaceChildren();
      status.textContent = `${page.total} incidents in store`;
      status.dataset.total = String(page.total);
      const table = renderTable(doc, {
        columns: [
          { name: "date", kind: "timestamp" },
          { name: "host", kind: "text" },
          { name: "type", kind: "text" },
          { name: "comments", kind: "text" },
        ],
        rows: page.items.map((i) => [i.date, i.host, i.type, i.comments]),
      }, (rowIndex) => {
        state.selectedIncident = page.items[rowIndex].incident_id;
        void ctx.enterView("incident-detail");
      });
      tableHolder.appendChild(table);

      const offset = state.filters.offset ?? 0;
      if (offset > 0) {
        const prev = element(doc, "button", undefined, "Previous");
        prev.addEventListener("click", () => {
          state.filters.offset = Math.max(0, offset - PAGE_SIZE);
          void load();
        });
        pager.appendChild(prev);
      }
      if (page.items.length === PAGE_SIZE) {
        const next = element(doc, "button", undefined, "Next");
        next.addEventListener("click", () => {
          state.filters.offset = offset + PAGE_SIZE;
          void load();
        });
        pager.appendChild(next);
      }
    } catch (err) {
      if (err instanceof ApiError) error.textContent = err.message;
      else throw err;
    }
  }

  return load();
}

export async function renderIncidentDetail(container: HTMLElement,
                                           ctx: ViewContext): Promise<void> {
  const { doc, state } = ctx;
  if (state.selectedIncident === null) {
    await ctx.enterView("incidents");
    return;
  }
  const error = element(doc, "div", "error");
  container.appendChild(error);
  let detail: IncidentDetailPayload;
  try {
    detail = await ctx.api.incident(state.selectedIncident);
  } catch (err) {
    if (err instanceof ApiError) {
      error.textContent = err.message;
      return;
    }
    throw err;
  }

  container.appendChild(
    element(doc, "h2", undefined, `Incident #${detail.incident_id}`));
  const back = element(doc, "button", "back", "Back to incidents");
  back.addEventListener("click", () => void ctx.enterView("incidents"));
  container.appendChild(back);

  const facts = element(doc, "dl", "facts");
  const pairs: [string, string][] = [
    ["Date", detail.date],
    ["Host", detail.host.name],
    ["Host IP", formatCell(detail.host.ip ?? null)],
    ["Type", `${detail.type.name} (${detail.type.description})`],
    ["Comments", detail.comments],
    ["Email date", detail.email.date],
    ["Email comments", detail.email.comments],
  ];
  if (detail.host.owner_name !== undefined) {
    pairs.push(["Owner", detail.host.owner_name]);
  }
  if (detail.host.owner_email !== undefined) {
    pairs.push(["Owner email", detail.host.owner_email]);
  }
  for (const [term, value] of pairs) {
    facts.appendChild(element(doc, "dt", undefined, term));
    facts.appendChild(element(doc, "dd", undefined, value));
  }
  container.appendChild(facts);

  if (detail.email.source !== undefined) {
    const details = element(doc, "details");
    details.appendChild(element(doc, "summary", undefined, "Raw alert message"));
    details.appendChild(element(doc, "pre", "email-source", detail.email.source));
    container.appendChild(details);
  }

  if (state.role === "admin") {
    await renderDrilldown(container, ctx, detail.incident_id);
  }
}

async function renderDrilldown(container: HTMLElement, ctx: ViewContext,
                               incidentId: number): Promise<void> {
  const { doc } = ctx;
  const box = element(doc, "div", "drilldown");
  box.appendChild(element(doc, "h3", undefined, "Raw flow correlation"));
  const error = element(doc, "div", "error");
  let sources;
  try {
    sources = await ctx.api.sources();
  } catch (err) {
    if (err instanceof ApiError) {
      error.textContent = err.message;
      box.appendChild(error);
      container.appendChild(box);
      return;
    }
    throw err;
  }
  if (sources.length === 0) {
    box.appendChild(element(doc, "p", "notice", "No log sources configured."));
    container.appendChild(box);
    return;
  }
  const sourceSelect = element(doc, "select", "source-select");
  for (const source of sources) {
    const option = element(doc, "option", undefined,
                           `${source.display_name} (${source.transport})`);
    option.value = source.source_id;
    sourceSelect.appendChild(option);
  }
  const windowSelect = element(doc, "select", "window-select");
  for (const kind of ["hour", "day", "week"] as const) {
    const option = element(doc, "option", undefined, kind);
    option.value = kind;
    windowSelect.appendChild(option);
  }
  const show = element(doc, "button", "show-netflows", "Show NetFlows");
  show.addEventListener("click", () => {
    void (async () => {
      error.textContent = "";
      try {
        ctx.state.lastFlows = await ctx.api.incidentFlows(
          incidentId, sourceSelect.value,
          windowSelect.value as "hour" | "day" | "week");
        await ctx.enterView("flows");
      } catch (err) {
        if (err instanceof ApiError) error.textContent = err.message;
        else throw err;
      }
    })();
  });
  box.append(sourceSelect, windowSelect, show, error);
  container.appendChild(box);
}

/** Flow results: one row per record with direction and port usage. */
export function renderFlows(container: HTMLElement, ctx: ViewContext): void {
  const { doc, state } = ctx;
  const flows: FlowSearchPayload | null = state.lastFlows;
  container.appendChild(element(doc, "h2", undefined, "Flow records"));
  const back = element(doc, "button", "back", "Back to incident");
  back.addEventListener("click", () => void ctx.enterView("incident-detail"));
  container.appendChild(back);
  if (flows === null) {
    container.appendChild(element(doc, "p", "notice", "No search yet."));
    return;
  }
  const summary = element(
    doc, "p", "status",
    `${flows.records.length} records for ${flows.ip} in [${flows.start}, ` +
    `${flows.end})` + (flows.from_cache ? " (cached)" : "") +
    (flows.truncated ? " (truncated)" : ""));
  container.appendChild(summary);
  const table = renderTable(doc, {
    columns: [
      { name: "start", kind: "integer" },
      { name: "direction", kind: "text" },
      { name: "src_ip", kind: "text" },
      { name: "src_port", kind: "integer" },
      { name: "dst_ip", kind: "text" },
      { name: "dst_port", kind: "integer" },
      { name: "proto", kind: "text" },
      { name: "packets", kind: "integer" },
      { name: "bytes", kind: "integer" },
      { name: "flags", kind: "text" },
    ],
    rows: flows.records.map((r) => [
      r.start,
      r.src_ip === flows.ip ? "outbound" : "inbound",
      r.src_ip, r.src_port, r.dst_ip, r.dst_port,
      r.protocol, r.packets, r.bytes, r.flags,
    ]),
  });
  table.classList.add("flow-table");
  container.appendChild(table);
}

function textInput(doc: Document, placeholder: string,
                   value?: string): HTMLInputElement {
  const input = doc.createElement("input");
  input.placeholder = placeholder;
  input.value = value ?? "";
  return input;
}
