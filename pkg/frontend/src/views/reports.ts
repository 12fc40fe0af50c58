/**
 * Report builder: catalog-driven parameters, tabular/graphical toggle, TSV
 * download, and (admins only) the free-form query box.
 */

import { ApiError, LatestOnly } from "../api.js";
import type { CatalogEntry, ReportPayload } from "../api.js";
import { element, renderTable } from "../tables.js";
import type { ViewContext } from "../app.js";

const reportRequests = new LatestOnly();

export async function renderReportBuilder(container: HTMLElement,
                                          ctx: ViewContext): Promise<void> {
  const { doc, state } = ctx;
  container.appendChild(element(doc, "h2", undefined, "Reports"));
  const error = element(doc, "div", "error");

  let catalog: CatalogEntry[];
  try {
    catalog = await ctx.api.reportCatalog();
  } catch (err) {
    if (err instanceof ApiError) {
      error.textContent = err.message;
      container.appendChild(error);
      return;
    }
    throw err;
  }

  const picker = element(doc, "form", "report-picker");
  const select = element(doc, "select", "report-select");
  for (const entry of catalog) {
    const option = element(doc, "option", undefined,
                           `${entry.title} (${entry.name})`);
    option.value = entry.name;
    select.appendChild(option);
  }
  const paramBox = element(doc, "span", "report-params");
  const run = element(doc, "button", undefined, "Run report");
  run.type = "submit";
  picker.append(select, paramBox, run);
  container.append(picker, error);

  const output = element(doc, "div", "report-output");
  container.appendChild(output);

  function paramInputs(): void {
    paramBox.replaceChildren();
    const entry = catalog.find((e) => e.name === select.value);
    for (const param of entry?.params ?? []) {
      const input = doc.createElement("input");
      input.placeholder = param.required ? `${param.name} (required)` : param.name;
      input.dataset.param = param.name;
      paramBox.appendChild(input);
    }
  }
  select.addEventListener("change", paramInputs);
  paramInputs();

  picker.addEventListener("submit", (event) => {
    event.preventDefault();
    const params: Record<string, string> = {};
    for (const input of Array.from(paramBox.querySelectorAll("input"))) {
      if (input.value) params[input.dataset.param as string] = input.value;
    }
    const seq = reportRequests.stamp();
    void (async () => {
      error.textContent = "";
      try {
        const payload = await ctx.api.report(select.value, params);
        if (!reportRequests.accept(seq)) return; // stale, discard
        state.lastReport = payload;
        showReport(output, ctx, payload, params);
      } catch (err) {
        if (err instanceof ApiError) error.textContent = err.message;
        else throw err;
      }
    })();
  });

  if (state.lastReport !== null) {
    showReport(output, ctx, state.lastReport, {});
  }

  if (state.role === "admin") {
    renderQueryBox(container, ctx);
  }
}

function showReport(output: HTMLElement, ctx: ViewContext,
                    payload: ReportPayload,
                    params: Record<string, string>): void {
  const { doc } = ctx;
  output.replaceChildren();

  const bar = element(doc, "div", "report-actions");
  const tableButton = element(doc, "button", "toggle-table", "Table");
  const chartButton = element(doc, "button", "toggle-chart", "Chart");
  chartButton.disabled = payload.chart === null;
  const download = element(doc, "button", "download-tsv", "Download TSV");
  download.dataset.report = payload.name;
  bar.append(tableButton, chartButton, download);
  output.appendChild(bar);

  const tablePane = element(doc, "div", "pane-table");
  tablePane.appendChild(renderTable(doc, payload.table));
  const chartPane = element(doc, "div", "pane-chart");
  chartPane.style.display = "none";
  if (payload.chart !== null) {
    chartPane.appendChild(ctx.renderer.render(doc, payload.chart));
  }
  output.append(tablePane, chartPane);

  tableButton.addEventListener("click", () => {
    tablePane.style.display = "";
    chartPane.style.display = "none";
  });
  chartButton.addEventListener("click", () => {
    tablePane.style.display = "none";
    chartPane.style.display = "";
  });
  download.addEventListener("click", () => {
    void (async () => {
      const text = await ctx.api.reportTsv(payload.name, params);
      saveTextFile(ctx.doc, `${payload.name}.tsv`, text);
    })();
  });
}

function renderQueryBox(container: HTMLElement, ctx: ViewContext): void {
  const { doc } = ctx;
  const box = element(doc, "div", "query-box");
  box.appendChild(element(doc, "h3", undefined, "Free-form query"));
  const form = element(doc, "form");
  const sql = element(doc, "textarea", "sql-input");
  sql.placeholder = "SELECT ... (read-only, single statement)";
  const run = element(doc, "button", undefined, "Run query");
  run.type = "submit";
  const error = element(doc, "div", "error");
  const result = element(doc, "div", "query-result");
  form.append(sql, run);
  box.append(form, error, result);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      error.textContent = "";
      try {
        const payload = await ctx.api.query(sql.value);
        result.replaceChildren(renderTable(doc, payload.table));
      } catch (err) {
        // rejected/failed queries surface verbatim
        if (err instanceof ApiError) error.textContent = err.message;
        else throw err;
      }
    })();
  });
  container.appendChild(box);
}

function saveTextFile(doc: Document, filename: string, text: string): void {
  const win = doc.defaultView;
  if (!win || typeof win.URL?.createObjectURL !== "function") return;
  const blob = new Blob([text], { type: "text/tab-separated-values" });
  const url = win.URL.createObjectURL(blob);
  const link = doc.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  win.URL.revokeObjectURL(url);
}
