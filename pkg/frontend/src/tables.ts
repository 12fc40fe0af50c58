/** Table rendering: payload cells go on screen verbatim, no recomputation. */

import type { TableData } from "./api.js";

export function formatCell(value: string | number | null): string {
  if (value === null || value === undefined) return "";
  return String(value);
}

export function renderTable(doc: Document, data: TableData,
                            onRowClick?: (rowIndex: number) => void): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "data-table";
  const thead = doc.createElement("thead");
  const headRow = doc.createElement("tr");
  for (const column of data.columns) {
    const th = doc.createElement("th");
    th.textContent = column.name;
    th.dataset.kind = column.kind;
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = doc.createElement("tbody");
  data.rows.forEach((row, index) => {
    const tr = doc.createElement("tr");
    if (onRowClick) {
      tr.className = "clickable";
      tr.addEventListener("click", () => onRowClick(index));
    }
    for (const value of row) {
      const td = doc.createElement("td");
      td.textContent = formatCell(value);
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  });
  table.appendChild(tbody);
  return table;
}

export function element<K extends keyof HTMLElementTagNameMap>(
  doc: Document, tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}
