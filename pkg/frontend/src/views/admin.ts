/** Admin page: account management and the audit trail. */

import { ApiError } from "../api.js";
import { element, renderTable } from "../tables.js";
import type { ViewContext } from "../app.js";

export async function renderAdmin(container: HTMLElement,
                                  ctx: ViewContext): Promise<void> {
  const { doc } = ctx;
  container.appendChild(element(doc, "h2", undefined, "Administration"));
  const error = element(doc, "div", "error");
  container.appendChild(error);

  const usersBox = element(doc, "div", "users-box");
  usersBox.appendChild(element(doc, "h3", undefined, "Accounts"));
  const usersHolder = element(doc, "div");
  usersBox.appendChild(usersHolder);

  const form = element(doc, "form", "user-form");
  const username = doc.createElement("input");
  username.placeholder = "username";
  const password = doc.createElement("input");
  password.placeholder = "password";
  password.type = "password";
  const role = element(doc, "select");
  for (const value of ["normal", "admin"]) {
    const option = element(doc, "option", undefined, value);
    option.value = value;
    role.appendChild(option);
  }
  const add = element(doc, "button", undefined, "Add account");
  add.type = "submit";
  form.append(username, password, role, add);
  usersBox.appendChild(form);
  container.appendChild(usersBox);

  const auditBox = element(doc, "div", "audit-box");
  auditBox.appendChild(element(doc, "h3", undefined, "Audit trail"));
  const auditHolder = element(doc, "div");
  auditBox.appendChild(auditHolder);
  container.appendChild(auditBox);

  async function refresh(): Promise<void> {
    error.textContent = "";
    try {
      const users = await ctx.api.users();
      usersHolder.replaceChildren(renderTable(doc, {
        columns: [{ name: "username", kind: "text" },
                  { name: "role", kind: "text" }],
        rows: users.map((u) => [u.username, u.role]),
      }));
      const audit = await ctx.api.audit(50);
      auditHolder.replaceChildren(renderTable(doc, {
        columns: [
          { name: "timestamp", kind: "timestamp" },
          { name: "actor", kind: "text" },
          { name: "action", kind: "text" },
          { name: "entity", kind: "text" },
          { name: "detail", kind: "text" },
        ],
        rows: audit.map((e) => [e.timestamp, e.actor, e.action, e.entity,
                                e.detail]),
      }));
    } catch (err) {
      if (err instanceof ApiError) error.textContent = err.message;
      else throw err;
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      error.textContent = "";
      try {
        await ctx.api.createUser(username.value, password.value, role.value);
        username.value = "";
        password.value = "";
        await refresh();
      } catch (err) {
        if (err instanceof ApiError) error.textContent = err.message;
        else throw err;
      }
    })();
  });

  await refresh();
}
