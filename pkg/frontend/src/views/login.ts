import { ApiError } from "../api.js";
import { onLoggedIn } from "../state.js";
import { element } from "../tables.js";
import type { ViewContext } from "../app.js";

export function renderLogin(container: HTMLElement, ctx: ViewContext): void {
  const { doc, state } = ctx;
  const box = element(doc, "div", "login-box");
  box.appendChild(element(doc, "h2", undefined, "Sign in"));
  if (state.pendingView) {
    box.appendChild(element(doc, "p", "notice",
                            "Session expired; sign in to continue."));
  }
  const form = element(doc, "form", "login-form");
  const user = element(doc, "input");
  user.name = "username";
  user.placeholder = "username";
  const pass = element(doc, "input");
  pass.name = "password";
  pass.type = "password";
  pass.placeholder = "password";
  const submit = element(doc, "button", undefined, "Log in");
  submit.type = "submit";
  const error = element(doc, "div", "error");
  form.append(user, pass, submit, error);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      try {
        const session = await ctx.api.login(user.value, pass.value);
        const target = onLoggedIn(state, session.token, session.username,
                                  session.role);
        await ctx.enterView(target);
      } catch (err) {
        error.textContent = err instanceof ApiError ? err.message : String(err);
      }
    })();
  });
  box.appendChild(form);
  container.appendChild(box);
}
