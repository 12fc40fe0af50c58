/**
 * Console shell: navigation, role-gated routing, session expiry handling.
 */

import { ApiClient } from "./api.js";
import { SvgChartRenderer } from "./charts.js";
import type { ChartRenderer } from "./charts.js";
import {
  ViewName,
  ViewState,
  canEnter,
  initialState,
  navigableViews,
  onSessionExpired,
} from "./state.js";
import { element } from "./tables.js";
import { renderAdmin } from "./views/admin.js";
import {
  renderFlows,
  renderIncidentBrowser,
  renderIncidentDetail,
} from "./views/incidents.js";
import { renderLogin } from "./views/login.js";
import { renderReportBuilder } from "./views/reports.js";

export interface ViewContext {
  doc: Document;
  api: ApiClient;
  state: ViewState;
  renderer: ChartRenderer;
  enterView(view: ViewName): Promise<boolean>;
}

export class ConsoleApp implements ViewContext {
  readonly state: ViewState;
  readonly doc: Document;
  private nav: HTMLElement;
  private userBox: HTMLElement;
  private main: HTMLElement;

  constructor(
    root: HTMLElement,
    readonly api: ApiClient,
    readonly renderer: ChartRenderer = new SvgChartRenderer(),
  ) {
    this.doc = root.ownerDocument;
    this.state = initialState();
    this.api.onUnauthorized = () => {
      onSessionExpired(this.state);
      void this.renderCurrent();
    };
    root.replaceChildren();
    const header = element(this.doc, "header", "top-bar");
    header.appendChild(element(this.doc, "h1", "brand", "uclog console"));
    this.nav = element(this.doc, "nav", "main-nav");
    this.userBox = element(this.doc, "div", "user-box");
    header.append(this.nav, this.userBox);
    this.main = element(this.doc, "main", "view");
    root.append(header, this.main);
  }

  async start(): Promise<void> {
    await this.renderCurrent();
  }

  /**
   * Role gate: views outside the session's capabilities are refused with a
   * capability notice; the active view does not change.
   */
  async enterView(view: ViewName): Promise<boolean> {
    if (!canEnter(view, this.state.role)) {
      this.renderNotice(
        `This view requires capabilities your role does not grant (${view}).`);
      return false;
    }
    this.state.activeView = view;
    await this.renderCurrent();
    return true;
  }

  private renderNotice(message: string): void {
    const notice = element(this.doc, "div", "capability-notice", message);
    this.main.replaceChildren(notice);
  }

  private renderNav(): void {
    this.nav.replaceChildren();
    for (const view of navigableViews(this.state.role)) {
      const link = element(this.doc, "button", `nav-${view}`, view);
      link.addEventListener("click", () => void this.enterView(view));
      this.nav.appendChild(link);
    }
    this.userBox.replaceChildren();
    if (this.state.username !== null) {
      this.userBox.appendChild(element(
        this.doc, "span", "whoami",
        `${this.state.username} (${this.state.role})`));
      const logout = element(this.doc, "button", "logout", "Log out");
      logout.addEventListener("click", () => {
        void (async () => {
          try {
            await this.api.logout();
          } catch {
            // a dead session is as logged-out as it gets
          }
          onSessionExpired(this.state);
          this.state.pendingView = null;
          await this.renderCurrent();
        })();
      });
      this.userBox.appendChild(logout);
    }
  }

  private async renderCurrent(): Promise<void> {
    this.renderNav();
    this.main.replaceChildren();
    const view = this.state.activeView;
    if (view === "login") {
      renderLogin(this.main, this);
    } else if (view === "incidents") {
      await renderIncidentBrowser(this.main, this);
    } else if (view === "incident-detail") {
      await renderIncidentDetail(this.main, this);
    } else if (view === "reports") {
      await renderReportBuilder(this.main, this);
    } else if (view === "flows") {
      renderFlows(this.main, this);
    } else if (view === "admin") {
      await renderAdmin(this.main, this);
    }
  }
}

export function bootstrap(doc: Document): ConsoleApp | null {
  const root = doc.getElementById("app");
  if (root === null) return null;
  const app = new ConsoleApp(root, new ApiClient(""));
  void app.start();
  return app;
}

if (typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => bootstrap(document));
  } else {
    bootstrap(document);
  }
}
