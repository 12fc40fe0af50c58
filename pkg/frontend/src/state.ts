/**
 * Console view state and role gating. Views that need admin capabilities
 * are unreachable for normal-role sessions: the router consults canEnter()
 * before switching, so they are refused, not merely hidden.
 */

import type { FlowSearchPayload, IncidentFilters, ReportPayload } from "./api.js";

export type ViewName =
  | "login"
  | "incidents"
  | "incident-detail"
  | "reports"
  | "flows"
  | "admin";

export type Role = "admin" | "normal";

export interface ViewState {
  token: string | null;
  username: string | null;
  role: Role | null;
  activeView: ViewName;
  /** view to restore after a forced re-login */
  pendingView: ViewName | null;
  selectedIncident: number | null;
  filters: IncidentFilters;
  lastReport: ReportPayload | null;
  lastFlows: FlowSearchPayload | null;
}

export const ADMIN_VIEWS: ReadonlySet<ViewName> = new Set(["flows", "admin"]);

export function initialState(): ViewState {
  return {
    token: null,
    username: null,
    role: null,
    activeView: "login",
    pendingView: null,
    selectedIncident: null,
    filters: {},
    lastReport: null,
    lastFlows: null,
  };
}

export function canEnter(view: ViewName, role: Role | null): boolean {
  if (view === "login") return true;
  if (role === null) return false;
  if (ADMIN_VIEWS.has(view)) return role === "admin";
  return true;
}

/** Nav entries a session may use; admin affordances never render otherwise. */
export function navigableViews(role: Role | null): ViewName[] {
  const views: ViewName[] = ["incidents", "reports"];
  if (role === "admin") views.push("admin");
  return role === null ? [] : views;
}

/**
 * Session expiry: bounce to the login view but keep filters and the view
 * the user was on, so nothing entered is lost.
 */
export function onSessionExpired(state: ViewState): void {
  state.pendingView = state.activeView === "login" ? null : state.activeView;
  state.token = null;
  state.username = null;
  state.role = null;
  state.activeView = "login";
}

export function onLoggedIn(state: ViewState, token: string, username: string,
                           role: Role): ViewName {
  state.token = token;
  state.username = username;
  state.role = role;
  let target: ViewName = state.pendingView ?? "incidents";
  if (!canEnter(target, role)) target = "incidents";
  state.pendingView = null;
  return target;
}
