"""HTTP API over the core package: ingestion, incident browsing, reports,
custom queries, flow drill-down, and administration.

Bearer-token sessions guard every route except login; the capability matrix
in :mod:`uclog.auth` decides 403s. Normal-role responses never contain raw
email source or host owner contact fields. All timestamps are ISO-8601 UTC.
The service speaks plain HTTP; channel security terminates outside it.
"""

import os
from dataclasses import dataclass

from fastapi import Depends, FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import schemas
from .auth import Authenticator, Session, SessionManager, authorize
from .config import AppConfig
from .errors import (
    AuthFailed,
    ConstraintViolation,
    Forbidden,
    InjectionRejected,
    NoIncidents,
    ParseError,
    QueryError,
    QueryRejected,
    ReferentialIntegrity,
    ReportParamError,
    SenderRejected,
    TransportError,
    UCLogError,
    UnknownHost,
    UnknownIncident,
    UnknownReport,
    UnknownSource,
    UnknownType,
    UnresolvedHost,
)
from .flows import FlowCorrelator
from .ingest import AlertIngestor, AllowListValidator, parse_alert_email
from .reports import (
    REPORT_CATALOG,
    QueryEngine,
    ReportTable,
    export_tsv,
    run_report,
)
from .store import IncidentStore
from .timeutil import iso_utc, utcnow

_ERROR_STATUS = (
    (AuthFailed, 401),
    (Forbidden, 403),
    ((UnknownIncident, UnknownType, UnknownHost, UnknownSource, UnknownReport,
      NoIncidents), 404),
    ((QueryRejected, QueryError, ParseError, ConstraintViolation,
      ReferentialIntegrity, SenderRejected, InjectionRejected, UnresolvedHost,
      ReportParamError), 422),
    (TransportError, 502),
)


@dataclass
class AppState:
    store: IncidentStore
    engine: QueryEngine
    ingestor: AlertIngestor
    correlator: FlowCorrelator
    sessions: SessionManager
    authenticator: Authenticator
    config: AppConfig
    clock: object = utcnow


def build_state(config: AppConfig, clock=utcnow, store: IncidentStore | None = None
                ) -> AppState:
    store = store or IncidentStore(config.store_path)
    sessions = SessionManager(ttl_secs=config.session_ttl_secs, clock=clock)
    return AppState(
        store=store,
        engine=QueryEngine(store),
        ingestor=AlertIngestor(
            store, sender_validator=AllowListValidator(config.allowed_senders)),
        correlator=FlowCorrelator(
            config.sources, config.cache_dir, store=store, clock=clock,
            max_parallel_per_source=config.max_parallel_per_source),
        sessions=sessions,
        authenticator=Authenticator(store, sessions),
        config=config,
        clock=clock,
    )


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="uclog", version="0.1.0",
                  description="Security data management service")
    app.state.uclog = state

    def _status_for(exc: UCLogError) -> int:
        for types, status in _ERROR_STATUS:
            if isinstance(exc, types):
                return status
        return 500

    @app.exception_handler(UCLogError)
    async def domain_error_handler(request: Request, exc: UCLogError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"detail": str(exc)})

    def current_session(request: Request) -> Session:
        header = request.headers.get("Authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise AuthFailed("missing bearer token")
        session = state.sessions.get(token.strip())
        if session is None:
            raise AuthFailed("invalid or expired session")
        return session

    def require(capability: str):
        def dependency(session: Session = Depends(current_session)) -> Session:
            if not authorize(session.role, capability,
                             strict_binary=state.config.strict_binary):
                raise Forbidden(f"capability not granted: {capability}")
            return session
        return dependency

    # -- auth ------------------------------------------------------------

    @app.post("/api/login", response_model=schemas.LoginResponse)
    def login(body: schemas.LoginRequest):
        session = state.authenticator.authenticate(body.username, body.password)
        return schemas.LoginResponse(
            token=session.token, username=session.username, role=session.role,
            expires_at=iso_utc(session.expires_at))

    @app.post("/api/logout")
    def logout(session: Session = Depends(current_session)):
        state.sessions.revoke(session.token)
        return {"ok": True}

    # -- incidents ---------------------------------------------------------

    @app.get("/api/incidents", response_model=schemas.IncidentListResponse)
    def list_incidents(
        host: str | None = None,
        type: str | None = None,
        since: str | None = None,
        until: str | None = None,
        limit: int | None = None,
        offset: int = 0,
        session: Session = Depends(require("view_incidents")),
    ):
        rows = state.store.get_incidents(host=host, type_name=type,
                                         since=since, until=until,
                                         limit=limit, offset=offset)
        total = state.store.incident_count()
        items = [schemas.IncidentSummary(
            incident_id=r.incident_id, date=r.date, host=r.host, ip=r.ip,
            type=r.type, email_id=r.email_id, comments=r.comments)
            for r in rows]
        return schemas.IncidentListResponse(items=items, total=total)

    @app.get("/api/incidents/{incident_id}/flows",
             response_model=schemas.FlowSearchResponse)
    def incident_flows(
        incident_id: int,
        source: str,
        window: str = "hour",
        session: Session = Depends(require("view_flows")),
    ):
        if window not in ("hour", "day", "week"):
            raise ReportParamError("window must be hour, day, or week")
        result = state.correlator.correlate_incident_flows(
            incident_id, source, window, actor=session.username)
        return _flow_response(result)

    @app.get("/api/incidents/{incident_id}")
    def incident_detail(
        incident_id: int,
        session: Session = Depends(require("view_incidents")),
    ):
        incident = state.store.get_incident(incident_id)
        if incident is None:
            raise UnknownIncident(f"no such incident: {incident_id}")
        host = state.store.get_host(incident.host_id)
        itype = state.store.get_type(incident.type_id)
        mail = state.store.get_email(incident.email_id)
        is_admin = authorize(session.role, "view_raw_email",
                             strict_binary=state.config.strict_binary)
        host_info = schemas.HostInfo(name=host.name, ip=host.ip)
        if authorize(session.role, "view_owner_contact",
                     strict_binary=state.config.strict_binary):
            host_info.owner_name = host.owner_name
            host_info.owner_email = host.owner_email
        email_info = schemas.EmailInfo(
            email_id=mail.email_id, date=mail.date.isoformat(),
            comments=mail.comments)
        if is_admin:
            email_info.source = mail.source
        detail = schemas.IncidentDetail(
            incident_id=incident.incident_id, date=incident.date,
            comments=incident.comments, host=host_info,
            type=schemas.TypeInfo(name=itype.name, description=itype.description),
            email=email_info)
        # exclude_unset keeps privileged fields absent (not null) for
        # normal-role sessions.
        return JSONResponse(detail.model_dump(exclude_unset=False,
                                              exclude_none=True))

    # -- reports ------------------------------------------------------------

    @app.get("/api/reports", response_model=list[schemas.ReportCatalogEntry])
    def report_catalog(session: Session = Depends(require("view_reports"))):
        return [
            schemas.ReportCatalogEntry(
                name=spec.name, title=spec.title,
                params=[schemas.ReportParam(name=p.name, kind=p.kind,
                                            required=p.required)
                        for p in spec.params])
            for spec in REPORT_CATALOG.values()
        ]

    def _report_params(request: Request) -> dict[str, str]:
        return {k: v for k, v in request.query_params.items()}

    @app.get("/api/reports/{name}.tsv", response_class=PlainTextResponse)
    def report_tsv(name: str, request: Request,
                   session: Session = Depends(require("export_tsv"))):
        table, _ = run_report(state.engine, name, _report_params(request),
                              now=state.clock())
        return PlainTextResponse(export_tsv(table),
                                 media_type="text/tab-separated-values")

    @app.get("/api/reports/{name}", response_model=schemas.ReportResponse)
    def report(name: str, request: Request,
               session: Session = Depends(require("view_reports"))):
        table, chart = run_report(state.engine, name, _report_params(request),
                                  now=state.clock())
        return _report_response(name, table, chart)

    # -- custom queries -------------------------------------------------------

    @app.post("/api/query", response_model=schemas.ReportResponse)
    def custom_query(body: schemas.QueryRequest,
                     session: Session = Depends(require("run_custom_query"))):
        table = state.engine.run_custom_query(body.sql, role=session.role)
        return _report_response("custom", table, None)

    # -- sources and ingestion --------------------------------------------------

    @app.get("/api/sources", response_model=list[schemas.SourceInfo])
    def sources(session: Session = Depends(require("view_sources"))):
        return [schemas.SourceInfo(source_id=s.source_id,
                                   display_name=s.display_name,
                                   transport=s.transport)
                for s in state.correlator.sources()]

    @app.post("/api/alerts", response_model=schemas.AlertIngestResponse)
    async def ingest_alert(request: Request,
                           session: Session = Depends(require("trigger_ingest"))):
        raw = (await request.body()).decode("utf-8", errors="replace")
        msg = parse_alert_email(raw)
        before = state.store.incident_count()
        incident = state.ingestor.ingest_alert(msg, actor=session.username)
        deduplicated = state.store.incident_count() == before
        return schemas.AlertIngestResponse(incident_id=incident.incident_id,
                                           deduplicated=deduplicated)

    # -- administration -----------------------------------------------------------

    @app.post("/api/users", response_model=schemas.UserInfo, status_code=201)
    def create_user(body: schemas.UserCreateRequest,
                    session: Session = Depends(require("manage_users"))):
        account = state.authenticator.create_user(
            body.username, body.password, body.role, actor=session.username)
        return schemas.UserInfo(username=account.username, role=account.role)

    @app.get("/api/users", response_model=list[schemas.UserInfo])
    def list_users(session: Session = Depends(require("manage_users"))):
        return [schemas.UserInfo(username=u.username, role=u.role)
                for u in state.store.list_users()]

    @app.get("/api/audit", response_model=list[schemas.AuditEntryModel])
    def audit(limit: int = 100,
              session: Session = Depends(require("view_audit"))):
        return [schemas.AuditEntryModel(
            timestamp=e.timestamp, actor=e.actor, action=e.action,
            entity=e.entity, detail=e.detail)
            for e in state.store.audit_tail(limit)]

    static_dir = state.config.static_dir
    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="console")

    return app


def _report_response(name: str, table: ReportTable, chart) -> schemas.ReportResponse:
    model = schemas.TableModel(
        columns=[schemas.ColumnModel(name=n, kind=k) for n, k in table.columns],
        rows=[list(row) for row in table.rows])
    chart_model = None
    if chart is not None:
        chart_model = schemas.ChartModel(title=chart.title, kind=chart.kind,
                                         x_labels=chart.x_labels,
                                         values=chart.values)
    return schemas.ReportResponse(name=name, table=model, chart=chart_model)


def _flow_response(result) -> schemas.FlowSearchResponse:
    req = result.request
    return schemas.FlowSearchResponse(
        source_id=req.source_id, ip=req.ip, port=req.port,
        start=iso_utc(req.start), end=iso_utc(req.end),
        records=[schemas.FlowRecordModel(
            start=r.start, duration=r.duration, protocol=r.protocol,
            src_ip=r.src_ip, src_port=r.src_port, dst_ip=r.dst_ip,
            dst_port=r.dst_port, packets=r.packets, bytes=r.bytes,
            flags=r.flags) for r in result.records],
        truncated=result.truncated, from_cache=result.from_cache,
        parse_errors=result.parse_errors, fetched_at=result.fetched_at)
