"""Pydantic request/response models for the HTTP API."""

from typing import Any, Optional

from pydantic import BaseModel, Field


class LoginRequest(BaseModel):
    username: str
    password: str


class LoginResponse(BaseModel):
    token: str
    username: str
    role: str
    expires_at: str


class HostInfo(BaseModel):
    name: str
    ip: Optional[str] = None
    # Owner contact fields are only present for admin sessions.
    owner_name: Optional[str] = None
    owner_email: Optional[str] = None


class TypeInfo(BaseModel):
    name: str
    description: str = ""


class EmailInfo(BaseModel):
    email_id: int
    date: str
    comments: str = ""
    # Raw message text is only present for admin sessions.
    source: Optional[str] = None


class IncidentSummary(BaseModel):
    incident_id: int
    date: str
    host: str
    ip: Optional[str] = None
    type: str
    email_id: int
    comments: str = ""


class IncidentListResponse(BaseModel):
    items: list[IncidentSummary]
    total: int


class IncidentDetail(BaseModel):
    incident_id: int
    date: str
    comments: str = ""
    host: HostInfo
    type: TypeInfo
    email: EmailInfo


class ColumnModel(BaseModel):
    name: str
    kind: str


class TableModel(BaseModel):
    columns: list[ColumnModel]
    rows: list[list[Any]]


class ChartModel(BaseModel):
    title: str
    kind: str
    x_labels: list[str]
    values: list[float]


class ReportResponse(BaseModel):
    name: str
    table: TableModel
    chart: Optional[ChartModel] = None


class ReportParam(BaseModel):
    name: str
    kind: str
    required: bool = False


class ReportCatalogEntry(BaseModel):
    name: str
    title: str
    params: list[ReportParam]


class QueryRequest(BaseModel):
    sql: str


class UserCreateRequest(BaseModel):
    username: str
    password: str = Field(min_length=1)
    role: str


class UserInfo(BaseModel):
    username: str
    role: str


class AuditEntryModel(BaseModel):
    timestamp: str
    actor: str
    action: str
    entity: str
    detail: str


class SourceInfo(BaseModel):
    source_id: str
    display_name: str
    transport: str


class FlowRecordModel(BaseModel):
    start: int
    duration: float
    protocol: str
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    packets: int
    bytes: int
    flags: str


class FlowSearchResponse(BaseModel):
    source_id: str
    ip: str
    port: Optional[int] = None
    start: str
    end: str
    records: list[FlowRecordModel]
    truncated: bool
    from_cache: bool
    parse_errors: int
    fetched_at: str


class AlertIngestResponse(BaseModel):
    incident_id: int
    deduplicated: bool


class ErrorResponse(BaseModel):
    detail: str
