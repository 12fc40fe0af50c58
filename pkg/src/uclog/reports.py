"""Canned reports, distributional statistics, restricted free-form queries,
and tabular/chart output with TSV export.

Every report takes an injectable ``now`` so output is reproducible; pure
read path, safe to run concurrently with ingestion.
"""

import calendar
import datetime as dt
import math
from dataclasses import dataclass, field

from .errors import (Forbidden, NoIncidents, ReportParamError, UnknownHost,
                     UnknownReport, UnknownType)
from .store import IncidentStore
from .timeutil import parse_iso, utcnow

DOW_NAMES = ("Sunday", "Monday", "Tuesday", "Wednesday", "Thursday",
             "Friday", "Saturday")

COLUMN_KINDS = ("text", "integer", "real", "timestamp")


@dataclass
class ReportTable:
    """Typed tabular result: ordered (name, kind) columns plus value rows."""

    columns: list[tuple[str, str]]
    rows: list[tuple]

    def __post_init__(self):
        for name, kind in self.columns:
            if kind not in COLUMN_KINDS:
                raise ValueError(f"unknown column kind {kind!r} for {name!r}")
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(
                    f"row arity {len(row)} does not match {width} columns"
                )
            for value, (name, kind) in zip(row, self.columns):
                if value is None:
                    continue
                if kind == "integer" and not isinstance(value, int):
                    raise ValueError(f"column {name!r} expects integers")
                if kind == "real" and not isinstance(value, (int, float)):
                    raise ValueError(f"column {name!r} expects reals")
                if kind in ("text", "timestamp") and not isinstance(value, str):
                    raise ValueError(f"column {name!r} expects strings")

    @property
    def column_names(self) -> list[str]:
        return [name for name, _ in self.columns]


@dataclass
class ChartSeries:
    """Chart data emitted alongside a table; rendering happens in the UI."""

    title: str
    x_labels: list[str]
    values: list[float]
    kind: str  # bar | line | pie | histogram

    def __post_init__(self):
        if self.kind not in ("bar", "line", "pie", "histogram"):
            raise ValueError(f"unknown chart kind: {self.kind!r}")
        if len(self.x_labels) != len(self.values):
            raise ValueError("x_labels and values must have equal length")
        if self.kind == "pie" and self.values:
            total = sum(self.values)
            if abs(total - 100.0) > 1e-6:
                raise ValueError(f"pie values must sum to 100, got {total!r}")


@dataclass(frozen=True)
class StatsSummary:
    mean: float
    stddev: float  # population
    n: int


def export_tsv(table: ReportTable) -> str:
    """Serialize a table as TSV.

    Byte-exact format: header line of column names, one line per row, fields
    TAB-separated, every line LF-terminated. None renders empty, integers via
    str(), reals via repr() (shortest round-trip form), timestamps as their
    stored ISO-8601 text; TAB/LF/CR inside text fields become single spaces.
    """
    lines = ["\t".join(table.column_names)]
    for row in table.rows:
        lines.append("\t".join(_format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value).replace("\t", " ").replace("\n", " ").replace("\r", " ")


def plot_spec(series: ChartSeries) -> str:
    """Plot-spec text: one ``#kind title`` header line, then label/value lines."""
    lines = [f"#{series.kind} {series.title}"]
    for label, value in zip(series.x_labels, series.values):
        lines.append(f"{_format_value(label)}\t{_format_value(value)}")
    return "\n".join(lines) + "\n"


class QueryEngine:
    """Read-only report operations over an incident store."""

    def __init__(self, store: IncidentStore):
        self.store = store

    # -- incident lists --------------------------------------------------

    def report_incident_list(self, host=None, type_name=None, since=None,
                             until=None, limit=None, offset=0) -> ReportTable:
        rows = self.store.get_incidents(host=host, type_name=type_name,
                                        since=since, until=until,
                                        limit=limit, offset=offset)
        return ReportTable(
            columns=[("date", "timestamp"), ("host", "text"),
                     ("type_description", "text")],
            rows=[(r.date, r.host, r.type_description) for r in rows],
        )

    def report_host_history(self, host_name: str) -> ReportTable:
        rows = self.store.get_incidents(host=host_name)
        return ReportTable(
            columns=[("incident_id", "integer"), ("date", "timestamp"),
                     ("host", "text"), ("ip", "text"), ("type", "text"),
                     ("type_description", "text"), ("email_id", "integer"),
                     ("comments", "text")],
            rows=[(r.incident_id, r.date, r.host, r.ip, r.type,
                   r.type_description, r.email_id, r.comments) for r in rows],
        )

    # -- distributions ---------------------------------------------------

    def report_pct_by_dow(self, now=None) -> tuple[ReportTable, ChartSeries]:
        """Percentage of incidents per day of week (0=Sunday..6=Saturday);
        only days with at least one incident appear."""
        counted = self.store.read_rows(
            "SELECT CAST(strftime('%w', date) AS INTEGER) AS dow, COUNT(*) "
            "FROM incidents GROUP BY dow ORDER BY dow"
        )
        total = sum(c for _, c in counted)
        rows = [(DOW_NAMES[d], 100.0 * c / total) for d, c in counted]
        table = ReportTable(columns=[("day", "text"), ("pct", "real")], rows=rows)
        chart = ChartSeries("Incidents by day of week",
                            [r[0] for r in rows], [r[1] for r in rows], "bar")
        return table, chart

    def report_dist_by_hour(self, type_filter: str | None = None
                            ) -> tuple[ReportTable, ChartSeries]:
        """Incident counts per hour of day, 24 zero-filled rows."""
        args: tuple = ()
        sql = (
            "SELECT CAST(strftime('%H', i.date) AS INTEGER) AS hour, COUNT(*) "
            "FROM incidents i"
        )
        if type_filter is not None:
            if self.store.get_type_by_name(type_filter) is None:
                raise UnknownType(f"no such incident type: {type_filter!r}")
            sql += " JOIN types t ON i.type = t.typeid WHERE t.name = ?"
            args = (type_filter,)
        sql += " GROUP BY hour"
        counted = dict(self.store.read_rows(sql, args))
        rows = [(hour, counted.get(hour, 0)) for hour in range(24)]
        table = ReportTable(columns=[("hour", "integer"), ("count", "integer")],
                            rows=rows)
        title = "Incidents by hour" + (f" ({type_filter})" if type_filter else "")
        chart = ChartSeries(title, [str(h) for h, _ in rows],
                            [float(c) for _, c in rows], "bar")
        return table, chart

    # -- rankings ----------------------------------------------------------

    def report_top_compromised(self, limit: int = 10
                               ) -> tuple[ReportTable, ChartSeries]:
        """Hosts ranked by incident count (ties broken by name)."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        found = self.store.read_rows(
            "SELECT h.name, h.ip, COUNT(i.incidentid) AS cnt "
            "FROM hosts h JOIN incidents i ON i.host = h.hostid "
            "GROUP BY h.hostid ORDER BY cnt DESC, h.name ASC LIMIT ?",
            (limit,),
        )
        rows = [(name, ip, cnt) for name, ip, cnt in found]
        table = ReportTable(
            columns=[("host", "text"), ("ip", "text"), ("count", "integer")],
            rows=rows)
        chart = ChartSeries("Most frequently attacked hosts",
                            [r[0] for r in rows], [float(r[2]) for r in rows],
                            "bar")
        return table, chart

    def report_policy_violators(self, type_name: str, limit: int = 10) -> ReportTable:
        """Hosts ranked by incident count of one type only."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        if self.store.get_type_by_name(type_name) is None:
            raise UnknownType(f"no such incident type: {type_name!r}")
        found = self.store.read_rows(
            "SELECT h.name, h.ip, COUNT(*) AS cnt "
            "FROM incidents i "
            "JOIN hosts h ON i.host = h.hostid "
            "JOIN types t ON i.type = t.typeid "
            "WHERE t.name = ? "
            "GROUP BY h.hostid ORDER BY cnt DESC, h.name ASC LIMIT ?",
            (type_name, limit),
        )
        return ReportTable(
            columns=[("host", "text"), ("ip", "text"), ("count", "integer")],
            rows=[tuple(r) for r in found])

    # -- time windows -------------------------------------------------------

    def report_monthly_trend(self, now: dt.datetime | None = None
                             ) -> tuple[ReportTable, ChartSeries]:
        """Incidents in the trailing 365 days grouped by calendar month,
        ordered chronologically ending with the current month."""
        now = now or utcnow()
        cutoff = now - dt.timedelta(days=365)
        counted = self.store.read_rows(
            "SELECT CAST(strftime('%m', date) AS INTEGER) AS mon, COUNT(*) "
            "FROM incidents WHERE date > ? GROUP BY mon",
            (self._ts(cutoff),),
        )
        current_month = now.month
        ordered = sorted(counted,
                         key=lambda mc: (mc[0] + 12 - current_month - 1) % 12)
        table = ReportTable(columns=[("month", "integer"), ("count", "integer")],
                            rows=[tuple(mc) for mc in ordered])
        chart = ChartSeries("Incidents per month, trailing year",
                            [calendar.month_abbr[m] for m, _ in ordered],
                            [float(c) for _, c in ordered], "line")
        return table, chart

    def report_first_offenders(self, now: dt.datetime | None = None,
                               limit: int = 10) -> ReportTable:
        """Hosts whose earliest incident falls within the trailing 30 days."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        now = now or utcnow()
        cutoff = now - dt.timedelta(days=30)
        found = self.store.read_rows(
            "SELECT h.name, h.ip, MIN(i.date) AS first_date "
            "FROM hosts h JOIN incidents i ON i.host = h.hostid "
            "GROUP BY h.hostid HAVING first_date > ? "
            "ORDER BY first_date DESC, h.name ASC LIMIT ?",
            (self._ts(cutoff), limit),
        )
        return ReportTable(
            columns=[("host", "text"), ("ip", "text"),
                     ("first_date", "timestamp")],
            rows=[tuple(r) for r in found])

    def report_frequent_types(self) -> tuple[ReportTable, ChartSeries]:
        """Counts and percentages per incident type, count ascending."""
        counted = self.store.read_rows(
            "SELECT t.name, COUNT(*) AS cnt "
            "FROM incidents i JOIN types t ON i.type = t.typeid "
            "GROUP BY t.typeid ORDER BY cnt ASC, t.name ASC"
        )
        total = sum(c for _, c in counted)
        rows = [(name, cnt, 100.0 * cnt / total) for name, cnt in counted]
        table = ReportTable(
            columns=[("type", "text"), ("count", "integer"), ("pct", "real")],
            rows=rows)
        chart = ChartSeries("Incident type frequency",
                            [r[0] for r in rows], [r[2] for r in rows], "pie")
        return table, chart

    # -- statistics -----------------------------------------------------------

    def attack_stats_for_host(self, host_name: str, bucket: str = "per_day"
                              ) -> tuple[StatsSummary, ChartSeries]:
        """Population mean/σ of daily incident counts for one host, plus the
        per-day histogram series (days with at least one incident)."""
        if bucket != "per_day":
            raise ValueError(f"unsupported bucket: {bucket!r}")
        if self.store.get_host_by_name(host_name) is None:
            raise UnknownHost(f"no such host: {host_name!r}")
        rows = self.store.get_incidents(host=host_name)
        if not rows:
            raise NoIncidents(f"host has no incidents: {host_name!r}")
        per_day: dict[str, int] = {}
        for row in rows:
            day = row.date[:10]
            per_day[day] = per_day.get(day, 0) + 1
        days = sorted(per_day)
        counts = [per_day[d] for d in days]
        n = len(counts)
        mean = sum(counts) / n
        variance = sum((c - mean) ** 2 for c in counts) / n
        summary = StatsSummary(mean=mean, stddev=math.sqrt(variance), n=n)
        chart = ChartSeries(f"Daily incident counts for {host_name}",
                            days, [float(c) for c in counts], "histogram")
        return summary, chart

    # -- free-form ----------------------------------------------------------

    def run_custom_query(self, sql_text: str, role: str) -> ReportTable:
        """Admin-only read-only SELECT against the logical schema."""
        if role != "admin":
            raise Forbidden("custom queries require the admin role")
        names, rows = self.store.run_select(sql_text)
        kinds = [_infer_kind(i, rows) for i in range(len(names))]
        coerced = [
            tuple(_coerce_cell(v, kinds[i]) for i, v in enumerate(row))
            for row in rows
        ]
        return ReportTable(columns=list(zip(names, kinds)), rows=coerced)

    @staticmethod
    def _ts(value: dt.datetime) -> str:
        from .timeutil import iso_utc

        return iso_utc(value)


def _infer_kind(index: int, rows: list[tuple]) -> str:
    values = [row[index] for row in rows if row[index] is not None]
    if values and all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        return "integer"
    if values and all(isinstance(v, (int, float)) for v in values):
        return "real"
    return "text"


def _coerce_cell(value, kind: str):
    if value is None:
        return None
    if kind == "real":
        return float(value)
    if kind == "text" and not isinstance(value, str):
        return str(value)
    return value


# -- report catalog -----------------------------------------------------------


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # str | int | timestamp
    required: bool = False
    default: object = None


@dataclass(frozen=True)
class ReportSpec:
    name: str
    title: str
    params: tuple[ParamSpec, ...]
    runner: object = field(compare=False, default=None)


def _parse_params(spec: ReportSpec, raw: dict[str, str]) -> dict:
    known = {p.name: p for p in spec.params}
    unknown = set(raw) - set(known)
    if unknown:
        raise ReportParamError(
            f"unknown parameter(s) for {spec.name}: {', '.join(sorted(unknown))}"
        )
    out: dict = {}
    for p in spec.params:
        if p.name in raw:
            value = raw[p.name]
            if p.kind == "int":
                try:
                    out[p.name] = int(value)
                except ValueError:
                    raise ReportParamError(
                        f"parameter {p.name!r} must be an integer: {value!r}"
                    ) from None
            elif p.kind == "timestamp":
                out[p.name] = parse_iso(value)
            else:
                out[p.name] = value
        elif p.required:
            raise ReportParamError(
                f"report {spec.name} requires parameter {p.name!r}")
        elif p.default is not None:
            out[p.name] = p.default
    return out


def run_report(engine: QueryEngine, name: str, raw_params: dict[str, str],
               now: dt.datetime | None = None
               ) -> tuple[ReportTable, ChartSeries | None]:
    """Run a catalog report by name with string-valued parameters."""
    spec = REPORT_CATALOG.get(name)
    if spec is None:
        raise UnknownReport(f"no such report: {name!r}")
    params = _parse_params(spec, raw_params)
    return spec.runner(engine, params, now)


def _r_incident_list(engine, p, now):
    return engine.report_incident_list(
        host=p.get("host"), type_name=p.get("type"), since=p.get("since"),
        until=p.get("until"), limit=p.get("limit"), offset=p.get("offset", 0),
    ), None


def _r_pct_by_dow(engine, p, now):
    return engine.report_pct_by_dow(now=now)


def _r_dist_by_hour(engine, p, now):
    return engine.report_dist_by_hour(type_filter=p.get("type"))


def _r_host_history(engine, p, now):
    return engine.report_host_history(p["host"]), None


def _r_top_compromised(engine, p, now):
    return engine.report_top_compromised(limit=p.get("limit", 10))


def _r_policy_violators(engine, p, now):
    return engine.report_policy_violators(p["type"], limit=p.get("limit", 10)), None


def _r_monthly_trend(engine, p, now):
    return engine.report_monthly_trend(now=now)


def _r_first_offenders(engine, p, now):
    return engine.report_first_offenders(now=now, limit=p.get("limit", 10)), None


def _r_frequent_types(engine, p, now):
    return engine.report_frequent_types()


def _r_host_stats(engine, p, now):
    summary, chart = engine.attack_stats_for_host(p["host"])
    table = ReportTable(
        columns=[("mean", "real"), ("stddev", "real"), ("days", "integer")],
        rows=[(summary.mean, summary.stddev, summary.n)])
    return table, chart


REPORT_CATALOG: dict[str, ReportSpec] = {
    spec.name: spec
    for spec in (
        ReportSpec("incident_list", "Incident list",
                   (ParamSpec("host", "str"), ParamSpec("type", "str"),
                    ParamSpec("since", "timestamp"), ParamSpec("until", "timestamp"),
                    ParamSpec("limit", "int"), ParamSpec("offset", "int")),
                   _r_incident_list),
        ReportSpec("pct_by_dow", "Incident percentage by day of week", (),
                   _r_pct_by_dow),
        ReportSpec("dist_by_hour", "Incident distribution by hour of day",
                   (ParamSpec("type", "str"),), _r_dist_by_hour),
        ReportSpec("host_history", "Incident history for one host",
                   (ParamSpec("host", "str", required=True),), _r_host_history),
        ReportSpec("top_compromised", "Most frequently attacked hosts",
                   (ParamSpec("limit", "int", default=10),), _r_top_compromised),
        ReportSpec("policy_violators", "Hosts ranked by one incident type",
                   (ParamSpec("type", "str", required=True),
                    ParamSpec("limit", "int", default=10)), _r_policy_violators),
        ReportSpec("monthly_trend", "Incidents per month, trailing year", (),
                   _r_monthly_trend),
        ReportSpec("first_offenders", "Hosts first seen in the trailing month",
                   (ParamSpec("limit", "int", default=10),), _r_first_offenders),
        ReportSpec("frequent_types", "Incident type frequency", (),
                   _r_frequent_types),
        ReportSpec("host_stats", "Daily incident statistics for one host",
                   (ParamSpec("host", "str", required=True),), _r_host_stats),
    )
}
