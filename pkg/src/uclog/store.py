"""Durable storage of hosts, incident types, alert emails, incidents, users,
and the append-only audit trail.

Backed by an embedded SQLite database behind a repository interface; all
constraints (name format, length limits, uniqueness, referential integrity)
are enforced here so the engine stays swappable. Safe for use from multiple
request-handling threads: a single connection guarded by a reentrant lock
serializes writes, and every mutating method appends exactly one audit entry
per record it changes.
"""

import datetime as dt
import ipaddress
import re
import sqlite3
import threading
from dataclasses import dataclass

from .errors import (
    ConstraintViolation,
    QueryError,
    QueryRejected,
    ReferentialIntegrity,
)
from .timeutil import iso_utc, parse_iso, utcnow

AUDIT_ACTIONS = ("insert", "update", "delete", "login", "search")

MAX_HOST_NAME = 30
MAX_OWNER = 35
MAX_TYPE_NAME = 25
MAX_TYPE_DESCRIPTION = 256

_SCHEMA = """
CREATE TABLE IF NOT EXISTS hosts (
    hostid INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL UNIQUE,
    ip TEXT,
    owner_name TEXT,
    owner_email TEXT
);
CREATE TABLE IF NOT EXISTS emails (
    emailid INTEGER PRIMARY KEY AUTOINCREMENT,
    date TEXT NOT NULL,
    source TEXT,
    comments TEXT
);
CREATE TABLE IF NOT EXISTS types (
    typeid INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL UNIQUE,
    description TEXT
);
CREATE TABLE IF NOT EXISTS incidents (
    incidentid INTEGER PRIMARY KEY AUTOINCREMENT,
    date TEXT NOT NULL,
    host INTEGER NOT NULL REFERENCES hosts (hostid),
    type INTEGER NOT NULL REFERENCES types (typeid),
    email INTEGER NOT NULL REFERENCES emails (emailid),
    comments TEXT
);
CREATE TABLE IF NOT EXISTS audit_log (
    entryid INTEGER PRIMARY KEY AUTOINCREMENT,
    ts TEXT NOT NULL,
    actor TEXT NOT NULL,
    action TEXT NOT NULL,
    entity TEXT NOT NULL,
    detail TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
    username TEXT PRIMARY KEY,
    password_digest TEXT NOT NULL,
    role TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS ingest_digests (
    digest TEXT PRIMARY KEY,
    incidentid INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_incidents_date ON incidents (date);
CREATE INDEX IF NOT EXISTS idx_incidents_host ON incidents (host);
"""

# Keywords rejected by the free-form query gate (word-boundary match).
_FORBIDDEN_SQL = re.compile(
    r"\b(insert|update|delete|drop|create|alter|attach|detach|pragma|"
    r"vacuum|reindex|replace|grant|revoke|truncate)\b",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class Host:
    host_id: int
    name: str
    ip: str | None = None
    owner_name: str | None = None
    owner_email: str | None = None


@dataclass(frozen=True)
class EmailRecord:
    email_id: int
    date: dt.date
    source: str = ""
    comments: str = ""


@dataclass(frozen=True)
class IncidentType:
    type_id: int
    name: str
    description: str = ""


@dataclass(frozen=True)
class Incident:
    incident_id: int
    date: str  # ISO-8601 UTC, second resolution
    host_id: int
    type_id: int
    email_id: int
    comments: str = ""


@dataclass(frozen=True)
class AuditEntry:
    timestamp: str
    actor: str
    action: str
    entity: str
    detail: str


@dataclass(frozen=True)
class IncidentRow:
    """One row of the incidents/hosts/types join used by lists and reports."""

    incident_id: int
    date: str
    host: str
    ip: str | None
    type: str
    type_description: str
    email_id: int
    comments: str


@dataclass(frozen=True)
class UserAccount:
    username: str
    password_digest: str
    role: str


def validate_host_name(name: str) -> str:
    """Enforce the dotted host-name rule: non-empty, ≤30 chars, ≥3 dots."""
    if not isinstance(name, str) or not name:
        raise ConstraintViolation("host name must be a non-empty string")
    if len(name) > MAX_HOST_NAME:
        raise ConstraintViolation(
            f"host name exceeds {MAX_HOST_NAME} characters: {name!r}"
        )
    if name.count(".") < 3:
        raise ConstraintViolation(
            f"invalid host name (needs at least three dots): {name!r}"
        )
    return name


def validate_ip(ip: str | None) -> str | None:
    if ip is None or ip == "":
        return None
    try:
        return str(ipaddress.IPv4Address(ip))
    except (ipaddress.AddressValueError, ValueError):
        raise ConstraintViolation(f"invalid IPv4 address: {ip!r}") from None


def validate_type_name(name: str) -> str:
    if not isinstance(name, str) or not name:
        raise ConstraintViolation("type name must be a non-empty string")
    if len(name) > MAX_TYPE_NAME:
        raise ConstraintViolation(
            f"type name exceeds {MAX_TYPE_NAME} characters: {name!r}"
        )
    return name


def _validate_owner(value: str | None, label: str) -> str | None:
    if value is None:
        return None
    if len(value) > MAX_OWNER:
        raise ConstraintViolation(f"{label} exceeds {MAX_OWNER} characters")
    return value


def _canon_timestamp(value) -> str:
    if isinstance(value, dt.datetime):
        return iso_utc(value)
    if isinstance(value, str):
        return iso_utc(parse_iso(value))
    raise ConstraintViolation(f"not a timestamp: {value!r}")


def _canon_date(value) -> str:
    if isinstance(value, dt.datetime):
        return value.date().isoformat()
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, str):
        try:
            return dt.date.fromisoformat(value.strip()).isoformat()
        except ValueError:
            raise ConstraintViolation(f"invalid calendar date: {value!r}") from None
    raise ConstraintViolation(f"invalid calendar date: {value!r}")


class IncidentStore:
    """Repository over the embedded database.

    The audit log is append-only by construction: there is no API to modify
    or remove entries, and every mutation records exactly one entry.
    """

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute("PRAGMA foreign_keys = ON")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- audit ---------------------------------------------------------

    def record_audit(self, entry: AuditEntry) -> None:
        if entry.action not in AUDIT_ACTIONS:
            raise ConstraintViolation(f"unknown audit action: {entry.action!r}")
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO audit_log (ts, actor, action, entity, detail) "
                "VALUES (?, ?, ?, ?, ?)",
                (entry.timestamp, entry.actor, entry.action, entry.entity, entry.detail),
            )

    def _audit(self, actor: str, action: str, entity: str, detail: str) -> None:
        self.record_audit(
            AuditEntry(iso_utc(utcnow()), actor, action, entity, detail)
        )

    def audit_entries(self, limit: int | None = None, newest_first: bool = False) -> list[AuditEntry]:
        order = "DESC" if newest_first else "ASC"
        sql = f"SELECT ts, actor, action, entity, detail FROM audit_log ORDER BY entryid {order}"
        args: tuple = ()
        if limit is not None:
            sql += " LIMIT ?"
            args = (limit,)
        with self._lock:
            rows = self._conn.execute(sql, args).fetchall()
        return [AuditEntry(*row) for row in rows]

    def audit_tail(self, n: int) -> list[AuditEntry]:
        """Last n entries, still in insertion order."""
        return list(reversed(self.audit_entries(limit=n, newest_first=True)))

    def audit_count(self, actions: tuple[str, ...] | None = None) -> int:
        with self._lock:
            if actions:
                marks = ",".join("?" for _ in actions)
                row = self._conn.execute(
                    f"SELECT COUNT(*) FROM audit_log WHERE action IN ({marks})", actions
                ).fetchone()
            else:
                row = self._conn.execute("SELECT COUNT(*) FROM audit_log").fetchone()
        return row[0]

    # -- hosts ---------------------------------------------------------

    def upsert_host(
        self,
        name: str,
        ip: str | None = None,
        owner_name: str | None = None,
        owner_email: str | None = None,
        actor: str = "system",
    ) -> Host:
        """Create the host or return the existing one (idempotent on name).

        A previously missing ip is filled in when one is supplied now; other
        fields of an existing record are left untouched.
        """
        name = validate_host_name(name)
        ip = validate_ip(ip)
        owner_name = _validate_owner(owner_name, "owner_name")
        owner_email = _validate_owner(owner_email, "owner_email")
        with self._lock:
            existing = self.get_host_by_name(name)
            if existing is not None:
                if existing.ip is None and ip is not None:
                    with self._conn:
                        self._conn.execute(
                            "UPDATE hosts SET ip = ? WHERE hostid = ?",
                            (ip, existing.host_id),
                        )
                    self._audit(
                        actor, "update", f"host:{existing.host_id}",
                        f"filled ip={ip} for {name}",
                    )
                    return Host(existing.host_id, name, ip,
                                existing.owner_name, existing.owner_email)
                return existing
            with self._conn:
                cur = self._conn.execute(
                    "INSERT INTO hosts (name, ip, owner_name, owner_email) "
                    "VALUES (?, ?, ?, ?)",
                    (name, ip, owner_name, owner_email),
                )
            host_id = cur.lastrowid
            self._audit(actor, "insert", f"host:{host_id}", f"name={name} ip={ip}")
            return Host(host_id, name, ip, owner_name, owner_email)

    def get_host(self, host_id: int) -> Host | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT hostid, name, ip, owner_name, owner_email FROM hosts "
                "WHERE hostid = ?",
                (host_id,),
            ).fetchone()
        return Host(*row) if row else None

    def get_host_by_name(self, name: str) -> Host | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT hostid, name, ip, owner_name, owner_email FROM hosts "
                "WHERE name = ?",
                (name,),
            ).fetchone()
        return Host(*row) if row else None

    def hosts(self) -> list[Host]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT hostid, name, ip, owner_name, owner_email FROM hosts "
                "ORDER BY hostid"
            ).fetchall()
        return [Host(*row) for row in rows]

    def host_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM hosts").fetchone()[0]

    # -- emails --------------------------------------------------------

    def insert_email(self, date, source: str = "", comments: str = "",
                     actor: str = "system") -> EmailRecord:
        date_text = _canon_date(date)
        with self._lock:
            with self._conn:
                cur = self._conn.execute(
                    "INSERT INTO emails (date, source, comments) VALUES (?, ?, ?)",
                    (date_text, source, comments),
                )
            email_id = cur.lastrowid
            self._audit(actor, "insert", f"email:{email_id}", f"date={date_text}")
        return EmailRecord(email_id, dt.date.fromisoformat(date_text), source, comments)

    def get_email(self, email_id: int) -> EmailRecord | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT emailid, date, source, comments FROM emails WHERE emailid = ?",
                (email_id,),
            ).fetchone()
        if row is None:
            return None
        return EmailRecord(row[0], dt.date.fromisoformat(row[1]), row[2], row[3])

    def email_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM emails").fetchone()[0]

    # -- types ---------------------------------------------------------

    def upsert_type(self, name: str, description: str = "",
                    actor: str = "system") -> IncidentType:
        name = validate_type_name(name)
        if len(description) > MAX_TYPE_DESCRIPTION:
            raise ConstraintViolation(
                f"type description exceeds {MAX_TYPE_DESCRIPTION} characters"
            )
        with self._lock:
            existing = self.get_type_by_name(name)
            if existing is not None:
                return existing
            with self._conn:
                cur = self._conn.execute(
                    "INSERT INTO types (name, description) VALUES (?, ?)",
                    (name, description),
                )
            type_id = cur.lastrowid
            self._audit(actor, "insert", f"type:{type_id}", f"name={name}")
            return IncidentType(type_id, name, description)

    def get_type(self, type_id: int) -> IncidentType | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT typeid, name, description FROM types WHERE typeid = ?",
                (type_id,),
            ).fetchone()
        return IncidentType(*row) if row else None

    def get_type_by_name(self, name: str) -> IncidentType | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT typeid, name, description FROM types WHERE name = ?",
                (name,),
            ).fetchone()
        return IncidentType(*row) if row else None

    def types(self) -> list[IncidentType]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT typeid, name, description FROM types ORDER BY typeid"
            ).fetchall()
        return [IncidentType(*row) for row in rows]

    def type_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM types").fetchone()[0]

    # -- incidents -----------------------------------------------------

    def insert_incident(self, date, host_id: int, type_id: int, email_id: int,
                        comments: str = "", actor: str = "system") -> Incident:
        date_text = _canon_timestamp(date)
        with self._lock:
            if self.get_host(host_id) is None:
                raise ReferentialIntegrity(f"no such host: {host_id}")
            if self.get_type(type_id) is None:
                raise ReferentialIntegrity(f"no such type: {type_id}")
            if self.get_email(email_id) is None:
                raise ReferentialIntegrity(f"no such email: {email_id}")
            with self._conn:
                cur = self._conn.execute(
                    "INSERT INTO incidents (date, host, type, email, comments) "
                    "VALUES (?, ?, ?, ?, ?)",
                    (date_text, host_id, type_id, email_id, comments),
                )
            incident_id = cur.lastrowid
            self._audit(
                actor, "insert", f"incident:{incident_id}",
                f"date={date_text} host={host_id} type={type_id} email={email_id}",
            )
        return Incident(incident_id, date_text, host_id, type_id, email_id, comments)

    def get_incident(self, incident_id: int) -> Incident | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT incidentid, date, host, type, email, comments "
                "FROM incidents WHERE incidentid = ?",
                (incident_id,),
            ).fetchone()
        return Incident(*row) if row else None

    def get_incidents(
        self,
        host: str | None = None,
        type_name: str | None = None,
        since: str | dt.datetime | None = None,
        until: str | dt.datetime | None = None,
        limit: int | None = None,
        offset: int = 0,
    ) -> list[IncidentRow]:
        """Joined incident rows matching all provided filters.

        Ordered by date ascending (ties by incident id); the time range is
        ``since`` inclusive to ``until`` exclusive.
        """
        where = []
        args: list = []
        if host is not None:
            where.append("h.name = ?")
            args.append(host)
        if type_name is not None:
            where.append("t.name = ?")
            args.append(type_name)
        if since is not None:
            where.append("i.date >= ?")
            args.append(_canon_timestamp(since))
        if until is not None:
            where.append("i.date < ?")
            args.append(_canon_timestamp(until))
        sql = (
            "SELECT i.incidentid, i.date, h.name, h.ip, t.name, t.description, "
            "i.email, i.comments "
            "FROM incidents i "
            "JOIN hosts h ON i.host = h.hostid "
            "JOIN types t ON i.type = t.typeid"
        )
        if where:
            sql += " WHERE " + " AND ".join(where)
        sql += " ORDER BY i.date ASC, i.incidentid ASC"
        if limit is not None or offset:
            sql += " LIMIT ? OFFSET ?"
            args.extend([-1 if limit is None else limit, offset])
        with self._lock:
            rows = self._conn.execute(sql, args).fetchall()
        return [IncidentRow(*row) for row in rows]

    def incidents(self) -> list[Incident]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT incidentid, date, host, type, email, comments "
                "FROM incidents ORDER BY incidentid"
            ).fetchall()
        return [Incident(*row) for row in rows]

    def incident_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM incidents").fetchone()[0]

    # -- users ---------------------------------------------------------

    def add_user(self, username: str, password_digest: str, role: str,
                 actor: str = "system") -> UserAccount:
        if not username:
            raise ConstraintViolation("username must be non-empty")
        if role not in ("admin", "normal"):
            raise ConstraintViolation(f"unknown role: {role!r}")
        with self._lock:
            try:
                with self._conn:
                    self._conn.execute(
                        "INSERT INTO users (username, password_digest, role) "
                        "VALUES (?, ?, ?)",
                        (username, password_digest, role),
                    )
            except sqlite3.IntegrityError:
                raise ConstraintViolation(f"username already exists: {username!r}") from None
            self._audit(actor, "insert", f"user:{username}", f"role={role}")
        return UserAccount(username, password_digest, role)

    def get_user(self, username: str) -> UserAccount | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT username, password_digest, role FROM users WHERE username = ?",
                (username,),
            ).fetchone()
        return UserAccount(*row) if row else None

    def list_users(self) -> list[UserAccount]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT username, password_digest, role FROM users ORDER BY username"
            ).fetchall()
        return [UserAccount(*row) for row in rows]

    # -- ingest dedup bookkeeping ---------------------------------------

    def seen_digest(self, digest: str) -> int | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT incidentid FROM ingest_digests WHERE digest = ?", (digest,)
            ).fetchone()
        return row[0] if row else None

    def remember_digest(self, digest: str, incident_id: int) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO ingest_digests (digest, incidentid) VALUES (?, ?)",
                (digest, incident_id),
            )

    # -- internal read path ----------------------------------------------

    def read_rows(self, sql: str, args: tuple = ()) -> list[tuple]:
        """Trusted read-only query path for in-package report code."""
        with self._lock:
            return [tuple(r) for r in self._conn.execute(sql, args).fetchall()]

    # -- free-form read-only queries ------------------------------------

    def run_select(self, sql: str) -> tuple[list[str], list[tuple]]:
        """Run a single read-only SELECT; returns (column names, rows).

        Mutating keywords and multi-statement inputs are rejected before the
        statement reaches the backend, and the connection is additionally
        pinned read-only for the duration of the call.
        """
        text = sql.strip()
        if not text:
            raise QueryRejected("empty query")
        body = text.rstrip(";").strip()
        if ";" in body:
            raise QueryRejected("multiple statements are not allowed")
        if not body.lower().startswith("select"):
            raise QueryRejected("only SELECT statements are allowed")
        hit = _FORBIDDEN_SQL.search(body)
        if hit:
            raise QueryRejected(f"forbidden keyword: {hit.group(0)}")
        with self._lock:
            self._conn.execute("PRAGMA query_only = ON")
            try:
                cur = self._conn.execute(body)
                names = [d[0] for d in cur.description] if cur.description else []
                rows = [tuple(r) for r in cur.fetchall()]
            except sqlite3.Error as exc:
                raise QueryError(str(exc)) from None
            finally:
                self._conn.execute("PRAGMA query_only = OFF")
        return names, rows

    # -- schema dump -----------------------------------------------------

    def schema_dump(self) -> str:
        """Emit the logical schema as a text document."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT sql FROM sqlite_master "
                "WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
            ).fetchall()
        return "\n\n".join(row[0] + ";" for row in rows) + "\n"
