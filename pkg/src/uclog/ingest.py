"""Inbound alert processing: parse alert messages, resolve host identity,
and insert email + host + type + incident rows automatically.

The canonical alert wire format is an RFC-822-style header block, a blank
line, then ``KEY: value`` body lines with required HOST and TYPE and
optional TIME, SRC_IP, DST_PORT, DETAIL. Unknown keys are preserved in the
raw message text stored with the email record. New alert generators only
need a front end that emits this format (or an AlertMessage directly).
"""

import datetime as dt
import email.utils
import fcntl
import hashlib
import re
import shutil
import socket
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .errors import ParseError, SenderRejected
from .store import Incident, IncidentStore, validate_host_name, validate_type_name
from .timeutil import parse_iso, to_utc

_BODY_KEY = re.compile(r"^([A-Z][A-Z0-9_]*):\s*(.*)$")
_IPV4 = re.compile(r"^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$")


@dataclass(frozen=True)
class AlertMessage:
    """A parsed inbound alert; ``raw`` is the original text, unmodified."""

    headers: dict[str, str]
    body_fields: dict[str, str]
    raw: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.raw.encode("utf-8")).hexdigest()


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: int = 0
    deduped: int = 0
    rejections: list[tuple[str, str]] = field(default_factory=list)
    new_hosts: int = 0
    new_types: int = 0

    def summary(self) -> str:
        return (
            f"accepted={self.accepted} rejected={self.rejected} "
            f"deduped={self.deduped} new_hosts={self.new_hosts} "
            f"new_types={self.new_types}"
        )


def is_ipv4_literal(text: str) -> bool:
    m = _IPV4.match(text)
    return bool(m) and all(int(octet) <= 255 for octet in m.groups())


def parse_alert_email(raw: str) -> AlertMessage:
    """Parse one alert message.

    Header block = ``Name: value`` lines before the first blank line; body
    lines matching ``KEY: value`` (uppercase keys) become body_fields, first
    occurrence winning. Raises ParseError when HOST or TYPE is missing or no
    timestamp can be derived from the TIME field or the Date header.
    """
    if not raw or not raw.strip():
        raise ParseError("empty message")
    lines = raw.splitlines()
    try:
        split_at = next(i for i, line in enumerate(lines) if not line.strip())
        header_lines, body_lines = lines[:split_at], lines[split_at + 1 :]
    except StopIteration:
        header_lines, body_lines = [], lines

    headers: dict[str, str] = {}
    for line in header_lines:
        name, sep, value = line.partition(":")
        if sep and name and not name[0].isspace():
            headers.setdefault(name.strip(), value.strip())

    body_fields: dict[str, str] = {}
    for line in body_lines:
        m = _BODY_KEY.match(line.strip())
        if m:
            body_fields.setdefault(m.group(1), m.group(2).strip())

    if "HOST" not in body_fields:
        raise ParseError("missing HOST")
    if "TYPE" not in body_fields:
        raise ParseError("missing TYPE")
    msg = AlertMessage(headers=headers, body_fields=body_fields, raw=raw)
    alert_timestamp(msg)  # validates that a timestamp exists
    return msg


def alert_timestamp(msg: AlertMessage) -> dt.datetime:
    """Event time: body TIME (ISO-8601) or, if absent, the Date header."""
    if "TIME" in msg.body_fields:
        return parse_iso(msg.body_fields["TIME"])
    date_header = msg.headers.get("Date")
    if date_header:
        try:
            parsed = email.utils.parsedate_to_datetime(date_header)
        except (TypeError, ValueError):
            parsed = None
        if parsed is not None:
            return to_utc(parsed)
    raise ParseError("no parseable timestamp (TIME field or Date header)")


class Resolver(Protocol):
    def forward(self, name: str) -> str | None: ...

    def reverse(self, ip: str) -> str | None: ...


class StaticResolver:
    """Table-driven resolver; the default, so ingestion never touches DNS."""

    def __init__(self, forward_map: dict[str, str] | None = None,
                 reverse_map: dict[str, str] | None = None):
        self._forward = dict(forward_map or {})
        self._reverse = dict(reverse_map or {})
        if reverse_map is None:
            self._reverse = {ip: name for name, ip in self._forward.items()}

    def forward(self, name: str) -> str | None:
        return self._forward.get(name)

    def reverse(self, ip: str) -> str | None:
        return self._reverse.get(ip)


class SystemResolver:
    """Real DNS lookups; failures degrade to None."""

    def forward(self, name: str) -> str | None:
        try:
            return socket.gethostbyname(name)
        except OSError:
            return None

    def reverse(self, ip: str) -> str | None:
        try:
            return socket.gethostbyaddr(ip)[0]
        except OSError:
            return None


def resolve_host(name_or_ip: str, resolver: Resolver) -> tuple[str, str | None]:
    """Resolve a host string to (name, ip); never fails outright.

    IP literals get a reverse lookup for the name (falling back to the
    literal); host names get a forward lookup for the ip (left empty on
    failure).
    """
    if is_ipv4_literal(name_or_ip):
        name = resolver.reverse(name_or_ip) or name_or_ip
        return name, name_or_ip
    return name_or_ip, resolver.forward(name_or_ip)


class AllowListValidator:
    """Sender validation: allow-list of From addresses plus an optional
    detached-signature hook. An empty allow-list admits every sender."""

    def __init__(self, allowed_senders: tuple[str, ...] = (),
                 signature_check: Callable[[AlertMessage], bool] | None = None):
        self.allowed = tuple(s.lower() for s in allowed_senders)
        self.signature_check = signature_check

    def __call__(self, msg: AlertMessage) -> None:
        if self.allowed:
            sender = email.utils.parseaddr(msg.headers.get("From", ""))[1].lower()
            if sender not in self.allowed:
                raise SenderRejected(f"sender not allowed: {sender or '<missing>'}")
        if self.signature_check is not None and not self.signature_check(msg):
            raise SenderRejected("signature check failed")


class AlertIngestor:
    """Turns parsed alerts into store records and sweeps drop directories."""

    def __init__(
        self,
        store: IncidentStore,
        resolver: Resolver | None = None,
        sender_validator: Callable[[AlertMessage], None] | None = None,
    ):
        self.store = store
        self.resolver = resolver or StaticResolver()
        self.sender_validator = sender_validator

    def ingest_alert(self, msg: AlertMessage, actor: str = "ingest") -> Incident:
        """Insert email, host, type, and incident rows for one alert.

        Re-ingesting a byte-identical message is detected by digest and
        returns the original incident without touching the store.
        """
        incident, _ = self._ingest(msg, actor)
        return incident

    def _ingest(self, msg: AlertMessage, actor: str) -> tuple[Incident, bool]:
        existing_id = self.store.seen_digest(msg.digest)
        if existing_id is not None:
            return self.store.get_incident(existing_id), True

        if self.sender_validator is not None:
            self.sender_validator(msg)

        when = alert_timestamp(msg)
        name, ip = resolve_host(msg.body_fields["HOST"], self.resolver)
        # Validate before any write so a rejected message leaves no records.
        validate_host_name(name)
        validate_type_name(msg.body_fields["TYPE"])

        host = self.store.upsert_host(name, ip=ip, actor=actor)
        itype = self.store.upsert_type(msg.body_fields["TYPE"], actor=actor)
        mail = self.store.insert_email(
            when.date(), source=msg.raw,
            comments=msg.headers.get("Subject", ""), actor=actor,
        )
        incident = self.store.insert_incident(
            when, host.host_id, itype.type_id, mail.email_id,
            comments=msg.body_fields.get("DETAIL", ""), actor=actor,
        )
        self.store.remember_digest(msg.digest, incident.incident_id)
        return incident, False

    def scan_drop_directory(self, path, actor: str = "ingest") -> IngestReport:
        """Process every file in ``<path>/incoming``.

        Successes move to ``processed/``, failures to ``rejected/`` with a
        ``.reason`` sidecar; per-file failures are tallied, never raised. The
        sweep holds an advisory lock so only one sweeper owns the directory.
        """
        root = Path(path)
        if not root.is_dir():
            raise IOError(f"not a directory: {root}")
        incoming = root / "incoming"
        processed = root / "processed"
        rejected = root / "rejected"
        for sub in (incoming, processed, rejected):
            sub.mkdir(exist_ok=True)

        report = IngestReport()
        hosts_before = self.store.host_count()
        types_before = self.store.type_count()

        lock_path = root / ".sweep.lock"
        with open(lock_path, "w") as lock_file:
            try:
                fcntl.flock(lock_file, fcntl.LOCK_EX | fcntl.LOCK_NB)
            except BlockingIOError:
                raise IOError(f"drop directory is locked by another sweeper: {root}") from None
            try:
                for entry in sorted(p for p in incoming.iterdir() if p.is_file()):
                    raw = entry.read_text(encoding="utf-8", errors="replace")
                    try:
                        msg = parse_alert_email(raw)
                        _, deduped = self._ingest(msg, actor)
                    except Exception as exc:  # per-file failures are tallied
                        report.rejected += 1
                        report.rejections.append((entry.name, str(exc)))
                        dest = _move_unique(entry, rejected)
                        dest.with_suffix(dest.suffix + ".reason").write_text(
                            str(exc) + "\n", encoding="utf-8"
                        )
                        continue
                    report.accepted += 1
                    if deduped:
                        report.deduped += 1
                    _move_unique(entry, processed)
            finally:
                fcntl.flock(lock_file, fcntl.LOCK_UN)

        report.new_hosts = self.store.host_count() - hosts_before
        report.new_types = self.store.type_count() - types_before
        return report


def _move_unique(src: Path, dest_dir: Path) -> Path:
    dest = dest_dir / src.name
    counter = 1
    while dest.exists():
        dest = dest_dir / f"{src.stem}.{counter}{src.suffix}"
        counter += 1
    shutil.move(str(src), str(dest))
    return dest
