"""Filtered searches against flat flow logs on remote hosts.

Searches run through a pluggable command runner (production: an ssh client
binary; tests: an in-process stub), so the secure channel is deployment
configuration, not logic. The remote prefilter is an optimization only:
results are always re-filtered locally against the full request predicate.
Results are cached durably on disk, keyed by the canonical request
serialization, which also preserves raw data that later ages out remotely.

Flow file format: one record per line, ten whitespace-separated fields
``start_epoch duration proto src_ip src_port dst_ip dst_port packets bytes
flags``; ``#``-prefixed comment lines are skipped.
"""

import datetime as dt
import hashlib
import json
import os
import subprocess
import threading
from dataclasses import dataclass

from .errors import (
    InjectionRejected,
    ParseError,
    TemplateError,
    TransportError,
    UnknownIncident,
    UnknownSource,
    UnresolvedHost,
)
from .ingest import is_ipv4_literal
from .store import AuditEntry, IncidentStore
from .timeutil import UTC, iso_utc, to_utc, utcnow

PROTO_NAMES = ("tcp", "udp", "icmp")
PLACEHOLDERS = ("{path}", "{ip}", "{start}", "{end}")

WINDOW_SPANS = {
    "hour": dt.timedelta(minutes=30),
    "day": dt.timedelta(hours=12),
    "week": dt.timedelta(days=3, hours=12),
}


@dataclass(frozen=True)
class FlowRecord:
    start: int  # epoch seconds, UTC
    duration: float
    protocol: str  # tcp | udp | icmp | numeric code as text
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    packets: int
    bytes: int
    flags: str

    def to_line(self) -> str:
        return (
            f"{self.start} {self.duration!r} {self.protocol} "
            f"{self.src_ip} {self.src_port} {self.dst_ip} {self.dst_port} "
            f"{self.packets} {self.bytes} {self.flags}"
        )


def parse_flow_line(line: str) -> FlowRecord:
    """Parse one canonical flow line; trailing whitespace tolerated.

    ParseError carries the index of the offending field.
    """
    fields = line.split()
    parsed = []
    converters = (
        ("start", _to_int), ("duration", _to_duration), ("proto", _to_proto),
        ("src_ip", _to_ip), ("src_port", _to_port), ("dst_ip", _to_ip),
        ("dst_port", _to_port), ("packets", _to_count), ("bytes", _to_count),
        ("flags", str),
    )
    for index, (name, conv) in enumerate(converters):
        if index >= len(fields):
            raise ParseError(f"missing field {index} ({name})", field=index)
        try:
            parsed.append(conv(fields[index]))
        except ValueError:
            raise ParseError(
                f"bad field {index} ({name}): {fields[index]!r}", field=index
            ) from None
    if len(fields) > 10:
        raise ParseError(f"expected 10 fields, got {len(fields)}", field=10)
    return FlowRecord(*parsed)


def parse_flow_text(text: str) -> tuple[list[FlowRecord], int]:
    """Parse a flow file body, skipping comments; returns (records, error count)."""
    records = []
    errors = 0
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            records.append(parse_flow_line(stripped))
        except ParseError:
            errors += 1
    return records, errors


def _to_int(text: str) -> int:
    return int(text)


def _to_duration(text: str) -> float:
    value = float(text)
    if value < 0:
        raise ValueError("negative duration")
    return value


def _to_proto(text: str) -> str:
    lowered = text.lower()
    if lowered in PROTO_NAMES:
        return lowered
    code = int(text)
    if not 0 <= code <= 255:
        raise ValueError("protocol code out of range")
    return str(code)


def _to_ip(text: str) -> str:
    if not is_ipv4_literal(text):
        raise ValueError("not an IPv4 literal")
    return text


def _to_port(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 65535:
        raise ValueError("port out of range")
    return value


def _to_count(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError("negative count")
    return value


@dataclass(frozen=True)
class LogSource:
    source_id: str
    display_name: str
    transport: str  # local | remote
    path_pattern: str  # may contain {date}
    command_template: str  # must contain {path} {ip} {start} {end}
    endpoint: str | None = None  # remote only
    cache_ttl: int = 0  # seconds; 0 = never expire

    def __post_init__(self):
        if self.transport not in ("local", "remote"):
            raise TemplateError(f"unknown transport: {self.transport!r}")
        if not self.path_pattern:
            raise TemplateError("path_pattern must be non-empty")
        missing = [p for p in PLACEHOLDERS if p not in self.command_template]
        if missing:
            raise TemplateError(
                f"command_template missing placeholder(s): {' '.join(missing)}"
            )


@dataclass(frozen=True)
class SearchRequest:
    """A filtered flow search; ip matches source OR destination."""

    source_id: str
    ip: str
    start: dt.datetime
    end: dt.datetime  # window is [start, end)
    port: int | None = None
    max_records: int = 100000

    def __post_init__(self):
        if not is_ipv4_literal(self.ip):
            raise InjectionRejected(f"ip is not a strict IPv4 literal: {self.ip!r}")
        object.__setattr__(self, "start", to_utc(self.start))
        object.__setattr__(self, "end", to_utc(self.end))
        if self.start >= self.end:
            raise ValueError("window start must precede end")
        if self.port is not None and not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.max_records < 1:
            raise ValueError("max_records must be >= 1")

    @property
    def start_epoch(self) -> int:
        return int(self.start.timestamp())

    @property
    def end_epoch(self) -> int:
        return int(self.end.timestamp())

    def canonical(self) -> str:
        """Unique serialization of the logical request; the cache key."""
        port = "" if self.port is None else str(self.port)
        return (
            f"source={self.source_id}&ip={self.ip}&port={port}"
            f"&start={self.start_epoch}&end={self.end_epoch}"
            f"&max={self.max_records}"
        )

    def key_digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("ascii")).hexdigest()

    def matches(self, record: FlowRecord) -> bool:
        if record.src_ip != self.ip and record.dst_ip != self.ip:
            return False
        if not self.start_epoch <= record.start < self.end_epoch:
            return False
        if self.port is not None:
            if record.src_port != self.port and record.dst_port != self.port:
                return False
        return True


@dataclass
class SearchResult:
    request: SearchRequest
    records: list[FlowRecord]
    truncated: bool
    fetched_at: str  # ISO-8601 UTC
    from_cache: bool
    parse_errors: int


def build_search_command(source: LogSource, req: SearchRequest) -> str:
    """Substitute path/ip/start/end into the source's command template.

    Every substituted argument is individually single-quoted; ip and window
    are validated as strict literals first, so nothing shell-active can reach
    the transport. Date placeholders expand to one path per day covered by
    the window.
    """
    missing = [p for p in PLACEHOLDERS if p not in source.command_template]
    if missing:
        raise TemplateError(
            f"command_template missing placeholder(s): {' '.join(missing)}"
        )
    if not is_ipv4_literal(req.ip):
        raise InjectionRejected(f"ip is not a strict IPv4 literal: {req.ip!r}")
    start, end = req.start_epoch, req.end_epoch
    paths = []
    for day in _days_covered(req.start, req.end):
        path = source.path_pattern.replace("{date}", day.isoformat())
        if path not in paths:
            paths.append(path)
    quoted_paths = " ".join(_quote(p) for p in paths)
    command = source.command_template
    command = command.replace("{path}", quoted_paths)
    command = command.replace("{ip}", _quote(req.ip))
    command = command.replace("{start}", _quote(str(start)))
    command = command.replace("{end}", _quote(str(end)))
    return command


def _days_covered(start: dt.datetime, end: dt.datetime) -> list[dt.date]:
    last = (end - dt.timedelta(seconds=1)).astimezone(UTC).date()
    day = start.astimezone(UTC).date()
    days = []
    while day <= last:
        days.append(day)
        day += dt.timedelta(days=1)
    return days


def _quote(value: str) -> str:
    if "'" in value or "\x00" in value or "\n" in value:
        raise InjectionRejected(f"unquotable argument: {value!r}")
    return "'" + value + "'"


class LocalCommandRunner:
    """Runs search commands on this host via the shell."""

    def run(self, endpoint: str | None, command: str) -> tuple[int, str]:
        try:
            proc = subprocess.run(
                ["/bin/sh", "-c", command],
                capture_output=True, text=True, timeout=300,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise TransportError(f"local command failed: {exc}") from None
        return proc.returncode, proc.stdout


class SshCommandRunner:
    """Runs search commands on a remote host through an ssh client binary.

    Assumes the channel (keys, known_hosts, hardening) is configured at
    deployment level; this class only dispatches the command.
    """

    def __init__(self, ssh_binary: str = "ssh", options: tuple[str, ...] = ("-T",)):
        self.ssh_binary = ssh_binary
        self.options = tuple(options)

    def run(self, endpoint: str | None, command: str) -> tuple[int, str]:
        if not endpoint:
            raise TransportError("remote source has no endpoint configured")
        argv = [self.ssh_binary, *self.options, endpoint, command]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=600)
        except (OSError, subprocess.SubprocessError) as exc:
            raise TransportError(f"ssh invocation failed: {exc}") from None
        return proc.returncode, proc.stdout


class FlowSearchCache:
    """Durable, content-addressed result cache.

    Layout: ``<dir>/<key-digest>.flows`` (records in flow-file format) plus
    ``<key-digest>.meta`` (JSON header), so cached results are directly
    inspectable with ordinary tools.
    """

    def __init__(self, directory):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)

    def _paths(self, digest: str) -> tuple[str, str]:
        base = os.path.join(self.directory, digest)
        return base + ".flows", base + ".meta"

    def store(self, result: SearchResult, ttl: int) -> None:
        flows_path, meta_path = self._paths(result.request.key_digest())
        meta = {
            "request": result.request.canonical(),
            "fetched_at": result.fetched_at,
            "truncated": result.truncated,
            "parse_errors": result.parse_errors,
            "ttl": ttl,
            "records": len(result.records),
        }
        body = "".join(r.to_line() + "\n" for r in result.records)
        for path, payload in ((flows_path, body), (meta_path, json.dumps(meta))):
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(tmp, path)

    def lookup(self, req: SearchRequest, now: dt.datetime | None = None
               ) -> SearchResult | None:
        flows_path, meta_path = self._paths(req.key_digest())
        try:
            with open(meta_path, encoding="utf-8") as handle:
                meta = json.load(handle)
            with open(flows_path, encoding="utf-8") as handle:
                body = handle.read()
        except (OSError, json.JSONDecodeError):
            return None
        if meta.get("request") != req.canonical():
            return None
        ttl = meta.get("ttl", 0)
        if ttl:
            now = now or utcnow()
            fetched = dt.datetime.strptime(
                meta["fetched_at"], "%Y-%m-%dT%H:%M:%SZ"
            ).replace(tzinfo=UTC)
            if (now - fetched).total_seconds() >= ttl:
                return None
        records, _ = parse_flow_text(body)
        return SearchResult(
            request=req, records=records, truncated=bool(meta["truncated"]),
            fetched_at=meta["fetched_at"], from_cache=True,
            parse_errors=int(meta["parse_errors"]),
        )

    def evict_expired(self, now: dt.datetime | None = None) -> int:
        """Remove entries past a nonzero ttl; returns the count removed."""
        now = now or utcnow()
        removed = 0
        for name in os.listdir(self.directory):
            if not name.endswith(".meta"):
                continue
            meta_path = os.path.join(self.directory, name)
            try:
                with open(meta_path, encoding="utf-8") as handle:
                    meta = json.load(handle)
            except (OSError, json.JSONDecodeError):
                continue
            ttl = meta.get("ttl", 0)
            if not ttl:
                continue
            fetched = dt.datetime.strptime(
                meta["fetched_at"], "%Y-%m-%dT%H:%M:%SZ"
            ).replace(tzinfo=UTC)
            if (now - fetched).total_seconds() >= ttl:
                for victim in (meta_path, meta_path[: -len(".meta")] + ".flows"):
                    try:
                        os.remove(victim)
                    except OSError:
                        pass
                removed += 1
        return removed


class FlowCorrelator:
    """Dispatches cached, locally re-filtered searches against log sources.

    Per-source concurrency is bounded to protect log servers, and duplicate
    concurrent misses for one key coalesce into a single remote execution.
    """

    def __init__(
        self,
        sources: list[LogSource],
        cache_dir,
        runner=None,
        store: IncidentStore | None = None,
        clock=utcnow,
        max_parallel_per_source: int = 2,
    ):
        self._sources = {s.source_id: s for s in sources}
        self.cache = FlowSearchCache(cache_dir)
        self._runner = runner
        self._local_runner = LocalCommandRunner()
        self._remote_runner = SshCommandRunner()
        self.store = store
        self.clock = clock
        self._semaphores = {
            sid: threading.BoundedSemaphore(max_parallel_per_source)
            for sid in self._sources
        }
        self._key_locks: dict[str, threading.Lock] = {}
        self._key_guard = threading.Lock()

    def sources(self) -> list[LogSource]:
        return [self._sources[k] for k in sorted(self._sources)]

    def source(self, source_id: str) -> LogSource:
        try:
            return self._sources[source_id]
        except KeyError:
            raise UnknownSource(f"no such log source: {source_id!r}") from None

    def _lock_for(self, digest: str) -> threading.Lock:
        with self._key_guard:
            return self._key_locks.setdefault(digest, threading.Lock())

    def _run(self, source: LogSource, command: str) -> tuple[int, str]:
        runner = self._runner
        if runner is None:
            runner = (self._local_runner if source.transport == "local"
                      else self._remote_runner)
        with self._semaphores[source.source_id]:
            return runner.run(source.endpoint, command)

    def execute_search(self, req: SearchRequest, actor: str = "system"
                       ) -> SearchResult:
        """Serve from cache, or run the search remotely and cache the result."""
        source = self.source(req.source_id)
        now = self.clock()
        cached = self.cache.lookup(req, now=now)
        if cached is not None:
            return cached
        with self._lock_for(req.key_digest()):
            cached = self.cache.lookup(req, now=now)
            if cached is not None:
                return cached
            command = build_search_command(source, req)
            code, output = self._run(source, command)
            if code != 0:
                raise TransportError(
                    f"search command exited {code} on source {source.source_id}"
                )
            records, parse_errors = parse_flow_text(output)
            matched = []
            truncated = False
            for record in records:
                if not req.matches(record):
                    continue
                if len(matched) >= req.max_records:
                    truncated = True
                    break
                matched.append(record)
            result = SearchResult(
                request=req, records=matched, truncated=truncated,
                fetched_at=iso_utc(now), from_cache=False,
                parse_errors=parse_errors,
            )
            self.cache.store(result, source.cache_ttl)
            if self.store is not None:
                self.store.record_audit(AuditEntry(
                    iso_utc(now), actor, "search",
                    f"source:{source.source_id}", req.canonical(),
                ))
            return result

    def correlate_incident_flows(self, incident_id: int, source_id: str,
                                 window_kind: str, actor: str = "system"
                                 ) -> SearchResult:
        """Drill-down search centered on an incident's host and time."""
        if self.store is None:
            raise UnknownIncident("no incident store attached")
        if window_kind not in WINDOW_SPANS:
            raise ValueError(f"window_kind must be one of {sorted(WINDOW_SPANS)}")
        incident = self.store.get_incident(incident_id)
        if incident is None:
            raise UnknownIncident(f"no such incident: {incident_id}")
        host = self.store.get_host(incident.host_id)
        if host is None or host.ip is None:
            raise UnresolvedHost(
                f"incident {incident_id} host has no known ip"
            )
        center = dt.datetime.strptime(
            incident.date, "%Y-%m-%dT%H:%M:%SZ"
        ).replace(tzinfo=UTC)
        span = WINDOW_SPANS[window_kind]
        req = SearchRequest(source_id=source_id, ip=host.ip,
                            start=center - span, end=center + span)
        return self.execute_search(req, actor=actor)
