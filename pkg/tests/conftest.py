"""Shared fixtures and dataset builders."""

import datetime as dt
import random
import shutil
from pathlib import Path

import pytest

from uclog.store import IncidentStore
from uclog.timeutil import UTC

FIXTURES = Path(__file__).parent / "fixtures"

TYPE_POOL = [
    ("scan", "port scan"),
    ("password", "brute force password attempt"),
    ("dos", "denial of service"),
    ("incband", "excessive bandwidth use"),
    ("rootkit", "rootkit fingerprint"),
    ("phish", "phishing lure"),
    ("worm", "worm propagation"),
    ("misuse", "acceptable-use violation"),
]

BASE = dt.datetime(2004, 6, 15, tzinfo=UTC)


def make_random_store(seed: int, max_incidents: int = 1000,
                      max_hosts: int = 50, max_types: int = 8) -> IncidentStore:
    """Random but reproducible store: skewed host activity, dates spanning
    roughly two years around mid-2004 (including some future dates)."""
    rng = random.Random(seed)
    store = IncidentStore()
    n_hosts = rng.randint(1, max_hosts)
    hosts = []
    for i in range(n_hosts):
        ip = f"10.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(254) + 1}" \
            if rng.random() < 0.8 else None
        hosts.append(store.upsert_host(f"h{i:02d}.d{i % 7}.example.org", ip=ip))
    n_types = rng.randint(1, max_types)
    types = [store.upsert_type(name, desc) for name, desc in TYPE_POOL[:n_types]]
    emails = [
        store.insert_email(dt.date(2004, rng.randint(1, 12), rng.randint(1, 28)))
        for _ in range(rng.randint(1, 30))
    ]
    n_incidents = rng.randint(0, max_incidents)
    lo = int((BASE - dt.timedelta(days=500)).timestamp())
    hi = int((BASE + dt.timedelta(days=60)).timestamp())
    for _ in range(n_incidents):
        host = hosts[int(abs(rng.gauss(0, n_hosts / 3))) % n_hosts]
        when = dt.datetime.fromtimestamp(rng.randrange(lo, hi), tz=UTC)
        store.insert_incident(
            when, host.host_id,
            types[rng.randrange(n_types)].type_id,
            emails[rng.randrange(len(emails))].email_id,
            comments=f"synthetic event {rng.randrange(10**6)}",
        )
    return store


def random_clock(rng: random.Random) -> dt.datetime:
    offset = rng.randint(-200 * 86400, 200 * 86400)
    return (BASE + dt.timedelta(seconds=offset)).replace(microsecond=0)


def populate_fixture_store(store: IncidentStore) -> None:
    """Small deterministic dataset shared by API/CLI/e2e tests.

    Includes the drill-down pivot: host attacker.ext.example.net with a scan
    incident at 2004-03-03T12:00:00Z.
    """
    wxyz = store.upsert_host("w.x.y.z", ip="10.0.0.5",
                             owner_name="Pat Operator",
                             owner_email="pat@ops.example.net")
    db = store.upsert_host("db01.core.campus.net", ip="10.0.0.6")
    attacker = store.upsert_host("attacker.ext.example.net", ip="198.51.100.9")
    web = store.upsert_host("web.dmz.campus.net", ip="10.0.0.7")
    scan = store.upsert_type("scan", "port scan")
    password = store.upsert_type("password", "brute force password attempt")
    dos = store.upsert_type("dos", "denial of service")
    mail = store.insert_email(dt.date(2004, 3, 1),
                              source="HOST: w.x.y.z\nTYPE: scan\n",
                              comments="initial alert")
    rows = [
        ("2004-03-01T10:00:00Z", wxyz, scan, "first scan seen"),
        ("2004-03-02T11:30:00Z", db, dos, "flood on 5432/tcp"),
        ("2004-03-03T12:00:00Z", attacker, scan, "outbound sweep"),
        ("2004-03-04T09:15:00Z", web, password, "ssh dictionary run"),
        ("2004-03-05T02:10:00Z", wxyz, password, "followed earlier scan"),
        ("2004-03-05T14:45:00Z", db, scan, "slow scan"),
        ("2004-03-06T16:20:00Z", web, dos, "http flood"),
        ("2004-03-07T08:05:00Z", wxyz, scan, "repeat scan"),
    ]
    for date_text, host, itype, comment in rows:
        store.insert_incident(date_text, host.host_id, itype.type_id,
                              mail.email_id, comments=comment)


DRILLDOWN_CENTER = dt.datetime(2004, 3, 3, 12, 0, 0, tzinfo=UTC)
DRILLDOWN_IP = "198.51.100.9"
DRILLDOWN_TARGETS = ("10.0.0.20", "10.0.0.21", "10.0.0.22")


def write_drilldown_corpus(path: Path) -> None:
    """Flow file with three planted flows from the fixture attacker inside
    the hour window around the drill-down incident, plus noise outside it."""
    center = int(DRILLDOWN_CENTER.timestamp())
    lines = ["# planted drill-down corpus"]
    for i, target in enumerate(DRILLDOWN_TARGETS):
        lines.append(f"{center - 600 + i * 300} 1.5 tcp {DRILLDOWN_IP} "
                     f"{40000 + i} {target} 22 10 1200 S")
    lines.append(f"{center - 7200} 1.0 tcp {DRILLDOWN_IP} 40100 10.0.0.30 22 5 600 S")
    lines.append(f"{center} 2.0 udp 10.0.0.31 53 10.0.0.32 53 2 300 -")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture
def store() -> IncidentStore:
    return IncidentStore()


@pytest.fixture
def fixture_store() -> IncidentStore:
    s = IncidentStore()
    populate_fixture_store(s)
    return s


@pytest.fixture
def alert_drop_dir(tmp_path: Path) -> Path:
    """Copy of the committed 50-message corpus in a scratch drop directory."""
    drop = tmp_path / "drop"
    (drop / "incoming").mkdir(parents=True)
    for src in sorted((FIXTURES / "alerts" / "incoming").iterdir()):
        shutil.copy(src, drop / "incoming" / src.name)
    return drop


@pytest.fixture
def malformed_files() -> list[Path]:
    return sorted((FIXTURES / "alerts_malformed").iterdir())
