#!/usr/bin/env python3
"""Fixture-loaded service for the console e2e suite.

Builds a self-contained deployment under --root (store, accounts, a local
flow-log source with three planted flows around one incident), pins the
service clock, and serves the API plus the built console bundle.
"""

import argparse
import datetime as dt
import os
import sys

import uvicorn

from uclog.api import build_state, create_app
from uclog.config import load_config
from uclog.store import IncidentStore
from uclog.timeutil import UTC, parse_iso

FIXED_NOW = "2004-03-10T12:00:00Z"
DRILLDOWN_CENTER = dt.datetime(2004, 3, 3, 12, 0, 0, tzinfo=UTC)
DRILLDOWN_IP = "198.51.100.9"
DRILLDOWN_TARGETS = ("10.0.0.20", "10.0.0.21", "10.0.0.22")


def build_fixture(root: str) -> str:
    logs = os.path.join(root, "logs")
    os.makedirs(logs, exist_ok=True)
    config_path = os.path.join(root, "uclog.ini")
    dist = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                        os.pardir, "dist")
    with open(config_path, "w", encoding="utf-8") as handle:
        handle.write(
            "[store]\npath = store.db\n"
            "[api]\n"
            f"static_dir = {os.path.abspath(dist)}\n"
            "[correlator]\ncache_dir = cache\n"
            "[source.locallogs]\n"
            "display_name = Local flow logs\n"
            "transport = local\n"
            f"path_pattern = {logs}/{{date}}.flows\n"
            "command_template = grep -hF {ip} {path} || true; : {start} {end}\n")

    center = int(DRILLDOWN_CENTER.timestamp())
    lines = ["# planted e2e corpus"]
    for i, target in enumerate(DRILLDOWN_TARGETS):
        lines.append(f"{center - 600 + i * 300} 1.5 tcp {DRILLDOWN_IP} "
                     f"{40000 + i} {target} 22 10 1200 S")
    lines.append(f"{center - 7200} 1.0 tcp {DRILLDOWN_IP} 40100 "
                 "10.0.0.30 22 5 600 S")
    with open(os.path.join(logs, "2004-03-03.flows"), "w") as handle:
        handle.write("\n".join(lines) + "\n")

    store = IncidentStore(os.path.join(root, "store.db"))
    wxyz = store.upsert_host("w.x.y.z", ip="10.0.0.5",
                             owner_name="Pat Operator",
                             owner_email="pat@ops.example.net")
    db = store.upsert_host("db01.core.campus.net", ip="10.0.0.6")
    attacker = store.upsert_host("attacker.ext.example.net", ip=DRILLDOWN_IP)
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
    store.close()
    return config_path


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--root", required=True)
    parser.add_argument("--port", type=int, default=8799)
    args = parser.parse_args()

    config_path = build_fixture(args.root)
    config = load_config(config_path)
    state = build_state(config, clock=lambda: parse_iso(FIXED_NOW))
    state.authenticator.create_user("root", "rootpw", "admin")
    state.authenticator.create_user("viewer", "viewpw", "normal")
    app = create_app(state)
    print(f"E2E_CONFIG={config_path}", flush=True)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
