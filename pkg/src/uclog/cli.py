"""Operator command line: a thin client over the core package.

Every subcommand's output is derivable from the corresponding module
operation plus the formatting documented here; no logic lives only in the
CLI. Exit codes: 0 success, 1 expected domain error, 2 usage error.
"""

import argparse
import os
import sys
import time

from .config import ENV_VAR, AppConfig, load_config
from .errors import ReportParamError, UCLogError
from .flows import FlowCorrelator, SearchRequest
from .ingest import AlertIngestor, AllowListValidator
from .reports import (
    REPORT_CATALOG,
    QueryEngine,
    export_tsv,
    plot_spec,
)
from .store import IncidentStore
from .timeutil import parse_iso, utcnow


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uclog",
        description="Security data management service admin CLI",
    )
    parser.add_argument("--config", metavar="PATH", default=None,
                        help=f"config file (default: ${ENV_VAR})")
    parser.add_argument("--now", metavar="ISO", default=None,
                        help="override the clock for reproducible reports")
    # accepted before or after the subcommand; SUPPRESS keeps the subparser
    # from overwriting a value given in the global position
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH",
                        default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    shared.add_argument("--now", metavar="ISO",
                        default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("init", parents=[shared],
                   help="create the store and default admin account")

    serve = sub.add_parser("serve", parents=[shared], help="run the HTTP API")
    serve.add_argument("--listen", metavar="HOST:PORT",
                       help="override api.listen from the config")

    ingest = sub.add_parser("ingest", parents=[shared],
                            help="sweep the alert drop directory")
    ingest.add_argument("--dir", metavar="PATH",
                        help="drop directory (default: ingest.drop_dir)")
    mode = ingest.add_mutually_exclusive_group()
    mode.add_argument("--once", action="store_true", default=True,
                      help="sweep once and exit (default)")
    mode.add_argument("--watch", type=int, metavar="SECS",
                      help="sweep repeatedly every SECS seconds")

    report = sub.add_parser("report", parents=[shared],
                            help="run a report from the catalog")
    report.add_argument("name", help="report name (see catalog)")
    report.add_argument("--param", action="append", default=[],
                        metavar="K=V", help="report parameter, repeatable")
    report.add_argument("--tsv", metavar="PATH",
                        help="write TSV to PATH ('-' for stdout)")
    report.add_argument("--plot", metavar="PATH",
                        help="write the chart as a plot-spec file")

    flows = sub.add_parser("flows", parents=[shared],
                           help="search a flow log source")
    flows.add_argument("--source", required=True, help="log source id")
    flows.add_argument("--ip", required=True, help="IPv4 address to match")
    flows.add_argument("--from", dest="start", required=True, metavar="ISO")
    flows.add_argument("--to", dest="end", required=True, metavar="ISO")
    flows.add_argument("--port", type=int, help="match source or dest port")
    flows.add_argument("--max", type=int, default=100000,
                       help="record cap (default 100000)")

    user = sub.add_parser("user", parents=[shared], help="manage accounts")
    user_sub = user.add_subparsers(dest="user_command", required=True)
    add = user_sub.add_parser("add", help="create an account")
    add.add_argument("username")
    add.add_argument("--role", choices=("admin", "normal"), default="normal")
    add.add_argument("--password", required=True)
    user_sub.add_parser("list", help="list accounts")

    audit = sub.add_parser("audit", parents=[shared],
                           help="inspect the audit log")
    audit_sub = audit.add_subparsers(dest="audit_command", required=True)
    tail = audit_sub.add_parser("tail", help="show the most recent entries")
    tail.add_argument("-n", type=int, default=20, metavar="N")

    schema = sub.add_parser("schema", parents=[shared], help="schema tools")
    schema_sub = schema.add_subparsers(dest="schema_command", required=True)
    schema_sub.add_parser("dump", help="print the logical schema")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        now = parse_iso(args.now) if args.now else None
        return _dispatch(args, config, now, parser)
    except UCLogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, config: AppConfig, now, parser) -> int:
    if args.command == "init":
        return _cmd_init(config)
    if args.command == "serve":
        return _cmd_serve(args, config)
    if args.command == "ingest":
        return _cmd_ingest(args, config)
    if args.command == "report":
        return _cmd_report(args, config, now, parser)
    if args.command == "flows":
        return _cmd_flows(args, config, now)
    if args.command == "user":
        return _cmd_user(args, config)
    if args.command == "audit":
        return _cmd_audit(args, config)
    if args.command == "schema":
        store = IncidentStore(config.store_path)
        sys.stdout.write(store.schema_dump())
        return 0
    parser.error(f"unknown command: {args.command}")
    return 2


def _cmd_init(config: AppConfig) -> int:
    store = IncidentStore(config.store_path)
    if config.admin_password:
        from .auth import PasswordHasher

        if store.get_user(config.admin_user) is None:
            store.add_user(config.admin_user,
                           PasswordHasher().hash(config.admin_password),
                           "admin", actor="init")
            print(f"created store {config.store_path} "
                  f"with admin user {config.admin_user!r}")
        else:
            print(f"store {config.store_path} ready "
                  f"(admin user {config.admin_user!r} already exists)")
    else:
        print(f"created store {config.store_path} "
              "(no auth.admin_password configured; no admin user created)")
    return 0


def _cmd_serve(args, config: AppConfig) -> int:
    import uvicorn

    from .api import build_state, create_app

    if args.listen:
        config.api_listen = args.listen
    app = create_app(build_state(config))
    uvicorn.run(app, host=config.listen_host, port=config.listen_port,
                log_level="info")
    return 0


def _cmd_ingest(args, config: AppConfig) -> int:
    store = IncidentStore(config.store_path)
    ingestor = AlertIngestor(
        store, sender_validator=AllowListValidator(config.allowed_senders))
    drop_dir = args.dir or config.drop_dir
    while True:
        report = ingestor.scan_drop_directory(drop_dir)
        print(report.summary())
        if args.watch is None:
            return 0
        time.sleep(args.watch)


def _cmd_report(args, config: AppConfig, now, parser) -> int:
    from .reports import run_report

    if args.name not in REPORT_CATALOG:
        print(f"unknown report: {args.name!r}", file=sys.stderr)
        print("available reports:", file=sys.stderr)
        for spec in REPORT_CATALOG.values():
            params = " ".join(
                f"{p.name}{'*' if p.required else ''}" for p in spec.params)
            print(f"  {spec.name:<18} {spec.title}"
                  + (f"  [params: {params}]" if params else ""),
                  file=sys.stderr)
        return 2
    raw_params = {}
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep or not key:
            print(f"bad --param (expected K=V): {item!r}", file=sys.stderr)
            return 2
        raw_params[key] = value
    engine = QueryEngine(IncidentStore(config.store_path))
    try:
        table, chart = run_report(engine, args.name, raw_params,
                                  now=now or utcnow())
    except ReportParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.tsv:
        text = export_tsv(table)
        if args.tsv == "-":
            sys.stdout.write(text)
        else:
            with open(args.tsv, "w", encoding="utf-8") as handle:
                handle.write(text)
    if args.plot:
        if chart is None:
            print(f"report {args.name} has no chart series", file=sys.stderr)
            return 1
        with open(args.plot, "w", encoding="utf-8") as handle:
            handle.write(plot_spec(chart))
    if not args.tsv and not args.plot:
        _print_table(table)
    return 0


def _print_table(table) -> None:
    names = table.column_names
    widths = [len(n) for n in names]
    formatted = []
    for row in table.rows:
        cells = ["" if v is None else str(v) for v in row]
        formatted.append(cells)
        widths = [max(w, len(c)) for w, c in zip(widths, cells)]
    print("  ".join(n.ljust(w) for n, w in zip(names, widths)).rstrip())
    for cells in formatted:
        print("  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip())


def _cmd_flows(args, config: AppConfig, now) -> int:
    store = IncidentStore(config.store_path)
    correlator = FlowCorrelator(
        config.sources, config.cache_dir, store=store,
        clock=(lambda: now) if now else utcnow,
        max_parallel_per_source=config.max_parallel_per_source)
    request = SearchRequest(
        source_id=args.source, ip=args.ip,
        start=parse_iso(args.start), end=parse_iso(args.end),
        port=args.port, max_records=args.max)
    result = correlator.execute_search(request, actor="cli")
    for record in result.records:
        print(record.to_line())
    print(f"records={len(result.records)} truncated={str(result.truncated).lower()} "
          f"from_cache={str(result.from_cache).lower()} "
          f"parse_errors={result.parse_errors}", file=sys.stderr)
    return 0


def _cmd_user(args, config: AppConfig) -> int:
    store = IncidentStore(config.store_path)
    if args.user_command == "add":
        from .auth import PasswordHasher

        store.add_user(args.username, PasswordHasher().hash(args.password),
                       args.role, actor="cli")
        print(f"added user {args.username!r} role={args.role}")
        return 0
    for account in store.list_users():
        print(f"{account.username}\t{account.role}")
    return 0


def _cmd_audit(args, config: AppConfig) -> int:
    store = IncidentStore(config.store_path)
    for entry in store.audit_tail(args.n):
        print(f"{entry.timestamp}\t{entry.actor}\t{entry.action}\t"
              f"{entry.entity}\t{entry.detail}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
