"""Single-file configuration: INI sections for store, ingest, api, auth,
correlator, and one ``[source.<id>]`` block per log source.

Relative paths are resolved against the config file's directory so a config
file fully describes a deployment. The ``UCLOG_CONFIG`` environment variable
supplies the path when ``--config`` is not given.
"""

import configparser
import os
from dataclasses import dataclass, field

from .errors import UCLogError
from .flows import LogSource

ENV_VAR = "UCLOG_CONFIG"


@dataclass
class AppConfig:
    store_path: str = "uclog.db"
    drop_dir: str = "alerts"
    allowed_senders: tuple[str, ...] = ()
    api_listen: str = "127.0.0.1:8737"
    session_ttl_secs: int = 3600
    strict_binary: bool = False
    admin_user: str = "admin"
    admin_password: str | None = None
    cache_dir: str = "flowcache"
    max_parallel_per_source: int = 2
    static_dir: str | None = None
    sources: list[LogSource] = field(default_factory=list)

    @property
    def listen_host(self) -> str:
        host, _, _ = self.api_listen.partition(":")
        return host or "127.0.0.1"

    @property
    def listen_port(self) -> int:
        _, _, port = self.api_listen.partition(":")
        return int(port) if port else 8737


def load_config(path: str | None = None) -> AppConfig:
    """Load configuration; defaults apply when no path is given or set."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return AppConfig()
    if not os.path.isfile(path):
        raise UCLogError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(value: str) -> str:
        return value if os.path.isabs(value) else os.path.join(base, value)

    cfg = AppConfig()
    if parser.has_section("store"):
        raw = parser.get("store", "path", fallback=cfg.store_path)
        cfg.store_path = raw if raw == ":memory:" else resolve(raw)
    else:
        cfg.store_path = resolve(cfg.store_path)
    if parser.has_section("ingest"):
        cfg.drop_dir = resolve(parser.get("ingest", "drop_dir", fallback=cfg.drop_dir))
        senders = parser.get("ingest", "allowed_senders", fallback="")
        cfg.allowed_senders = tuple(
            s.strip() for s in senders.split(",") if s.strip()
        )
    else:
        cfg.drop_dir = resolve(cfg.drop_dir)
    if parser.has_section("api"):
        cfg.api_listen = parser.get("api", "listen", fallback=cfg.api_listen)
        cfg.session_ttl_secs = parser.getint(
            "api", "session_ttl_secs", fallback=cfg.session_ttl_secs)
        static = parser.get("api", "static_dir", fallback=None)
        cfg.static_dir = resolve(static) if static else None
    if parser.has_section("auth"):
        cfg.strict_binary = parser.getboolean(
            "auth", "strict_binary", fallback=cfg.strict_binary)
        cfg.admin_user = parser.get("auth", "admin_user", fallback=cfg.admin_user)
        cfg.admin_password = parser.get("auth", "admin_password", fallback=None)
    if parser.has_section("correlator"):
        cfg.cache_dir = resolve(
            parser.get("correlator", "cache_dir", fallback=cfg.cache_dir))
        cfg.max_parallel_per_source = parser.getint(
            "correlator", "max_parallel_per_source",
            fallback=cfg.max_parallel_per_source)
    else:
        cfg.cache_dir = resolve(cfg.cache_dir)

    for section in parser.sections():
        if not section.startswith("source."):
            continue
        source_id = section[len("source."):]
        get = lambda key, fallback=None: parser.get(section, key, fallback=fallback)
        pattern = get("path_pattern")
        template = get("command_template")
        if not pattern or not template:
            raise UCLogError(
                f"[{section}] needs path_pattern and command_template")
        cfg.sources.append(LogSource(
            source_id=source_id,
            display_name=get("display_name", source_id),
            transport=get("transport", "remote"),
            endpoint=get("endpoint"),
            path_pattern=pattern,
            command_template=template,
            cache_ttl=parser.getint(section, "cache_ttl", fallback=0),
        ))
    return cfg
