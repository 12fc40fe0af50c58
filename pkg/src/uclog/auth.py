"""Accounts, sessions, and the role capability matrix.

Two roles: admin sees everything; normal users get incident browsing with
privileged fields removed, canned reports, and TSV export. Capabilities not
in the matrix are denied for everyone. With ``strict_binary`` enabled the
normal role collapses to deny-everything (all-or-nothing mode).
"""

import hashlib
import hmac
import secrets
from dataclasses import dataclass
from datetime import datetime, timedelta

from .errors import AuthFailed
from .store import AuditEntry, IncidentStore
from .timeutil import iso_utc, utcnow

ROLES = ("admin", "normal")

NORMAL_CAPABILITIES = frozenset({
    "view_incidents",
    "view_reports",
    "export_tsv",
})

ADMIN_CAPABILITIES = NORMAL_CAPABILITIES | frozenset({
    "run_custom_query",
    "view_flows",
    "view_raw_email",
    "view_owner_contact",
    "manage_users",
    "view_audit",
    "trigger_ingest",
    "view_sources",
})


def authorize(role: str, capability: str, strict_binary: bool = False) -> bool:
    """Capability decision; deny-by-default for unknown capabilities."""
    if role == "admin":
        return capability in ADMIN_CAPABILITIES
    if role == "normal" and not strict_binary:
        return capability in NORMAL_CAPABILITIES
    return False


class PasswordHasher:
    """Salted PBKDF2-SHA256 digests behind a stable text encoding."""

    def __init__(self, iterations: int = 60000):
        self.iterations = iterations

    def hash(self, password: str) -> str:
        salt = secrets.token_hex(16)
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), bytes.fromhex(salt),
            self.iterations,
        ).hex()
        return f"pbkdf2_sha256${self.iterations}${salt}${digest}"

    def verify(self, password: str, encoded: str) -> bool:
        try:
            scheme, iterations, salt, expected = encoded.split("$")
            if scheme != "pbkdf2_sha256":
                return False
            actual = hashlib.pbkdf2_hmac(
                "sha256", password.encode("utf-8"), bytes.fromhex(salt),
                int(iterations),
            ).hex()
        except (ValueError, TypeError):
            return False
        return hmac.compare_digest(actual, expected)


@dataclass(frozen=True)
class Session:
    token: str
    username: str
    role: str
    expires_at: datetime


class SessionManager:
    """In-memory session registry with injectable clock."""

    def __init__(self, ttl_secs: int = 3600, clock=utcnow):
        self.ttl_secs = ttl_secs
        self.clock = clock
        self._sessions: dict[str, Session] = {}

    def create(self, username: str, role: str) -> Session:
        session = Session(
            token=secrets.token_urlsafe(32),
            username=username,
            role=role,
            expires_at=self.clock() + timedelta(seconds=self.ttl_secs),
        )
        self._sessions[session.token] = session
        return session

    def get(self, token: str) -> Session | None:
        session = self._sessions.get(token)
        if session is None:
            return None
        if self.clock() >= session.expires_at:
            self._sessions.pop(token, None)
            return None
        return session

    def revoke(self, token: str) -> None:
        self._sessions.pop(token, None)


class Authenticator:
    """Credential checks with a login audit entry either way."""

    def __init__(self, store: IncidentStore, sessions: SessionManager,
                 hasher: PasswordHasher | None = None):
        self.store = store
        self.sessions = sessions
        self.hasher = hasher or PasswordHasher()

    def authenticate(self, username: str, password: str) -> Session:
        user = self.store.get_user(username)
        ok = user is not None and self.hasher.verify(password, user.password_digest)
        self.store.record_audit(AuditEntry(
            iso_utc(self.sessions.clock()), username, "login",
            f"user:{username}", "success" if ok else "failure",
        ))
        if not ok:
            raise AuthFailed("invalid credentials")
        return self.sessions.create(user.username, user.role)

    def create_user(self, username: str, password: str, role: str,
                    actor: str = "system"):
        return self.store.add_user(
            username, self.hasher.hash(password), role, actor=actor)
