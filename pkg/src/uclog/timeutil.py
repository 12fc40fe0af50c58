"""UTC timestamp helpers.

All timestamps in the system are UTC at second resolution and serialize
as ``YYYY-MM-DDTHH:MM:SSZ``; naive inputs are interpreted as UTC.
"""

import datetime as dt

from .errors import ParseError

UTC = dt.timezone.utc


def utcnow() -> dt.datetime:
    return dt.datetime.now(tz=UTC).replace(microsecond=0)


def to_utc(value: dt.datetime) -> dt.datetime:
    """Coerce a datetime to aware UTC, truncated to whole seconds."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=UTC)
    return value.astimezone(UTC).replace(microsecond=0)


def iso_utc(value: dt.datetime) -> str:
    return to_utc(value).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_iso(text: str) -> dt.datetime:
    """Parse an ISO-8601 timestamp; accepts a trailing 'Z' and bare dates."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = dt.datetime.fromisoformat(raw)
    except ValueError:
        raise ParseError(f"unparseable timestamp: {text!r}") from None
    return to_utc(parsed)


def parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"unparseable date: {text!r}") from None
