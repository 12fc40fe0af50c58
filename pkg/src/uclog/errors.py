"""Domain exception types shared across the package."""


class UCLogError(Exception):
    """Base class for expected domain errors (CLI exit code 1)."""


class ConstraintViolation(UCLogError):
    """A record violates a schema constraint (length, format, uniqueness)."""


class ReferentialIntegrity(UCLogError):
    """An operation references a record that does not exist."""


class ParseError(UCLogError):
    """Input text could not be parsed; ``field`` is set for positional formats."""

    def __init__(self, reason: str, field: int | None = None):
        super().__init__(reason)
        self.reason = reason
        self.field = field


class SenderRejected(UCLogError):
    """Alert sender failed validation against the configured allow-list."""


class UnknownType(UCLogError):
    """No incident type with the given name."""


class UnknownHost(UCLogError):
    """No host with the given name."""


class NoIncidents(UCLogError):
    """The host exists but has no incidents to aggregate."""


class UnknownIncident(UCLogError):
    """No incident with the given id."""


class UnresolvedHost(UCLogError):
    """The incident's host has no known IP to correlate on."""


class UnknownSource(UCLogError):
    """No registered log source with the given id."""


class UnknownReport(UCLogError):
    """No report with the given name in the catalog."""


class ReportParamError(UCLogError):
    """Missing, unknown, or malformed report parameter."""


class AuthFailed(UCLogError):
    """Credentials rejected (uniform for unknown user and wrong password)."""


class Forbidden(UCLogError):
    """The session's role does not grant the required capability."""


class QueryRejected(UCLogError):
    """Free-form query refused by the read-only pre-parse gate."""


class QueryError(UCLogError):
    """Free-form query failed in the backend; message passed through."""


class TemplateError(UCLogError):
    """Search command template is missing a required placeholder."""


class InjectionRejected(UCLogError):
    """Search parameter failed strict literal validation."""


class TransportError(UCLogError):
    """Remote command transport failed (connection or exit status)."""
