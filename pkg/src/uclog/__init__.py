"""uclog: security data management service.

Centralizes alerts and incident records in a queryable store, correlates
them on demand with raw flow logs on remote hosts, and serves forensic
reports and statistics over an HTTP API, an admin CLI, and a web console.
"""

__version__ = "0.1.0"
