"""Error hierarchy for memristor-audit.

Every error carries a machine-readable ``code``, the process ``exit_code``
the CLI maps it to, and a ``details`` dict that is serialized verbatim.
"""

from __future__ import annotations

from typing import Any


class AuditError(Exception):
    """Base class for all expected failures."""

    code = "audit_error"
    exit_code = 1

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_payload(self) -> dict[str, Any]:
        return {
            "error": {
                "code": self.code,
                "message": self.message,
                "details": self.details,
            }
        }


class SpecParseError(AuditError):
    """The experiment spec could not be read or does not have the right shape."""

    code = "spec_parse_error"
    exit_code = 2


class ConfigurationError(AuditError, ValueError):
    """Semantically invalid configuration (band, record length, cutoff)."""

    code = "configuration_error"
    exit_code = 3


class InadmissibleModelError(ConfigurationError):
    """Memristor model violates M(q) >= 0 somewhere; ``witness_q`` shows where."""

    code = "inadmissible_model"

    def __init__(self, message: str, witness_q: float, details: dict[str, Any] | None = None):
        merged = {"witness_q": witness_q}
        merged.update(details or {})
        super().__init__(message, merged)
        self.witness_q = witness_q


class ArgumentError(AuditError, ValueError):
    code = "argument_error"
    exit_code = 3


class ContractViolationError(AuditError):
    """A caller broke an element contract (e.g. noise on a noise-free resistor)."""

    code = "contract_violation"
    exit_code = 3


class ResultFileError(AuditError):
    code = "result_file_error"
    exit_code = 3
