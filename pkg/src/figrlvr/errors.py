"""Exception hierarchy for the figurative RLVR toolkit.

Library code raises these; only the CLI turns them into messages and exit codes.
"""

from __future__ import annotations


class FigRlvrError(Exception):
    """Base class for all toolkit errors."""


class RejectedInputError(FigRlvrError, ValueError):
    """Raised when an operation receives arguments outside its contract."""


class TraceParseError(FigRlvrError):
    """Raised when a teacher trace or label cannot be parsed.

    Attributes:
        reason: One of ``missing_steps`` or ``unparseable_label``.
    """

    def __init__(self, reason: str, message: str):
        super().__init__(f"{reason}: {message}")
        self.reason = reason


class FormatError(FigRlvrError):
    """Raised when a student output violates the think/answer tag contract."""


class SchemaError(FigRlvrError):
    """Raised when an ingested row cannot be mapped to a Sample."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class CorpusReadError(FigRlvrError):
    """Raised when a persisted JSONL file has a corrupted record."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class VersionMismatchError(FigRlvrError):
    """Raised when a persisted file has an unexpected schema or version header."""


class GatewayError(FigRlvrError):
    """Base class for generation-service failures."""


class GatewayTransportError(GatewayError):
    """Network failure or timeout that persisted through all retries."""


class GatewayServiceError(GatewayError):
    """The service answered with a non-success status."""

    def __init__(self, status_code: int, message: str):
        super().__init__(f"HTTP {status_code}: {message}")
        self.status_code = status_code


class GatewayPayloadError(GatewayError):
    """The service answered 2xx but the body carried no completion text."""


class ConfigValidationError(FigRlvrError):
    """Raised when a run configuration has violations."""

    def __init__(self, violations: list[str]):
        joined = "\n".join(f"  - {v}" for v in violations)
        super().__init__(f"Invalid run configuration:\n{joined}")
        self.violations = list(violations)


class StageError(FigRlvrError):
    """Raised when a pipeline stage fails; the original exception is chained."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
