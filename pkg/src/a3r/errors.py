"""Exception taxonomy shared by the whole engine.

CLI exit-code mapping: validation/configuration problems exit 1,
I/O and on-disk format problems exit 2 (``exit_code`` attribute).
"""


class A3RError(Exception):
    exit_code = 1


class ValidationError(A3RError):
    """Structurally parseable input that violates a documented contract."""


class PreconditionError(ValidationError):
    """Operation invoked in a state its contract forbids."""


class ShapeError(ValidationError):
    """Dimension mismatch between embedding operands."""


class ConfigError(A3RError):
    """Bad or inconsistent configuration values."""


class ProviderError(A3RError):
    """An embedding provider could not serve a request."""


class DegenerateInputError(A3RError):
    """Numerically degenerate input (all-zero matrix, zero vector)."""


class DegenerateRowError(DegenerateInputError):
    """A specific row has (near-)zero norm and cannot be normalized."""

    def __init__(self, row: int, norm: float):
        super().__init__(f"row {row} has norm {norm:.3e}, cannot normalize")
        self.row = row


class UndefinedAPError(A3RError):
    """Average precision is undefined because the relevant set is empty."""


class FormatError(A3RError):
    """File does not conform to its on-disk format."""

    exit_code = 2


class CorruptionError(FormatError):
    """Header parsed but the payload is inconsistent with it."""


class DataError(FormatError):
    """Payload decoded but contains invalid values (NaN/Inf)."""


class ManifestParseError(FormatError):
    """A JSON-lines file has a malformed line."""

    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no
