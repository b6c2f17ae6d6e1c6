"""Exception hierarchy shared across the package.

Errors are split by how the CLI maps them to exit codes: validation and
usage problems (exit 1), file-format and I/O problems (exit 2), and
per-instance degeneracies that only abort a run when nothing else scored
(exit 3).
"""


class TigerEvalError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TigerEvalError):
    """Invalid input data or invalid usage of an operation."""


class DomainError(ValidationError):
    """Mathematically undefined input, e.g. a zero-norm vector."""


class ManifestError(ValidationError):
    """Manifest is malformed or references missing/mismatched tensors."""


class DatasetFormatError(ValidationError):
    """A JSONL dataset record violates the schema.

    Carries the 1-based line number and, when known, the offending field.
    """

    def __init__(self, line: int, message: str, field: str | None = None):
        self.line = line
        self.field = field
        where = f"line {line}" + (f", field '{field}'" if field else "")
        super().__init__(f"{where}: {message}")


class DegenerateInstanceError(TigerEvalError):
    """An instance cannot be scored (e.g. all reference gains clamp to zero).

    These are reported and counted per instance, never silently scored.
    """


class UndefinedCorrelationError(TigerEvalError):
    """Rank correlation is undefined (zero variance in an input vector)."""


class TensorFormatError(TigerEvalError):
    """Base class for malformed tensor-container files.

    ``offset`` is the byte position at which the problem was detected.
    """

    def __init__(self, message: str, *, offset: int, path=None):
        self.offset = offset
        self.path = path
        prefix = f"{path}: " if path is not None else ""
        super().__init__(f"{prefix}{message} (at byte offset {offset})")


class BadMagicError(TensorFormatError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(TensorFormatError):
    """Container version field is not supported."""


class BadHeaderError(TensorFormatError):
    """Rank or dimension fields violate the format invariants."""


class TruncatedFileError(TensorFormatError):
    """File ends before the declared payload is complete."""

    def __init__(self, message: str, *, offset: int, expected: int, actual: int, path=None):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{message}: expected {expected} bytes, found {actual}",
            offset=offset,
            path=path,
        )


class TrailingDataError(TensorFormatError):
    """File contains bytes beyond the declared payload."""


class NonFinitePayloadError(TensorFormatError):
    """Payload contains a NaN or infinite value."""
