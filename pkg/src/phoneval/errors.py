"""Error types shared across the package."""


class PhonevalError(Exception):
    """Base class for all errors raised by phoneval."""


class ValidationError(PhonevalError):
    """Input content failed validation (malformed format, inconsistent fields,
    violated preconditions). Maps to CLI exit code 1, while genuine I/O
    failures (missing/unreadable files) surface as OSError and map to exit
    code 2."""
