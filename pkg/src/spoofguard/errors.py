"""Exception types shared across the package.

The CLI maps ValidationError (and subclasses) to exit code 1 and
OS-level I/O failures to exit code 2.
"""


class SpoofguardError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SpoofguardError):
    """Invalid input: bad parameters, mismatched shapes, malformed manifests."""


class FormatError(ValidationError):
    """Unsupported or corrupt file content (bad magic, truncated data, depth)."""


class ParameterError(ValidationError):
    """A numeric parameter is outside its documented domain."""


class DegenerateInputError(ValidationError):
    """Input is formally valid but the requested quantity is undefined on it."""
