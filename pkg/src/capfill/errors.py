"""Exception types shared across the package.

Exit-code mapping for the CLI lives in cli.py: input/format problems
(ParseError, SchemaError, StructureError) map to exit 2, operational
problems (everything else) to exit 1.
"""


class CapfillError(Exception):
    """Base class for all package errors."""


class ParseError(CapfillError):
    """A file could not be parsed. Carries file path and line number."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{loc} {message}".strip())
        self.path = path
        self.line = line


class SchemaError(CapfillError):
    """Well-formed input with an invalid value (unknown type name, bad depth...)."""


class StructureError(CapfillError):
    """A dependency parse violates tree invariants (cycles, multiple roots...)."""


class DomainError(CapfillError):
    """Numeric inputs outside the documented domain (corrupted statistics)."""


class CapacityError(CapfillError):
    """Exhaustive enumeration would exceed the configured limit."""


class ContractError(CapfillError):
    """Caller broke an API contract (e.g. assignment does not match template)."""
