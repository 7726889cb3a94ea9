"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto process exit codes: ConfigError -> 2,
CapExceeded -> 3, InternalInconsistencyError -> 4.
"""

from __future__ import annotations


class ChainscopeError(Exception):
    """Base class for all chainscope errors."""


class ConfigError(ChainscopeError):
    """Invalid input, malformed file, or violated precondition."""


class CapExceeded(ChainscopeError):
    """A resource cap (class count, automaton states, walk count) was hit."""

    def __init__(self, what: str, limit: int, attempted: int | None = None):
        self.what = what
        self.limit = limit
        self.attempted = attempted
        detail = f"{what}: cap {limit} exceeded"
        if attempted is not None:
            detail += f" (needed {attempted})"
        super().__init__(detail)


class InternalInconsistencyError(ChainscopeError):
    """Two internally derived facts disagree; indicates a bug, not bad input."""
