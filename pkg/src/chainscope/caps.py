"""Resource caps for the combinatorial searches.

Every potentially exponential search (class enumeration, subset automaton,
walk enumeration, layer iteration) runs under an explicit budget.  The
default budget is 2**20 elementary states; it can be overridden per call or
globally through the ``CHAINSCOPE_CAP`` environment variable.  Exact
separated-set computation has its own, much smaller, defaults because branch
and bound on a conflict graph is the expensive step.
"""

from __future__ import annotations

import os

from .errors import CapExceeded, ConfigError

DEFAULT_STATE_CAP = 1 << 20
DEFAULT_EXACT_SET_CAP = 64
DEFAULT_EXACT_DEPTH_CAP = 8

_ENV_VAR = "CHAINSCOPE_CAP"


def state_cap(override: int | None = None) -> int:
    """Resolve the state budget: explicit override > env var > default."""
    if override is not None:
        if not isinstance(override, int) or override <= 0:
            raise ConfigError(f"state cap must be a positive integer, got {override!r}")
        return override
    env = os.environ.get(_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{_ENV_VAR} must be an integer, got {env!r}") from None
        if value <= 0:
            raise ConfigError(f"{_ENV_VAR} must be positive, got {value}")
        return value
    return DEFAULT_STATE_CAP


def charge(counter: int, amount: int, cap: int, what: str) -> int:
    """Add ``amount`` to ``counter``; raise CapExceeded past ``cap``."""
    counter += amount
    if counter > cap:
        raise CapExceeded(what, cap, counter)
    return counter
