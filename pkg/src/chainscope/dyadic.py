"""Exact dyadic rationals.

Every metric quantity in this package is a ``Dyadic``: an integer numerator
over a power-of-two denominator.  All arithmetic (+, -, *, comparisons) is
exact integer arithmetic; there is deliberately no division.  Values hash
compatibly with Python's numeric tower, so ``Dyadic(1, 1) == 0.5`` and both
hash alike.
"""

from __future__ import annotations

import math
import sys as _sys

from .errors import ConfigError

__all__ = ["Dyadic", "dyadic_max", "dyadic_min"]


class Dyadic:
    """num / 2**exp with num an int and exp a non-negative int.

    Normal form: exp == 0 when num == 0; otherwise num is odd or exp == 0.
    The constructor accepts a negative ``exp`` (meaning num * 2**|exp|).
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if isinstance(num, bool) or not isinstance(num, int):
            raise TypeError(f"numerator must be int, got {type(num).__name__}")
        if isinstance(exp, bool) or not isinstance(exp, int):
            raise TypeError(f"exponent must be int, got {type(exp).__name__}")
        if exp < 0:
            num <<= -exp
            exp = 0
        if num == 0:
            exp = 0
        elif exp > 0:
            trailing = (num & -num).bit_length() - 1
            shift = trailing if trailing < exp else exp
            if shift:
                num >>= shift
                exp -= shift
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """2**k for any integer k."""
        return cls(1, -k)

    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            return cls(value)
        raise TypeError(f"cannot coerce {type(value).__name__} to Dyadic")

    @classmethod
    def from_json(cls, obj) -> "Dyadic":
        if isinstance(obj, int) and not isinstance(obj, bool):
            return cls(obj)
        if (
            isinstance(obj, (list, tuple))
            and len(obj) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in obj)
        ):
            num, exp = obj
            if exp < 0:
                raise ConfigError(f"dyadic exponent must be >= 0 in JSON, got {obj!r}")
            return cls(num, exp)
        raise ConfigError(f"expected [numerator, exponent] pair, got {obj!r}")

    def as_json(self) -> list:
        return [self.num, self.exp]

    # -- arithmetic ---------------------------------------------------

    def _align(self, other: "Dyadic") -> tuple[int, int, int]:
        e = self.exp if self.exp >= other.exp else other.exp
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(b - a, e)

    def __mul__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dyadic(abs(self.num), self.exp)

    def scale_pow2(self, k: int) -> "Dyadic":
        """self * 2**k, exactly."""
        return Dyadic(self.num, self.exp - k)

    # -- comparisons --------------------------------------------------

    def _cmp(self, other) -> int:
        other = Dyadic.coerce(other)
        a, b, _ = self._align(other)
        return (a > b) - (a < b)

    def __eq__(self, other):
        if isinstance(other, float):
            return float(self) == other
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def __lt__(self, other):
        if isinstance(other, float):
            return float(self) < other
        try:
            return self._cmp(other) < 0
        except TypeError:
            return NotImplemented

    def __le__(self, other):
        if isinstance(other, float):
            return float(self) <= other
        try:
            return self._cmp(other) <= 0
        except TypeError:
            return NotImplemented

    def __gt__(self, other):
        if isinstance(other, float):
            return float(self) > other
        try:
            return self._cmp(other) > 0
        except TypeError:
            return NotImplemented

    def __ge__(self, other):
        if isinstance(other, float):
            return float(self) >= other
        try:
            return self._cmp(other) >= 0
        except TypeError:
            return NotImplemented

    def __hash__(self):
        # Numeric-tower hash: hash(p / 2**e) uses the modular inverse of the
        # denominator mod sys.hash_info.modulus (the modulus is prime).
        mod = _sys.hash_info.modulus
        inv = pow((1 << self.exp) % mod, mod - 2, mod)
        h = (abs(self.num) % mod) * inv % mod
        if self.num < 0:
            h = -h
        return -2 if h == -1 else h

    def __bool__(self):
        return self.num != 0

    # -- conversions / display ---------------------------------------

    def __float__(self):
        return math.ldexp(self.num, -self.exp)

    def is_integer(self) -> bool:
        return self.exp == 0

    def __repr__(self):
        if self.exp == 0:
            return f"Dyadic({self.num})"
        return f"Dyadic({self.num}/{1 << self.exp})"

    def __str__(self):
        if self.exp == 0:
            return str(self.num)
        return f"{self.num}/{1 << self.exp}"


def dyadic_max(values) -> Dyadic:
    values = list(values)
    if not values:
        raise ConfigError("dyadic_max of empty sequence")
    best = Dyadic.coerce(values[0])
    for v in values[1:]:
        v = Dyadic.coerce(v)
        if v > best:
            best = v
    return best


def dyadic_min(values) -> Dyadic:
    values = list(values)
    if not values:
        raise ConfigError("dyadic_min of empty sequence")
    best = Dyadic.coerce(values[0])
    for v in values[1:]:
        v = Dyadic.coerce(v)
        if v < best:
            best = v
    return best
