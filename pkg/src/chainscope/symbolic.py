"""Eventually periodic symbolic words, their exact sup metric, and window
compilation into finite systems.

A ``SymbolicPoint`` stores a one- or two-sided word with Dyadic symbol
values: a finite center block plus repeating periods.  The weighted sup
metric (weight 2^-|n| two-sided, 2^-i with i >= 1 one-sided) is computed
exactly: the scan range is bounded by the center extents plus the lcm of
the periods, with an early stop once remaining weights cannot beat the
current maximum.

``compile_symbolic`` quotients a shift space at window depth T into a
``FiniteSystem`` whose class distances equal the exact metric between the
canonical representatives (the window term dominates every tail term), and
returns the canonical representative for each class.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import caps
from .core import FiniteSystem
from .dyadic import Dyadic
from .errors import CapExceeded, ConfigError

__all__ = [
    "SymbolicPoint",
    "SymbolicSystem",
    "metric_eval",
    "words_equal",
    "compile_symbolic",
    "periodic_word",
    "one_sided_word",
]

_INT64_GUARD = 1 << 62


def _coerce_symbols(values) -> tuple[Dyadic, ...]:
    return tuple(Dyadic.coerce(v) for v in values)


@dataclass(frozen=True)
class SymbolicPoint:
    """One- or two-sided eventually periodic word with Dyadic symbols.

    One-sided words occupy indices 1, 2, ...; ``center`` starts at index 1
    and ``left_period`` must be empty.  Two-sided words occupy all integers;
    ``center`` starts at index ``offset``, ``right_period`` repeats beyond
    it and ``left_period`` repeats before it (aligned so that index
    ``offset - 1`` reads the last entry of ``left_period``).
    """

    sided: str
    center: tuple = ()
    right_period: tuple = ()
    left_period: tuple = ()
    offset: int = 0

    def __post_init__(self):
        if self.sided not in ("one", "two"):
            raise ConfigError(f"sided must be 'one' or 'two', got {self.sided!r}")
        object.__setattr__(self, "center", _coerce_symbols(self.center))
        object.__setattr__(self, "right_period", _coerce_symbols(self.right_period))
        object.__setattr__(self, "left_period", _coerce_symbols(self.left_period))
        if not self.right_period:
            raise ConfigError("right_period must be non-empty")
        if self.sided == "one":
            if self.left_period:
                raise ConfigError("one-sided words take no left_period")
            if self.offset != 0:
                raise ConfigError("one-sided words take no offset")
        else:
            if not self.left_period:
                raise ConfigError("two-sided words need a non-empty left_period")

    def at(self, n: int) -> Dyadic:
        """Symbol at index n (n >= 1 for one-sided words)."""
        if self.sided == "one":
            if n < 1:
                raise ConfigError(f"one-sided index must be >= 1, got {n}")
            i = n - 1
            if i < len(self.center):
                return self.center[i]
            return self.right_period[(i - len(self.center)) % len(self.right_period)]
        i = n - self.offset
        if 0 <= i < len(self.center):
            return self.center[i]
        if i >= len(self.center):
            return self.right_period[(i - len(self.center)) % len(self.right_period)]
        return self.left_period[i % len(self.left_period)]

    def shift(self, k: int = 1) -> "SymbolicPoint":
        """The word reading k steps to the right: (shift^k x)(n) = x(n + k)."""
        if self.sided == "two":
            return SymbolicPoint(
                "two", self.center, self.right_period, self.left_period, self.offset - k
            )
        if k < 0:
            raise ConfigError("one-sided words cannot be shifted backwards")
        point = self
        for _ in range(k):
            if point.center:
                point = SymbolicPoint("one", point.center[1:], point.right_period)
            else:
                rp = point.right_period
                point = SymbolicPoint("one", (), rp[1:] + rp[:1])
        return point

    def symbols(self) -> set:
        return set(self.center) | set(self.right_period) | set(self.left_period)

    def window(self, lo: int, hi: int) -> tuple:
        """Symbols at indices lo..hi inclusive."""
        return tuple(self.at(n) for n in range(lo, hi + 1))


def periodic_word(pattern, offset: int = 0) -> SymbolicPoint:
    """Two-sided purely periodic word repeating ``pattern``; pattern[0] sits
    at index ``offset`` and the periodic alignment extends both ways."""
    pattern = _coerce_symbols(pattern)
    if not pattern:
        raise ConfigError("pattern must be non-empty")
    return SymbolicPoint("two", pattern, pattern, pattern, offset)


def one_sided_word(prefix, period) -> SymbolicPoint:
    return SymbolicPoint("one", tuple(prefix), tuple(period))


@dataclass(frozen=True)
class SymbolicSystem:
    """A shift space: alphabet of Dyadic symbol values plus a constraint.

    Constraint catalogue: "full" (no constraint) and "monotone"
    (|x_{n+1}| <= |x_n|, one-sided).  Inverse-limit spaces are handled by
    the tower builders in :mod:`chainscope.constructions`, not here.
    """

    alphabet: tuple
    sided: str
    constraint: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "alphabet", _coerce_symbols(self.alphabet))
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise ConfigError("alphabet must be a non-empty set of distinct values")
        if self.sided not in ("one", "two"):
            raise ConfigError(f"sided must be 'one' or 'two', got {self.sided!r}")
        if self.constraint not in ("full", "monotone"):
            raise ConfigError(f"unknown constraint {self.constraint!r}")
        if self.constraint == "monotone" and self.sided != "one":
            raise ConfigError("the monotone constraint is one-sided only")

    def admits_transition(self, a: Dyadic, b: Dyadic) -> bool:
        if self.constraint == "full":
            return True
        return abs(b) <= abs(a)

    def admissible_window(self, window) -> bool:
        window = _coerce_symbols(window)
        if any(sym not in self.alphabet for sym in window):
            return False
        return all(self.admits_transition(a, b) for a, b in zip(window, window[1:]))

    def contains(self, point: SymbolicPoint) -> bool:
        if point.sided != self.sided:
            return False
        return all(sym in set(self.alphabet) for sym in point.symbols())

    def metric(self, x: SymbolicPoint, y: SymbolicPoint) -> Dyadic:
        return metric_eval(x, y, space=self)


def words_equal(x: SymbolicPoint, y: SymbolicPoint) -> bool:
    return metric_eval(x, y) == 0


def metric_eval(x: SymbolicPoint, y: SymbolicPoint, space: SymbolicSystem | None = None) -> Dyadic:
    """Exact sup_n weight(n) * |x(n) - y(n)|.

    Weights: 2^-|n| (two-sided, n in Z) or 2^-n (one-sided, n >= 1).
    """
    if x.sided != y.sided:
        raise ConfigError("cannot compare a one-sided word with a two-sided word")
    if space is not None:
        allowed = set(space.alphabet)
        if not (x.symbols() <= allowed and y.symbols() <= allowed):
            raise ConfigError("word symbols fall outside the space alphabet")
        if space.sided != x.sided:
            raise ConfigError("word sidedness does not match the space")
    maxdiff = Dyadic(0)
    for a in x.symbols():
        for b in y.symbols():
            diff = abs(a - b)
            if diff > maxdiff:
                maxdiff = diff
    if maxdiff == 0:
        return Dyadic(0)
    best = Dyadic(0)

    if x.sided == "one":
        core = max(len(x.center), len(y.center))
        period = math.lcm(len(x.right_period), len(y.right_period))
        horizon = core + period
        for n in range(1, horizon + 1):
            if maxdiff.scale_pow2(-n) <= best:
                break
            term = abs(x.at(n) - y.at(n)).scale_pow2(-n)
            if term > best:
                best = term
        return best

    right_core = max(x.offset + len(x.center), y.offset + len(y.center), 0)
    left_core = min(x.offset, y.offset, 0)
    right_h = right_core + math.lcm(len(x.right_period), len(y.right_period))
    left_h = left_core - math.lcm(len(x.left_period), len(y.left_period))
    horizon = max(right_h, -left_h)
    for m in range(0, horizon + 1):
        if m > 0 and maxdiff.scale_pow2(-m) <= best:
            break
        for n in (m, -m) if m else (0,):
            if not left_h <= n <= right_h:
                continue
            term = abs(x.at(n) - y.at(n)).scale_pow2(-m)
            if term > best:
                best = term
    return best


# -- window compilation ------------------------------------------------


def _enumerate_windows(space: SymbolicSystem, length: int, cap: int) -> list[tuple]:
    if space.constraint == "full":
        total = len(space.alphabet) ** length
        if total > cap:
            raise CapExceeded("compiled class count", cap, total)
        return list(itertools.product(space.alphabet, repeat=length))
    # monotone: non-increasing modulus along the window
    windows: list[tuple] = []
    alphabet = list(space.alphabet)

    def extend(prefix: tuple):
        if len(windows) > cap:
            raise CapExceeded("compiled class count", cap, len(windows))
        if len(prefix) == length:
            windows.append(prefix)
            return
        for sym in alphabet:
            if not prefix or space.admits_transition(prefix[-1], sym):
                extend(prefix + (sym,))

    extend(())
    if len(windows) > cap:
        raise CapExceeded("compiled class count", cap, len(windows))
    return windows


def compile_symbolic(
    space: SymbolicSystem,
    depth: int,
    map_spec: str = "shift",
    factor=None,
    class_cap: int | None = None,
) -> tuple[FiniteSystem, dict[int, SymbolicPoint]]:
    """Quotient the shift space at window depth T.

    One-sided: classes are admissible length-T windows; the canonical
    representative extends the window by repeating its last symbol (legal
    for both catalogued constraints).  Two-sided: classes are length-(2T+1)
    windows; the canonical representative is the periodic extension of the
    whole window, and the compiled shift is the corresponding rotation.

    The class distance equals the exact metric between canonical
    representatives; the quotient error against arbitrary representatives is
    bounded by 2^-T, recorded as ``resolution`` in the metadata.

    ``map_spec``: "shift", or "factor-shift" with ``factor`` a callable
    SymbolicPoint -> SymbolicPoint applied after the shift (full shift only).
    """
    if not isinstance(depth, int) or depth < 1:
        raise ConfigError(f"depth must be a positive int, got {depth!r}")
    if map_spec not in ("shift", "factor-shift"):
        raise ConfigError(f"map_spec must be 'shift' or 'factor-shift', got {map_spec!r}")
    if map_spec == "factor-shift":
        if factor is None:
            raise ConfigError("factor-shift compilation needs a factor rule")
        if space.constraint != "full":
            raise ConfigError("factor-shift compilation is supported on the full shift only")
    cap = caps.state_cap(class_cap)

    length = depth if space.sided == "one" else 2 * depth + 1
    windows = _enumerate_windows(space, length, cap)
    index = {w: i for i, w in enumerate(windows)}

    points: dict[int, SymbolicPoint] = {}
    for i, w in enumerate(windows):
        if space.sided == "one":
            points[i] = SymbolicPoint("one", w, (w[-1],))
        else:
            points[i] = SymbolicPoint("two", w, w, w, -depth)

    image = np.empty(len(windows), dtype=np.int64)
    for i, w in enumerate(windows):
        if space.sided == "one":
            shifted = w[1:] + (w[-1],)
        else:
            shifted = w[1:] + (w[0],)
        if map_spec == "factor-shift":
            raw = points[i].shift(1)
            mapped = factor(raw)
            lo, hi = (1, depth) if space.sided == "one" else (-depth, depth)
            shifted = mapped.window(lo, hi)
        target = index.get(shifted)
        if target is None:
            raise ConfigError("image window leaves the compiled class set")
        image[i] = target

    # exact class distances at a single shared scale
    sexp = max(sym.exp for sym in space.alphabet)
    weights = list(range(1, depth + 1)) if space.sided == "one" else [abs(n) for n in range(-depth, depth + 1)]
    maxw = max(weights)
    sym_scaled = {sym: sym.num << (sexp - sym.exp) for sym in space.alphabet}
    arr = np.array([[sym_scaled[sym] for sym in w] for w in windows], dtype=np.int64)
    maxabs = int(np.abs(arr).max()) if arr.size else 0
    if (2 * maxabs) << maxw >= _INT64_GUARD:
        raise ConfigError("symbol values too large for exact compilation at this depth")
    n_classes = len(windows)
    dnum = np.zeros((n_classes, n_classes), dtype=np.int64)
    for pos, wexp in enumerate(weights):
        col = arr[:, pos]
        diff = np.abs(col[:, None] - col[None, :]) << (maxw - wexp)
        np.maximum(dnum, diff, out=dnum)

    labels = [",".join(str(sym) for sym in w) for w in windows]
    metadata = {
        "kind": "compiled-shift",
        "sided": space.sided,
        "constraint": space.constraint,
        "depth": depth,
        "map_spec": map_spec,
        "resolution": Dyadic.pow2(-depth).as_json(),
    }
    system = FiniteSystem(dnum, sexp + maxw, image, labels, None, metadata)
    return system, points


def compiled_resolution(system: FiniteSystem) -> Dyadic:
    """The declared quotient error of a compiled system (2^-depth)."""
    res = system.metadata.get("resolution")
    if res is None:
        raise ConfigError("system carries no declared resolution")
    return Dyadic.from_json(res)
