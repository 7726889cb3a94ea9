"""Finite metric models: the point set, exact distance table, and map.

A ``FiniteSystem`` is N points with an exact symmetric distance table and a
total self-map.  Distances are stored as an int64 numerator matrix over one
shared power-of-two denominator, so every threshold comparison against a
``Dyadic`` bound reduces to one integer comparison (no rounding anywhere).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Dyadic
from .errors import ConfigError

__all__ = [
    "FiniteSystem",
    "AnalysisParams",
    "validate_system",
    "ball",
    "system_to_json",
    "system_from_json",
    "load_system",
    "dump_system",
]

_INT64_GUARD = 1 << 62


class FiniteSystem:
    """N points, exact NxN distance table, deterministic image map."""

    __slots__ = ("size", "labels", "invertible", "metadata", "_image", "_dnum", "_dexp")

    def __init__(
        self,
        dnum: np.ndarray,
        dexp: int,
        image,
        labels=None,
        invertible: bool | None = None,
        metadata: dict | None = None,
    ):
        dnum = np.asarray(dnum, dtype=np.int64)
        if dnum.ndim != 2 or dnum.shape[0] != dnum.shape[1]:
            raise ConfigError(f"distance table must be square, got shape {dnum.shape}")
        n = dnum.shape[0]
        if n == 0:
            raise ConfigError("system must have at least one point")
        if not isinstance(dexp, int) or dexp < 0:
            raise ConfigError(f"shared denominator exponent must be a non-negative int, got {dexp!r}")
        image = np.asarray(image, dtype=np.int64)
        if image.shape != (n,):
            raise ConfigError(f"image must be a length-{n} sequence, got shape {image.shape}")
        self.size = n
        self._dnum = dnum
        self._dexp = dexp
        self._image = image
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = [str(x) for x in labels]
        if len(labels) != n:
            raise ConfigError(f"expected {n} labels, got {len(labels)}")
        self.labels = labels
        if invertible is None:
            invertible = bool(np.array_equal(np.sort(image), np.arange(n)))
        self.invertible = bool(invertible)
        self.metadata = dict(metadata) if metadata else {}

    # -- construction helpers -----------------------------------------

    @classmethod
    def from_rows(
        cls,
        dist_rows,
        image,
        labels=None,
        invertible: bool | None = None,
        metadata: dict | None = None,
    ) -> "FiniteSystem":
        """Build from a row-major table of Dyadic (or int) distances."""
        rows = [[Dyadic.coerce(v) for v in row] for row in dist_rows]
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ConfigError("distance table must be square")
        dexp = 0
        for row in rows:
            for v in row:
                if v.exp > dexp:
                    dexp = v.exp
        dnum = np.empty((n, n), dtype=np.int64)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                scaled = v.num << (dexp - v.exp)
                if abs(scaled) >= _INT64_GUARD:
                    raise ConfigError(
                        f"distance at ({i},{j}) exceeds the 62-bit range at the shared scale 2^-{dexp}"
                    )
                dnum[i, j] = scaled
        return cls(dnum, dexp, image, labels, invertible, metadata)

    # -- exact distance access ----------------------------------------

    def dist(self, i: int, j: int) -> Dyadic:
        self._check_index(i)
        self._check_index(j)
        return Dyadic(int(self._dnum[i, j]), self._dexp)

    def _threshold(self, bound: Dyadic) -> int | None:
        """Integer t with (dnum <= t) == (dist <= bound), or None for 'all'.

        Because dnum sits at scale 2^-dexp, comparing to b/2^s is exact after
        one shift: the same t also satisfies (dnum > t) == (dist > bound).
        """
        bound = Dyadic.coerce(bound)
        if self._dexp >= bound.exp:
            t = bound.num << (self._dexp - bound.exp)
        else:
            t = bound.num >> (bound.exp - self._dexp)
            # Right shift floors toward -inf; for a <= b/2^s with integer a,
            # floor(b/2^s) is the exact threshold, so this stays exact.
        if t >= _INT64_GUARD:
            return None
        return t

    def dist_le(self, bound: Dyadic) -> np.ndarray:
        """Boolean matrix of dist(i, j) <= bound, computed exactly."""
        t = self._threshold(bound)
        if t is None:
            return np.ones((self.size, self.size), dtype=bool)
        return self._dnum <= t

    def dist_gt(self, bound: Dyadic) -> np.ndarray:
        t = self._threshold(bound)
        if t is None:
            return np.zeros((self.size, self.size), dtype=bool)
        return self._dnum > t

    def min_positive_distance(self) -> Dyadic | None:
        off = self._dnum[~np.eye(self.size, dtype=bool)] if self.size > 1 else np.array([], dtype=np.int64)
        pos = off[off > 0]
        if pos.size == 0:
            return None
        return Dyadic(int(pos.min()), self._dexp)

    def diameter(self) -> Dyadic:
        return Dyadic(int(self._dnum.max()), self._dexp)

    # -- map access ----------------------------------------------------

    @property
    def image(self) -> np.ndarray:
        return self._image

    def step(self, i: int) -> int:
        self._check_index(i)
        return int(self._image[i])

    def orbit(self, i: int) -> tuple[list[int], list[int]]:
        """Return (transient prefix, cycle) of the forward orbit of i."""
        self._check_index(i)
        seen: dict[int, int] = {}
        seq: list[int] = []
        v = i
        while v not in seen:
            seen[v] = len(seq)
            seq.append(v)
            v = int(self._image[v])
        t = seen[v]
        return seq[:t], seq[t:]

    def iterate(self, i: int, n: int) -> int:
        v = i
        for _ in range(n):
            v = int(self._image[v])
        return v

    def power(self, m: int) -> "FiniteSystem":
        """Same metric space under the m-fold composition of the map."""
        if not isinstance(m, int) or m < 1:
            raise ConfigError(f"power must be a positive int, got {m!r}")
        img = np.arange(self.size, dtype=np.int64)
        for _ in range(m):
            img = self._image[img]
        meta = dict(self.metadata)
        meta["power"] = m * int(meta.get("power", 1))
        return FiniteSystem(self._dnum, self._dexp, img, self.labels, None, meta)

    def inverse_image(self) -> np.ndarray:
        if not self.invertible:
            raise ConfigError("system is not invertible")
        inv = np.empty(self.size, dtype=np.int64)
        inv[self._image] = np.arange(self.size, dtype=np.int64)
        return inv

    def _check_index(self, i) -> None:
        if isinstance(i, bool) or not isinstance(i, (int, np.integer)):
            raise ConfigError(f"point index must be an int, got {type(i).__name__}")
        if not 0 <= i < self.size:
            raise ConfigError(f"point index {i} out of range for system of size {self.size}")

    def __repr__(self):
        kind = self.metadata.get("kind", "finite-system")
        return f"FiniteSystem(size={self.size}, kind={kind!r})"


def ball(system: FiniteSystem, x: int, eps: Dyadic) -> list[int]:
    """Indices of the closed eps-ball around x (x included)."""
    system._check_index(x)
    row = system.dist_le(eps)[x]
    return [int(i) for i in np.nonzero(row)[0]]


def restrict(system: FiniteSystem, nodes) -> tuple[FiniteSystem, list[int]]:
    """Subsystem on a forward-invariant node set; returns (system, node list).

    The returned list maps new indices back to the original ones.  Raises
    ConfigError when the set is not forward invariant (the restriction of the
    map would leave it).
    """
    keep = sorted({int(v) for v in nodes})
    if not keep:
        raise ConfigError("cannot restrict to an empty node set")
    for v in keep:
        system._check_index(v)
    position = {v: i for i, v in enumerate(keep)}
    for v in keep:
        if int(system.image[v]) not in position:
            raise ConfigError(
                f"node set is not forward invariant: image of {v} leaves it"
            )
    idx = np.array(keep, dtype=np.int64)
    sub = FiniteSystem(
        system._dnum[np.ix_(idx, idx)].copy(),
        system._dexp,
        np.array([position[int(system.image[v])] for v in keep], dtype=np.int64),
        labels=[system.labels[v] for v in keep] if system.labels else None,
        # An injective map restricted to a forward-invariant finite set is a
        # bijection of that set, so invertibility carries over.
        invertible=system.invertible,
        metadata=dict(system.metadata, restricted_from=len(keep)),
    )
    return sub, keep


def validate_system(
    system: FiniteSystem,
    triangle_mode: str = "auto",
    seed: int = 0,
    sample_pivots: int = 48,
) -> list[str]:
    """Return the list of violated metric-space/map invariants (empty iff valid).

    Triangle checking is exhaustive for sizes up to 300 (or triangle_mode
    'full'); beyond that a seeded pivot sample is used, each sampled triple
    still checked exactly.
    """
    if triangle_mode not in ("auto", "full", "sample"):
        raise ConfigError(f"triangle_mode must be auto|full|sample, got {triangle_mode!r}")
    n = system.size
    d = system._dnum
    violations: list[str] = []

    diag = np.diagonal(d)
    bad = np.nonzero(diag != 0)[0]
    if bad.size:
        violations.append(f"nonzero self-distance at point {int(bad[0])}")

    asym = np.argwhere(d != d.T)
    if asym.size:
        i, j = (int(v) for v in asym[0])
        violations.append(f"symmetry violated at ({i},{j})")

    neg = np.argwhere(d < 0)
    if neg.size:
        i, j = (int(v) for v in neg[0])
        violations.append(f"negative distance at ({i},{j})")

    offdiag_zero = np.argwhere((d == 0) & ~np.eye(n, dtype=bool))
    if offdiag_zero.size:
        i, j = (int(v) for v in offdiag_zero[0])
        violations.append(f"distinct points at distance 0: ({i},{j})")

    img = system._image
    out = np.nonzero((img < 0) | (img >= n))[0]
    if out.size:
        violations.append(f"image out of range at point {int(out[0])}")
    elif system.invertible and not np.array_equal(np.sort(img), np.arange(n)):
        violations.append("invertible flag set but image is not a bijection")

    full = triangle_mode == "full" or (triangle_mode == "auto" and n <= 300)
    if full:
        pivots = range(n)
    else:
        rng = random.Random(seed)
        count = min(sample_pivots, n)
        pivots = rng.sample(range(n), count)
    for k in pivots:
        # d(i,j) <= d(i,k) + d(k,j), checked in exact scaled integers.
        slack = d[:, k][:, None] + d[k, :][None, :]
        bad = np.argwhere(d > slack)
        if bad.size:
            i, j = (int(v) for v in bad[0])
            violations.append(f"triangle inequality violated at ({i},{k},{j})")
            break

    return violations


def _strictly_decreasing(values) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class AnalysisParams:
    """Bundle of tolerance/scale parameters used by reports and the CLI."""

    delta: Dyadic | None = None
    epsilon: Dyadic | None = None
    r: Dyadic | None = None
    b: float | None = None
    n: int | None = None
    N: int | None = None
    T: int | None = None
    delta_schedule: tuple = ()
    eps_schedule: tuple = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("delta", "epsilon", "r"):
            value = getattr(self, name)
            if value is not None:
                value = Dyadic.coerce(value)
                object.__setattr__(self, name, value)
                if not value > 0:
                    raise ConfigError(f"{name} must be positive, got {value}")
        for name in ("n", "N", "T"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, int) or value < 0):
                raise ConfigError(f"{name} must be a non-negative int, got {value!r}")
        for name in ("delta_schedule", "eps_schedule"):
            sched = tuple(Dyadic.coerce(v) for v in getattr(self, name))
            object.__setattr__(self, name, sched)
            if any(not v > 0 for v in sched):
                raise ConfigError(f"{name} entries must be positive")
            if not _strictly_decreasing(sched):
                raise ConfigError(f"{name} must be strictly decreasing")

    def as_json(self) -> dict:
        out: dict = {}
        for name in ("delta", "epsilon", "r"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value.as_json()
        if self.b is not None:
            out["b"] = self.b
        for name in ("n", "N", "T"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.delta_schedule:
            out["delta_schedule"] = [v.as_json() for v in self.delta_schedule]
        if self.eps_schedule:
            out["eps_schedule"] = [v.as_json() for v in self.eps_schedule]
        if self.extras:
            out["extras"] = self.extras
        return out


# -- JSON system format ------------------------------------------------


def system_to_json(system: FiniteSystem) -> dict:
    n = system.size
    dist = [
        [Dyadic(int(system._dnum[i, j]), system._dexp).as_json() for j in range(n)]
        for i in range(n)
    ]
    return {
        "size": n,
        "dist": dist,
        "image": [int(v) for v in system._image],
        "labels": list(system.labels),
        "invertible": system.invertible,
    }


def system_from_json(obj) -> FiniteSystem:
    if not isinstance(obj, dict):
        raise ConfigError("system JSON must be an object")
    try:
        n = obj["size"]
        dist = obj["dist"]
        image = obj["image"]
    except KeyError as exc:
        raise ConfigError(f"system JSON missing key {exc.args[0]!r}") from None
    if not isinstance(n, int) or n <= 0:
        raise ConfigError(f"size must be a positive int, got {n!r}")
    if not isinstance(dist, list) or len(dist) != n:
        raise ConfigError(f"dist must be a {n}-row table")
    rows = []
    for i, row in enumerate(dist):
        if not isinstance(row, list) or len(row) != n:
            raise ConfigError(f"dist row {i} must have {n} entries")
        rows.append([Dyadic.from_json(v) for v in row])
    if not isinstance(image, list) or len(image) != n:
        raise ConfigError(f"image must be a length-{n} list")
    for v in image:
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < n:
            raise ConfigError(f"image entry {v!r} out of range")
    labels = obj.get("labels")
    invertible = obj.get("invertible")
    if invertible is not None and not isinstance(invertible, bool):
        raise ConfigError("invertible must be a boolean")
    return FiniteSystem.from_rows(rows, image, labels, invertible)


def load_system(path) -> FiniteSystem:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed system file {path}: {exc}") from None
    return system_from_json(obj)


def dump_system(system: FiniteSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(system_to_json(system), fh, sort_keys=True, indent=2)
        fh.write("\n")
