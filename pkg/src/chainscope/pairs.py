"""Pair classification, omega-limit reports, minimality, and sensitivity.

Pairs are classified by the tail behaviour of d(f^i x, f^i y): asymptotic
(tends to 0), distal (stays bounded away from 0), scrambled (liminf 0 but
limsup large), proximal-nonasymptotic in between.  On finite systems and on
eventually periodic symbolic words the classification is exact over the
periodic closure; otherwise sampled tail-window proxies are used and the
verdict may be "undetermined".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import chain_components, chain_recurrent, classify_components
from .core import FiniteSystem
from .dyadic import Dyadic, dyadic_max, dyadic_min
from .errors import ConfigError, InternalInconsistencyError
from .symbolic import SymbolicPoint, SymbolicSystem, metric_eval

__all__ = [
    "PairVerdict",
    "OmegaReport",
    "classify_pair",
    "omega_limit",
    "is_minimal",
    "sensitive_points",
    "nonminimality_conditions_test",
]


@dataclass
class PairVerdict:
    pair: tuple
    horizon: int
    s_lo: Dyadic
    s_hi: Dyadic
    liminf_proxy: Dyadic
    limsup_proxy: Dyadic
    classification: str
    exact: bool

    def to_json(self) -> dict:
        def scalar(v):
            return v.as_json() if isinstance(v, Dyadic) else v

        def point(p):
            return p if isinstance(p, int) else str(p)

        return {
            "pair": [point(self.pair[0]), point(self.pair[1])],
            "class": self.classification,
            "exact": self.exact,
            "liminf": scalar(self.liminf_proxy),
            "limsup": scalar(self.limsup_proxy),
        }


def _classify_exact(liminf: Dyadic, limsup: Dyadic) -> str:
    zero = Dyadic(0)
    if limsup == zero:
        return "asymptotic"
    if liminf > zero:
        return "distal"
    # A finite or eventually periodic pair that ever hits distance 0 has
    # equal tails from that index on, forcing limsup 0 as well.
    raise InternalInconsistencyError(
        f"exact tail extremes liminf={liminf}, limsup={limsup} are impossible "
        "for eventually periodic pairs"
    )


def _classify_proxy(lo, hi, s_lo: Dyadic, s_hi: Dyadic) -> str:
    if hi <= s_lo:
        return "asymptotic"
    if lo >= s_hi:
        return "distal"
    if lo < s_lo and hi > s_hi:
        return "scrambled"
    if lo < s_lo and s_lo < hi <= s_hi:
        return "proximal-nonasymptotic"
    return "undetermined"


def _pair_cycle_extremes(system: FiniteSystem, x: int, y: int) -> tuple[Dyadic, Dyadic]:
    """(min, max) of d(f^i x, f^i y) over the eventual pair cycle."""
    seen: dict[tuple[int, int], int] = {}
    trail: list[tuple[int, int]] = []
    a, b = x, y
    while (a, b) not in seen:
        seen[(a, b)] = len(trail)
        trail.append((a, b))
        a = int(system.image[a])
        b = int(system.image[b])
    start = seen[(a, b)]
    cycle = trail[start:]
    values = [system.dist(p, q) for p, q in cycle]
    return dyadic_min(values), dyadic_max(values)


def _pair_walk_max(system: FiniteSystem, x: int, y: int) -> Dyadic:
    """Max of d(f^i x, f^i y) over all i >= 0 (prefix and cycle)."""
    seen = set()
    best = system.dist(x, y)
    a, b = x, y
    while (a, b) not in seen:
        seen.add((a, b))
        d = system.dist(a, b)
        if d > best:
            best = d
        a = int(system.image[a])
        b = int(system.image[b])
    return best


def _one_sided_exact(x: SymbolicPoint, y: SymbolicPoint) -> tuple[Dyadic, Dyadic]:
    core = max(len(x.center), len(y.center))
    period = math.lcm(len(x.right_period), len(y.right_period))
    values = [
        metric_eval(x.shift(i), y.shift(i))
        for i in range(core, core + period)
    ]
    return dyadic_min(values), dyadic_max(values)


def _two_sided_exact(x: SymbolicPoint, y: SymbolicPoint) -> tuple[Dyadic, Dyadic]:
    """Tail extremes of d(shift^i x, shift^i y) as i -> +inf, exactly.

    Beyond the cores both words are right-periodic, so the symbol
    differences periodize; along each phase the distance converges to the
    sup-metric value of the bi-infinite periodization, while every centered
    or left-tail contribution decays to 0.
    """
    start = max(x.offset + len(x.center), y.offset + len(y.center))
    period = math.lcm(len(x.right_period), len(y.right_period))
    diffs = [abs(x.at(start + j) - y.at(start + j)) for j in range(period)]
    zero = Dyadic(0)
    maxabs = dyadic_max(diffs)
    if maxabs == zero:
        return zero, zero
    values = []
    for p in range(period):
        best = diffs[p]
        j = 1
        while maxabs.scale_pow2(-j) > best:
            term = dyadic_max([diffs[(p + j) % period], diffs[(p - j) % period]])
            term = term.scale_pow2(-j)
            if term > best:
                best = term
            j += 1
        values.append(best)
    return dyadic_min(values), dyadic_max(values)


def _sample_accessor(point, horizon: int):
    """(accessor, max readable index) for a SymbolicPoint or sampled sequence."""
    if isinstance(point, SymbolicPoint):
        if point.sided != "one":
            raise ConfigError("sampled-proxy classification expects one-sided words")
        return point.at, None
    symbols = tuple(Dyadic.coerce(v) for v in point)
    if len(symbols) < 2 * horizon:
        raise ConfigError(
            f"sampled word of length {len(symbols)} is too short for horizon "
            f"{horizon}; need at least {2 * horizon} symbols"
        )

    def at(n: int) -> Dyadic:
        return symbols[n - 1]

    return at, len(symbols)


def _proxy_extremes(x, y, horizon: int) -> tuple[Dyadic, Dyadic]:
    if isinstance(x, SymbolicPoint) and isinstance(y, SymbolicPoint):
        if x.sided != y.sided:
            raise ConfigError("cannot classify a pair of mixed sidedness")
        values = [
            metric_eval(x.shift(i), y.shift(i))
            for i in range(horizon // 2, horizon + 1)
        ]
        return dyadic_min(values), dyadic_max(values)
    ax, limx = _sample_accessor(x, horizon)
    ay, limy = _sample_accessor(y, horizon)
    limits = [v for v in (limx, limy) if v is not None]
    lo = None
    hi = None
    for i in range(horizon // 2, horizon + 1):
        depth = min([v - i for v in limits], default=horizon)
        if depth < 1:
            raise ConfigError("sampled words exhausted inside the tail window")
        best = Dyadic(0)
        for n in range(1, depth + 1):
            term = abs(ax(i + n) - ay(i + n)).scale_pow2(-n)
            if term > best:
                best = term
        if lo is None or best < lo:
            lo = best
        if hi is None or best > hi:
            hi = best
    return lo, hi


def classify_pair(space, x, y, T: int, s_lo, s_hi, mode: str = "auto") -> PairVerdict:
    """Classify the tail behaviour of the pair (x, y).

    On a FiniteSystem (x, y node indices) and for pairs of eventually
    periodic symbolic words the verdict is exact over the periodic closure
    and independent of the horizon T.  Sampled symbolic words (plain symbol
    sequences read from index 1), or ``mode="proxy"``, classify by min/max
    of exact distances over the tail window [T/2, T] against the thresholds
    (s_lo, s_hi).  Forcing the proxy is the right call when a word is a
    truncation of something non-periodic: the fabricated periodic tail
    would otherwise drive the exact verdict.
    """
    if not isinstance(T, int) or T < 1:
        raise ConfigError(f"horizon T must be a positive int, got {T!r}")
    if mode not in ("auto", "exact", "proxy"):
        raise ConfigError(f"unknown classification mode {mode!r}")
    s_lo = Dyadic.coerce(s_lo)
    s_hi = Dyadic.coerce(s_hi)
    if s_lo > s_hi:
        raise ConfigError(f"thresholds must satisfy s_lo <= s_hi, got {s_lo} > {s_hi}")

    if isinstance(space, FiniteSystem):
        space._check_index(x)
        space._check_index(y)
        if mode == "proxy":
            values = [
                space.dist(space.iterate(int(x), i), space.iterate(int(y), i))
                for i in range(T // 2, T + 1)
            ]
            lo, hi = dyadic_min(values), dyadic_max(values)
            return PairVerdict(
                (int(x), int(y)), T, s_lo, s_hi, lo, hi,
                _classify_proxy(lo, hi, s_lo, s_hi), False,
            )
        liminf, limsup = _pair_cycle_extremes(space, int(x), int(y))
        return PairVerdict(
            (int(x), int(y)), T, s_lo, s_hi, liminf, limsup,
            _classify_exact(liminf, limsup), True,
        )
    if not isinstance(space, SymbolicSystem):
        raise ConfigError(
            f"classify_pair expects a FiniteSystem or SymbolicSystem, got {type(space).__name__}"
        )
    exact_possible = isinstance(x, SymbolicPoint) and isinstance(y, SymbolicPoint)
    if mode == "exact" and not exact_possible:
        raise ConfigError("exact classification needs two eventually periodic words")
    if exact_possible and mode != "proxy":
        if x.sided != y.sided:
            raise ConfigError("cannot classify a pair of mixed sidedness")
        if x.sided == "one":
            liminf, limsup = _one_sided_exact(x, y)
        else:
            liminf, limsup = _two_sided_exact(x, y)
        return PairVerdict(
            (x, y), T, s_lo, s_hi, liminf, limsup,
            _classify_exact(liminf, limsup), True,
        )
    lo, hi = _proxy_extremes(x, y, T)
    return PairVerdict(
        (x, y), T, s_lo, s_hi, lo, hi, _classify_proxy(lo, hi, s_lo, s_hi), False
    )


# -- omega limits and minimality ---------------------------------------


@dataclass
class OmegaReport:
    x: int
    omega: list[int]
    minimal: bool
    containing_component: int | None

    def to_json(self) -> dict:
        return {
            "x": self.x,
            "omega": self.omega,
            "minimal": self.minimal,
            "containing_component": self.containing_component,
        }


def omega_limit(system: FiniteSystem, x: int, delta: Dyadic | None = None) -> OmegaReport:
    """The cycle the orbit of x enters, with an optional component lookup.

    On a finite system the omega-limit set is exactly the entered periodic
    cycle, which is always a minimal set.  When ``delta`` is given, the
    report also names the chain component (at that delta) containing the
    cycle.
    """
    system._check_index(x)
    _, cycle = system.orbit(x)
    omega = sorted(cycle)
    containing = None
    if delta is not None:
        decomposition = chain_components(system, Dyadic.coerce(delta))
        containing = decomposition.component_of(omega[0])
        if containing is None:
            raise InternalInconsistencyError(
                f"periodic point {omega[0]} missing from the chain-recurrent set"
            )
    return OmegaReport(x, omega, True, containing)


def is_minimal(system: FiniteSystem, S) -> bool:
    """True iff the invariant set S is a single periodic orbit."""
    nodes = sorted({int(v) for v in S})
    if not nodes:
        raise ConfigError("S must be non-empty")
    members = set(nodes)
    for v in nodes:
        system._check_index(v)
        if int(system.image[v]) not in members:
            raise ConfigError(f"S is not invariant: image of {v} leaves the set")
    start = nodes[0]
    visited = set()
    v = start
    while v not in visited:
        visited.add(v)
        v = int(system.image[v])
    return v == start and visited == members


def sensitive_points(system: FiniteSystem, S, e, eta_schedule) -> dict:
    """Per-point sensitivity verdicts on the invariant set S.

    x is flagged at scale eta when some y in S with d(x, y) <= eta separates
    from x beyond e at some forward iterate (exact over the pair closure).
    """
    nodes = sorted({int(v) for v in S})
    if not nodes:
        raise ConfigError("S must be non-empty")
    members = set(nodes)
    for v in nodes:
        system._check_index(v)
        if int(system.image[v]) not in members:
            raise ConfigError(f"S is not invariant: image of {v} leaves the set")
    e = Dyadic.coerce(e)
    etas = [Dyadic.coerce(v) for v in eta_schedule]
    if not etas:
        raise ConfigError("eta_schedule must be non-empty")
    rows = []
    for x in nodes:
        flags = []
        for eta in etas:
            flag = False
            for y in nodes:
                if y == x or system.dist(x, y) > eta:
                    continue
                if _pair_walk_max(system, x, y) > e:
                    flag = True
                    break
            flags.append(flag)
        rows.append({"x": x, "flags": flags})
    return {
        "e": e.as_json(),
        "etas": [eta.as_json() for eta in etas],
        "points": nodes,
        "rows": rows,
    }


def nonminimality_conditions_test(
    system: FiniteSystem,
    x: int,
    delta: Dyadic,
    pair_pool,
    T: int,
    thresholds: dict,
) -> dict:
    """Evaluate three sufficient conditions for landing in a complex component.

    (1) the omega-limit cycle of x meets a sensitive point of the
        forward-closed chain-recurrent restriction, for some e in the
        declared grid;
    (2) some pool member forms a scrambled pair with x;
    (3) the chain component containing the omega-limit cycle is not a single
        periodic orbit.

    The report compares "any condition holds" against the orbit-like /
    complex classification of that component.

    ``thresholds`` keys: e_grid, eta_schedule, s_lo, s_hi, eps_schedule,
    delta_schedule.
    """
    system._check_index(x)
    delta = Dyadic.coerce(delta)
    report = omega_limit(system, x, delta)
    omega = set(report.omega)

    # At finite delta the recurrent set need not be image-closed (the graph
    # hops between nearby nodes); close it forward so the sensitivity scan
    # runs on an invariant carrier.
    carrier = set(chain_recurrent(system, delta))
    frontier = list(carrier)
    while frontier:
        target = int(system.image[frontier.pop()])
        if target not in carrier:
            carrier.add(target)
            frontier.append(target)
    flagged: set[int] = set()
    for e in thresholds["e_grid"]:
        sens = sensitive_points(system, sorted(carrier), e, thresholds["eta_schedule"])
        for row in sens["rows"]:
            if any(row["flags"]):
                flagged.add(row["x"])
    condition_sensitive = bool(omega & flagged)

    s_lo = Dyadic.coerce(thresholds["s_lo"])
    s_hi = Dyadic.coerce(thresholds["s_hi"])
    scrambled_with = None
    for y in pair_pool:
        verdict = classify_pair(system, x, int(y), T, s_lo, s_hi)
        if verdict.classification == "scrambled":
            scrambled_with = int(y)
            break
    condition_scrambled = scrambled_with is not None

    decomposition = chain_components(system, delta)
    comp_id = decomposition.component_of(report.omega[0])
    component = decomposition.components[comp_id]
    # A single periodic orbit is image-invariant, so a component the map
    # leaves is automatically non-minimal; only invariant components go
    # through the cycle test (which requires invariance).
    members = set(component)
    invariant = all(int(system.image[v]) in members for v in component)
    condition_nonminimal = not (invariant and is_minimal(system, component))

    classified = classify_components(
        system,
        decomposition,
        [Dyadic.coerce(e) for e in thresholds["eps_schedule"]],
        [Dyadic.coerce(d) for d in thresholds["delta_schedule"]],
    )
    component_class = classified.component_class[comp_id]
    any_condition = condition_sensitive or condition_scrambled or condition_nonminimal
    return {
        "x": x,
        "omega": report.omega,
        "component": component,
        "component_class": component_class,
        "conditions": {
            "sensitive_omega": condition_sensitive,
            "scrambled_pair": condition_scrambled,
            "omega_nonminimal": condition_nonminimal,
        },
        "scrambled_with": scrambled_with,
        "any_condition": any_condition,
        "consistent": (not any_condition) or component_class == "NO",
    }
