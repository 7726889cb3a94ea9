"""Shadowing checks via a lazily explored subset automaton.

A state is (current pseudo-orbit node v, bitmask C of surviving shadower
candidates at the current step).  Advancing along a delta-edge intersects C
with the eps-ball of v and pushes it through the map; the verdict is false
exactly when some reachable state dies (empty candidate set).  Breadth-first
exploration with sorted successor order makes the extracted counterexample
the shortest, lexicographically least failing pseudo-orbit prefix.

``horizon`` bounds the explored pseudo-orbit length in steps; ``None`` means
unbounded (complete exploration of the finite state space).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import caps
from .chains import chain_class, chain_graph
from .core import FiniteSystem
from .dyadic import Dyadic
from .errors import ConfigError

__all__ = [
    "ShadowingVerdict",
    "shadowing_check",
    "shadowable_points",
    "pointwise_class_shadowing_audit",
    "track_pseudo_orbit",
    "limit_shadow_check",
    "lift_limit_shadow",
]


@dataclass
class ShadowingVerdict:
    eps: Dyadic
    delta: Dyadic
    scope: str
    holds: bool
    counterexample: list[int] | None
    states: int
    horizon: int | None = None
    point: int | None = None
    subset: list[int] | None = None

    def to_json(self) -> dict:
        return {
            "eps": self.eps.as_json(),
            "delta": self.delta.as_json(),
            "scope": self.scope,
            "holds": self.holds,
            "counterexample": self.counterexample,
            "states": self.states,
            "horizon": self.horizon,
            "point": self.point,
            "subset": self.subset,
        }


def _ball_masks(system: FiniteSystem, eps: Dyadic) -> list[int]:
    le = system.dist_le(eps)
    masks = []
    for i in range(system.size):
        mask = 0
        for j in np.nonzero(le[i])[0]:
            mask |= 1 << int(j)
        masks.append(mask)
    return masks


def _image_mask(mask: int, image: np.ndarray) -> int:
    out = 0
    while mask:
        low = mask & -mask
        i = low.bit_length() - 1
        out |= 1 << int(image[i])
        mask ^= low
    return out


def shadowing_check(
    system: FiniteSystem,
    eps: Dyadic,
    delta: Dyadic,
    scope: str = "all",
    point: int | None = None,
    subset=None,
    horizon: int | None = None,
    state_cap: int | None = None,
) -> ShadowingVerdict:
    """Does every delta-pseudo-orbit (within the scope) admit an eps-shadower?

    Scopes: "all" (all starts), "from-point" (starts at ``point``),
    "within-set" (starts and steps confined to ``subset``; shadower
    candidates still range over the whole space).
    """
    eps = Dyadic.coerce(eps)
    delta = Dyadic.coerce(delta)
    if scope not in ("all", "from-point", "within-set"):
        raise ConfigError(f"unknown scope {scope!r}")
    if scope == "from-point":
        if point is None:
            raise ConfigError("scope 'from-point' needs a point")
        system._check_index(point)
        starts = [int(point)]
        allowed = None
    elif scope == "within-set":
        if subset is None:
            raise ConfigError("scope 'within-set' needs a subset")
        starts = sorted({int(v) for v in subset})
        if not starts:
            raise ConfigError("subset must be non-empty")
        for v in starts:
            system._check_index(v)
        allowed = set(starts)
    else:
        starts = list(range(system.size))
        allowed = None
    if horizon is not None and (not isinstance(horizon, int) or horizon < 0):
        raise ConfigError(f"horizon must be a non-negative int, got {horizon!r}")

    cap = caps.state_cap(state_cap)
    graph = chain_graph(system, delta)
    balls = _ball_masks(system, eps)
    image = system.image
    successors = [
        [int(w) for w in np.nonzero(graph.adjacency[v])[0] if allowed is None or int(w) in allowed]
        for v in range(system.size)
    ]

    full = (1 << system.size) - 1
    seen: set[tuple[int, int]] = set()
    parents: dict[tuple[int, int], tuple | None] = {}
    frontier: list[tuple[int, int]] = []
    states = 0
    for v in starts:
        key = (v, full)
        if key not in seen:
            seen.add(key)
            parents[key] = None
            frontier.append(key)
    depth = 0
    while frontier:
        nxt: list[tuple[int, int]] = []
        for key in frontier:
            v, cand = key
            alive = cand & balls[v]
            states = caps.charge(states, 1, cap, "shadowing automaton states")
            if alive == 0:
                path = [v]
                cur = parents[key]
                while cur is not None:
                    path.append(cur[0])
                    cur = parents[cur]
                return ShadowingVerdict(
                    eps, delta, scope, False, path[::-1], states, horizon,
                    point=point, subset=starts if scope == "within-set" else None,
                )
            if horizon is not None and depth >= horizon:
                continue
            pushed = _image_mask(alive, image)
            for w in successors[v]:
                nkey = (w, pushed)
                if nkey not in seen:
                    seen.add(nkey)
                    parents[nkey] = key
                    nxt.append(nkey)
        frontier = nxt
        depth += 1
    return ShadowingVerdict(
        eps, delta, scope, True, None, states, horizon,
        point=point, subset=starts if scope == "within-set" else None,
    )


def shadowable_points(
    system: FiniteSystem,
    eps: Dyadic,
    delta: Dyadic,
    horizon: int | None = None,
    state_cap: int | None = None,
) -> list[int]:
    """Points whose every delta-pseudo-orbit is eps-shadowed (from-point scope)."""
    out = []
    for x in range(system.size):
        verdict = shadowing_check(
            system, eps, delta, scope="from-point", point=x,
            horizon=horizon, state_cap=state_cap,
        )
        if verdict.holds:
            out.append(x)
    return out


def pointwise_class_shadowing_audit(
    system: FiniteSystem,
    eps_schedule,
    delta_schedule,
    class_delta: Dyadic | None = None,
    horizon: int | None = None,
    state_cap: int | None = None,
) -> dict:
    """Cross-check three shadowing statements around each point's chain class:

    (a) the point itself is from-point shadowable;
    (b) every member of its chain class is from-point shadowable;
    (c) pseudo-orbits confined to the chain class are shadowed (within-set).

    Reports the implication pattern over the (eps, delta) grid.
    """
    eps_schedule = [Dyadic.coerce(e) for e in eps_schedule]
    delta_schedule = [Dyadic.coerce(d) for d in delta_schedule]
    rows = []
    equivalences = 0
    for eps in eps_schedule:
        for delta in delta_schedule:
            cdelta = Dyadic.coerce(class_delta) if class_delta is not None else delta
            point_ok = {
                x: shadowing_check(
                    system, eps, delta, "from-point", point=x,
                    horizon=horizon, state_cap=state_cap,
                ).holds
                for x in range(system.size)
            }
            for x in range(system.size):
                members = chain_class(system, cdelta, x)
                a = point_ok[x]
                b = all(point_ok[m] for m in members)
                c = shadowing_check(
                    system, eps, delta, "within-set", subset=members,
                    horizon=horizon, state_cap=state_cap,
                ).holds
                agree = a == b == c
                equivalences += agree
                rows.append(
                    {
                        "eps": eps.as_json(),
                        "delta": delta.as_json(),
                        "x": x,
                        "point_holds": a,
                        "class_members_hold": b,
                        "class_confined_holds": c,
                        "agree": agree,
                    }
                )
    return {
        "rows": rows,
        "cells": len(rows),
        "equivalent_cells": equivalences,
        "all_equivalent": equivalences == len(rows),
    }


def track_pseudo_orbit(
    system: FiniteSystem,
    entries,
    eps: Dyadic,
    periodic: bool = False,
) -> list[int]:
    """All points y whose orbit tracks the entry sequence within eps.

    With ``periodic`` the entry sequence repeats forever; tracking is then
    checked over lcm(len(entries), orbit period of y) steps, which covers
    every index of the infinite repetition exactly.
    """
    entries = [int(v) for v in entries]
    if not entries:
        raise ConfigError("entries must be non-empty")
    for v in entries:
        system._check_index(v)
    eps = Dyadic.coerce(eps)
    le = system.dist_le(eps)
    trackers = []
    for y in range(system.size):
        if periodic:
            prefix, cycle = system.orbit(y)
            period = len(cycle)
            import math as _math

            span = len(prefix) + _math.lcm(len(entries), period)
        else:
            span = len(entries)
        ok = True
        v = y
        for i in range(span):
            if not le[v, entries[i % len(entries)]]:
                ok = False
                break
            v = int(system.image[v])
        if ok:
            trackers.append(y)
    return trackers


def limit_shadow_check(
    system: FiniteSystem,
    pseudo_orbit,
    error_schedule,
    eps: Dyadic,
) -> dict | None:
    """Asymptotic shadowing for a pseudo-orbit with per-step error bounds.

    Validates that the orbit's actual step errors respect the non-increasing
    schedule, then searches for a point y with, at every index i,
    d(f^i y, x_i) <= eps and d(f^i y, x_i) <= max(schedule[i], resolution).
    The resolution floor acknowledges that a finite model cannot track below
    its minimum positive distance.
    """
    orbit = [int(v) for v in pseudo_orbit]
    if len(orbit) < 1:
        raise ConfigError("pseudo_orbit must be non-empty")
    for v in orbit:
        system._check_index(v)
    schedule = [Dyadic.coerce(e) for e in error_schedule]
    if len(schedule) < len(orbit):
        raise ConfigError("error schedule shorter than pseudo-orbit")
    if any(a < b for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("error schedule must be non-increasing")
    eps = Dyadic.coerce(eps)
    for i in range(len(orbit) - 1):
        actual = system.dist(int(system.image[orbit[i]]), orbit[i + 1])
        if actual > schedule[i]:
            raise ConfigError(
                f"step {i} error {actual} exceeds the scheduled bound {schedule[i]}"
            )
    resolution = system.min_positive_distance() or Dyadic(0)
    bounds = [max(schedule[i], resolution) for i in range(len(orbit))]
    for y in range(system.size):
        v = y
        errors = []
        ok = True
        for i, target in enumerate(orbit):
            d = system.dist(v, target)
            if d > eps or d > bounds[i]:
                ok = False
                break
            errors.append(d)
            v = int(system.image[v])
        if ok:
            return {
                "shadow": y,
                "errors": errors,
                "bounds": bounds[: len(orbit)],
            }
    return None


def lift_limit_shadow(
    system: FiniteSystem,
    factor_table,
    x: int,
    base_orbit,
    errors,
    fiber_chain,
) -> dict:
    """Lift asymptotic shadowing through a factor map with separated fibers.

    Hypotheses (all verified, ConfigError when they fail):
    the factor table semiconjugates the map (F(f(v)) = f(F(v)));
    distinct points of any fiber sit at distance >= 1;
    x tracks ``base_orbit`` within max(errors[i], resolution) at every step;
    ``fiber_chain`` lifts the base orbit entrywise (F(z_i) = x_i).

    Output: z in the fiber of x whose orbit tracks the fiber chain within
    max(errors[i], resolution) from the first index N where all remaining
    bounds drop below 1/2 (fiber separation then pins the lift uniquely).
    """
    table = np.asarray(factor_table, dtype=np.int64)
    if table.shape != (system.size,):
        raise ConfigError("factor table must assign one node per point")
    if ((table < 0) | (table >= system.size)).any():
        raise ConfigError("factor table entry out of range")
    system._check_index(x)
    orbit = [int(v) for v in base_orbit]
    chain = [int(v) for v in fiber_chain]
    errs = [Dyadic.coerce(e) for e in errors]
    if not (len(orbit) == len(chain) == len(errs)):
        raise ConfigError("base orbit, fiber chain, and errors must share a length")
    if len(orbit) == 0:
        raise ConfigError("base orbit must be non-empty")
    if any(a < b for a, b in zip(errs, errs[1:])):
        raise ConfigError("errors must be non-increasing")

    for v in range(system.size):
        if int(table[system.image[v]]) != int(system.image[table[v]]):
            raise ConfigError(f"factor table does not commute with the map at {v}")
    fibers: dict[int, list[int]] = {}
    for v in range(system.size):
        fibers.setdefault(int(table[v]), []).append(v)
    one = Dyadic(1)
    for members in fibers.values():
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                if system.dist(a, b) < one:
                    raise ConfigError(
                        f"fiber separation fails: d({a},{b}) < 1 inside one fiber"
                    )
    resolution = system.min_positive_distance() or Dyadic(0)
    bounds = [max(e, resolution) for e in errs]
    v = x
    for i, target in enumerate(orbit):
        if system.dist(v, target) > bounds[i]:
            raise ConfigError(
                f"base point does not track the base orbit at index {i}"
            )
        v = int(system.image[v])
    for i, z in enumerate(chain):
        if int(table[z]) != orbit[i]:
            raise ConfigError(f"fiber chain entry {i} does not project to the base orbit")

    half = Dyadic(1, 1)
    start = None
    for i in range(len(orbit)):
        if all(b < half for b in bounds[i:]):
            start = i
            break
    if start is None:
        raise ConfigError("error bounds never drop below 1/2; lift is not pinned")

    candidates = fibers.get(x, [])
    for z in candidates:
        v = z
        tracked = []
        ok = True
        for i in range(len(orbit)):
            d = system.dist(v, chain[i])
            if i >= start and d > bounds[i]:
                ok = False
                break
            tracked.append(d)
            v = int(system.image[v])
        if ok:
            return {
                "lift": z,
                "pinned_from": start,
                "tracking": tracked,
                "bounds": bounds,
            }
    raise ConfigError("no fiber lift tracks the fiber chain within the bounds")
