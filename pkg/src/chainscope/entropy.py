"""Separated-set counting, growth-rate estimates, and entropy-point tests.

All distance comparisons run on the shared-scale integer tables of the
system, so separation verdicts are exact; the only floating point is the
least-squares slope of log-counts, reported as an estimated growth rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import caps
from .chains import chain_class, chain_graph
from .core import FiniteSystem, ball, restrict
from .dyadic import Dyadic
from .errors import ConfigError
from .shadowing import shadowing_check

__all__ = [
    "TrackingSet",
    "separated_count",
    "entropy_estimate",
    "growth_rate",
    "chain_separated_count",
    "phi_set",
    "gamma_set",
    "h_star",
    "entropy_point_test",
    "entropy_point_component_audit",
    "uniform_entropy_rate_audit",
]


# -- separated-set counting -------------------------------------------


def _pullback_max_num(system: FiniteSystem, nodes: np.ndarray, n: int) -> np.ndarray:
    """Numerators (system scale) of d_n = max_{0<=k<n} d(f^k i, f^k j) on the set."""
    cur = nodes.copy()
    out = system._dnum[np.ix_(cur, cur)].copy()
    for _ in range(n - 1):
        cur = system.image[cur]
        np.maximum(out, system._dnum[np.ix_(cur, cur)], out=out)
    return out


def _conflict_matrix(system: FiniteSystem, nodes: np.ndarray, n: int, r: Dyadic) -> np.ndarray:
    """Boolean matrix: True where the pair is NOT (n, r)-separated."""
    t = system._threshold(r)
    dn = _pullback_max_num(system, nodes, n)
    if t is None:
        return np.ones_like(dn, dtype=bool)
    return dn <= t


def _max_independent_set(conflict: np.ndarray) -> list[int]:
    """Exact maximum independent set of a small conflict graph (bitmask B&B).

    The bound is a greedy clique cover of the remaining conflict graph: an
    independent set meets each clique at most once.  On the unions of
    cliques that separation instances typically produce, the bound is tight
    and the search closes immediately.
    """
    m = conflict.shape[0]
    neighbors = []
    for i in range(m):
        mask = 0
        for j in range(m):
            if j != i and conflict[i, j]:
                mask |= 1 << j
        neighbors.append(mask)

    def cover_bound(remaining: int) -> int:
        cover = 0
        rem = remaining
        while rem:
            v = (rem & -rem).bit_length() - 1
            rem &= ~(1 << v)
            cand = rem & neighbors[v]
            while cand:
                u = (cand & -cand).bit_length() - 1
                rem &= ~(1 << u)
                cand &= neighbors[u]
            cover += 1
        return cover

    seed = _greedy_independent_set(conflict)
    best_size = len(seed)
    best_mask = 0
    for i in seed:
        best_mask |= 1 << i

    def grow(chosen: int, size: int, remaining: int) -> None:
        nonlocal best_mask, best_size
        if remaining == 0:
            if size > best_size:
                best_size = size
                best_mask = chosen
            return
        if size + cover_bound(remaining) <= best_size:
            return
        best_v = -1
        best_deg = -1
        rem = remaining
        while rem:
            v = (rem & -rem).bit_length() - 1
            rem &= rem - 1
            deg = (neighbors[v] & remaining).bit_count()
            if deg > best_deg:
                best_deg = deg
                best_v = v
        v = best_v
        grow(chosen | (1 << v), size + 1, remaining & ~neighbors[v] & ~(1 << v))
        grow(chosen, size, remaining & ~(1 << v))

    grow(0, 0, (1 << m) - 1)
    return sorted(i for i in range(m) if best_mask >> i & 1)


def _greedy_independent_set(conflict: np.ndarray) -> list[int]:
    chosen: list[int] = []
    for i in range(conflict.shape[0]):
        if all(not conflict[i, j] for j in chosen):
            chosen.append(i)
    return chosen


def separated_count(
    system: FiniteSystem,
    K,
    n: int,
    r: Dyadic,
    mode: str = "auto",
    exact_cap: int | None = None,
    candidate_family=None,
) -> dict:
    """Largest family within K whose members stay pairwise > r apart over n steps.

    Two points are (n, r)-separated when max_{0<=k<n} d(f^k x, f^k y) > r.
    ``mode`` "exact" solves maximum independent set on the conflict graph
    (family sizes up to the exact cap); "greedy" scans K by index; "auto"
    picks exact when the set fits under the cap.  When the exact cap is
    exceeded the call falls back to greedy and tags the result accordingly.
    A ``candidate_family`` is verified pairwise instead of searched.

    Returns {"n", "r", "count", "mode", "family"} with family in original
    node indices.
    """
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive int, got {n!r}")
    r = Dyadic.coerce(r)
    if not r > Dyadic(0):
        raise ConfigError("separation radius r must be positive")
    nodes = sorted({int(v) for v in K})
    if not nodes:
        raise ConfigError("candidate node set K must be non-empty")
    for v in nodes:
        system._check_index(v)
    idx = np.array(nodes, dtype=np.int64)

    if candidate_family is not None:
        family = [int(v) for v in candidate_family]
        pos = {v: i for i, v in enumerate(nodes)}
        for v in family:
            if v not in pos:
                raise ConfigError(f"candidate family member {v} lies outside K")
        conflict = _conflict_matrix(system, idx, n, r)
        for a_i, a in enumerate(family):
            for b in family[a_i + 1 :]:
                if conflict[pos[a], pos[b]]:
                    raise ConfigError(
                        f"candidate family is not ({n},{r})-separated: pair ({a},{b})"
                    )
        return {
            "n": n,
            "r": r.as_json(),
            "count": len(family),
            "mode": "candidate-verified",
            "family": family,
        }

    if mode not in ("auto", "exact", "greedy"):
        raise ConfigError(f"unknown separation mode {mode!r}")
    cap = caps.DEFAULT_EXACT_SET_CAP if exact_cap is None else int(exact_cap)
    conflict = _conflict_matrix(system, idx, n, r)
    if mode == "greedy" or len(nodes) > cap:
        chosen = _greedy_independent_set(conflict)
        used = "greedy"
    else:
        chosen = _max_independent_set(conflict)
        used = "exact"
    return {
        "n": n,
        "r": r.as_json(),
        "count": len(chosen),
        "mode": used,
        "family": [nodes[i] for i in chosen],
    }


def growth_rate(ns, counts) -> float:
    """Least-squares slope of log(count) against n."""
    if len(ns) != len(counts) or len(ns) < 2:
        raise ConfigError("growth rate needs at least two (n, count) points")
    if any(c < 1 for c in counts):
        raise ConfigError("counts must be >= 1 to take logs")
    xs = np.array(ns, dtype=float)
    ys = np.log(np.array(counts, dtype=float))
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)


def entropy_estimate(
    system: FiniteSystem,
    K,
    r: Dyadic,
    n_window,
    mode: str = "auto",
    exact_cap: int | None = None,
) -> dict:
    """Growth-rate estimate of separated counts over a window of n values."""
    window = [int(n) for n in n_window]
    if len(window) < 2 or any(a >= b for a, b in zip(window, window[1:])):
        raise ConfigError("n_window must be at least two strictly increasing values")
    entries = [separated_count(system, K, n, r, mode=mode, exact_cap=exact_cap) for n in window]
    rate = growth_rate(window, [e["count"] for e in entries])
    return {
        "r": Dyadic.coerce(r).as_json(),
        "n_window": window,
        "counts": entries,
        "modes": sorted({e["mode"] for e in entries}),
        "rate": rate,
    }


# -- separated chains --------------------------------------------------


def _enumerate_walks(system: FiniteSystem, delta: Dyadic, n: int, walk_cap: int) -> list[tuple[int, ...]]:
    graph = chain_graph(system, delta)
    successors = [list(map(int, np.nonzero(graph.adjacency[v])[0])) for v in range(system.size)]
    walks: list[tuple[int, ...]] = []
    count = 0
    stack: list[tuple[int, ...]] = [(v,) for v in range(system.size - 1, -1, -1)]
    while stack:
        walk = stack.pop()
        if len(walk) == n:
            count = caps.charge(count, 1, walk_cap, "delta-walk enumeration")
            walks.append(walk)
            continue
        for w in reversed(successors[walk[-1]]):
            stack.append(walk + (w,))
    return walks


def _walk_conflict(system: FiniteSystem, walks: list[tuple[int, ...]], r: Dyadic) -> np.ndarray:
    t = system._threshold(r)
    arr = np.array(walks, dtype=np.int64)
    m, n = arr.shape
    if t is None:
        return np.ones((m, m), dtype=bool)
    out = system._dnum[np.ix_(arr[:, 0], arr[:, 0])].copy()
    for k in range(1, n):
        np.maximum(out, system._dnum[np.ix_(arr[:, k], arr[:, k])], out=out)
    return out <= t


def chain_separated_count(
    system: FiniteSystem,
    n: int,
    r: Dyadic,
    delta: Dyadic,
    mode: str = "auto",
    exact_cap: int | None = None,
    walk_cap: int | None = None,
    candidate_walks=None,
) -> dict:
    """Largest family of pairwise r-separated delta-walks of length n.

    Walks are sequences w_0..w_{n-1} with d(f(w_i), w_{i+1}) <= delta; two
    walks are r-separated when d(w_i, w'_i) > r at some position.  With
    ``candidate_walks`` the family is verified (walk validity and pairwise
    separation) rather than searched.
    """
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive int, got {n!r}")
    r = Dyadic.coerce(r)
    delta = Dyadic.coerce(delta)

    if candidate_walks is not None:
        walks = [tuple(int(v) for v in w) for w in candidate_walks]
        if not walks:
            raise ConfigError("candidate walk family must be non-empty")
        le = system.dist_le(delta)
        for w in walks:
            if len(w) != n:
                raise ConfigError(f"candidate walk {w} does not have length {n}")
            for v in w:
                system._check_index(v)
            for i in range(n - 1):
                if not le[int(system.image[w[i]]), w[i + 1]]:
                    raise ConfigError(
                        f"candidate walk {w} breaks the delta bound at step {i}"
                    )
        conflict = _walk_conflict(system, walks, r)
        bad = np.argwhere(np.triu(conflict, 1))
        if bad.size:
            a, b = bad[0]
            raise ConfigError(
                f"candidate walks {walks[a]} and {walks[b]} are not {r}-separated"
            )
        return {
            "n": n,
            "r": r.as_json(),
            "delta": delta.as_json(),
            "count": len(walks),
            "mode": "candidate-verified",
            "family": [list(w) for w in walks],
        }

    if mode not in ("auto", "exact", "greedy"):
        raise ConfigError(f"unknown separation mode {mode!r}")
    cap = caps.DEFAULT_EXACT_SET_CAP if exact_cap is None else int(exact_cap)
    walks = _enumerate_walks(system, delta, n, caps.state_cap(walk_cap))
    if not walks:
        raise ConfigError("no delta-walks of the requested length exist")
    if mode == "greedy" or len(walks) > cap:
        t = system._threshold(r)
        chosen: list[int] = []
        for i, w in enumerate(walks):
            ok = True
            for j in chosen:
                u = walks[j]
                if t is None or all(
                    system._dnum[w[k], u[k]] <= t for k in range(n)
                ):
                    ok = False
                    break
            if ok:
                chosen.append(i)
        used = "greedy"
    else:
        conflict = _walk_conflict(system, walks, r)
        chosen = _max_independent_set(conflict)
        used = "exact"
    return {
        "n": n,
        "r": r.as_json(),
        "delta": delta.as_json(),
        "count": len(chosen),
        "mode": used,
        "family": [list(walks[i]) for i in chosen],
    }


# -- tracking sets -----------------------------------------------------


@dataclass
class TrackingSet:
    x: int
    eps: Dyadic
    horizon: int | str
    points: list[int]

    def to_json(self) -> dict:
        return {
            "x": self.x,
            "eps": self.eps.as_json(),
            "horizon": self.horizon,
            "points": self.points,
        }


def _tracks_forever(system: FiniteSystem, le: np.ndarray, x: int, y: int) -> bool:
    """Whether d(f^i x, f^i y) <= eps for every i >= 0 (exact via pair cycle)."""
    seen = set()
    a, b = x, y
    while (a, b) not in seen:
        if not le[a, b]:
            return False
        seen.add((a, b))
        a = int(system.image[a])
        b = int(system.image[b])
    return True


def phi_set(system: FiniteSystem, x: int, eps: Dyadic, horizon) -> TrackingSet:
    """Forward tracking set: points whose orbit stays eps-close to the orbit of x.

    ``horizon`` is an integer bound on the compared indices, or
    "periodic-closure" for the exact infinite-horizon set (finite orbits are
    eventually periodic, so the pairwise check terminates).
    """
    system._check_index(x)
    eps = Dyadic.coerce(eps)
    le = system.dist_le(eps)
    points = []
    if horizon == "periodic-closure":
        for y in range(system.size):
            if _tracks_forever(system, le, x, y):
                points.append(y)
    else:
        if not isinstance(horizon, int) or horizon < 0:
            raise ConfigError(
                f"horizon must be a non-negative int or 'periodic-closure', got {horizon!r}"
            )
        for y in range(system.size):
            a, b = x, y
            ok = True
            for _ in range(horizon + 1):
                if not le[a, b]:
                    ok = False
                    break
                a = int(system.image[a])
                b = int(system.image[b])
            if ok:
                points.append(y)
    return TrackingSet(x, eps, horizon, points)


def gamma_set(system: FiniteSystem, x: int, eps: Dyadic, horizon) -> TrackingSet:
    """Two-sided tracking set for invertible systems (indices range over Z).

    For "periodic-closure" the pair map is a permutation of pairs, so the
    forward pair cycle through (x, y) already contains every backward
    iterate; one cycle scan is exact over all of Z.
    """
    if not system.invertible:
        raise ConfigError("two-sided tracking sets need an invertible system")
    system._check_index(x)
    eps = Dyadic.coerce(eps)
    le = system.dist_le(eps)
    points = []
    if horizon == "periodic-closure":
        for y in range(system.size):
            if _tracks_forever(system, le, x, y):
                points.append(y)
    else:
        if not isinstance(horizon, int) or horizon < 0:
            raise ConfigError(
                f"horizon must be a non-negative int or 'periodic-closure', got {horizon!r}"
            )
        inverse = system.inverse_image()
        for y in range(system.size):
            ok = le[x, y]
            a, b = x, y
            if ok:
                for _ in range(horizon):
                    a = int(system.image[a])
                    b = int(system.image[b])
                    if not le[a, b]:
                        ok = False
                        break
            if ok:
                a, b = x, y
                for _ in range(horizon):
                    a = int(inverse[a])
                    b = int(inverse[b])
                    if not le[a, b]:
                        ok = False
                        break
            if ok:
                points.append(y)
    return TrackingSet(x, eps, horizon, points)


def h_star(
    system: FiniteSystem,
    eps: Dyadic,
    n_window,
    r_schedule,
    mode: str = "auto",
    exact_cap: int | None = None,
) -> dict:
    """Largest forward-tracking-set entropy estimate, per separation radius.

    For each r the value is max over x of the growth rate on phi_set(x, eps)
    at exact infinite horizon; the headline value is the max over the
    r schedule.
    """
    eps = Dyadic.coerce(eps)
    rs = [Dyadic.coerce(r) for r in r_schedule]
    if not rs:
        raise ConfigError("r_schedule must be non-empty")
    per_r = []
    for r in rs:
        best_rate = None
        best_x = None
        for x in range(system.size):
            members = phi_set(system, x, eps, "periodic-closure").points
            if len(members) < 2:
                rate = 0.0
            else:
                rate = entropy_estimate(
                    system, members, r, n_window, mode=mode, exact_cap=exact_cap
                )["rate"]
            if best_rate is None or rate > best_rate:
                best_rate = rate
                best_x = x
        per_r.append({"r": r.as_json(), "rate": best_rate, "argmax": best_x})
    return {
        "eps": eps.as_json(),
        "n_window": [int(n) for n in n_window],
        "per_r": per_r,
        "value": max(entry["rate"] for entry in per_r),
    }


# -- entropy points ----------------------------------------------------

POSITIVITY_THRESHOLD = 0.05


def entropy_point_test(
    system: FiniteSystem,
    x: int,
    r: Dyadic,
    b: float,
    ball_schedule,
    n_window,
    mode: str = "auto",
    exact_cap: int | None = None,
    threshold: float = POSITIVITY_THRESHOLD,
) -> dict:
    """Classify x by the separated-set growth inside shrinking balls around it.

    Verdicts: "uniform-positive" (every ball rate >= b), "positive" (every
    ball rate > threshold), "negative" (some ball rate at or below the
    threshold).  A uniform verdict is reported only when the plain positive
    criterion also holds, so verdict strength is ordered.
    """
    system._check_index(x)
    r = Dyadic.coerce(r)
    radii = [Dyadic.coerce(e) for e in ball_schedule]
    if not radii:
        raise ConfigError("ball_schedule must be non-empty")
    b = float(b)
    rows = []
    rates = []
    for radius in radii:
        members = ball(system, x, radius)
        if len(members) < 2:
            estimate = None
            rate = 0.0
        else:
            estimate = entropy_estimate(
                system, members, r, n_window, mode=mode, exact_cap=exact_cap
            )
            rate = estimate["rate"]
        rates.append(rate)
        rows.append(
            {
                "radius": radius.as_json(),
                "ball_size": len(members),
                "rate": rate,
                "counts": None if estimate is None else [e["count"] for e in estimate["counts"]],
            }
        )
    positive = all(rate > threshold for rate in rates)
    uniform = positive and all(rate >= b for rate in rates)
    classification = "uniform-positive" if uniform else ("positive" if positive else "negative")
    return {
        "x": x,
        "r": r.as_json(),
        "b": b,
        "threshold": threshold,
        "n_window": [int(n) for n in n_window],
        "balls": rows,
        "classification": classification,
    }


def _class_subsystem(system: FiniteSystem, x: int, class_delta: Dyadic):
    members = chain_class(system, class_delta, x)
    sub, keep = restrict(system, members)
    return sub, keep


def entropy_point_component_audit(system: FiniteSystem, x: int, grid: dict) -> dict:
    """Cross-check the entropy-point verdict against component classes.

    Both sides are computed on the forward chain class of x: positive local
    entropy evidence at some radius should coincide with the presence of a
    component that fails the orbit-like continuity test ("NO" class).

    ``grid`` keys: eps, delta (shadowability check at those scales),
    class_delta, r_schedule, b, ball_schedule, n_window, eps_schedule,
    delta_schedule, and optional exact_cap / mode / threshold.
    """
    from .chains import chain_components, classify_components

    system._check_index(x)
    eps = Dyadic.coerce(grid["eps"])
    delta = Dyadic.coerce(grid["delta"])
    verdict = shadowing_check(system, eps, delta, scope="from-point", point=x)
    if not verdict.holds:
        raise ConfigError(
            f"point {x} is not ({eps},{delta})-shadowable; the audit premise fails"
        )
    class_delta = Dyadic.coerce(grid.get("class_delta", delta))
    sub, keep = _class_subsystem(system, x, class_delta)
    component_delta = Dyadic.coerce(grid.get("component_delta", class_delta))
    decomposition = chain_components(sub, component_delta)
    classified = classify_components(
        sub,
        decomposition,
        [Dyadic.coerce(e) for e in grid["eps_schedule"]],
        [Dyadic.coerce(d) for d in grid["delta_schedule"]],
    )
    has_no = any(cls == "NO" for cls in classified.component_class)

    mode = grid.get("mode", "auto")
    exact_cap = grid.get("exact_cap")
    threshold = grid.get("threshold", POSITIVITY_THRESHOLD)
    tests = []
    entropy_positive = False
    for r in grid["r_schedule"]:
        result = entropy_point_test(
            system,
            x,
            r,
            grid["b"],
            grid["ball_schedule"],
            grid["n_window"],
            mode=mode,
            exact_cap=exact_cap,
            threshold=threshold,
        )
        tests.append(result)
        if result["classification"] != "negative":
            entropy_positive = True
    return {
        "x": x,
        "class_nodes": keep,
        "component_classes": classified.component_class,
        "has_no_component": has_no,
        "entropy_tests": tests,
        "entropy_positive": entropy_positive,
        "agree": entropy_positive == has_no,
    }


def uniform_entropy_rate_audit(system: FiniteSystem, x: int, grid: dict) -> dict:
    """Cross-check the uniform entropy verdict against chain growth on the class.

    A "uniform-positive" verdict for some (r, b) pair on the grid should
    coincide with positive growth of separated delta-walk counts restricted
    to the chain class of x.

    ``grid`` keys: eps, delta, class_delta, rb_pairs (list of [r, b]),
    ball_schedule, n_window, chain_delta, chain_r, chain_n_window, and
    optional candidate_walks_by_n (dict n -> walk list) / exact_cap / mode /
    walk_cap / threshold.
    """
    system._check_index(x)
    eps = Dyadic.coerce(grid["eps"])
    delta = Dyadic.coerce(grid["delta"])
    verdict = shadowing_check(system, eps, delta, scope="from-point", point=x)
    if not verdict.holds:
        raise ConfigError(
            f"point {x} is not ({eps},{delta})-shadowable; the audit premise fails"
        )
    class_delta = Dyadic.coerce(grid.get("class_delta", delta))
    sub, keep = _class_subsystem(system, x, class_delta)

    mode = grid.get("mode", "auto")
    exact_cap = grid.get("exact_cap")
    threshold = grid.get("threshold", POSITIVITY_THRESHOLD)
    tests = []
    uniform_positive = False
    for r, b in grid["rb_pairs"]:
        result = entropy_point_test(
            system,
            x,
            r,
            b,
            grid["ball_schedule"],
            grid["n_window"],
            mode=mode,
            exact_cap=exact_cap,
            threshold=threshold,
        )
        tests.append(result)
        if result["classification"] == "uniform-positive":
            uniform_positive = True

    chain_window = [int(n) for n in grid["chain_n_window"]]
    chain_r = Dyadic.coerce(grid["chain_r"])
    chain_delta = Dyadic.coerce(grid["chain_delta"])
    by_n = grid.get("candidate_walks_by_n") or {}
    entries = []
    for n in chain_window:
        if n in by_n:
            entry = chain_separated_count(
                sub, n, chain_r, chain_delta, candidate_walks=by_n[n]
            )
        else:
            entry = chain_separated_count(
                sub,
                n,
                chain_r,
                chain_delta,
                mode=mode,
                exact_cap=exact_cap,
                walk_cap=grid.get("walk_cap"),
            )
        entries.append(entry)
    chain_rate = growth_rate(chain_window, [e["count"] for e in entries])
    chain_positive = chain_rate > threshold
    return {
        "x": x,
        "class_nodes": keep,
        "entropy_tests": tests,
        "uniform_positive": uniform_positive,
        "chain_counts": entries,
        "chain_rate": chain_rate,
        "chain_positive": chain_positive,
        "agree": uniform_positive == chain_positive,
    }
