"""Shared fixtures and independent brute-force oracles for the test suite.

Every oracle recomputes its answer straight from the definitions using
``fractions.Fraction`` arithmetic and exhaustive enumeration.  None of them
call the library code paths they are used to check, so an agreement between
oracle and library is evidence, not circularity.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from chainscope import Dyadic, FiniteSystem


def dy(num: int, exp: int = 0) -> Dyadic:
    return Dyadic(num, exp)


def frac(value) -> Fraction:
    if isinstance(value, Dyadic):
        return Fraction(value.num, 1 << value.exp)
    return Fraction(value)


# Distance numerators in eighths, all inside [1/2, 1].  Any symmetric table
# with zero diagonal and off-diagonal values in [D/2, D] satisfies the
# triangle inequality automatically, so random tables drawn from this pool
# are genuine metrics without rejection sampling.
METRIC_NUMERATORS = (4, 5, 6, 7, 8)


def random_system(rng: np.random.Generator, n: int, invertible: bool = False) -> FiniteSystem:
    dnum = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            v = int(rng.choice(METRIC_NUMERATORS))
            dnum[i, j] = v
            dnum[j, i] = v
    if invertible:
        image = rng.permutation(n)
    else:
        image = rng.integers(0, n, size=n)
    return FiniteSystem(dnum, 3, image)


def line_system(n: int, scale_exp: int = 3, image=None) -> FiniteSystem:
    """Points 0..n-1 on a line, d(i, j) = |i - j| / 2^scale_exp."""
    rows = [[Dyadic(abs(i - j), scale_exp) for j in range(n)] for i in range(n)]
    if image is None:
        image = [min(i + 1, n - 1) for i in range(n)]
    return FiniteSystem.from_rows(rows, image)


def two_cycle(gap: Dyadic | None = None) -> FiniteSystem:
    """Two points swapped by the map, at a configurable distance."""
    gap = Dyadic(1) if gap is None else gap
    return FiniteSystem.from_rows([[Dyadic(0), gap], [gap, Dyadic(0)]], [1, 0])


def two_fixed_points(gap: Dyadic) -> FiniteSystem:
    """Two fixed points at the given distance."""
    return FiniteSystem.from_rows([[Dyadic(0), gap], [gap, Dyadic(0)]], [0, 1])


def spur_into_full_shift() -> FiniteSystem:
    """One-sided depth-3 full-shift compilation plus a transient entry node.

    Node 8 maps onto the all-zero window; it sits 1/4 from windows starting
    with 0 and 1/2 from windows starting with 1, so at delta = 1/4 it joins
    the branching component while every ball around it of radius 1/4 still
    holds five points.
    """
    from chainscope import SymbolicSystem, compile_symbolic

    space = SymbolicSystem((Dyadic(0), Dyadic(1)), "one")
    compiled, reps = compile_symbolic(space, 3)
    n = compiled.size
    rows = [[compiled.dist(i, j) for j in range(n)] for i in range(n)]
    spur_row = []
    zero_index = None
    for i in range(n):
        first = reps[i].at(1)
        spur_row.append(Dyadic(1, 2) if first == Dyadic(0) else Dyadic(1, 1))
        if reps[i].window(1, 3) == (Dyadic(0), Dyadic(0), Dyadic(0)):
            zero_index = i
    for i in range(n):
        rows[i].append(spur_row[i])
    rows.append(spur_row + [Dyadic(0)])
    image = [compiled.step(i) for i in range(n)] + [zero_index]
    return FiniteSystem.from_rows(rows, image)


def frac_dist(system: FiniteSystem) -> list[list[Fraction]]:
    n = system.size
    return [[frac(system.dist(i, j)) for j in range(n)] for i in range(n)]


def image_list(system: FiniteSystem) -> list[int]:
    return [int(system.image[i]) for i in range(system.size)]


# -- chain-machinery oracles -------------------------------------------


def oracle_successors(system: FiniteSystem, delta) -> list[set[int]]:
    """succ[i] = all j with d(f(i), j) <= delta, by Fraction comparison."""
    dl = frac(delta)
    dist = frac_dist(system)
    f = image_list(system)
    return [
        {j for j in range(system.size) if dist[f[i]][j] <= dl}
        for i in range(system.size)
    ]


def oracle_reach(succ: list[set[int]]) -> list[set[int]]:
    """reach[i] = all j reachable from i by a chain of length >= 1."""
    n = len(succ)
    reach = [set(s) for s in succ]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            extra: set[int] = set()
            for j in reach[i]:
                extra |= succ[j]
            if not extra <= reach[i]:
                reach[i] |= extra
                changed = True
    return reach


def oracle_recurrent(system: FiniteSystem, delta) -> list[int]:
    reach = oracle_reach(oracle_successors(system, delta))
    return sorted(i for i in range(system.size) if i in reach[i])


def oracle_components(system: FiniteSystem, delta) -> list[list[int]]:
    reach = oracle_reach(oracle_successors(system, delta))
    recurrent = [i for i in range(system.size) if i in reach[i]]
    components: list[list[int]] = []
    seen: set[int] = set()
    for i in recurrent:
        if i in seen:
            continue
        component = sorted(j for j in recurrent if j in reach[i] and i in reach[j])
        seen.update(component)
        components.append(component)
    components.sort(key=lambda c: c[0])
    return components


def oracle_chain_class(system: FiniteSystem, delta, x: int) -> list[int]:
    reach = oracle_reach(oracle_successors(system, delta))
    return sorted({x} | reach[x])


# -- shadowing oracles -------------------------------------------------


def is_pseudo_orbit(system: FiniteSystem, path, delta) -> bool:
    dl = frac(delta)
    dist = frac_dist(system)
    f = image_list(system)
    return all(dist[f[a]][b] <= dl for a, b in zip(path, path[1:]))


def has_shadow(system: FiniteSystem, path, eps) -> bool:
    """Does some true orbit stay within eps of every node of the path?"""
    ep = frac(eps)
    dist = frac_dist(system)
    f = image_list(system)
    for z in range(system.size):
        current = z
        ok = True
        for node in path:
            if dist[current][node] > ep:
                ok = False
                break
            current = f[current]
        if ok:
            return True
    return False


def oracle_shadowing(system: FiniteSystem, eps, delta, max_nodes: int, starts=None):
    """Exhaustively check every delta-pseudo-orbit with <= max_nodes nodes.

    Returns (holds, counterexample-or-None).  Depth-first enumeration with
    incremental survivor filtering: alongside each path prefix we carry the
    set of points that still eps-track it, so a path dies the moment its
    tracker set empties.
    """
    ep = frac(eps)
    dl = frac(delta)
    n = system.size
    dist = frac_dist(system)
    f = image_list(system)
    succ = [[j for j in range(n) if dist[f[i]][j] <= dl] for i in range(n)]

    def extend(path: list[int], survivors: dict[int, int]):
        if not survivors:
            return list(path)
        if len(path) >= max_nodes:
            return None
        for w in succ[path[-1]]:
            path.append(w)
            filtered = {}
            for z, img in survivors.items():
                nxt = f[img]
                if dist[nxt][w] <= ep:
                    filtered[z] = nxt
            result = extend(path, filtered)
            path.pop()
            if result is not None:
                return result
        return None

    if starts is None:
        starts = range(n)
    for s in sorted(starts):
        survivors = {z: z for z in range(n) if dist[z][s] <= ep}
        result = extend([s], survivors)
        if result is not None:
            return False, result
    return True, None


# -- separated-set oracles ---------------------------------------------


def oracle_pullback(system: FiniteSystem, a: int, b: int, n: int) -> Fraction:
    """max over iterates 0..n-1 of d(f^k a, f^k b), by Fraction."""
    dist = frac_dist(system)
    f = image_list(system)
    best = Fraction(0)
    x, y = a, b
    for _ in range(n):
        d = dist[x][y]
        if d > best:
            best = d
        x, y = f[x], f[y]
    return best


def _max_clique(m: int, linked) -> int:
    """Largest clique in the graph on 0..m-1 given by the ``linked`` test."""
    adjacency = [set() for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if linked(i, j):
                adjacency[i].add(j)
                adjacency[j].add(i)
    best = 0

    def grow(count: int, candidates: set[int]) -> None:
        nonlocal best
        if count + len(candidates) <= best:
            return
        if not candidates:
            best = max(best, count)
            return
        v = min(candidates)
        grow(count + 1, candidates & adjacency[v])
        grow(count, candidates - {v})

    grow(0, set(range(m)))
    return best


def oracle_max_separated(system: FiniteSystem, K, n: int, r) -> int:
    """Largest (n, r)-separated subset of K, by exhaustive clique search."""
    pts = sorted(K)
    rr = frac(r)
    pair = {}
    for i, a in enumerate(pts):
        for j in range(i + 1, len(pts)):
            pair[(i, j)] = oracle_pullback(system, a, pts[j], n) > rr
    return _max_clique(len(pts), lambda i, j: pair[(min(i, j), max(i, j))])


def oracle_chain_walks(system: FiniteSystem, delta, n: int) -> list[tuple[int, ...]]:
    """All delta-chains with exactly n nodes, in lexicographic order."""
    dl = frac(delta)
    dist = frac_dist(system)
    f = image_list(system)
    succ = [[j for j in range(system.size) if dist[f[i]][j] <= dl] for i in range(system.size)]
    walks: list[tuple[int, ...]] = []

    def rec(path: list[int]) -> None:
        if len(path) == n:
            walks.append(tuple(path))
            return
        for w in succ[path[-1]]:
            path.append(w)
            rec(path)
            path.pop()

    for s in range(system.size):
        rec([s])
    return walks


def oracle_walk_separation(system: FiniteSystem, u, v) -> Fraction:
    dist = frac_dist(system)
    return max(dist[a][b] for a, b in zip(u, v))


def oracle_max_separated_walks(system: FiniteSystem, walks, r) -> int:
    rr = frac(r)
    return _max_clique(
        len(walks),
        lambda i, j: oracle_walk_separation(system, walks[i], walks[j]) > rr,
    )


# -- pair-search oracle ------------------------------------------------


def oracle_chain_pair_exists(system: FiniteSystem, eps, r, delta) -> bool:
    """Is there a pair of equal-length delta-chains from a common start back
    to a common node, pointwise within eps, separating to >= r somewhere?

    Full fixpoint search over the finite pair-state space (a, b, flag),
    coded from Fractions and set arithmetic.
    """
    ep = frac(eps)
    rr = frac(r)
    dl = frac(delta)
    n = system.size
    dist = frac_dist(system)
    f = image_list(system)
    succ = [[j for j in range(n) if dist[f[i]][j] <= dl] for i in range(n)]

    seen = {(v, v, False) for v in range(n)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for a, b, flag in frontier:
            for na in succ[a]:
                for nb in succ[b]:
                    if dist[na][nb] > ep:
                        continue
                    nflag = flag or dist[na][nb] >= rr
                    state = (na, nb, nflag)
                    if state in seen:
                        continue
                    if na == nb and nflag:
                        return True
                    seen.add(state)
                    nxt.append(state)
        frontier = nxt
    return False
