"""Reference system builders and construction-based certificates.

Builders produce exactly-metrized finite systems (odometers, compiled
shifts, circular-word rotations, inverse-limit truncations) together with
the marked points and auxiliary data their analyses need.  The certificate
builders (separated chain families, tracked subshift factors) construct the
combinatorial objects and then verify every claimed property exactly,
raising ConfigError when an input hypothesis fails and
InternalInconsistencyError when a property that the construction itself
guarantees does not check out.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from . import caps
from .chains import chain_graph, is_chain_transitive
from .core import FiniteSystem
from .dyadic import Dyadic, dyadic_max, dyadic_min
from .entropy import _pullback_max_num, h_star, separated_count
from .errors import ConfigError, InternalInconsistencyError
from .pairs import classify_pair
from .shadowing import shadowing_check, track_pseudo_orbit
from .symbolic import (
    SymbolicPoint,
    SymbolicSystem,
    compile_symbolic,
    metric_eval,
    one_sided_word,
    periodic_word,
    words_equal,
)

__all__ = [
    "FactorMapSpec",
    "xor_factor",
    "combine_words",
    "map_symbols",
    "odometer",
    "full_shift",
    "monotone_shift",
    "InverseLimitTruncation",
    "xor_tower",
    "synthetic_mod2_truncation",
    "qc_family",
    "lift_pair_suite",
    "ChainPair",
    "make_chain_pair",
    "separated_family_builder",
    "chain_pair_search",
    "subshift_factor_builder",
    "hexpansiveness_probe",
    "scrambled_lift_probe",
    "circular_word_system",
    "tracking_demo_instance",
]


# -- word-level helpers -------------------------------------------------


def combine_words(x: SymbolicPoint, y: SymbolicPoint, op) -> SymbolicPoint:
    """Symbolwise combination of two eventually periodic words (exact).

    The result's periods are the least common multiples of the inputs'
    periods, so the combination is again eventually periodic.
    """
    if x.sided != y.sided:
        raise ConfigError("cannot combine words of mixed sidedness")
    if x.sided == "one":
        core = max(len(x.center), len(y.center))
        period = math.lcm(len(x.right_period), len(y.right_period))
        center = tuple(op(x.at(n), y.at(n)) for n in range(1, core + 1))
        right = tuple(op(x.at(n), y.at(n)) for n in range(core + 1, core + period + 1))
        return SymbolicPoint("one", center, right)
    lo = min(x.offset, y.offset)
    hi = max(x.offset + len(x.center), y.offset + len(y.center))
    rp = math.lcm(len(x.right_period), len(y.right_period))
    lp = math.lcm(len(x.left_period), len(y.left_period))
    center = tuple(op(x.at(n), y.at(n)) for n in range(lo, hi))
    right = tuple(op(x.at(n), y.at(n)) for n in range(hi, hi + rp))
    left = tuple(op(x.at(n), y.at(n)) for n in range(lo - lp, lo))
    return SymbolicPoint("two", center, right, left, lo)


def map_symbols(x: SymbolicPoint, op) -> SymbolicPoint:
    """Apply a symbol map coordinatewise, preserving the word structure."""
    center = tuple(op(v) for v in x.center)
    right = tuple(op(v) for v in x.right_period)
    if x.sided == "one":
        return SymbolicPoint("one", center, right)
    left = tuple(op(v) for v in x.left_period)
    return SymbolicPoint("two", center, right, left, x.offset)


def _bit(value: Dyadic) -> int:
    if value == Dyadic(0):
        return 0
    if value == Dyadic(1):
        return 1
    raise ConfigError(f"expected a 0/1 symbol, got {value}")


def _xor(a: Dyadic, b: Dyadic) -> Dyadic:
    return Dyadic(_bit(a) ^ _bit(b))


# -- factor maps --------------------------------------------------------


@dataclass
class FactorMapSpec:
    """A symbol-local factor map with explicit fiber enumeration.

    ``forward`` maps a word to its image; ``fiber(word, seed)`` enumerates
    the preimages (seed in range(fiber_size)); ``openness_modulus(delta)``
    returns the radius r such that the forward image of a delta-ball
    contains an r-ball (the factor's openness certificate).
    """

    name: str
    forward: object
    fiber: object
    fiber_size: int
    openness_modulus: object


def _xor_forward(point: SymbolicPoint) -> SymbolicPoint:
    return combine_words(point, point.shift(1), _xor)


def _xor_fiber(point: SymbolicPoint, seed: int) -> SymbolicPoint:
    """Integrate y back to x with x_{n+1} = y_n xor x_n from a seed bit.

    The lift of an eventually periodic word is eventually periodic: if the
    xor over one period of y is 0 the period carries over; otherwise it
    doubles.
    """
    if seed not in (0, 1):
        raise ConfigError(f"fiber seed must be 0 or 1, got {seed!r}")
    y = point
    if y.sided == "one":
        core = len(y.center)
        p = len(y.right_period)
        parity = 0
        for v in y.right_period:
            parity ^= _bit(v)
        period = p * (2 if parity else 1)
        values = {1: seed}
        top = core + 2 * period + 2
        for n in range(1, top):
            values[n + 1] = _bit(y.at(n)) ^ values[n]
        start = core + 1
        center = tuple(Dyadic(values[n]) for n in range(1, start))
        right = tuple(Dyadic(values[n]) for n in range(start, start + period))
        return SymbolicPoint("one", center, right)
    r0 = y.offset + len(y.center)
    l0 = y.offset
    p = len(y.right_period)
    q = len(y.left_period)
    par_r = 0
    for v in y.right_period:
        par_r ^= _bit(v)
    par_l = 0
    for v in y.left_period:
        par_l ^= _bit(v)
    period_r = p * (2 if par_r else 1)
    period_l = q * (2 if par_l else 1)
    values = {l0: seed}
    for n in range(l0, r0 + period_r):
        values[n + 1] = _bit(y.at(n)) ^ values[n]
    for n in range(l0, l0 - 2 * period_l, -1):
        values[n - 1] = _bit(y.at(n - 1)) ^ values[n]
    offset = l0 - period_l
    center = tuple(Dyadic(values[n]) for n in range(offset, r0))
    right = tuple(Dyadic(values[n]) for n in range(r0, r0 + period_r))
    left = tuple(Dyadic(values[n]) for n in range(offset - period_l, offset))
    return SymbolicPoint("two", center, right, left, offset)


def xor_factor() -> FactorMapSpec:
    """The adjacent-sum (mod 2) factor of a binary shift.

    Forward rule z_n = x_n + x_{n+1} (mod 2); each word has exactly two
    preimages, complementary in every coordinate, hence at distance 1.
    The factor is open with modulus r(delta) = delta: prescribing an image
    cylinder constrains the preimage by the same cylinder depth.
    """
    return FactorMapSpec(
        name="adjacent-xor",
        forward=_xor_forward,
        fiber=_xor_fiber,
        fiber_size=2,
        openness_modulus=lambda delta: Dyadic.coerce(delta),
    )


# -- basic builders -----------------------------------------------------


def odometer(m_schedule, depth: int | None = None) -> FiniteSystem:
    """Adding machine truncation: residues mod the last modulus, map +1.

    The moduli must be divisibility-increasing; the distance between two
    residues is 2^-(first level where they disagree), which makes the map
    an exact isometry.
    """
    ms = [int(m) for m in m_schedule]
    if not ms or ms[0] < 1:
        raise ConfigError("modulus schedule must start with an integer >= 1")
    for a, b in zip(ms, ms[1:]):
        if b % a != 0:
            raise ConfigError(f"invalid divisibility: {a} does not divide {b}")
    if depth is not None:
        if not 1 <= depth <= len(ms):
            raise ConfigError(f"depth must be between 1 and {len(ms)}")
        ms = ms[:depth]
    n = ms[-1]
    levels = len(ms)
    num = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            level = None
            for k, m in enumerate(ms, start=1):
                if i % m != j % m:
                    level = k
                    break
            if level is None:
                raise InternalInconsistencyError(
                    f"distinct residues {i}, {j} agree at every level"
                )
            num[i, j] = num[j, i] = 1 << (levels - level)
    image = [(i + 1) % n for i in range(n)]
    return FiniteSystem(
        num,
        levels,
        image,
        labels=[str(i) for i in range(n)],
        invertible=True,
        metadata={"kind": "odometer", "moduli": ms},
    )


def full_shift(alphabet, sided: str, depth: int, class_cap: int | None = None):
    """Unconstrained shift over the alphabet, compiled at the given depth.

    Returns (symbolic space, compiled system, class dictionary).
    """
    space = SymbolicSystem(alphabet=tuple(Dyadic.coerce(a) for a in alphabet), sided=sided)
    system, reps = compile_symbolic(space, depth, class_cap=class_cap)
    return space, system, reps


def monotone_shift(K_levels: int, depth: int, scale_c: int = 2, class_cap: int | None = None) -> dict:
    """Monotone-modulus subshift over {0} u {+-2^-(c k)}, compiled one-sided.

    Words must have non-increasing absolute values.  Returns the space, the
    compiled system, the class dictionary, the marked points (x with the
    strictly decreasing ladder then zeros; x_k holding level k forever) and
    the level sets (X_0 the zero word, X_k the sign words of level k).
    """
    if K_levels < 1:
        raise ConfigError("K_levels must be >= 1")
    if depth < K_levels + 1:
        raise ConfigError("depth must exceed K_levels to see the marked tails")
    if scale_c < 1:
        raise ConfigError("scale_c must be >= 1")
    s = {k: Dyadic(1, scale_c * k) for k in range(1, K_levels + 1)}
    alphabet = [Dyadic(0)]
    for k in range(1, K_levels + 1):
        alphabet.append(s[k])
        alphabet.append(-s[k])
    space = SymbolicSystem(tuple(alphabet), "one", constraint="monotone")
    system, reps = compile_symbolic(space, depth, class_cap=class_cap)
    window_index = {reps[i].window(1, depth): i for i in range(system.size)}

    def lookup(window):
        window = tuple(window)
        if window not in window_index:
            raise InternalInconsistencyError(f"expected class {window} missing")
        return window_index[window]

    zero = Dyadic(0)
    x_window = tuple(s[k] for k in range(1, K_levels + 1)) + (zero,) * (depth - K_levels)
    marked = {"x": lookup(x_window), "x_k": {}}
    for k in range(1, K_levels + 1):
        w = tuple(s[j] for j in range(1, k + 1)) + (s[k],) * (depth - k)
        marked["x_k"][k] = lookup(w)
    level_sets = {0: [lookup((zero,) * depth)]}
    for k in range(1, K_levels + 1):
        members = []
        for i in range(system.size):
            symbols = reps[i].window(1, depth)
            if all(v == s[k] or v == -s[k] for v in symbols):
                members.append(i)
        level_sets[k] = sorted(members)
    return {
        "space": space,
        "system": system,
        "reps": reps,
        "levels": {k: s[k] for k in s},
        "marked": marked,
        "level_sets": level_sets,
    }


# -- inverse-limit truncations ------------------------------------------


@dataclass
class InverseLimitTruncation:
    """Finite-depth truncation of an inverse limit under a constant bonding map.

    ``points[i]`` is the tuple (level 1, ..., level depth); every stored
    tuple satisfies bonding.forward(level n+1) == level n exactly.  The
    metric is max_n 2^-n * d_n, so agreement through level N means
    closeness at scale 2^-(N+1).
    """

    depth: int
    base: SymbolicSystem
    bonding: FactorMapSpec
    points: list

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError("truncation depth must be >= 1")
        for tup in self.points:
            if len(tup) != self.depth:
                raise ConfigError("every point must carry one word per level")
            for n in range(self.depth - 1):
                if not words_equal(self.bonding.forward(tup[n + 1]), tup[n]):
                    raise ConfigError(
                        f"compatibility violated between levels {n + 2} and {n + 1}"
                    )

    def metric(self, a, b) -> Dyadic:
        return dyadic_max(
            [
                metric_eval(a[n], b[n]).scale_pow2(-(n + 1))
                for n in range(self.depth)
            ]
        )

    def shift_point(self, tup):
        return tuple(w.shift(1) for w in tup)


def xor_tower(depth: int, window: int, class_cap: int | None = None):
    """Inverse-limit truncation of binary shifts bonded by the xor factor.

    Points are towers over all period-``window`` top patterns; lower levels
    are forward images.  Returns (truncation, compiled system, dictionary
    node -> tower tuple).
    """
    if depth < 1 or window < 1:
        raise ConfigError("depth and window must be >= 1")
    count = 1 << window
    cap = caps.DEFAULT_STATE_CAP if class_cap is None else int(class_cap)
    if count > cap:
        raise ConfigError(f"2^window = {count} tower points exceed the cap {cap}")
    base = SymbolicSystem((Dyadic(0), Dyadic(1)), "two")
    bonding = xor_factor()
    patterns = list(itertools.product((0, 1), repeat=window))
    towers = []
    for pattern in patterns:
        top = periodic_word([Dyadic(b) for b in pattern])
        levels = [top]
        for _ in range(depth - 1):
            levels.append(bonding.forward(levels[-1]))
        levels.reverse()
        towers.append(tuple(levels))
    truncation = InverseLimitTruncation(depth, base, bonding, towers)

    index = {patterns[i]: i for i in range(count)}
    image = []
    for pattern in patterns:
        shifted = pattern[1:] + pattern[:1]
        image.append(index[shifted])
    dists = [
        [truncation.metric(towers[i], towers[j]) if i != j else Dyadic(0) for j in range(count)]
        for i in range(count)
    ]
    system = FiniteSystem.from_rows(
        dists,
        image,
        labels=["".join(str(b) for b in pattern) for pattern in patterns],
        invertible=True,
        metadata={"kind": "inverse-limit-compile", "depth": depth, "window": window},
    )
    system.metadata["resolution"] = (system.min_positive_distance() or Dyadic(0)).as_json()
    reps = {i: towers[i] for i in range(count)}
    return truncation, system, reps


def synthetic_mod2_truncation(marker_positions, horizon: int) -> InverseLimitTruncation:
    """A depth-2 truncation over alphabet {0,1,2,3} bonded by mod-2 reduction.

    The second level hides a marker word in the twos-bit: one point carries
    markers at the given positions, its companion carries none, so the pair
    agrees at level 1 while the level-2 distance spikes wherever a marker
    crosses the origin.  Used to show that a non-xor bonding map can admit
    proxy-scrambled lifts of an asymptotic base pair.
    """
    positions = sorted({int(p) for p in marker_positions})
    if not positions:
        raise ConfigError("marker_positions must be non-empty")
    span = max(positions) + 1
    if span > 4 * horizon:
        raise ConfigError("markers extend beyond four horizons; enlarge horizon")
    base_alphabet = (Dyadic(0), Dyadic(1), Dyadic(2), Dyadic(3))
    base = SymbolicSystem(base_alphabet, "two")

    def mod2(v: Dyadic) -> Dyadic:
        return Dyadic(int(float(v)) % 2)

    def forward(point: SymbolicPoint) -> SymbolicPoint:
        return map_symbols(point, mod2)

    def fiber(point: SymbolicPoint, seed: int) -> SymbolicPoint:
        if seed == 0:
            return point
        return map_symbols(point, lambda v: v + Dyadic(2))

    bonding = FactorMapSpec("mod-two", forward, fiber, 2, lambda d: Dyadic.coerce(d))
    zero = periodic_word([Dyadic(0)])
    block = [Dyadic(0)] * (span + 2)
    for p in positions:
        block[p] = Dyadic(2)
    marked = SymbolicPoint("two", tuple(block), (Dyadic(0),), (Dyadic(0),), 0)
    plain = SymbolicPoint("two", (Dyadic(0),), (Dyadic(0),), (Dyadic(0),), 0)
    points = [(zero, marked), (zero, plain)]
    return InverseLimitTruncation(2, base, bonding, points)


def qc_family(truncation: InverseLimitTruncation, q, N: int, eps) -> dict:
    """All truncation points agreeing with q through level N, branching freely above.

    Levels N+1..depth are rebuilt by successive fiber choices of the bonding
    map, giving fiber_size^(depth-N) points; each is verified to stay within
    eps of q under every shift (the two-sided tracking condition, exact over
    the words' periods).  When eps is below the family's reach, the error
    reports the minimal feasible eps.
    """
    depth = truncation.depth
    if not 1 <= N <= depth:
        raise ConfigError(f"level N must be between 1 and the depth {depth}")
    eps = Dyadic.coerce(eps)
    if isinstance(q, int):
        q = truncation.points[q]
    if len(q) != depth:
        raise ConfigError("q must be a full tower tuple")

    members = [tuple(q[:N])]
    for level in range(N, depth):
        grown = []
        for partial in members:
            for seed in range(truncation.bonding.fiber_size):
                lift = truncation.bonding.fiber(partial[-1], seed)
                grown.append(partial + (lift,))
        members = grown
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            if all(words_equal(x, y) for x, y in zip(a, b)):
                raise InternalInconsistencyError("fiber branches produced equal towers")

    period = 1
    for tup in members + [tuple(q)]:
        for w in tup:
            period = math.lcm(period, len(w.right_period), len(w.left_period) or 1)
    sups = []
    for member in members:
        values = []
        for i in range(period):
            a = tuple(w.shift(i) for w in member)
            b = tuple(w.shift(i) for w in q)
            values.append(truncation.metric(a, b))
        sups.append(dyadic_max(values))
    feasible = dyadic_max(sups)
    if eps < feasible:
        raise ConfigError(
            f"eps {eps} too small for level {N}; minimal feasible eps is {feasible}"
        )
    return {
        "level": N,
        "eps": eps.as_json(),
        "count": len(members),
        "points": members,
        "min_feasible_eps": feasible.as_json(),
    }


# -- chain pairs and certificates ---------------------------------------


@dataclass
class ChainPair:
    """Two delta-chains of equal length with recorded separation."""

    chain_a: list
    chain_b: list
    delta: Dyadic
    separation: Dyadic
    endpoints_equal: bool

    def to_json(self) -> dict:
        return {
            "chain_a": list(self.chain_a),
            "chain_b": list(self.chain_b),
            "delta": self.delta.as_json(),
            "separation": self.separation.as_json(),
            "endpoints_equal": self.endpoints_equal,
        }


def _validate_chain(system: FiniteSystem, chain, delta: Dyadic, what: str) -> list[int]:
    nodes = [int(v) for v in chain]
    if not nodes:
        raise ConfigError(f"{what} must be non-empty")
    for v in nodes:
        system._check_index(v)
    le = system.dist_le(delta)
    for i in range(len(nodes) - 1):
        if not le[int(system.image[nodes[i]]), nodes[i + 1]]:
            raise ConfigError(f"{what} breaks the delta bound at step {i}")
    return nodes


def make_chain_pair(system: FiniteSystem, chain_a, chain_b, delta) -> ChainPair:
    delta = Dyadic.coerce(delta)
    a = _validate_chain(system, chain_a, delta, "chain_a")
    b = _validate_chain(system, chain_b, delta, "chain_b")
    if len(a) != len(b):
        raise ConfigError("paired chains must have equal length")
    separation = dyadic_max([system.dist(p, q) for p, q in zip(a, b)])
    endpoints = a[0] == b[0] and a[-1] == b[-1]
    return ChainPair(a, b, delta, separation, endpoints)


def separated_family_builder(system: FiniteSystem, connector, pair_table: dict, N: int, e) -> dict:
    """2^N delta-chains built from a connector and per-landing-point chain pairs.

    The connector leads to the first landing point; each subsequent block
    follows branch a or b of the pair starting there (both branches share
    their endpoints, so the landing sequence is independent of the bit
    choices).  Pairwise separation at level e is verified exactly, and the
    certificate carries the entropy lower-bound rate log(2)/block_steps.
    """
    if not isinstance(N, int) or N < 1:
        raise ConfigError("N must be a positive int")
    e = Dyadic.coerce(e)
    if not pair_table:
        raise ConfigError("pair table must be non-empty")
    deltas = {pair.delta for pair in pair_table.values()}
    if len(deltas) != 1:
        raise ConfigError("all chain pairs must share one delta")
    delta = next(iter(deltas))
    connector = _validate_chain(system, connector, delta, "connector")
    lengths = set()
    for start, pair in pair_table.items():
        if pair.chain_a[0] != start or pair.chain_b[0] != start:
            raise ConfigError(f"pair for landing point {start} does not start there")
        if pair.chain_a[-1] != pair.chain_b[-1]:
            raise ConfigError(f"pair for landing point {start} has unequal endpoints")
        if pair.separation < e:
            raise ConfigError(
                f"pair at {start} separates only to {pair.separation}, below e={e}"
            )
        _validate_chain(system, pair.chain_a, delta, "pair branch a")
        _validate_chain(system, pair.chain_b, delta, "pair branch b")
        lengths.add(len(pair.chain_a) - 1)
        lengths.add(len(pair.chain_b) - 1)
    if len(lengths) != 1:
        raise ConfigError("all pair branches must share one step count")
    block = next(iter(lengths))

    chains = []
    for bits in itertools.product((0, 1), repeat=N):
        nodes = list(connector)
        cur = nodes[-1]
        for bit in bits:
            if cur not in pair_table:
                raise ConfigError(
                    f"pair table does not cover the landing point {cur}"
                )
            pair = pair_table[cur]
            branch = pair.chain_a if bit == 0 else pair.chain_b
            nodes.extend(branch[1:])
            cur = branch[-1]
        chains.append(nodes)

    for i in range(len(chains)):
        for j in range(i + 1, len(chains)):
            if not any(
                system.dist(p, q) >= e for p, q in zip(chains[i], chains[j])
            ):
                raise InternalInconsistencyError(
                    f"constructed chains {i} and {j} are not e-separated"
                )
    return {
        "N": N,
        "delta": delta.as_json(),
        "e": e.as_json(),
        "chains": chains,
        "chain_steps": len(chains[0]) - 1,
        "certificate": {
            "rate": math.log(2) / block,
            "block_steps": block,
            "connector_steps": len(connector) - 1,
            "chains": len(chains),
        },
    }


def chain_pair_search(
    system: FiniteSystem,
    eps,
    r,
    delta,
    length_bound: int | None = None,
    state_cap: int | None = None,
) -> dict:
    """Search for two delta-chains with equal endpoints separating into [r, eps].

    Breadth-first over pair states (a, b, reached-r flag), pruning states
    beyond eps.  "none" is a certified absence (whole pair graph explored);
    "inconclusive" means the length bound cut the search short.
    """
    eps = Dyadic.coerce(eps)
    r = Dyadic.coerce(r)
    delta = Dyadic.coerce(delta)
    if r > eps:
        raise ConfigError(f"need r <= eps, got r={r} > eps={eps}")
    cap = caps.state_cap(state_cap)
    graph = chain_graph(system, delta)
    successors = [list(map(int, np.nonzero(graph.adjacency[v])[0])) for v in range(system.size)]
    le_eps = system.dist_le(eps)
    ge_r = system._dnum >= _threshold_geq(system, r)

    explored = 0
    parents: dict[tuple, tuple | None] = {}
    seen = set()
    frontier = []
    for v in range(system.size):
        key = (v, v, False)
        seen.add(key)
        parents[key] = None
        frontier.append(key)
    depth = 0
    while frontier:
        if length_bound is not None and depth >= length_bound:
            return {"status": "inconclusive", "pair": None, "explored": explored}
        nxt = []
        for key in frontier:
            a, b, flag = key
            explored = caps.charge(explored, 1, cap, "pair-search states")
            for na in successors[a]:
                for nb in successors[b]:
                    if not le_eps[na, nb]:
                        continue
                    nflag = flag or bool(ge_r[na, nb])
                    nkey = (na, nb, nflag)
                    if nkey in seen:
                        continue
                    seen.add(nkey)
                    parents[nkey] = key
                    if na == nb and nflag:
                        chain_a = []
                        chain_b = []
                        cur = nkey
                        while cur is not None:
                            chain_a.append(cur[0])
                            chain_b.append(cur[1])
                            cur = parents[cur]
                        chain_a.reverse()
                        chain_b.reverse()
                        pair = make_chain_pair(system, chain_a, chain_b, delta)
                        return {"status": "found", "pair": pair, "explored": explored}
                    nxt.append(nkey)
        frontier = nxt
        depth += 1
    return {"status": "none", "pair": None, "explored": explored}


def _threshold_geq(system: FiniteSystem, bound: Dyadic) -> np.int64:
    """Smallest numerator t (system scale) with t/2^dexp >= bound, clamped."""
    bound = Dyadic.coerce(bound)
    if system._dexp >= bound.exp:
        t = bound.num << (system._dexp - bound.exp)
    else:
        shift = bound.exp - system._dexp
        t = -((-bound.num) >> shift)  # ceiling division by 2^shift
    t = max(min(t, (1 << 62) - 1), -(1 << 62))
    return np.int64(t)


def subshift_factor_builder(
    system: FiniteSystem,
    pair: ChainPair,
    connector,
    eps,
    levels: int,
    gamma=None,
) -> dict:
    """Track 2^levels branch-coded pseudo-orbits and certify the coding map.

    Builds the periodic-prefix pseudo-orbits alternating pair branches with
    the return connector, finds a gamma-tracker for each, and verifies:
    unambiguous coding (no tracker follows two codes), prefix semiconjugacy
    (advancing a tracker by one block tracks the shifted code), and exact
    pairwise (block*levels, r-2*gamma)-separation of the trackers.

    The tracker-existence check replaces a blanket shadowing assumption: on
    a finite system, universal shadowing below the branch scale is
    unsatisfiable, but the construction only ever needs its own
    pseudo-orbits tracked.
    """
    if not isinstance(levels, int) or levels < 1:
        raise ConfigError("levels must be a positive int")
    eps = Dyadic.coerce(eps)
    if not pair.endpoints_equal:
        raise ConfigError("the chain pair must have equal endpoints")
    r = pair.separation
    half_r = r.scale_pow2(-1)
    if gamma is None:
        gamma = dyadic_min([eps, half_r]).scale_pow2(-1)
    gamma = Dyadic.coerce(gamma)
    if not (gamma < eps and gamma < half_r):
        raise ConfigError(
            f"gamma must satisfy gamma < min(eps, r/2); got gamma={gamma}, "
            f"eps={eps}, r={r}"
        )
    delta = pair.delta
    connector = _validate_chain(system, connector, delta, "connector")
    if connector[0] != pair.chain_a[-1] or connector[-1] != pair.chain_a[0]:
        raise ConfigError("connector must return from the pair's end to its start")
    block = (len(pair.chain_a) - 1) + (len(connector) - 1)

    def code_orbit(bits) -> list[int]:
        nodes = [pair.chain_a[0]]
        for bit in bits:
            branch = pair.chain_a if bit == 0 else pair.chain_b
            nodes.extend(branch[1:])
            nodes.extend(connector[1:])
        return nodes

    codes = list(itertools.product((0, 1), repeat=levels))
    orbits = {bits: code_orbit(bits) for bits in codes}
    trackers = {}
    tracker_sets = {}
    for bits, orbit in orbits.items():
        _validate_chain(system, orbit, delta, f"pseudo-orbit {bits}")
        found = track_pseudo_orbit(system, orbit, gamma)
        if not found:
            raise ConfigError(
                f"shadowing precondition fails: pseudo-orbit {bits} has no "
                f"gamma={gamma} tracker"
            )
        trackers[bits] = found[0]
        tracker_sets[bits] = set(found)
    for s in codes:
        for t in codes:
            if s != t and trackers[s] in tracker_sets[t]:
                raise InternalInconsistencyError(
                    f"tracking ambiguity: point {trackers[s]} follows both "
                    f"{s} and {t}, contradicting separation > 2*gamma"
                )

    prefix_len = block * (levels - 1)
    semiconjugacy = True
    for bits in codes:
        z = system.iterate(trackers[bits], block)
        shifted = code_orbit(bits[1:] + (0,))[: prefix_len + 1]
        le = system.dist_le(gamma)
        v = z
        for i, target in enumerate(shifted):
            if not le[v, target]:
                semiconjugacy = False
                break
            v = int(system.image[v])
        if not semiconjugacy:
            break
    if not semiconjugacy:
        raise InternalInconsistencyError(
            "advancing a tracker by one block fails to track the shifted code"
        )

    threshold = r - gamma.scale_pow2(1)
    shadow_nodes = [trackers[bits] for bits in codes]
    n_steps = block * levels
    idx = np.array(shadow_nodes, dtype=np.int64)
    pulled = _pullback_max_num(system, idx, n_steps)
    tmin = _threshold_geq(system, threshold)
    off_diag = ~np.eye(len(codes), dtype=bool)
    separation_ok = bool((pulled[off_diag] >= tmin).all())
    if not separation_ok:
        raise InternalInconsistencyError(
            "tracker family is not (block*levels, r-2*gamma)-separated"
        )
    evidence = separated_count(
        system,
        sorted(set(shadow_nodes)),
        n_steps,
        threshold.scale_pow2(-1),
        mode="exact",
        exact_cap=max(64, len(codes)),
    )
    return {
        "levels": levels,
        "m": block,
        "delta": delta.as_json(),
        "eps": eps.as_json(),
        "gamma": gamma.as_json(),
        "r": r.as_json(),
        "shadow_points": {"".join(map(str, bits)): trackers[bits] for bits in codes},
        "separation": {
            "n": n_steps,
            "threshold": threshold.as_json(),
            "verified": separation_ok,
        },
        "semiconjugacy_verified": semiconjugacy,
        "entropy_evidence": evidence,
        "bound_stated": eps.as_json(),
        "bound_proof": (eps * Dyadic(3)).as_json(),
    }


# -- probes -------------------------------------------------------------


def hexpansiveness_probe(
    system: FiniteSystem,
    eps_schedule,
    r_grid,
    delta_schedule,
    length_bound: int | None = None,
    n_window=(1, 2, 3),
    state_cap: int | None = None,
) -> dict:
    """Search for equal-endpoint chain pairs at every (eps, r, delta) cell.

    Preconditions (refused otherwise): the system is chain transitive at
    the coarsest tested delta, and for every eps some delta in the schedule
    grants shadowing.  A found pair is evidence against h-expansiveness at
    that eps; certified absence across the grid is evidence for it.  The
    report cross-checks with the tracking-set entropy sweep and with an
    exact scrambled-pair scan (which cannot succeed on a finite system and
    is reported for completeness).
    """
    eps_schedule = [Dyadic.coerce(e) for e in eps_schedule]
    r_grid = [Dyadic.coerce(v) for v in r_grid]
    delta_schedule = [Dyadic.coerce(d) for d in delta_schedule]
    if not eps_schedule or not r_grid or not delta_schedule:
        raise ConfigError("schedules must be non-empty")
    coarse = dyadic_max(delta_schedule)
    ok, _ = is_chain_transitive(system, list(range(system.size)), coarse)
    if not ok:
        raise ConfigError(
            f"precondition fails: system is not chain transitive at delta={coarse}"
        )
    shadow_grants = {}
    for eps in eps_schedule:
        grant = None
        for delta in sorted(delta_schedule):
            verdict = shadowing_check(system, eps, delta, state_cap=state_cap)
            if verdict.holds:
                grant = delta
                break
        if grant is None:
            raise ConfigError(
                f"precondition fails: no delta in the schedule grants shadowing at eps={eps}"
            )
        shadow_grants[eps] = grant

    scrambled_found = None
    if system.size <= 256:
        for x in range(system.size):
            for y in range(x + 1, system.size):
                verdict = classify_pair(system, x, y, 4, Dyadic(1, 4), Dyadic(1, 1))
                if verdict.classification == "scrambled":
                    scrambled_found = (x, y)
                    break
            if scrambled_found:
                break

    rows = []
    for eps in eps_schedule:
        cells = []
        found = False
        for r in r_grid:
            if r > eps:
                continue
            for delta in delta_schedule:
                result = chain_pair_search(
                    system, eps, r, delta, length_bound=length_bound, state_cap=state_cap
                )
                cell = {
                    "r": r.as_json(),
                    "delta": delta.as_json(),
                    "status": result["status"],
                    "separation": result["pair"].separation.as_json()
                    if result["pair"]
                    else None,
                }
                cells.append(cell)
                if result["status"] == "found":
                    found = True
        sweep = h_star(system, eps, list(n_window), r_grid)
        rows.append(
            {
                "eps": eps.as_json(),
                "shadowing_delta": shadow_grants[eps].as_json(),
                "cells": cells,
                "pair_found": found,
                "evidence_not_h_expansive": found,
                "h_star": sweep["value"],
            }
        )
    return {
        "transitive_at": coarse.as_json(),
        "scrambled_pair": scrambled_found,
        "rows": rows,
    }


def scrambled_lift_probe(truncation: InverseLimitTruncation, N: int, horizon: int, thresholds: dict) -> dict:
    """Look for pairs asymptotic at one level but proxy-scrambled one level up.

    Classification is by tail-window proxies (the honest mode for words
    that truncate something non-periodic).  Absence across all levels >= N
    is finite-scale evidence that the bonding map never turns asymptotic
    pairs into scrambled ones.
    """
    if not 1 <= N < truncation.depth:
        raise ConfigError("need 1 <= N < depth")
    s_lo = Dyadic.coerce(thresholds["s_lo"])
    s_hi = Dyadic.coerce(thresholds["s_hi"])
    found = []
    levels_checked = []
    for M in range(N, truncation.depth):
        levels_checked.append(M)
        for i in range(len(truncation.points)):
            for j in range(i + 1, len(truncation.points)):
                p = truncation.points[i]
                q = truncation.points[j]
                low = classify_pair(
                    truncation.base, p[M - 1], q[M - 1], horizon, s_lo, s_hi, mode="proxy"
                )
                if low.classification != "asymptotic":
                    continue
                high = classify_pair(
                    truncation.base, p[M], q[M], horizon, s_lo, s_hi, mode="proxy"
                )
                if high.classification == "scrambled":
                    found.append(
                        {
                            "pair": [i, j],
                            "level": M,
                            "liminf": high.liminf_proxy.as_json(),
                            "limsup": high.limsup_proxy.as_json(),
                        }
                    )
    return {
        "levels_checked": levels_checked,
        "found": found,
        "absent": not found,
    }


def lift_pair_suite(count: int, seed: int, horizon: int = 8) -> dict:
    """Classify xor-factor lifts of randomized asymptotic base pairs, exactly.

    Each trial draws an eventually periodic binary word, perturbs finitely
    many coordinates (an asymptotic partner), lifts both through the xor
    factor with random seeds, and classifies the lifted pair in exact mode.
    Lifts of asymptotic pairs are asymptotic or distal, depending on the
    perturbation parity and seed alignment, and never anything else.
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    rng = random.Random(seed)
    bonding = xor_factor()
    space = SymbolicSystem((Dyadic(0), Dyadic(1)), "two")
    s_lo = Dyadic(1, horizon)
    s_hi = Dyadic(1, 1)
    tallies = {"asymptotic": 0, "distal": 0}
    rows = []
    for trial in range(count):
        center = tuple(Dyadic(rng.randint(0, 1)) for _ in range(rng.randint(1, 6)))
        right = tuple(Dyadic(rng.randint(0, 1)) for _ in range(rng.randint(1, 4)))
        left = tuple(Dyadic(rng.randint(0, 1)) for _ in range(rng.randint(1, 4)))
        offset = rng.randint(-3, 3)
        y = SymbolicPoint("two", center, right, left, offset)
        bump_len = rng.randint(1, 5)
        bump = [rng.randint(0, 1) for _ in range(bump_len)]
        if not any(bump):
            bump[rng.randrange(bump_len)] = 1
        bump_pos = rng.randint(offset - 2, offset + len(center) + 2)
        indicator = SymbolicPoint(
            "two", tuple(Dyadic(b) for b in bump), (Dyadic(0),), (Dyadic(0),), bump_pos
        )
        y2 = combine_words(y, indicator, _xor)
        base = classify_pair(space, y, y2, horizon, s_lo, s_hi, mode="exact")
        if base.classification != "asymptotic":
            raise InternalInconsistencyError(
                "finite perturbation produced a non-asymptotic base pair"
            )
        sz, sw = rng.randint(0, 1), rng.randint(0, 1)
        z = bonding.fiber(y, sz)
        w = bonding.fiber(y2, sw)
        verdict = classify_pair(space, z, w, horizon, s_lo, s_hi, mode="exact")
        cls = verdict.classification
        if cls not in tallies:
            raise InternalInconsistencyError(
                f"lift of an asymptotic pair classified {cls!r}"
            )
        tallies[cls] += 1
        rows.append(
            {
                "trial": trial,
                "seeds": [sz, sw],
                "class": cls,
                "liminf": verdict.liminf_proxy.as_json(),
                "limsup": verdict.limsup_proxy.as_json(),
            }
        )
    return {
        "count": count,
        "seed": seed,
        "classes": tallies,
        "never_scrambled": True,
        "rows": rows,
    }


# -- circular-word rotations --------------------------------------------


def circular_word_system(length: int, words, deep_weight_exp: int = 3):
    """Rotation on a rotation-closed set of binary circular words.

    The metric reads positions from the current head: position j carries
    weight 2^-min(j, deep_weight_exp), so edits beyond the head window are
    uniformly cheap.  Returns (system, index dictionary word-tuple -> node).
    """
    if length < 1:
        raise ConfigError("word length must be >= 1")
    if deep_weight_exp < 0:
        raise ConfigError("deep_weight_exp must be >= 0")
    closure = set()
    for word in words:
        w = tuple(int(b) for b in word)
        if len(w) != length or any(b not in (0, 1) for b in w):
            raise ConfigError(f"words must be binary tuples of length {length}")
        for k in range(length):
            closure.add(w[k:] + w[:k])
    ordered = sorted(closure)
    index = {w: i for i, w in enumerate(ordered)}
    n = len(ordered)
    num = np.zeros((n, n), dtype=np.int64)
    scale = deep_weight_exp
    for i in range(n):
        for j in range(i + 1, n):
            best = None
            for pos in range(length):
                if ordered[i][pos] != ordered[j][pos]:
                    e = min(pos, scale)
                    if best is None or e < best:
                        best = e
                    if best == 0:
                        break
            num[i, j] = num[j, i] = 1 << (scale - best)
    image = [index[w[1:] + w[:1]] for w in ordered]
    system = FiniteSystem(
        num,
        scale,
        image,
        labels=["".join(map(str, w)) for w in ordered],
        invertible=True,
        metadata={"kind": "circular-words", "length": length, "head_window": scale},
    )
    return system, index


def tracking_demo_instance(blocks: int = 5, block_steps: int = 9) -> dict:
    """A rotation system where branch-coded pseudo-orbits are exactly trackable.

    Words have one optional 1 per block; the branch pair at the zero word
    either stays at zero or injects a 1 that travels through the head and
    is erased, re-merging after one block.  Every branch-coded pseudo-orbit
    is tracked by the circular word that records its emitted symbols, which
    is again a node.  Returns the system, the chain pair, the connector,
    and the scales used.
    """
    if blocks < 1 or block_steps < 5:
        raise ConfigError("need blocks >= 1 and block_steps >= 5")
    length = blocks * block_steps
    words = []
    for bits in itertools.product((0, 1), repeat=blocks):
        w = [0] * length
        for i, bit in enumerate(bits):
            if bit:
                w[i * block_steps] = 1
        words.append(tuple(w))
    system, index = circular_word_system(length, words)
    zero = index[tuple([0] * length)]

    def single(pos: int) -> int:
        w = [0] * length
        w[pos % length] = 1
        return index[tuple(w)]

    chain_a = [zero] * (block_steps + 1)
    chain_b = (
        [zero]
        + [single(3), single(2), single(1), single(0)]
        + [zero] * (block_steps - 4)
    )
    delta = Dyadic(1, 3)
    pair = make_chain_pair(system, chain_a, chain_b, delta)
    connector = [zero]
    return {
        "system": system,
        "index": index,
        "pair": pair,
        "connector": connector,
        "delta": delta,
        "zero": zero,
        "length": length,
        "blocks": blocks,
        "block_steps": block_steps,
    }
