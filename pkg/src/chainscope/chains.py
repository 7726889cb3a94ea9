"""Pseudo-orbit (delta-chain) structure of a finite system.

The delta-chain graph has an edge i -> j exactly when d(f(i), j) <= delta.
Recurrence, components, chain classes, stability, transitivity, and the
layerwise chain-continuity check all live here.  Strongly connected
components come from scipy's compiled SCC; the test suite re-derives them
with an independent closure oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import caps
from .core import FiniteSystem
from .dyadic import Dyadic
from .errors import ConfigError

__all__ = [
    "ChainGraph",
    "ChainDecomposition",
    "chain_graph",
    "reaches",
    "chain_recurrent",
    "chain_components",
    "chain_class",
    "chain_stable_check",
    "chain_class_stability_audit",
    "is_chain_transitive",
    "chain_continuity_check",
    "classify_components",
]


@dataclass
class ChainGraph:
    system: FiniteSystem
    delta: Dyadic
    adjacency: np.ndarray  # adjacency[i, j]: one delta-step from i to j

    def successors(self, i: int) -> np.ndarray:
        return np.nonzero(self.adjacency[i])[0]


def chain_graph(system: FiniteSystem, delta: Dyadic) -> ChainGraph:
    delta = Dyadic.coerce(delta)
    adjacency = system.dist_le(delta)[system.image, :]
    return ChainGraph(system, delta, adjacency)


def _forward_reachable(adjacency: np.ndarray, starts) -> np.ndarray:
    """Nodes reachable from ``starts`` in >= 1 step."""
    n = adjacency.shape[0]
    frontier = np.zeros(n, dtype=bool)
    for s in starts:
        frontier |= adjacency[s]
    reached = frontier.copy()
    while frontier.any():
        frontier = adjacency[frontier].any(axis=0) & ~reached
        reached |= frontier
    return reached


def reaches(system: FiniteSystem, delta: Dyadic, x: int, y: int) -> bool:
    """True iff there is a delta-chain of length >= 1 from x to y."""
    system._check_index(x)
    system._check_index(y)
    graph = chain_graph(system, delta)
    return bool(_forward_reachable(graph.adjacency, [x])[y])


def _scc_labels(adjacency: np.ndarray) -> np.ndarray:
    sparse = csr_matrix(adjacency)
    _, labels = connected_components(sparse, directed=True, connection="strong")
    return labels


def chain_recurrent(system: FiniteSystem, delta: Dyadic) -> list[int]:
    """Nodes on a delta-cycle: in a non-trivial SCC or carrying a self-loop."""
    graph = chain_graph(system, delta)
    labels = _scc_labels(graph.adjacency)
    counts = np.bincount(labels)
    self_loop = np.diagonal(graph.adjacency)
    recurrent = (counts[labels] >= 2) | self_loop
    return [int(i) for i in np.nonzero(recurrent)[0]]


@dataclass
class ChainDecomposition:
    delta: Dyadic
    recurrent: list[int]
    components: list[list[int]]
    component_class: list  # per component: "O" | "NO" | None
    witnesses: list = None  # per component: continuity witness or None
    params: dict = None

    def __post_init__(self):
        if self.witnesses is None:
            self.witnesses = [None] * len(self.components)
        if self.params is None:
            self.params = {}

    def component_of(self, node: int) -> int | None:
        for idx, comp in enumerate(self.components):
            if node in comp:
                return idx
        return None

    def to_json(self) -> dict:
        return {
            "delta": self.delta.as_json(),
            "recurrent": list(self.recurrent),
            "components": [
                {
                    "nodes": list(comp),
                    "class": self.component_class[i],
                    "witness": self.witnesses[i],
                }
                for i, comp in enumerate(self.components)
            ],
        }


def chain_components(system: FiniteSystem, delta: Dyadic) -> ChainDecomposition:
    """SCC decomposition of the recurrent set, components ordered by least node."""
    graph = chain_graph(system, delta)
    labels = _scc_labels(graph.adjacency)
    counts = np.bincount(labels)
    self_loop = np.diagonal(graph.adjacency)
    recurrent_mask = (counts[labels] >= 2) | self_loop
    comps: dict[int, list[int]] = {}
    for node in np.nonzero(recurrent_mask)[0]:
        comps.setdefault(int(labels[node]), []).append(int(node))
    ordered = sorted((sorted(nodes) for nodes in comps.values()), key=lambda c: c[0])
    return ChainDecomposition(
        delta=Dyadic.coerce(delta),
        recurrent=[int(i) for i in np.nonzero(recurrent_mask)[0]],
        components=ordered,
        component_class=[None] * len(ordered),
    )


def chain_class(system: FiniteSystem, delta: Dyadic, x: int) -> list[int]:
    """{x} together with everything reachable from x by delta-chains."""
    system._check_index(x)
    graph = chain_graph(system, delta)
    reached = _forward_reachable(graph.adjacency, [x])
    reached[x] = True
    return [int(i) for i in np.nonzero(reached)[0]]


def _check_invariant_set(system: FiniteSystem, S) -> list[int]:
    S = sorted({int(v) for v in S})
    if not S:
        raise ConfigError("S must be non-empty")
    for v in S:
        system._check_index(v)
    members = set(S)
    for v in S:
        if int(system.image[v]) not in members:
            raise ConfigError(f"S is not invariant: image of {v} leaves the set")
    return S


def chain_stable_check(system: FiniteSystem, S, eps: Dyadic, delta_schedule) -> dict:
    """Finest delta in the schedule at which every chain from S stays within
    eps of S.  Stability is antitone in delta (fewer edges, smaller reach),
    so scanning finest-first returns the conservative end of the granting
    range.  When no delta grants containment, a violating chain from S is
    returned as the counterexample.
    """
    S = _check_invariant_set(system, S)
    eps = Dyadic.coerce(eps)
    schedule = [Dyadic.coerce(d) for d in delta_schedule]
    if not schedule:
        raise ConfigError("delta_schedule must be non-empty")
    near_S = system.dist_le(eps)[:, S].any(axis=1)
    granting: list[Dyadic] = []
    counterexample: list[int] | None = None
    for delta in sorted(schedule):
        graph = chain_graph(system, delta)
        reached = _forward_reachable(graph.adjacency, S)
        for v in S:
            reached[v] = True
        if bool(near_S[reached].all()):
            granting.append(delta)
        elif counterexample is None:
            bad = int(np.nonzero(reached & ~near_S)[0][0])
            counterexample = _chain_to(graph, S, bad)
    return {
        "eps": eps,
        "delta": granting[0] if granting else None,
        "granting": granting,
        "counterexample": counterexample,
    }


def _chain_to(graph: ChainGraph, S, target: int) -> list[int]:
    """A shortest delta-chain from S to ``target`` (BFS parents)."""
    n = graph.adjacency.shape[0]
    parent = {int(s): None for s in S}
    frontier = list(parent)
    while frontier:
        if target in parent:
            break
        nxt = []
        for v in frontier:
            for w in np.nonzero(graph.adjacency[v])[0]:
                w = int(w)
                if w not in parent:
                    parent[w] = v
                    nxt.append(w)
        frontier = nxt
    path = [target]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def chain_class_stability_audit(
    system: FiniteSystem,
    delta_schedule,
    eps: Dyadic,
    class_delta: Dyadic | None = None,
) -> dict:
    """Per point: is its chain class stable along the schedule?

    The class is computed at ``class_delta`` (default: the coarsest schedule
    entry); forward closure of chain classes makes stability automatic at
    every delta at or below the class scale, which is the pattern this audit
    verifies.
    """
    schedule = [Dyadic.coerce(d) for d in delta_schedule]
    if not schedule:
        raise ConfigError("delta_schedule must be non-empty")
    if class_delta is None:
        class_delta = max(schedule)
    class_delta = Dyadic.coerce(class_delta)
    tested = [d for d in schedule if d <= class_delta]
    if not tested:
        raise ConfigError("no schedule entry at or below class_delta")
    rows = []
    all_stable = True
    for x in range(system.size):
        S = chain_class(system, class_delta, x)
        result = chain_stable_check(system, S, eps, tested)
        stable = result["delta"] is not None
        all_stable &= stable
        rows.append(
            {
                "x": x,
                "class_size": len(S),
                "granted_delta": result["delta"].as_json() if stable else None,
            }
        )
    return {
        "eps": Dyadic.coerce(eps).as_json(),
        "class_delta": class_delta.as_json(),
        "delta_schedule": [d.as_json() for d in tested],
        "rows": rows,
        "all_stable": all_stable,
    }


def is_chain_transitive(system: FiniteSystem, S, delta: Dyadic):
    """Every ordered pair of S joined by a delta-chain of length >= 1 staying
    inside S.  Returns (verdict, witness); the witness is an unreachable
    ordered pair.
    """
    S = sorted({int(v) for v in S})
    if not S:
        raise ConfigError("S must be non-empty")
    for v in S:
        system._check_index(v)
    graph = chain_graph(system, delta)
    sub = graph.adjacency[np.ix_(S, S)]
    # reach[a, b]: path of length >= 1 from S[a] to S[b] inside S
    reach = sub.copy()
    frontier = sub.copy()
    sub_int = sub.astype(np.int64)
    while True:
        nxt = (frontier.astype(np.int64) @ sub_int) > 0
        new = nxt & ~reach
        if not new.any():
            break
        reach |= new
        frontier = new
    missing = np.argwhere(~reach)
    if missing.size:
        a, b = (int(v) for v in missing[0])
        return False, (S[a], S[b])
    return True, None


def chain_continuity_check(
    system: FiniteSystem,
    S,
    eps: Dyadic,
    delta: Dyadic,
    state_cap: int | None = None,
):
    """Layerwise continuity: from each x in S, iterate
    R_0 = {x}, R_{i+1} = delta-fattening of image(R_i),
    and require diam(R_i) <= eps throughout.  Returns (verdict, witness)
    with witness = (x, layer index, (p, q)) for the first oversized layer.
    """
    S = sorted({int(v) for v in S})
    if not S:
        raise ConfigError("S must be non-empty")
    for v in S:
        system._check_index(v)
    eps = Dyadic.coerce(eps)
    cap = caps.state_cap(state_cap)
    graph = chain_graph(system, delta)
    far = system.dist_gt(eps)
    budget = 0
    for x in S:
        layer = np.zeros(system.size, dtype=bool)
        layer[x] = True
        seen: set[bytes] = set()
        i = 0
        while True:
            key = layer.tobytes()
            if key in seen:
                break
            seen.add(key)
            budget = caps.charge(budget, 1, cap, "chain-continuity layers")
            idx = np.nonzero(layer)[0]
            viol = np.argwhere(far[np.ix_(idx, idx)])
            if viol.size:
                a, b = (int(v) for v in viol[0])
                return False, (x, i, (int(idx[a]), int(idx[b])))
            layer = graph.adjacency[idx].any(axis=0)
            i += 1
            if not layer.any():
                break
    return True, None


def classify_components(
    system: FiniteSystem,
    decomposition: ChainDecomposition,
    eps_schedule,
    delta_schedule,
    state_cap: int | None = None,
) -> ChainDecomposition:
    """Mark each component O-like ("O") or NO-like ("NO").

    O-like: for every eps in the schedule some delta in the schedule makes
    the layerwise continuity check pass.  The first failing (eps, witness)
    is recorded for NO-like components.
    """
    eps_schedule = [Dyadic.coerce(e) for e in eps_schedule]
    delta_schedule = [Dyadic.coerce(d) for d in delta_schedule]
    if not eps_schedule or not delta_schedule:
        raise ConfigError("schedules must be non-empty")
    classes = []
    witnesses = []
    for comp in decomposition.components:
        verdict = "O"
        witness = None
        for eps in eps_schedule:
            ok_for_eps = False
            last_witness = None
            for delta in delta_schedule:
                ok, wit = chain_continuity_check(system, comp, eps, delta, state_cap)
                if ok:
                    ok_for_eps = True
                    break
                last_witness = wit
            if not ok_for_eps:
                verdict = "NO"
                x, layer, pair = last_witness
                witness = {"eps": eps.as_json(), "x": x, "layer": layer, "pair": list(pair)}
                break
        classes.append(verdict)
        witnesses.append(witness)
    return ChainDecomposition(
        delta=decomposition.delta,
        recurrent=decomposition.recurrent,
        components=decomposition.components,
        component_class=classes,
        witnesses=witnesses,
        params={
            "eps_schedule": [e.as_json() for e in eps_schedule],
            "delta_schedule": [d.as_json() for d in delta_schedule],
        },
    )
