"""Command-line front end: build or load systems, run analyses, emit reports.

Reports are deterministic.  Every JSON report is a single envelope object
{"version", "command", "config", "result"} serialized with sorted keys and
fixed separators, so the same configuration always produces the same bytes.
CSV output (entropy command only) carries the version and configuration in
leading comment lines for the same reason.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 internal inconsistency detected by a verifying construction.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from itertools import product

from . import __version__
from .chains import (
    chain_class,
    chain_components,
    chain_continuity_check,
    chain_stable_check,
    classify_components,
    is_chain_transitive,
)
from .constructions import (
    chain_pair_search,
    full_shift,
    hexpansiveness_probe,
    lift_pair_suite,
    monotone_shift,
    odometer,
    qc_family,
    tracking_demo_instance,
    xor_factor,
    xor_tower,
)
from .core import load_system
from .dyadic import Dyadic
from .entropy import (
    chain_separated_count,
    entropy_point_test,
    gamma_set,
    growth_rate,
    separated_count,
)
from .errors import CapExceeded, ChainscopeError, ConfigError, InternalInconsistencyError
from .pairs import classify_pair
from .shadowing import shadowable_points, shadowing_check
from .symbolic import SymbolicPoint, metric_eval, periodic_word, words_equal

__all__ = [
    "RunConfig",
    "build_source",
    "example31_pipeline",
    "example41_pipeline",
    "odometer_suite",
    "render_report",
    "main",
]


# -- run configuration -------------------------------------------------

_CONFIG_FIELDS = (
    "command",
    "system_path",
    "builder",
    "params",
    "grid",
    "out",
    "exact_cap",
    "seed",
    "fmt",
)


@dataclasses.dataclass
class RunConfig:
    """Fully resolved run parameters; embedded verbatim in every report."""

    command: str
    system_path: str | None = None
    builder: str | None = None
    params: dict = dataclasses.field(default_factory=dict)
    grid: dict = dataclasses.field(default_factory=dict)
    out: str | None = None
    exact_cap: int | None = None
    seed: int = 0
    fmt: str = "json"

    def __post_init__(self):
        if self.exact_cap is not None and (
            not isinstance(self.exact_cap, int) or self.exact_cap <= 0
        ):
            raise ConfigError(f"exact cap must be a positive integer, got {self.exact_cap!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.fmt!r}")
        if not isinstance(self.params, dict) or not isinstance(self.grid, dict):
            raise ConfigError("params and grid must be JSON objects")
        for key, value in self.grid.items():
            if key.endswith("_schedule") and key != "m_schedule":
                values = [Dyadic.from_json(v) for v in value]
                if any(a <= b for a, b in zip(values, values[1:])):
                    raise ConfigError(f"grid {key} must be strictly decreasing")

    def as_json(self) -> dict:
        return {name: getattr(self, name) for name in _CONFIG_FIELDS}

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        extra = set(obj) - set(_CONFIG_FIELDS)
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "command" not in obj:
            raise ConfigError("config must name a command")
        return cls(**obj)


# -- system sources ----------------------------------------------------


def _dy(value) -> Dyadic:
    return Dyadic.from_json(value)


def _dys(values) -> list[Dyadic]:
    return [Dyadic.from_json(v) for v in values]


def _build_odometer(params: dict) -> dict:
    m = [int(v) for v in params.get("m_schedule", [2, 4, 8, 16])]
    depth = params.get("depth")
    return {"system": odometer(m, None if depth is None else int(depth))}


def _build_full_shift(params: dict) -> dict:
    alphabet = _dys(params.get("alphabet", [[0, 0], [1, 0]]))
    sided = params.get("sided", "two")
    depth = int(params.get("depth", 3))
    space, system, reps = full_shift(alphabet, sided, depth)
    return {"system": system, "space": space, "reps": reps}


def _build_monotone_shift(params: dict) -> dict:
    return monotone_shift(
        int(params.get("K_levels", 3)),
        int(params.get("depth", 6)),
        scale_c=int(params.get("scale_c", 2)),
    )


def _build_xor_tower(params: dict) -> dict:
    truncation, system, reps = xor_tower(
        int(params.get("depth", 4)), int(params.get("window", 6))
    )
    return {"system": system, "truncation": truncation, "reps": reps}


def _build_tracking_demo(params: dict) -> dict:
    return tracking_demo_instance(
        int(params.get("blocks", 5)), int(params.get("block_steps", 9))
    )


BUILDERS = {
    "odometer": _build_odometer,
    "full-shift": _build_full_shift,
    "monotone-shift": _build_monotone_shift,
    "xor-tower": _build_xor_tower,
    "tracking-demo": _build_tracking_demo,
}


def build_source(config: RunConfig) -> dict:
    """Resolve the configured system source to a dict with a "system" entry."""
    if (config.system_path is None) == (config.builder is None):
        raise ConfigError("exactly one of --system FILE or --builder NAME is required")
    if config.system_path is not None:
        return {"system": load_system(config.system_path)}
    try:
        factory = BUILDERS[config.builder]
    except KeyError:
        raise ConfigError(
            f"unknown builder {config.builder!r}; available: {sorted(BUILDERS)}"
        ) from None
    return factory(config.params)


# -- report rendering --------------------------------------------------


def render_report(config: RunConfig, result: dict) -> str:
    envelope = {
        "version": __version__,
        "command": config.command,
        "config": config.as_json(),
        "result": result,
    }
    return json.dumps(envelope, sort_keys=True, separators=(",", ":")) + "\n"


def _render_entropy_csv(config: RunConfig, result: dict) -> str:
    lines = [
        f"# chainscope {__version__}",
        "# config " + json.dumps(config.as_json(), sort_keys=True, separators=(",", ":")),
        "r_num,r_exp,delta_num,delta_exp,n,count,log_count,cell_rate",
    ]
    for cell in result["cells"]:
        r_num, r_exp = cell["r"]
        if cell["delta"] is None:
            d_num = d_exp = ""
        else:
            d_num, d_exp = cell["delta"]
        for n, count in zip(cell["n_window"], cell["counts"]):
            lines.append(
                f"{r_num},{r_exp},{d_num},{d_exp},{n},{count},"
                f"{math.log(count)!r},{cell['rate']!r}"
            )
    return "\n".join(lines) + "\n"


def _emit(config: RunConfig, text: str) -> None:
    if config.out is None:
        sys.stdout.write(text)
    else:
        with open(config.out, "w", encoding="utf-8") as handle:
            handle.write(text)


# -- generic commands --------------------------------------------------


def _cmd_components(config: RunConfig) -> dict:
    built = build_source(config)
    system = built["system"]
    deltas = _dys(config.grid.get("delta_schedule", [[1, 2]]))
    classify_eps = config.grid.get("classify_eps_schedule")
    classify_delta = config.grid.get("classify_delta_schedule")
    rows = []
    for delta in deltas:
        decomposition = chain_components(system, delta)
        if classify_eps is not None and classify_delta is not None:
            decomposition = classify_components(
                system, decomposition, _dys(classify_eps), _dys(classify_delta)
            )
        rows.append(decomposition.to_json())
    return {"nodes": system.size, "decompositions": rows}


def _cmd_entropy(config: RunConfig) -> dict:
    built = build_source(config)
    system = built["system"]
    rs = _dys(config.grid.get("r_schedule", [[1, 1]]))
    window = [int(n) for n in config.grid.get("n_window", [1, 2, 3, 4])]
    if len(window) < 2 or any(a >= b for a, b in zip(window, window[1:])):
        raise ConfigError("n_window must be at least two strictly increasing values")
    deltas = config.grid.get("delta_schedule")
    mode = config.grid.get("mode", "auto")
    nodes = config.grid.get("nodes")
    K = list(range(system.size)) if nodes is None else [int(v) for v in nodes]
    cells = []
    for r in rs:
        for delta in [None] if deltas is None else _dys(deltas):
            counts = []
            for n in window:
                if delta is None:
                    entry = separated_count(
                        system, K, n, r, mode=mode, exact_cap=config.exact_cap
                    )
                else:
                    entry = chain_separated_count(
                        system, n, r, delta, mode=mode, exact_cap=config.exact_cap
                    )
                counts.append(entry["count"])
            cells.append(
                {
                    "r": r.as_json(),
                    "delta": None if delta is None else delta.as_json(),
                    "n_window": window,
                    "counts": counts,
                    "rate": growth_rate(window, counts),
                }
            )
    return {"nodes": system.size, "cells": cells}


def _cmd_shadowing(config: RunConfig) -> dict:
    built = build_source(config)
    system = built["system"]
    eps_schedule = _dys(config.grid.get("eps_schedule", [[1, 1]]))
    delta_schedule = _dys(config.grid.get("delta_schedule", [[1, 3]]))
    scope = config.grid.get("scope", "all")
    point = config.grid.get("point")
    list_points = bool(config.grid.get("shadowable_points", False))
    cells = []
    for eps in eps_schedule:
        for delta in delta_schedule:
            verdict = shadowing_check(
                system,
                eps,
                delta,
                scope=scope,
                point=None if point is None else int(point),
                state_cap=config.exact_cap,
            )
            cell = verdict.to_json()
            if list_points:
                cell["shadowable"] = shadowable_points(
                    system, eps, delta, state_cap=config.exact_cap
                )
            cells.append(cell)
    return {"nodes": system.size, "cells": cells}


def _cmd_pairs(config: RunConfig) -> dict:
    built = build_source(config)
    system = built["system"]
    result: dict = {"nodes": system.size}
    search = config.grid.get("search")
    if search is not None:
        found = chain_pair_search(
            system,
            eps=_dy(search["eps"]),
            r=_dy(search["r"]),
            delta=_dy(search["delta"]),
            length_bound=int(search.get("length_bound", 32)),
            state_cap=config.exact_cap,
        )
        result["search"] = {
            "status": found["status"],
            "pair": None if found["pair"] is None else found["pair"].as_json(),
        }
    classify = config.grid.get("classify")
    if classify is not None:
        reps = built.get("reps")
        space = built.get("space")
        if reps is None:
            raise ConfigError(
                "pair classification needs a builder that exposes symbolic "
                "representatives (full-shift or monotone-shift)"
            )
        x = reps[int(classify["x"])]
        y = reps[int(classify["y"])]
        if not isinstance(x, SymbolicPoint) or not isinstance(y, SymbolicPoint):
            raise ConfigError("pair classification needs symbolic word representatives")
        verdict = classify_pair(
            space,
            x,
            y,
            int(classify.get("T", 8)),
            _dy(classify["s_lo"]),
            _dy(classify["s_hi"]),
            mode=classify.get("mode", "auto"),
        )
        result["classify"] = verdict.to_json()
    if search is None and classify is None:
        raise ConfigError('pairs needs a grid with a "search" and/or "classify" block')
    return result


def _cmd_hexp(config: RunConfig) -> dict:
    built = build_source(config)
    system = built["system"]
    probe = hexpansiveness_probe(
        system,
        eps_schedule=_dys(config.grid.get("eps_schedule", [[1, 1], [1, 2]])),
        r_grid=_dys(config.grid.get("r_grid", [[1, 2], [1, 3]])),
        delta_schedule=_dys(config.grid.get("delta_schedule", [[1, 2], [1, 4]])),
        length_bound=int(config.grid.get("length_bound", 24)),
        n_window=tuple(int(n) for n in config.grid.get("n_window", [1, 2, 3])),
        state_cap=config.exact_cap,
    )
    return {"nodes": system.size, "probe": probe}


# -- worked example: monotone-modulus shift ----------------------------

_EX31_DEFAULTS = {
    "K_levels": 3,
    "depth": 6,
    "scale_c": 1,
    "component_delta": [1, 6],
    "class_delta_schedule": [[1, 7], [1, 8], [1, 9]],
    "stability_eps_schedule": [[1, 4], [1, 5], [1, 6]],
    "stability_delta_schedule": [[1, 6], [1, 7], [1, 8]],
    "x_r": [1, 2],
    "x_ball_schedule": [[1, 6], [1, 7], [1, 8]],
    "x_n_window": [1, 5],
    "xk_ball_schedules": {"1": [[1, 3], [1, 4]], "2": [[1, 5], [1, 6]], "3": [[1, 5], [1, 6]]},
    "xk_n_window": [1, 5],
    "class_delta": [1, 5],
    "class_n_max": 6,
    "rate_floor_margin": 0.1,
    "exact_cap": 2000,
}


def _window_of(rep: SymbolicPoint, length: int) -> tuple:
    values = list(rep.center)
    i = 0
    while len(values) < length:
        values.append(rep.right_period[i % len(rep.right_period)])
        i += 1
    return tuple(values[:length])


def example31_pipeline(grid: dict | None = None) -> dict:
    """Monotone-modulus shift at three symbol levels: components, stability,
    chain class of the marked fading word, and point-entropy verdicts.

    Levels use symbol sizes 2^-k.  At the component scale every level mixes
    through its own sign patterns (one component per level, padded by that
    level's fading words) while the zero word stays isolated; at finer
    scales the chain class of the marked word collapses to its orbit plus
    the zero class.
    """
    grid = {**_EX31_DEFAULTS, **(grid or {})}
    K = int(grid["K_levels"])
    depth = int(grid["depth"])
    built = monotone_shift(K, depth, scale_c=int(grid["scale_c"]))
    system = built["system"]
    reps = built["reps"]
    levels = built["level_sets"]
    x = built["marked"]["x"]
    xk = built["marked"]["x_k"]
    cap = int(grid["exact_cap"])
    result: dict = {
        "nodes": system.size,
        "marked": {"x": x, "x_k": {str(k): v for k, v in xk.items()}},
        "level_sizes": {str(k): len(v) for k, v in levels.items()},
    }

    # Component structure at the mixing scale: one component per level,
    # each containing its full level set and meeting no other, with the
    # zero word alone in its own component.
    component_delta = _dy(grid["component_delta"])
    decomposition = chain_components(system, component_delta)
    level_nodes = {k: set(levels[k]) for k in levels}
    blocks = []
    zero_alone = False
    per_level_component: dict[int, int] = {}
    for idx, comp in enumerate(decomposition.components):
        members = set(comp)
        meets = sorted(k for k in level_nodes if members & level_nodes[k])
        contains = sorted(k for k in level_nodes if level_nodes[k] <= members)
        blocks.append({"size": len(comp), "meets": meets, "contains": contains})
        if members == level_nodes[0]:
            zero_alone = True
        for k in contains:
            if k != 0 and meets == [k]:
                per_level_component[k] = idx
    structure_ok = (
        len(decomposition.components) == K + 1
        and zero_alone
        and sorted(per_level_component) == list(range(1, K + 1))
        and len(set(per_level_component.values())) == K
    )
    result["components"] = {
        "delta": component_delta.as_json(),
        "count": len(decomposition.components),
        "blocks": blocks,
        "structure_ok": structure_ok,
    }

    # Chain class of the marked word x = (s_1, .., s_K, 0, 0, ...): at the
    # tested scales it is exactly the forward orbit plus the zero class.
    path, cycle = system.orbit(x)
    orbit_nodes = sorted(set(path) | set(cycle))
    expected_class = sorted(set(orbit_nodes) | level_nodes[0])
    class_rows = []
    class_ok = True
    for delta in _dys(grid["class_delta_schedule"]):
        members = sorted(chain_class(system, delta, x))
        match = members == expected_class
        class_ok = class_ok and match
        class_rows.append(
            {"delta": delta.as_json(), "size": len(members), "equals_orbit_plus_zero": match}
        )
    result["chain_class"] = {
        "orbit": orbit_nodes,
        "expected": expected_class,
        "rows": class_rows,
        "ok": class_ok,
    }

    # Chain stability of the zero class across the (eps, delta) grid.
    stability_rows = []
    stability_ok = True
    delta_schedule = _dys(grid["stability_delta_schedule"])
    for eps in _dys(grid["stability_eps_schedule"]):
        res = chain_stable_check(system, levels[0], eps, delta_schedule)
        granted = bool(res["granting"])
        stability_ok = stability_ok and granted
        stability_rows.append(
            {
                "eps": eps.as_json(),
                "granting": [d.as_json() for d in res["granting"]],
                "ok": granted,
            }
        )
    result["stability"] = {"rows": stability_rows, "ok": stability_ok}

    # Entropy verdicts.  The marked fading word is negative at r = s_1/2;
    # each constant-tail word x_k is positive at r = s_k/2, and its chain
    # class carries a verified separated family doubling with n.
    b = math.log(2) - float(grid["rate_floor_margin"])
    x_test = entropy_point_test(
        system,
        x,
        _dy(grid["x_r"]),
        b,
        _dys(grid["x_ball_schedule"]),
        tuple(int(n) for n in grid["x_n_window"]),
        mode="exact",
        exact_cap=cap,
    )
    result["entropy_x"] = {
        "r": grid["x_r"],
        "classification": x_test["classification"],
        "balls": x_test["balls"],
        "ok": x_test["classification"] == "negative",
    }

    lookup = {_window_of(reps[i], depth): i for i in range(system.size)}
    class_delta = _dy(grid["class_delta"])
    n_max = int(grid["class_n_max"])
    per_level = []
    xk_positive = True
    class_rates_ok = True
    for k in range(1, K + 1):
        test = entropy_point_test(
            system,
            xk[k],
            Dyadic(1, k + 1),
            b,
            _dys(grid["xk_ball_schedules"][str(k)]),
            tuple(int(n) for n in grid["xk_n_window"]),
            mode="exact",
            exact_cap=cap,
        )
        positive = test["classification"] != "negative"
        xk_positive = xk_positive and positive

        # Verified separated family: all sign patterns on the first n
        # coordinates, constant tail.  Any two differ at a coordinate
        # j <= n, and after j-1 steps the difference reaches the leading
        # coordinate at weight 1/2, i.e. distance s_k > s_k/2 = r.
        members = chain_class(system, class_delta, xk[k])
        s_k = Dyadic(1, k * int(grid["scale_c"]))
        window_ns = list(range(1, n_max + 1))
        counts = []
        for n in window_ns:
            family = []
            for signs in product((s_k, -s_k), repeat=n):
                word = tuple(signs) + (s_k,) * (depth - n)
                family.append(lookup[word])
            entry = separated_count(
                system,
                members,
                n,
                Dyadic(1, k + 1),
                candidate_family=family,
            )
            counts.append(entry["count"])
        rate = growth_rate(window_ns, counts)
        rate_ok = rate >= b
        class_rates_ok = class_rates_ok and rate_ok
        per_level.append(
            {
                "k": k,
                "r": [1, k + 1],
                "classification": test["classification"],
                "balls": test["balls"],
                "class_size": len(members),
                "family_counts": counts,
                "class_rate": rate,
                "rate_ok": rate_ok,
            }
        )
    result["entropy_xk"] = {"rows": per_level, "positive": xk_positive, "rates_ok": class_rates_ok}
    result["criteria"] = {
        "components_match": structure_ok,
        "chain_class_ok": class_ok,
        "stability_ok": stability_ok,
        "x_negative": result["entropy_x"]["ok"],
        "xk_positive": xk_positive,
        "class_rates_ok": class_rates_ok,
    }
    return result


def _cmd_example31(config: RunConfig) -> dict:
    return example31_pipeline(config.grid)


# -- worked example: binary-shift extension tower ----------------------

_EX41_DEFAULTS = {
    "depth": 4,
    "window": 6,
    "fiber_window": 6,
    "pairs": 500,
    "pair_horizon": 8,
    "qc_levels": [1, 2, 3],
    "xe_eps_schedule": [[1, 0], [1, 1], [1, 2], [1, 3], [1, 4]],
    "probe_eps_schedule": [[1, 1], [1, 2], [1, 4]],
    "probe_r_grid": [[1, 2], [1, 3]],
    "probe_delta_schedule": [[1, 2], [1, 4]],
    "probe_length_bound": 24,
    "mixing_delta": [1, 2],
}


def example41_pipeline(grid: dict | None = None, seed: int = 0) -> dict:
    """Binary-shift extension suite: two-point fibers at distance one,
    lifted asymptotic pairs that never become scrambled, tracking-set
    families that branch above every tested scale, and a chain-pair probe
    that stays clean above the compiled resolution.
    """
    grid = {**_EX41_DEFAULTS, **(grid or {})}
    depth = int(grid["depth"])
    window = int(grid["window"])
    truncation, system, reps = xor_tower(depth, window)
    result: dict = {"nodes": system.size, "depth": depth, "window": window}

    # Fibers of the two-symbol integration factor: every base word has
    # exactly two lifts, globally complementary, at distance exactly one.
    spec = xor_factor()
    one = Dyadic(1)
    fiber_window = int(grid["fiber_window"])
    checked = 0
    all_two = True
    all_distance_one = True
    round_trip = True
    for bits in product((0, 1), repeat=fiber_window):
        base = periodic_word([Dyadic(v) for v in bits])
        lift0 = spec.fiber(base, 0)
        lift1 = spec.fiber(base, 1)
        all_two = all_two and not words_equal(lift0, lift1)
        all_distance_one = all_distance_one and metric_eval(lift0, lift1) == one
        round_trip = round_trip and all(
            words_equal(spec.forward(lift), base) for lift in (lift0, lift1)
        )
        checked += 1
    result["fibers"] = {
        "bases": checked,
        "fiber_size": spec.fiber_size,
        "two_lifts": all_two,
        "distance_one": all_distance_one,
        "forward_round_trip": round_trip,
        "ok": all_two and all_distance_one and round_trip and spec.fiber_size == 2,
    }

    # Lifted pairs: perturbing a base word on finitely many coordinates
    # gives an asymptotic base pair; its lifts classify asymptotic or
    # distal, never scrambled.
    suite = lift_pair_suite(int(grid["pairs"]), seed, horizon=int(grid["pair_horizon"]))
    scrambled_lifts = suite["classes"].get("scrambled", 0)
    result["lifts"] = {
        "pairs": suite["count"],
        "classes": suite["classes"],
        "never_scrambled": suite["never_scrambled"],
        "ok": scrambled_lifts == 0 and suite["never_scrambled"],
    }

    # Tracking families: points agreeing with q through level N and free
    # above number exactly 2^(depth-N) at the minimal feasible scale.
    qc_rows = []
    qc_ok = True
    for N in [int(v) for v in grid["qc_levels"]]:
        expect = 1 << (depth - N)
        eps = Dyadic(1, N + 1)
        counts = set()
        for q in truncation.points:
            res = qc_family(truncation, q, N, eps)
            counts.add(res["count"])
        qc_rows.append(
            {
                "N": N,
                "eps": eps.as_json(),
                "expected": expect,
                "counts": sorted(counts),
                "ok": counts == {expect},
            }
        )
        qc_ok = qc_ok and counts == {expect}
    result["qc"] = {"rows": qc_rows, "ok": qc_ok}

    # Every point keeps company at every tested scale: the two-sided
    # tracking set of each node is strictly larger than the node itself
    # for every eps down to the compiled resolution.
    xe_rows = []
    xe_ok = True
    for eps in _dys(grid["xe_eps_schedule"]):
        min_size = min(
            len(gamma_set(system, q, eps, "periodic-closure").points)
            for q in range(system.size)
        )
        xe_rows.append({"eps": eps.as_json(), "min_gamma_size": min_size, "ok": min_size > 1})
        xe_ok = xe_ok and min_size > 1
    result["xe_evidence"] = {"rows": xe_rows, "all_branching": xe_ok}

    # Chain-pair probe: above the compiled resolution no separated chain
    # pair exists; the probe also certifies chain transitivity at its
    # coarsest delta.
    probe = hexpansiveness_probe(
        system,
        eps_schedule=_dys(grid["probe_eps_schedule"]),
        r_grid=_dys(grid["probe_r_grid"]),
        delta_schedule=_dys(grid["probe_delta_schedule"]),
        length_bound=int(grid["probe_length_bound"]),
    )
    # Cells with delta coarser than the compiled resolution separate by
    # delta-slack alone; the faithful evidence column is delta at (or
    # below) the resolution, and there no pair separates above it.
    resolution = Dyadic.from_json(system.metadata["resolution"])
    clean = all(
        cell["status"] != "found"
        for row in probe["rows"]
        for cell in row["cells"]
        if Dyadic.from_json(cell["r"]) > resolution
        and Dyadic.from_json(cell["delta"]) <= resolution
    )
    result["hexpansiveness"] = {
        "probe": probe,
        "resolution": resolution.as_json(),
        "clean_above_resolution": clean,
    }

    mixing_delta = _dy(grid["mixing_delta"])
    transitive, witness = is_chain_transitive(system, range(system.size), mixing_delta)
    result["mixing"] = {
        "delta": mixing_delta.as_json(),
        "transitive": transitive,
        "witness": witness,
    }
    result["criteria"] = {
        "fibers_ok": result["fibers"]["ok"],
        "lifts_ok": result["lifts"]["ok"],
        "qc_ok": qc_ok,
        "xe_ok": xe_ok,
        "probe_clean": clean,
        "mixing_ok": transitive,
    }
    return result


def _cmd_example41(config: RunConfig) -> dict:
    return example41_pipeline(config.grid, seed=config.seed)


# -- worked example: adding machine ------------------------------------

_ODOMETER_DEFAULTS = {
    "m_schedule": [2, 4, 8, 16],
    "r_schedule": [[1, 1], [1, 2], [1, 3]],
    "n_window": [1, 2, 3, 4, 5],
    "continuity_eps_schedule": [[1, 1], [1, 2], [1, 3]],
    "continuity_delta_schedule": [[1, 4], [1, 5]],
    "component_delta_schedule": [[1, 4]],
}


def odometer_suite(grid: dict | None = None) -> dict:
    """Adding-machine suite: bijective isometry, flat separated counts,
    chain continuity across the grid, and orbit-like components only."""
    grid = {**_ODOMETER_DEFAULTS, **(grid or {})}
    m = [int(v) for v in grid["m_schedule"]]
    system = odometer(m)
    n = system.size
    result: dict = {"nodes": n, "m_schedule": m}

    image = [int(v) for v in system.image]
    bijective = sorted(image) == list(range(n))
    isometry = all(
        system.dist(image[a], image[b]) == system.dist(a, b)
        for a in range(n)
        for b in range(a + 1, n)
    )
    result["bijective_isometry"] = {"bijective": bijective, "isometry": isometry}

    window = [int(v) for v in grid["n_window"]]
    entropy_rows = []
    flat = True
    for r in _dys(grid["r_schedule"]):
        counts = [
            separated_count(system, range(n), k, r, mode="exact", exact_cap=max(n, 64))[
                "count"
            ]
            for k in window
        ]
        constant = len(set(counts)) == 1
        flat = flat and constant
        entropy_rows.append(
            {
                "r": r.as_json(),
                "counts": counts,
                "constant": constant,
                "rate": growth_rate(window, counts),
            }
        )
    result["entropy"] = {"n_window": window, "rows": entropy_rows, "all_constant": flat}

    continuity_rows = []
    continuity_ok = True
    deltas = _dys(grid["continuity_delta_schedule"])
    for eps in _dys(grid["continuity_eps_schedule"]):
        granted = None
        for delta in deltas:
            ok, _ = chain_continuity_check(system, range(n), eps, delta)
            if ok:
                granted = delta.as_json()
                break
        continuity_rows.append({"eps": eps.as_json(), "granting_delta": granted})
        continuity_ok = continuity_ok and granted is not None
    result["continuity"] = {"rows": continuity_rows, "ok": continuity_ok}

    component_rows = []
    all_o = True
    for delta in _dys(grid["component_delta_schedule"]):
        decomposition = chain_components(system, delta)
        classified = classify_components(
            system,
            decomposition,
            _dys(grid["continuity_eps_schedule"]),
            deltas,
        )
        classes = list(classified.component_class)
        all_o = all_o and classes and all(c == "O" for c in classes)
        component_rows.append(
            {
                "delta": delta.as_json(),
                "components": [len(c) for c in classified.components],
                "classes": classes,
            }
        )
    result["components"] = {"rows": component_rows, "all_orbit_like": all_o}
    result["criteria"] = {
        "bijective_isometry": bijective and isometry,
        "entropy_flat": flat,
        "continuity_ok": continuity_ok,
        "components_all_o": all_o,
    }
    return result


def _cmd_odometer(config: RunConfig) -> dict:
    return odometer_suite(config.grid)


HANDLERS = {
    "components": _cmd_components,
    "entropy": _cmd_entropy,
    "shadowing": _cmd_shadowing,
    "pairs": _cmd_pairs,
    "example31": _cmd_example31,
    "example41": _cmd_example41,
    "odometer": _cmd_odometer,
    "hexp": _cmd_hexp,
}

_NEEDS_SOURCE = {"components", "entropy", "shadowing", "pairs", "hexp"}


# -- argument parsing and dispatch -------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainscope",
        description="Exact-arithmetic analyses of finite dynamical systems.",
    )
    parser.add_argument("--version", action="version", version=f"chainscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in HANDLERS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--system", dest="system_path", metavar="FILE")
        cmd.add_argument("--builder", choices=sorted(BUILDERS))
        cmd.add_argument("--params", default="{}", metavar="JSON")
        cmd.add_argument("--grid", default="{}", metavar="JSON")
        cmd.add_argument("--out", metavar="PATH")
        cmd.add_argument("--exact-cap", dest="exact_cap", type=int)
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    return parser


def _parse_json_flag(name: str, payload: str) -> dict:
    try:
        value = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--{name} is not valid JSON: {exc}") from None
    if not isinstance(value, dict):
        raise ConfigError(f"--{name} must be a JSON object")
    return value


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(
            command=args.command,
            system_path=args.system_path,
            builder=args.builder,
            params=_parse_json_flag("params", args.params),
            grid=_parse_json_flag("grid", args.grid),
            out=args.out,
            exact_cap=args.exact_cap,
            seed=args.seed,
            fmt=args.fmt,
        )
        if config.fmt == "csv" and config.command != "entropy":
            raise ConfigError("csv output is only available for the entropy command")
        if config.command in _NEEDS_SOURCE:
            pass  # handlers resolve the source; validation happens there
        elif config.system_path is not None:
            raise ConfigError(f"{config.command} builds its own instance; drop --system")
        result = HANDLERS[config.command](config)
        if config.fmt == "csv":
            _emit(config, _render_entropy_csv(config, result))
        else:
            _emit(config, render_report(config, result))
        return 0
    except ConfigError as exc:
        print(f"chainscope: config error: {exc}", file=sys.stderr)
        return 2
    except CapExceeded as exc:
        print(f"chainscope: cap exceeded: {exc}", file=sys.stderr)
        return 3
    except InternalInconsistencyError as exc:
        print(f"chainscope: internal inconsistency: {exc}", file=sys.stderr)
        return 4
    except ChainscopeError as exc:
        print(f"chainscope: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
