"""Omega-limit cycles, minimality, sensitivity, and pair classification."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from chainscope import (
    ConfigError,
    Dyadic,
    FiniteSystem,
    SymbolicPoint,
    SymbolicSystem,
    chain_components,
    classify_pair,
    compile_symbolic,
    is_minimal,
    nonminimality_conditions_test,
    odometer,
    omega_limit,
    one_sided_word,
    periodic_word,
    sensitive_points,
)

from support import (
    dy,
    frac,
    frac_dist,
    line_system,
    random_system,
    spur_into_full_shift,
    two_fixed_points,
)

FULL2_TWO = SymbolicSystem((Dyadic(0), Dyadic(1)), "two")


def spur_into_three_cycle() -> FiniteSystem:
    rows = [[Dyadic(abs(i - j), 2) for j in range(4)] for i in range(4)]
    return FiniteSystem.from_rows(rows, [1, 2, 3, 1])


class TestOmegaLimit:
    def test_fixed_point(self):
        system = line_system(3)
        report = omega_limit(system, 2)
        assert report.omega == [2] and report.minimal

    def test_spur_into_cycle(self):
        report = omega_limit(spur_into_three_cycle(), 0)
        assert report.omega == [1, 2, 3]
        assert report.minimal

    def test_matches_exhaustive_iteration(self):
        rng = np.random.default_rng(51)
        for _ in range(10):
            system = random_system(rng, 9)
            for x in range(9):
                report = omega_limit(system, x)
                # iterate past any transient, then collect one full cycle
                v = system.iterate(x, 9)
                seen = set()
                while v not in seen:
                    seen.add(v)
                    v = system.step(v)
                assert report.omega == sorted(seen)

    def test_component_lookup(self):
        system = spur_into_three_cycle()
        report = omega_limit(system, 0, dy(1, 3))
        dec = chain_components(system, dy(1, 3))
        assert report.containing_component == dec.component_of(1)
        assert omega_limit(system, 0).containing_component is None

    def test_to_json(self):
        obj = omega_limit(line_system(3), 0).to_json()
        assert obj == {"x": 0, "omega": [2], "minimal": True, "containing_component": None}


class TestIsMinimal:
    def test_single_cycle(self):
        assert is_minimal(spur_into_three_cycle(), [1, 2, 3])

    def test_union_of_cycles(self):
        rows = [[Dyadic(abs(i - j), 1) for j in range(4)] for i in range(4)]
        system = FiniteSystem.from_rows(rows, [1, 0, 3, 2])
        assert is_minimal(system, [0, 1])
        assert is_minimal(system, [2, 3])
        assert not is_minimal(system, [0, 1, 2, 3])

    def test_matches_omega_scan(self):
        rng = np.random.default_rng(52)
        for _ in range(10):
            system = random_system(rng, 8, invertible=True)
            # invariant sets: unions of permutation cycles
            cycles = []
            seen: set[int] = set()
            for start in range(8):
                if start in seen:
                    continue
                cyc = []
                v = start
                while v not in seen:
                    seen.add(v)
                    cyc.append(v)
                    v = system.step(v)
                cycles.append(sorted(cyc))
            for cyc in cycles:
                assert is_minimal(system, cyc)
            if len(cycles) >= 2:
                union = sorted(cycles[0] + cycles[1])
                expected = all(
                    sorted(omega_limit(system, x).omega) == union for x in union
                )
                assert is_minimal(system, union) == expected

    def test_validation(self):
        with pytest.raises(ConfigError):
            is_minimal(line_system(4), [0, 1])
        with pytest.raises(ConfigError):
            is_minimal(line_system(4), [])


def scatter_positions_word() -> SymbolicPoint:
    """Zero tails, a 1 at each index in {2, 4, 8, 16, 32, 64}."""
    marks = {2, 4, 8, 16, 32, 64}
    center = tuple(Dyadic(int(i in marks)) for i in range(0, 65))
    return SymbolicPoint("two", center, (Dyadic(0),), (Dyadic(0),), 0)


def oracle_word_distance(x: SymbolicPoint, y: SymbolicPoint, radius: int) -> Fraction:
    best = Fraction(0)
    for n in range(-radius, radius + 1):
        term = abs(frac(x.at(n)) - frac(y.at(n))) / Fraction(2) ** abs(n)
        best = max(best, term)
    return best


class TestClassifyPair:
    def test_same_point_asymptotic(self):
        system = line_system(5)
        verdict = classify_pair(system, 2, 2, 4, dy(1, 3), dy(1, 1))
        assert verdict.classification == "asymptotic" and verdict.exact

    def test_distinct_fixed_points_distal(self):
        system = two_fixed_points(dy(1))
        verdict = classify_pair(system, 0, 1, 4, dy(1, 3), dy(1, 1))
        assert verdict.classification == "distal" and verdict.exact
        assert verdict.liminf_proxy == dy(1) and verdict.limsup_proxy == dy(1)

    def test_scattered_ones_scrambled_proxy(self):
        x = periodic_word([0])
        y = scatter_positions_word()
        verdict = classify_pair(FULL2_TWO, x, y, 64, dy(1, 3), dy(1, 1), mode="proxy")
        assert verdict.classification == "scrambled"
        assert not verdict.exact
        # oracle: the explicit distance sequence over the tail window
        lo = hi = None
        for i in range(32, 65):
            d = oracle_word_distance(x.shift(i), y.shift(i), 80)
            lo = d if lo is None else min(lo, d)
            hi = d if hi is None else max(hi, d)
        assert frac(verdict.liminf_proxy) == lo and lo < frac(dy(1, 3))
        assert frac(verdict.limsup_proxy) == hi and hi > frac(dy(1, 1))

    def test_truncation_tail_drives_exact_mode(self):
        # the same pair read as eventually periodic words is asymptotic:
        # the fabricated zero tails agree from index 65 on
        verdict = classify_pair(
            FULL2_TWO, periodic_word([0]), scatter_positions_word(), 64, dy(1, 3), dy(1, 1)
        )
        assert verdict.classification == "asymptotic" and verdict.exact

    def test_proxy_undetermined_between_thresholds(self):
        system = FiniteSystem.from_rows(
            [[Dyadic(0), Dyadic(1, 1)], [Dyadic(1, 1), Dyadic(0)]], [1, 0]
        )
        verdict = classify_pair(system, 0, 1, 4, dy(1, 2), dy(3, 2), mode="proxy")
        assert verdict.classification == "undetermined"
        assert verdict.liminf_proxy == verdict.limsup_proxy == dy(1, 1)

    def test_proxy_proximal_nonasymptotic(self):
        # 4-cycle whose pair distances alternate between 1/16 and 1/2
        h = Dyadic(1, 1)
        rows = [
            [Dyadic(0), h, Dyadic(1, 4), h],
            [h, Dyadic(0), h, Dyadic(1, 1)],
            [Dyadic(1, 4), h, Dyadic(0), h],
            [h, Dyadic(1, 1), h, Dyadic(0)],
        ]
        system = FiniteSystem.from_rows(rows, [1, 2, 3, 0])
        verdict = classify_pair(system, 0, 2, 4, dy(1, 3), dy(1, 1), mode="proxy")
        assert verdict.classification == "proximal-nonasymptotic"
        exact = classify_pair(system, 0, 2, 4, dy(1, 3), dy(1, 1))
        assert exact.classification == "distal"
        assert exact.liminf_proxy == dy(1, 4)

    def test_symbolic_exact_pairs(self):
        distal = classify_pair(
            FULL2_TWO, periodic_word([0, 1]), periodic_word([1, 0]), 8, dy(1, 3), dy(1, 1)
        )
        assert distal.classification == "distal" and distal.exact
        one_space = SymbolicSystem((Dyadic(0), Dyadic(1)), "one")
        asym = classify_pair(
            one_space,
            one_sided_word((Dyadic(1),), (Dyadic(0),)),
            one_sided_word((), (Dyadic(0),)),
            8,
            dy(1, 3),
            dy(1, 1),
        )
        assert asym.classification == "asymptotic" and asym.exact

    def test_sampled_sequences(self):
        xs = tuple(Dyadic(0) for _ in range(40))
        ys = tuple(Dyadic(int(i == 30)) for i in range(40))
        verdict = classify_pair(
            SymbolicSystem((Dyadic(0), Dyadic(1)), "one"), xs, ys, 16, dy(1, 3), dy(1, 1)
        )
        assert not verdict.exact
        with pytest.raises(ConfigError, match="too short"):
            classify_pair(
                SymbolicSystem((Dyadic(0), Dyadic(1)), "one"),
                xs[:10],
                ys[:10],
                16,
                dy(1, 3),
                dy(1, 1),
            )

    def test_validation(self):
        system = line_system(3)
        with pytest.raises(ConfigError):
            classify_pair(system, 0, 1, 0, dy(1, 3), dy(1, 1))
        with pytest.raises(ConfigError):
            classify_pair(system, 0, 1, 4, dy(1, 1), dy(1, 3))
        with pytest.raises(ConfigError):
            classify_pair(system, 0, 1, 4, dy(1, 3), dy(1, 1), mode="fuzzy")
        with pytest.raises(ConfigError):
            classify_pair(FULL2_TWO, periodic_word([0]), one_sided_word((), [0]), 4, dy(1, 3), dy(1, 1))
        with pytest.raises(ConfigError):
            classify_pair(FULL2_TWO, (Dyadic(0),) * 20, periodic_word([0]), 4, dy(1, 3), dy(1, 1), mode="exact")

    def test_to_json(self):
        verdict = classify_pair(two_fixed_points(dy(1)), 0, 1, 4, dy(1, 3), dy(1, 1))
        obj = verdict.to_json()
        assert obj["pair"] == [0, 1]
        assert obj["class"] == "distal"
        assert obj["exact"] is True
        assert obj["liminf"] == [1, 0] and obj["limsup"] == [1, 0]


class TestSensitivePoints:
    def test_isometry_not_sensitive(self):
        system = odometer((2, 4, 8))
        report = sensitive_points(system, range(8), dy(1, 1), [dy(1, 2)])
        assert all(row["flags"] == [False] for row in report["rows"])

    def test_full_shift_all_sensitive(self):
        system, _ = compile_symbolic(FULL2_TWO, 2)
        report = sensitive_points(system, range(system.size), dy(1, 1), [dy(1, 2)])
        assert all(row["flags"] == [True] for row in report["rows"])
        # oracle: exhaustive scan with Fractions over one rotation period
        table = frac_dist(system)
        e = frac(dy(1, 1))
        eta = frac(dy(1, 2))
        for x in (0, 17):
            found = False
            for y in range(system.size):
                if y == x or table[x][y] > eta:
                    continue
                if any(
                    table[system.iterate(x, i)][system.iterate(y, i)] > e
                    for i in range(6)
                ):
                    found = True
                    break
            assert found

    def test_fixed_points_thresholds(self):
        system = two_fixed_points(dy(1))
        report = sensitive_points(system, [0, 1], dy(1, 1), [dy(1), dy(1, 2)])
        assert report["rows"][0]["flags"] == [True, False]
        assert report["rows"][1]["flags"] == [True, False]

    def test_validation(self):
        with pytest.raises(ConfigError):
            sensitive_points(line_system(4), [0, 1], dy(1, 1), [dy(1)])
        with pytest.raises(ConfigError):
            sensitive_points(two_fixed_points(dy(1)), [0, 1], dy(1, 1), [])


class TestNonminimalityConditions:
    def thresholds(self, **overrides) -> dict:
        out = {
            "e_grid": [dy(1, 2)],
            "eta_schedule": [dy(1, 1)],
            "s_lo": dy(1, 3),
            "s_hi": dy(1, 1),
            "eps_schedule": [dy(1, 1)],
            "delta_schedule": [dy(1, 4)],
        }
        out.update(overrides)
        return out

    def test_lone_fixed_point_all_false(self):
        system = line_system(4)
        report = nonminimality_conditions_test(
            system, 0, dy(1, 4), [1, 2], 6, self.thresholds()
        )
        assert report["omega"] == [3]
        conditions = report["conditions"]
        assert not conditions["sensitive_omega"]
        assert not conditions["scrambled_pair"]
        assert not conditions["omega_nonminimal"]
        assert report["component_class"] == "O"
        assert report["consistent"]

    def test_spur_into_full_shift(self):
        system = spur_into_full_shift()
        thresholds = self.thresholds(
            e_grid=[dy(1, 2)],
            eta_schedule=[dy(1, 1)],
            eps_schedule=[dy(1, 2)],
            delta_schedule=[dy(1, 2)],
        )
        report = nonminimality_conditions_test(
            system, 8, dy(1, 2), list(range(8)), 6, thresholds
        )
        conditions = report["conditions"]
        assert conditions["sensitive_omega"]
        assert conditions["omega_nonminimal"]
        # exact pair classification on a finite system is never scrambled
        assert not conditions["scrambled_pair"]
        assert report["component_class"] == "NO"
        assert report["any_condition"] and report["consistent"]
