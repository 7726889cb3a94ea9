"""Finite metric systems: validation, balls, orbits, serialization."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from chainscope import (
    AnalysisParams,
    ConfigError,
    Dyadic,
    FiniteSystem,
    ball,
    dump_system,
    load_system,
    restrict,
    system_from_json,
    system_to_json,
    validate_system,
)

from support import dy, frac, frac_dist, line_system, random_system, two_cycle


def _rows(values, exp):
    return [[Dyadic(v, exp) for v in row] for row in values]


class TestValidateSystem:
    def test_single_point_valid(self):
        system = FiniteSystem.from_rows(_rows([[0]], 0), [0])
        assert validate_system(system) == []

    def test_random_systems_valid(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            system = random_system(rng, int(rng.integers(2, 9)))
            assert validate_system(system) == []

    def test_distinct_points_at_zero(self):
        rows = _rows([[0, 0], [0, 0]], 0)
        system = FiniteSystem.from_rows(rows, [0, 1])
        assert any("distinct points at distance 0" in v for v in validate_system(system))

    def test_symmetry_violation(self):
        rows = _rows([[0, 1], [2, 0]], 1)
        system = FiniteSystem.from_rows(rows, [0, 1])
        assert any("symmetry violated" in v for v in validate_system(system))

    def test_nonzero_self_distance(self):
        rows = _rows([[1, 2], [2, 0]], 1)
        system = FiniteSystem.from_rows(rows, [0, 1])
        assert any("nonzero self-distance" in v for v in validate_system(system))

    def test_triangle_violation(self):
        # d(0,2)=1 but d(0,1)+d(1,2)=1/4: a genuine triangle failure.
        rows = _rows([[0, 1, 8], [1, 0, 1], [8, 1, 0]], 3)
        system = FiniteSystem.from_rows(rows, [0, 1, 2])
        assert any("triangle inequality violated" in v for v in validate_system(system))

    def test_bad_invertible_flag(self):
        rows = _rows([[0, 1], [1, 0]], 1)
        system = FiniteSystem.from_rows(rows, [0, 0], invertible=True)
        assert any("not a bijection" in v for v in validate_system(system))

    def test_triangle_mode_rejects_unknown(self):
        system = two_cycle()
        with pytest.raises(ConfigError):
            validate_system(system, triangle_mode="fast")


class TestDistances:
    def test_dist_matches_raw_table(self):
        rng = np.random.default_rng(5)
        system = random_system(rng, 7)
        for i in range(7):
            for j in range(7):
                raw = Fraction(int(system._dnum[i, j]), 1 << system._dexp)
                assert frac(system.dist(i, j)) == raw

    def test_dist_le_gt_partition(self):
        rng = np.random.default_rng(6)
        system = random_system(rng, 6)
        table = frac_dist(system)
        for bound in (dy(0), dy(1, 3), dy(5, 3), dy(1), dy(2)):
            le = system.dist_le(bound)
            gt = system.dist_gt(bound)
            for i in range(6):
                for j in range(6):
                    expected = table[i][j] <= frac(bound)
                    assert bool(le[i, j]) == expected
                    assert bool(gt[i, j]) == (not expected)

    def test_min_positive_and_diameter(self):
        system = line_system(4, scale_exp=3)
        assert system.min_positive_distance() == dy(1, 3)
        assert system.diameter() == dy(3, 3)
        one_point = FiniteSystem.from_rows(_rows([[0]], 0), [0])
        assert one_point.min_positive_distance() is None
        assert one_point.diameter() == dy(0)


class TestBall:
    def test_radius_zero_is_the_point(self):
        rng = np.random.default_rng(7)
        system = random_system(rng, 6)
        for x in range(6):
            assert ball(system, x, dy(0)) == [x]

    def test_boundary_included(self):
        system = two_cycle(dy(1, 1))  # the two points sit at distance 1/2
        assert ball(system, 0, dy(1, 1)) == [0, 1]
        assert ball(system, 0, dy(1, 2)) == [0]

    def test_matches_scan(self):
        system = line_system(8, scale_exp=3)
        table = frac_dist(system)
        for x in range(8):
            for eps in (dy(1, 3), dy(3, 3), dy(1)):
                expected = [y for y in range(8) if table[x][y] <= frac(eps)]
                assert ball(system, x, eps) == expected


class TestOrbits:
    def test_orbit_tail_and_cycle(self):
        system = line_system(5)  # i -> i+1, last point fixed
        tail, cycle = system.orbit(0)
        assert tail == [0, 1, 2, 3]
        assert cycle == [4]
        tail, cycle = system.orbit(4)
        assert tail == []
        assert cycle == [4]

    def test_iterate(self):
        system = line_system(5)
        assert system.iterate(0, 0) == 0
        assert system.iterate(0, 3) == 3
        assert system.iterate(0, 10) == 4

    def test_power(self):
        system = line_system(6)
        squared = system.power(2)
        for i in range(6):
            assert squared.step(i) == system.iterate(i, 2)
        with pytest.raises(ConfigError):
            system.power(0)

    def test_inverse_image(self):
        system = two_cycle()
        inv = system.inverse_image()
        assert list(inv) == [1, 0]
        with pytest.raises(ConfigError):
            line_system(3).inverse_image()

    def test_index_checks(self):
        system = two_cycle()
        with pytest.raises(ConfigError):
            system.step(2)
        with pytest.raises(ConfigError):
            system.dist(0, "a")


class TestRestrict:
    def test_induced_subsystem(self):
        system = line_system(6)
        sub, index = restrict(system, [3, 4, 5])
        assert index == [3, 4, 5]
        assert sub.size == 3
        for a, ga in enumerate(index):
            assert index[sub.step(a)] == system.step(ga)
            for b, gb in enumerate(index):
                assert sub.dist(a, b) == system.dist(ga, gb)

    def test_non_invariant_rejected(self):
        system = line_system(6)
        with pytest.raises(ConfigError):
            restrict(system, [0, 1])

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            restrict(line_system(3), [])


class TestJsonFormat:
    def test_round_trip(self):
        rng = np.random.default_rng(9)
        system = random_system(rng, 5, invertible=True)
        copy = system_from_json(system_to_json(system))
        assert copy.size == system.size
        assert list(copy.image) == list(system.image)
        assert copy.invertible == system.invertible
        for i in range(5):
            for j in range(5):
                assert copy.dist(i, j) == system.dist(i, j)

    def test_file_round_trip(self, tmp_path):
        system = two_cycle(dy(1, 1))
        path = tmp_path / "system.json"
        dump_system(system, path)
        copy = load_system(path)
        assert copy.size == 2 and copy.dist(0, 1) == dy(1, 1)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_system(path)

    def test_missing_key(self):
        with pytest.raises(ConfigError):
            system_from_json({"size": 1, "image": [0]})

    def test_bad_image_entry(self):
        obj = system_to_json(two_cycle())
        obj["image"] = [0, 5]
        with pytest.raises(ConfigError):
            system_from_json(obj)


class TestFromRows:
    def test_shared_scale_guard(self):
        # A distance of 2^40 at shared scale 2^-40 needs 2^80 in the table.
        rows = [[dy(0), Dyadic(1 << 40)], [Dyadic(1 << 40), dy(0)]]
        rows[0][0] = Dyadic(1, 40)  # forces dexp=40 for the shared scale
        rows[1][1] = Dyadic(1, 40)
        with pytest.raises(ConfigError):
            FiniteSystem.from_rows(rows, [0, 1])

    def test_rejects_ragged(self):
        with pytest.raises(ConfigError):
            FiniteSystem.from_rows([[dy(0)], [dy(0), dy(0)]], [0, 1])


class TestAnalysisParams:
    def test_schedules_must_decrease(self):
        AnalysisParams(delta_schedule=(dy(1, 1), dy(1, 2)))
        with pytest.raises(ConfigError):
            AnalysisParams(delta_schedule=(dy(1, 2), dy(1, 1)))
        with pytest.raises(ConfigError):
            AnalysisParams(eps_schedule=(dy(1, 1), dy(1, 1)))

    def test_positive_scalars(self):
        with pytest.raises(ConfigError):
            AnalysisParams(delta=dy(0))
        with pytest.raises(ConfigError):
            AnalysisParams(n=-1)

    def test_as_json(self):
        params = AnalysisParams(delta=dy(1, 2), n=3, eps_schedule=(dy(1, 1),))
        obj = params.as_json()
        assert obj["delta"] == [1, 2]
        assert obj["n"] == 3
        assert obj["eps_schedule"] == [[1, 1]]
