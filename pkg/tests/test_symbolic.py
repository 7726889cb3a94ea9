"""Symbolic words, the weighted sup metric, and window compilation."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from chainscope import (
    CapExceeded,
    ConfigError,
    Dyadic,
    SymbolicPoint,
    SymbolicSystem,
    compile_symbolic,
    compiled_resolution,
    metric_eval,
    one_sided_word,
    periodic_word,
    words_equal,
)

from support import dy, frac

FULL2_ONE = SymbolicSystem((Dyadic(0), Dyadic(1)), "one")
FULL2_TWO = SymbolicSystem((Dyadic(0), Dyadic(1)), "two")


def oracle_metric(x: SymbolicPoint, y: SymbolicPoint) -> Fraction:
    """Exhaustive scan of sup_n 2^-|n| |x(n)-y(n)|.

    The symbol pair sequence is eventually periodic on both sides and the
    weight strictly decreases, so the sup is attained within one period
    past the aligned cores.
    """
    if x.sided == "one":
        core = max(len(x.center), len(y.center))
        period = math.lcm(len(x.right_period), len(y.right_period))
        indices = range(1, core + period + 1)
    else:
        right = max(x.offset + len(x.center), y.offset + len(y.center), 0)
        right += math.lcm(len(x.right_period), len(y.right_period))
        left = min(x.offset, y.offset, 0)
        left -= math.lcm(len(x.left_period), len(y.left_period))
        indices = range(left, right + 1)
    best = Fraction(0)
    for n in indices:
        term = abs(frac(x.at(n)) - frac(y.at(n))) / Fraction(2) ** abs(n)
        if term > best:
            best = term
    return best


def random_word(rng, sided: str) -> SymbolicPoint:
    bit = lambda k: tuple(Dyadic(int(b)) for b in rng.integers(0, 2, size=k))
    center = bit(int(rng.integers(0, 4)))
    right = bit(int(rng.integers(1, 4)))
    if sided == "one":
        return SymbolicPoint("one", center, right)
    left = bit(int(rng.integers(1, 4)))
    return SymbolicPoint("two", center, right, left, int(rng.integers(-3, 4)))


class TestMetric:
    def test_equal_presentations_give_zero(self):
        x = periodic_word([0, 1])
        y = periodic_word([0, 1, 0, 1])
        assert words_equal(x, y)
        assert metric_eval(x, y) == dy(0)

    def test_difference_at_origin_weighs_one(self):
        x = periodic_word([0])
        y = SymbolicPoint("two", (Dyadic(1),), (Dyadic(0),), (Dyadic(0),), 0)
        assert metric_eval(x, y) == dy(1)

    def test_difference_at_index_three_weighs_an_eighth(self):
        x = periodic_word([0])
        y = SymbolicPoint("two", tuple(Dyadic(int(n == 3)) for n in range(-3, 4)),
                          (Dyadic(0),), (Dyadic(0),), -3)
        assert metric_eval(x, y) == dy(1, 3)
        assert frac(metric_eval(x, y)) == oracle_metric(x, y)

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(21)
        for sided in ("one", "two"):
            for _ in range(150):
                x, y = random_word(rng, sided), random_word(rng, sided)
                assert frac(metric_eval(x, y)) == oracle_metric(x, y)

    def test_opposite_constants_at_distance_one(self):
        assert metric_eval(periodic_word([0]), periodic_word([1])) == dy(1)
        assert metric_eval(one_sided_word((), [0]), one_sided_word((), [1])) == dy(1, 1)

    def test_sidedness_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            metric_eval(periodic_word([0]), one_sided_word((), [0]))

    def test_space_alphabet_enforced(self):
        with pytest.raises(ConfigError):
            FULL2_TWO.metric(periodic_word([0]), periodic_word([2]))


class TestSymbolicPoint:
    def test_at_and_window(self):
        x = SymbolicPoint("two", (Dyadic(5),), (Dyadic(1), Dyadic(2)), (Dyadic(9),), 0)
        assert x.at(0) == dy(5)
        assert x.at(1) == dy(1)
        assert x.at(2) == dy(2)
        assert x.at(3) == dy(1)
        assert x.at(-1) == dy(9)
        assert x.window(-2, 2) == (dy(9), dy(9), dy(5), dy(1), dy(2))

    def test_shift_reads_ahead(self):
        x = SymbolicPoint("two", (Dyadic(5),), (Dyadic(1),), (Dyadic(9),), 0)
        for k in (-2, -1, 0, 1, 3):
            shifted = x.shift(k)
            for n in range(-4, 5):
                assert shifted.at(n) == x.at(n + k)

    def test_one_sided_shift(self):
        x = one_sided_word([1, 0], [0, 1])
        shifted = x.shift(3)
        for n in range(1, 9):
            assert shifted.at(n) == x.at(n + 3)
        with pytest.raises(ConfigError):
            x.shift(-1)

    def test_one_sided_index_floor(self):
        with pytest.raises(ConfigError):
            one_sided_word((), [0]).at(0)

    def test_validation(self):
        with pytest.raises(ConfigError):
            SymbolicPoint("one", (), ())
        with pytest.raises(ConfigError):
            SymbolicPoint("two", (), (Dyadic(0),), ())
        with pytest.raises(ConfigError):
            SymbolicPoint("one", (), (Dyadic(0),), (Dyadic(0),))


class TestSymbolicSystem:
    def test_monotone_constraint(self):
        space = SymbolicSystem((Dyadic(0), Dyadic(1), Dyadic(-1)), "one", "monotone")
        assert space.admits_transition(dy(1), dy(0))
        assert space.admits_transition(dy(1), dy(-1))
        assert not space.admits_transition(dy(0), dy(1))
        assert space.admissible_window([dy(1), dy(1), dy(0)])
        assert not space.admissible_window([dy(0), dy(1)])

    def test_monotone_is_one_sided_only(self):
        with pytest.raises(ConfigError):
            SymbolicSystem((Dyadic(0), Dyadic(1)), "two", "monotone")

    def test_contains(self):
        assert FULL2_TWO.contains(periodic_word([0, 1]))
        assert not FULL2_TWO.contains(periodic_word([2]))
        assert not FULL2_TWO.contains(one_sided_word((), [0]))


class TestCompile:
    def test_two_sided_counts(self):
        system1, reps1 = compile_symbolic(FULL2_TWO, 1)
        assert system1.size == 8
        system3, reps3 = compile_symbolic(FULL2_TWO, 3)
        assert system3.size == 128

    def test_two_sided_image_is_rotation(self):
        system, reps = compile_symbolic(FULL2_TWO, 2)
        for i in range(system.size):
            target = reps[system.step(i)]
            shifted = reps[i].shift(1)
            assert target.window(-2, 2) == shifted.window(-2, 2)

    def test_one_sided_image_repeats_last(self):
        system, reps = compile_symbolic(FULL2_ONE, 3)
        assert system.size == 8
        for i in range(system.size):
            w = reps[i].window(1, 3)
            assert reps[system.step(i)].window(1, 3) == w[1:] + (w[-1],)

    def test_class_distance_is_exact_metric(self):
        system, reps = compile_symbolic(FULL2_TWO, 2)
        rng = np.random.default_rng(23)
        for _ in range(60):
            i, j = rng.integers(0, system.size, size=2)
            assert system.dist(int(i), int(j)) == metric_eval(reps[int(i)], reps[int(j)])

    def test_opposite_windows_at_distance_one(self):
        system, reps = compile_symbolic(FULL2_TWO, 2)
        zeros = next(i for i, p in reps.items() if set(p.window(-2, 2)) == {dy(0)})
        ones = next(i for i, p in reps.items() if set(p.window(-2, 2)) == {dy(1)})
        assert system.dist(zeros, ones) == dy(1)

    def test_resolution_metadata(self):
        system, _ = compile_symbolic(FULL2_ONE, 4)
        assert compiled_resolution(system) == dy(1, 4)
        plain = compile_symbolic(FULL2_ONE, 1)[0]
        plain.metadata.pop("resolution")
        with pytest.raises(ConfigError):
            compiled_resolution(plain)

    def test_class_cap(self):
        with pytest.raises(CapExceeded):
            compile_symbolic(FULL2_TWO, 3, class_cap=100)

    def test_monotone_space_compiles_fewer_classes(self):
        space = SymbolicSystem((Dyadic(0), Dyadic(1)), "one", "monotone")
        system, reps = compile_symbolic(space, 3)
        # admissible windows: once the symbol drops to 0 it stays 0
        assert system.size == 4
        for i in range(system.size):
            assert space.admissible_window(reps[i].window(1, 3))

    def test_depth_validation(self):
        with pytest.raises(ConfigError):
            compile_symbolic(FULL2_ONE, 0)
        with pytest.raises(ConfigError):
            compile_symbolic(FULL2_ONE, 2, map_spec="rotate")
        with pytest.raises(ConfigError):
            compile_symbolic(FULL2_ONE, 2, map_spec="factor-shift")
