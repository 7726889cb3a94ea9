"""Exact scalar arithmetic, checked against fractions.Fraction."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chainscope import ConfigError, Dyadic, dyadic_max, dyadic_min

from support import dy, frac


class TestArithmetic:
    @given(
        st.integers(-1000, 1000), st.integers(0, 12),
        st.integers(-1000, 1000), st.integers(0, 12),
    )
    def test_matches_fraction(self, an, ae, bn, be):
        a, b = Dyadic(an, ae), Dyadic(bn, be)
        fa, fb = frac(a), frac(b)
        assert frac(a + b) == fa + fb
        assert frac(a - b) == fa - fb
        assert frac(a * b) == fa * fb
        assert frac(-a) == -fa
        assert frac(abs(a)) == abs(fa)
        assert (a < b) == (fa < fb)
        assert (a <= b) == (fa <= fb)
        assert (a == b) == (fa == fb)
        assert (a > b) == (fa > fb)
        assert (a >= b) == (fa >= fb)

    def test_normal_form(self):
        assert Dyadic(2, 1) == Dyadic(1, 0)
        assert Dyadic(4, 2).exp == 0
        assert Dyadic(6, 3) == Dyadic(3, 2)
        assert Dyadic(0, 7).exp == 0

    def test_scale_pow2(self):
        assert dy(3, 2).scale_pow2(1) == dy(3, 1)
        assert dy(3, 2).scale_pow2(-2) == dy(3, 4)
        assert Dyadic.pow2(-3) == dy(1, 3)
        assert Dyadic.pow2(2) == dy(4)

    def test_int_and_float_interop(self):
        assert dy(1, 1) + 1 == dy(3, 1)
        assert dy(1, 1) < 1
        assert dy(1, 1) == 0.5
        assert dy(1, 1) < 0.75
        assert hash(dy(1, 1)) == hash(0.5)
        assert dy(4, 1).is_integer()
        assert not dy(1, 1).is_integer()

    def test_coerce(self):
        assert Dyadic.coerce(3) == dy(3)
        assert Dyadic.coerce(dy(1, 2)) == dy(1, 2)
        with pytest.raises(TypeError):
            Dyadic.coerce(0.5)
        with pytest.raises(TypeError):
            Dyadic.coerce([1, 2])


class TestJson:
    def test_round_trip(self):
        for v in (dy(0), dy(5, 3), dy(-7, 2), dy(12)):
            assert Dyadic.from_json(v.as_json()) == v

    def test_as_json_shape(self):
        assert dy(3, 2).as_json() == [3, 2]

    def test_rejects_negative_exponent(self):
        with pytest.raises(ConfigError):
            Dyadic.from_json([1, -1])

    def test_rejects_malformed(self):
        with pytest.raises(ConfigError):
            Dyadic.from_json([1])
        with pytest.raises(ConfigError):
            Dyadic.from_json("1/2")


class TestMinMax:
    def test_values(self):
        values = [dy(1, 1), dy(3, 2), dy(1, 3)]
        assert dyadic_max(values) == dy(3, 2)
        assert dyadic_min(values) == dy(1, 3)

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            dyadic_max([])
        with pytest.raises(ConfigError):
            dyadic_min([])

    def test_order_is_total(self):
        rng = np.random.default_rng(3)
        values = [Dyadic(int(n), int(e)) for n, e in rng.integers(0, 16, size=(30, 2))]
        by_dyadic = sorted(values)
        by_fraction = sorted(values, key=frac)
        assert [frac(v) for v in by_dyadic] == [frac(v) for v in by_fraction]
