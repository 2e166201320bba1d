"""Tests for monomial dictionaries and the coordinate readout."""

from math import comb

import numpy as np
import pytest

from mredmd.errors import ConfigurationError
from mredmd.observables import coordinate_readout, monomial_dictionary


class TestMonomialDictionary:
    def test_univariate_degree_one(self):
        d = monomial_dictionary(1, 1)
        assert d.exponents == ((0,), (1,))

    def test_degree_zero(self):
        d = monomial_dictionary(2, 0)
        assert d.exponents == ((0, 0),)

    def test_three_dims_degree_two_size(self):
        assert monomial_dictionary(3, 2).size == 10  # C(5, 2)

    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("degree", range(5))
    def test_size_formula(self, n, degree):
        assert monomial_dictionary(n, degree).size == comb(n + degree, degree)

    def test_graded_lex_order(self):
        d = monomial_dictionary(3, 2)
        assert d.exponents[:4] == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))
        degrees = [sum(a) for a in d.exponents]
        assert degrees == sorted(degrees)

    def test_exclude_constant(self):
        d = monomial_dictionary(2, 1, include_constant=False)
        assert d.exponents == ((1, 0), (0, 1))

    def test_manifest_one_line_per_monomial(self):
        d = monomial_dictionary(2, 1)
        assert d.manifest() == "0 0\n1 0\n0 1\n"


class TestEvaluate:
    def test_constant_slot(self):
        d = monomial_dictionary(3, 2)
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert d.evaluate(rng.normal(size=3))[0] == 1.0

    def test_hand_evaluation(self):
        d = monomial_dictionary(3, 2)
        vals = d.evaluate(np.array([1.0, 2.0, 3.0]))
        slot = d.exponents.index((0, 1, 1))  # x2 * x3
        assert vals[slot] == pytest.approx(6.0)

    def test_at_origin(self):
        d = monomial_dictionary(3, 2)
        vals = d.evaluate(np.zeros(3))
        assert vals[0] == 1.0
        np.testing.assert_array_equal(vals[1:], np.zeros(d.size - 1))

    def test_multiplicative_consistency(self):
        d = monomial_dictionary(3, 4)
        rng = np.random.default_rng(1)
        index = {a: i for i, a in enumerate(d.exponents)}
        for _ in range(10):
            x = rng.uniform(-2, 2, size=3)
            vals = d.evaluate(x)
            for a in d.exponents:
                for b in d.exponents:
                    c = tuple(ai + bi for ai, bi in zip(a, b))
                    if c in index:
                        assert vals[index[c]] == pytest.approx(
                            vals[index[a]] * vals[index[b]], rel=1e-12, abs=1e-12
                        )

    def test_columns_match_single(self):
        d = monomial_dictionary(3, 2)
        rng = np.random.default_rng(2)
        states = rng.normal(size=(3, 7))
        lifted = d.evaluate_columns(states)
        assert lifted.shape == (10, 7)
        for k in range(7):
            np.testing.assert_array_equal(lifted[:, k], d.evaluate(states[:, k]))

    def test_dimension_check(self):
        d = monomial_dictionary(3, 2)
        with pytest.raises(ConfigurationError):
            d.evaluate(np.zeros(2))


class TestCoordinateReadout:
    def test_univariate(self):
        c = coordinate_readout(monomial_dictionary(1, 1))
        np.testing.assert_array_equal(c, [[0.0, 1.0]])

    def test_structure(self):
        c = coordinate_readout(monomial_dictionary(3, 2))
        assert c.shape == (3, 10)
        assert np.count_nonzero(c) == 3
        np.testing.assert_array_equal(c.sum(axis=1), np.ones(3))

    def test_roundtrip_property(self):
        d = monomial_dictionary(3, 2)
        c = coordinate_readout(d)
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.uniform(-3, 3, size=3)
            np.testing.assert_array_equal(c @ d.evaluate(x), x)

    def test_missing_coordinates(self):
        with pytest.raises(ConfigurationError):
            coordinate_readout(monomial_dictionary(2, 0))
