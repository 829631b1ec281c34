import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algc.algebroid import (
    Algebroid,
    Box,
    almost_lie_residual,
    anchor_apply,
    bracket,
    jacobiator,
    vector_field_bracket,
)
from algc.errors import DimensionError, DomainError, StructureError
from algc.expr import ExprArray
from algc.fields import sup_norm

from conftest import random_field


class TestBox:
    def test_samples_stay_inside(self, rng):
        box = Box((-1.0, 0.5), (1.0, 2.0))
        pts = box.sample(rng, 50)
        assert all(box.contains(p) for p in pts)

    def test_require(self):
        with pytest.raises(DomainError):
            Box((0.0,), (1.0,)).require(np.array([2.0]))

    def test_degenerate(self):
        with pytest.raises(StructureError):
            Box((0.0,), (0.0,))


class TestBracket:
    def test_euclid_vector_fields(self, euclid2):
        X, Y = euclid2.section("X"), euclid2.section("Y")
        np.testing.assert_allclose(bracket(euclid2.alg, X, Y)(np.array([1.0, 1.0])), [-1.0, 1.0])
        np.testing.assert_allclose(bracket(euclid2.alg, X, Y)(np.array([0.3, 0.7])), [-0.3, 0.7])

    def test_so3_frame(self, so3):
        e = [so3.alg.basis(i) for i in range(3)]
        p = np.zeros(3)
        np.testing.assert_array_equal(bracket(so3.alg, e[0], e[1])(p), [0, 0, 1])
        np.testing.assert_array_equal(bracket(so3.alg, e[1], e[2])(p), [1, 0, 0])

    def test_tangent_bracket_matches_vector_fields(self, rng, euclid2):
        X, Y = (random_field(rng, 2, (2,)) for _ in range(2))
        p = np.array([0.2, -0.6])
        assert sup_norm(bracket(euclid2.alg, X, Y) - vector_field_bracket(X, Y), p) < 1e-13

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_leibniz_property(self, so3, seed):
        rng = np.random.default_rng(seed)
        X, Y = (random_field(rng, 3, (3,)) for _ in range(2))
        f = random_field(rng, 3, ())
        a = so3.alg
        p = a.domain.sample(rng, 1)[0]
        res = bracket(a, X, Y * f) - bracket(a, X, Y) * f - Y * anchor_apply(a, X, f)
        assert sup_norm(res, p) < 1e-12

    def test_lie_fixtures(self, rng, registry):
        for name in ("euclid2", "hyperbolic", "so3", "kahler_flat"):
            a = registry[name].alg
            X, Y, Z = (random_field(rng, a.n, (a.r,)) for _ in range(3))
            p = a.domain.sample(rng, 1)[0]
            assert sup_norm(jacobiator(a, X, Y, Z), p) < 1e-11
            assert almost_lie_residual(a, X, Y, p) < 1e-11


class TestValidation:
    def test_rejects_non_skew_structure(self):
        coords = ("x",)
        anchor = ExprArray.parse([["1", "0"]], coords)
        c = [[["0", "x"], ["x", "0"]], [["0", "0"], ["0", "0"]]]
        with pytest.raises(StructureError):
            Algebroid(coords, anchor, ExprArray.parse(c, coords), Box((0.0,), (1.0,)))

    def test_rejects_bad_shapes(self):
        coords = ("x",)
        anchor = ExprArray.parse([["1", "0"]], coords)
        c = ExprArray.parse([[["0"]]], coords)
        with pytest.raises(DimensionError):
            Algebroid(coords, anchor, c, Box((0.0,), (1.0,)))

    def test_section_shape(self, euclid2):
        with pytest.raises(DimensionError):
            euclid2.alg.check_section(euclid2.alg.anchor)
