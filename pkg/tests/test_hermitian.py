import numpy as np
import pytest

from algc import calculus as C
from algc import hermitian as H
from algc import metric as M
from algc.algebroid import almost_lie_residual, jacobiator
from algc.errors import DimensionError, StructureError
from algc.expr import ExprArray
from algc.fields import sup_norm

from conftest import random_field

P = np.array([0.3, -0.2, 0.5, 0.1])


@pytest.fixture(scope="module")
def twisted(registry):
    fx = registry["twisted_j"]
    lc = M.levi_civita(fx.metric)
    nj = H.nabla_j(lc, fx.ac)
    return fx, lc, nj, H.first_canonical(lc, nj)


def sections(rng, count=2):
    return [random_field(rng, 4, (4,)) for _ in range(count)]


class TestAlmostComplex:
    def test_square_and_orthogonality(self, kahler_flat, twisted_j):
        for fx in (kahler_flat, twisted_j):
            assert H.square_residual(fx.ac, P) < 1e-10
            assert H.orthogonality_residual(fx.metric, fx.ac, P) < 1e-10

    def test_rejects_bad_square(self, kahler_flat):
        J = ExprArray.parse([["1", "0", "0", "0"], ["0", "1", "0", "0"],
                             ["0", "0", "1", "0"], ["0", "0", "0", "1"]], kahler_flat.alg.coords)
        with pytest.raises(StructureError):
            H.AlmostComplex(kahler_flat.alg, J)

    def test_needs_tangent_bundle(self, so3):
        J = ExprArray.parse([["0"] * 3] * 3, so3.alg.coords)
        with pytest.raises((DimensionError, StructureError)):
            H.AlmostComplex(so3.alg, J)

    def test_kahler_form_slot(self, kahler_flat):
        W = H.kahler_form(kahler_flat.metric, kahler_flat.ac)(np.zeros(4))
        assert W[0, 1] == pytest.approx(1.0)
        np.testing.assert_allclose(W, -W.T)


class TestNijenhuis:
    def test_flat_is_integrable(self, kahler_flat):
        assert sup_norm(H.nijenhuis(kahler_flat.ac), P) < 1e-14

    def test_twisted_is_not(self, twisted_j):
        assert sup_norm(H.nijenhuis(twisted_j.ac), P) > 1e-2

    def test_tensor_matches_sections(self, rng, twisted_j):
        X, Y = sections(rng)
        lhs = C.apply_vec(H.nijenhuis(twisted_j.ac), X, Y)
        assert sup_norm(lhs - H.nijenhuis_apply(twisted_j.ac, X, Y), P) < 1e-12


class TestTMJ:
    def test_integrable_j_gives_lie_algebroid(self, rng, kahler_flat):
        a = H.tmj_algebroid(kahler_flat.ac)
        X, Y, Z = sections(rng, 3)
        assert sup_norm(jacobiator(a, X, Y, Z), P) < 1e-8

    def test_twisted_j_is_not_almost_lie(self, rng, twisted_j):
        a = H.tmj_algebroid(twisted_j.ac)
        X, Y = sections(rng)
        assert almost_lie_residual(a, X, Y, P) > 1e-3

    def test_anchor_is_j(self, twisted_j):
        a = H.tmj_algebroid(twisted_j.ac)
        np.testing.assert_allclose(a.anchor(P), twisted_j.ac.J(P))


class TestCanonicalConnections:
    def test_nabla_bar_is_hermitian(self, twisted):
        fx, lc, nj, nb = twisted
        assert sup_norm(M.metric_defect(fx.metric, nb), P) < 1e-12
        assert sup_norm(C.nabla_endo(nb, fx.ac.J), P) < 1e-12
        assert sup_norm(C.torsion(nb) - C.torsion(nj) * 0.5, P) < 1e-12

    def test_nabla_j_torsion(self, twisted):
        fx, lc, nj, _ = twisted
        assert sup_norm(C.torsion(nj) + fx.ac.after(H.da_J(lc, fx.ac)), P) < 1e-12

    def test_decomposition_quarter_coefficient(self, twisted):
        fx, lc, nj, nb = twisted
        assert H.conn_difference(nb, H.nabla_bar_decomposition(lc, fx.ac, nj), P) < 1e-12
        half = C.Connection(fx.alg, lc.coeffs - fx.ac.after(H.ds_J(lc, fx.ac)) * 0.5
                            + C.torsion(nj) * 0.25)
        assert H.conn_difference(nb, half, P) > 1e-3

    def test_torsion_identity(self, rng, twisted):
        fx, lc, nj, _ = twisted
        X, Y = sections(rng)
        assert H.torsion_identity_residual(lc, fx.ac, X, Y, P, nj=nj) < 1e-12

    def test_twisted_is_not_nearly_kahler(self, twisted):
        fx, lc, _, _ = twisted
        assert H.nearly_kahler_residual(lc, fx.ac, [P]) > 1e-2

    def test_flat_kahler_collapses(self, kahler_flat):
        lc = M.levi_civita(kahler_flat.metric)
        nb = H.first_canonical(lc, H.nabla_j(lc, kahler_flat.ac))
        assert H.nearly_kahler_residual(lc, kahler_flat.ac, [P]) < 1e-14
        assert H.conn_difference(nb, lc, P) < 1e-14
        assert H.conn_difference(nb, H.nearly_kahler_form(lc, kahler_flat.ac), P) < 1e-14

    def test_lemmas_hold_for_arbitrary_connections(self, rng, twisted_j):
        c = C.Connection(twisted_j.alg, random_field(rng, 4, (4, 4, 4)))
        X, Y, Z = sections(rng, 3)
        a, b = H.j_lemma_residuals(c, twisted_j.metric, twisted_j.ac, X, Y, Z, P)
        assert a < 1e-11 and b < 1e-11


class TestPQ:
    def test_symmetric_part_of_nabla_j(self, rng, twisted):
        fx, lc, nj, _ = twisted
        X, Y = sections(rng)
        lhs = C.sym_apply(C.sym_product(nj), X, Y)
        rhs = H.pq_apply(fx.alg, C.sym_product(lc), fx.ac, X, Y)
        assert sup_norm(lhs - rhs, P) < 1e-12

    def test_lie_formula(self, rng, twisted):
        fx, lc, _, _ = twisted
        X, Y = sections(rng)
        lhs = H.pq_apply(fx.alg, C.sym_product(lc), fx.ac, X, Y)
        assert sup_norm(lhs - H.pq_lie_formula(fx.metric, fx.ac, X, Y), P) < 1e-12

    def test_bracket_requires_matching_algebroid(self, twisted):
        fx, lc, _, _ = twisted
        tmj = H.tmj_algebroid(fx.ac)
        with pytest.raises(DimensionError):
            H.pq_bracket(tmj, C.sym_product(lc), fx.ac)
