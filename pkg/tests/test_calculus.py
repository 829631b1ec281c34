import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algc import calculus as C
from algc.algebroid import anchor_apply, bracket
from algc.errors import DimensionError, StructureError
from algc.fields import Constant, sup_norm

from conftest import random_field

H = 1e-5


def fd_partial(field, p, a):
    e = np.zeros_like(p)
    e[a] = H
    return (field(p + e) - field(p - e)) / (2 * H)


def random_sb(rng, alg):
    return C.SymBracket(alg, random_field(rng, alg.n, (alg.r,) * 3), check=False)


class TestExteriorDerivative:
    def test_one_form_on_tangent_bundle(self, rng, euclid2):
        w = random_field(rng, 2, (2,))
        p = np.array([0.1, 0.4])
        dw = C.d_a(euclid2.alg, w)(p)
        grads = np.stack([fd_partial(w, p, a) for a in range(2)])  # grads[i, j] = d_i w_j
        np.testing.assert_allclose(dw, grads - grads.T, atol=1e-8)

    def test_function(self, rng, twisted_j):
        f = random_field(rng, 4, ())
        p = np.array([0.1, 0.2, 0.3, 0.4])
        ref = [fd_partial(f, p, a) for a in range(4)]
        np.testing.assert_allclose(C.d_a(twisted_j.alg, f)(p), ref, atol=1e-8)

    def test_so3_dual_frame(self, so3):
        w = Constant(3, [0.0, 0.0, 1.0])
        dw = C.d_a(so3.alg, w)(np.zeros(3))
        assert dw[0, 1] == pytest.approx(-1.0)
        assert dw[1, 0] == pytest.approx(1.0)

    def test_rejects_non_alternating(self, rng, euclid2):
        with pytest.raises(StructureError):
            C.d_a(euclid2.alg, random_field(rng, 2, (2, 2)))

    def test_rejects_wrong_rank(self, rng, euclid2):
        with pytest.raises(DimensionError):
            C.d_a(euclid2.alg, random_field(rng, 2, (3,)))

    @pytest.mark.parametrize("name", ["euclid2", "hyperbolic", "so3", "kahler_flat"])
    def test_square_vanishes_on_lie_algebroids(self, rng, registry, name):
        a = registry[name].alg
        p = a.domain.sample(rng, 1)[0]
        for k in range(3):
            w = random_field(rng, a.n, (a.r,) * k)
            if k > 1:
                w = C.alternate(w)
            assert sup_norm(C.d_a(a, C.d_a(a, w)), p) < 1e-10

    def test_square_does_not_vanish_without_jacobi(self, rng, registry):
        a = registry["tmj_twisted_j"].alg
        p = np.array([0.2, 0.1, -0.3, 0.5])
        w = random_field(rng, 4, (4,))
        assert sup_norm(C.d_a(a, C.d_a(a, w)), p) > 1e-3


class TestLieDerivative:
    def test_classical_formula_on_one_forms(self, rng, euclid2):
        X, w = random_field(rng, 2, (2,)), random_field(rng, 2, (2,))
        p = np.array([-0.3, 0.25])
        dw = np.stack([fd_partial(w, p, a) for a in range(2)])
        dX = np.stack([fd_partial(X, p, a) for a in range(2)])
        ref = X(p) @ dw + dX @ w(p)
        np.testing.assert_allclose(C.lie_a(euclid2.alg, X, w)(p), ref, atol=1e-8)

    def test_symmetric_lie_on_functions(self, rng, so3):
        sb = random_sb(rng, so3.alg)
        X, f = random_field(rng, 3, (3,)), random_field(rng, 3, ())
        p = np.zeros(3) + 0.1
        assert sup_norm(C.lie_s(sb, X, f) - anchor_apply(so3.alg, X, f), p) < 1e-14


FIXTURES = ["euclid2", "hyperbolic", "so3", "twisted_j"]


class TestCartanIdentities:
    @settings(max_examples=8, deadline=None)
    @given(st.sampled_from(FIXTURES), st.integers(0, 2**32 - 1))
    def test_alternating(self, registry, name, seed):
        rng = np.random.default_rng(seed)
        a = registry[name].alg
        p = a.domain.sample(rng, 1)[0]
        X, Y = (random_field(rng, a.n, (a.r,)) for _ in range(2))
        for k in range(1, 4):
            w = C.alternate(random_field(rng, a.n, (a.r,) * k))
            res_a = C.lie_a(a, X, w) - C.interior(X, C.d_a(a, w)) - C.d_a(a, C.interior(X, w), check=False)
            res_b = (C.lie_a(a, X, C.interior(Y, w)) - C.interior(Y, C.lie_a(a, X, w))
                     - C.interior(bracket(a, X, Y), w))
            assert sup_norm(res_a, p) < 1e-8
            assert sup_norm(res_b, p) < 1e-8

    @settings(max_examples=8, deadline=None)
    @given(st.sampled_from(FIXTURES), st.integers(0, 2**32 - 1))
    def test_symmetric(self, registry, name, seed):
        rng = np.random.default_rng(seed)
        a = registry[name].alg
        sb = random_sb(rng, a)
        p = a.domain.sample(rng, 1)[0]
        X, Y, Z, W = (random_field(rng, a.n, (a.r,)) for _ in range(4))
        args = [Y, Z, W]
        for k in range(1, 4):
            w = random_field(rng, a.n, (a.r,) * k)
            lhs = C.contract(C.lie_s(sb, X, w), *args[:k])
            rhs = (C.d_s_on_sections(sb, w, X, *args[:k])
                   - C.d_s_on_sections(sb, C.interior(X, w), *args[:k]))
            assert sup_norm(lhs - rhs, p) < 1e-8
            res_b = (C.lie_s(sb, X, C.interior(Y, w)) - C.interior(Y, C.lie_s(sb, X, w))
                     - C.interior(C.sym_apply(sb, X, Y), w))
            assert sup_norm(res_b, p) < 1e-8


class TestSymmetricDerivative:
    def test_frame_components_agree_on_symmetric_tensors(self, rng, twisted_j):
        a = twisted_j.alg
        sb = random_sb(rng, a)
        X, Y, Z = (random_field(rng, 4, (4,)) for _ in range(3))
        T = C.symmetrize(random_field(rng, 4, (4, 4)))
        p = np.array([0.1, 0.2, -0.3, 0.4])
        assert sup_norm(C.contract(C.d_s(sb, T), X, Y, Z) - C.d_s_on_sections(sb, T, X, Y, Z), p) < 1e-12

    def test_not_tensorial_on_general_tensors(self, rng, twisted_j):
        a = twisted_j.alg
        sb = random_sb(rng, a)
        X, Y, Z = (random_field(rng, 4, (4,)) for _ in range(3))
        T = random_field(rng, 4, (4, 4))
        p = np.array([0.1, 0.2, -0.3, 0.4])
        assert sup_norm(C.contract(C.d_s(sb, T), X, Y, Z) - C.d_s_on_sections(sb, T, X, Y, Z), p) > 1e-3

    def test_function_case_is_anchor_differential(self, rng, hyperbolic):
        a = hyperbolic.alg
        sb = random_sb(rng, a)
        f, X = random_field(rng, 2, ()), random_field(rng, 2, (2,))
        p = np.array([0.1, 1.2])
        assert sup_norm(C.contract(C.d_s(sb, f), X) - anchor_apply(a, X, f), p) < 1e-14

    def test_symmetric_bracket_validation(self, rng, euclid2):
        with pytest.raises(StructureError):
            C.SymBracket(euclid2.alg, random_field(rng, 2, (2, 2, 2)))


class TestConnections:
    def test_torsion_of_decomposition(self, rng, so3):
        a = so3.alg
        sb = random_sb(rng, a)
        T = random_field(rng, 3, (3, 3, 3))
        T = T - T.transpose((0, 2, 1))
        c = C.from_decomposition(sb, T * 0.5)
        p = np.array([0.3, 0.1, 0.2])
        assert sup_norm(C.torsion(c) - T * 0.5, p) < 1e-13
        assert sup_norm(C.sym_product(c).coeffs - sb.coeffs, p) < 1e-13

    def test_da_is_alternation_of_torsion_free_nabla(self, rng, hyperbolic):
        from algc.metric import levi_civita
        lc = levi_civita(hyperbolic.metric)
        w = C.alternate(random_field(rng, 2, (2, 2)))
        p = np.array([0.5, 1.5])
        rhs = C.alternate(C.nabla_big(lc, w)) * 3.0
        assert sup_norm(C.d_a(hyperbolic.alg, w) - rhs, p) < 1e-12

    def test_arithmetic(self, rng, euclid2):
        a = euclid2.alg
        c1 = C.Connection(a, random_field(rng, 2, (2, 2, 2)))
        c2 = C.Connection(a, random_field(rng, 2, (2, 2, 2)))
        p = np.array([0.1, 0.2])
        mix = c1 * 0.25 + (c2 - c1) * 0.5
        np.testing.assert_allclose(mix.coeffs(p), 0.5 * c2.coeffs(p) - 0.25 * c1.coeffs(p))
