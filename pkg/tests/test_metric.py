import numpy as np
import pytest

from algc import calculus as C
from algc import metric as M
from algc.errors import SingularMatrixError, StructureError
from algc.expr import ExprArray
from algc.fields import sup_norm

from conftest import random_field


def random_connection(rng, alg):
    return C.Connection(alg, random_field(rng, alg.n, (alg.r,) * 3))


class TestLeviCivita:
    def test_hyperbolic_christoffels(self, rng, hyperbolic):
        lc = M.levi_civita(hyperbolic.metric)
        for p in hyperbolic.alg.domain.sample(rng, 10):
            y = p[1]
            G = lc.coeffs(p)
            assert G[1, 0, 0] == pytest.approx(1 / y, abs=1e-8)
            assert G[0, 0, 1] == pytest.approx(-1 / y, abs=1e-8)
            assert G[1, 1, 1] == pytest.approx(-1 / y, abs=1e-8)
            assert G[0, 0, 0] == pytest.approx(0, abs=1e-12)

    def test_so3_coefficients(self, so3):
        G = M.levi_civita(so3.metric).coeffs(np.zeros(3))
        assert G[2, 0, 1] == pytest.approx(0.5)
        np.testing.assert_allclose(G, 0.5 * so3.alg.structure(np.zeros(3)), atol=1e-15)

    @pytest.mark.parametrize("name", ["euclid2", "hyperbolic", "so3", "twisted_j", "tmj_twisted_j"])
    def test_formula_matches_koszul_oracle(self, rng, registry, name):
        m = registry[name].metric
        lc, oracle = M.levi_civita(m), M.koszul_oracle(m)
        for p in m.alg.domain.sample(rng, 5):
            assert M.torsion_free_residual(lc, p) < 1e-10
            assert M.metric_residual(m, lc, p) < 1e-9
            assert sup_norm(lc.coeffs - oracle.coeffs, p) < 1e-9


class TestMetricValidation:
    def test_rejects_asymmetric(self, euclid2):
        g = ExprArray.parse([["1", "x"], ["0", "1"]], euclid2.alg.coords)
        with pytest.raises(StructureError):
            M.Metric(euclid2.alg, g)

    def test_rejects_singular(self, euclid2):
        g = ExprArray.parse([["1", "1"], ["1", "1"]], euclid2.alg.coords)
        with pytest.raises(SingularMatrixError):
            M.Metric(euclid2.alg, g)

    def test_musical_roundtrip(self, rng, hyperbolic):
        m = hyperbolic.metric
        X = random_field(rng, 2, (2,))
        p = np.array([0.2, 0.9])
        assert sup_norm(M.sharp(m, M.flat(m, X)) - X, p) < 1e-13


class TestCompatibility:
    def test_metric_bracket_satisfies_criterion(self, rng, hyperbolic):
        m = hyperbolic.metric
        sb = M.sym_bracket_s(m)
        X = random_field(rng, 2, (2,))
        for p in hyperbolic.alg.domain.sample(rng, 5):
            assert M.criterion_residual(m, sb, X, p) < 1e-8

    def test_perturbed_bracket_fails_criterion(self, rng, hyperbolic):
        m = hyperbolic.metric
        bump = np.zeros((2, 2, 2, 1))
        bump[0, 0, 0, 0] = 1e-2
        from algc.fields import Polynomial
        sb = M.sym_bracket_s(m) + C.SymBracket(hyperbolic.alg, Polynomial(2, bump, 0))
        X = hyperbolic.alg.basis(0)
        assert M.criterion_residual(m, sb, X, np.array([0.0, 1.0])) > 1e-3

    def test_compatibility_identity_for_any_bracket(self, rng, so3):
        m = so3.metric
        sb = C.SymBracket(so3.alg, random_field(rng, 3, (3, 3, 3)), check=False)
        c = C.from_decomposition(sb, M.raise_last(m, so3.H))
        X = random_field(rng, 3, (3,))
        assert M.compatibility_residual(m, c, sb, X, np.array([0.1, 0.2, 0.3])) < 1e-12


class TestSkewTorsion:
    @pytest.mark.parametrize("name", ["so3", "kahler_flat", "twisted_j"])
    def test_bundled_three_forms(self, rng, registry, name):
        fx = registry[name]
        c = M.skew_torsion_connection(fx.metric, fx.H)
        for p in fx.alg.domain.sample(rng, 5):
            assert sup_norm(M.torsion_3form(fx.metric, c) - fx.H, p) < 1e-9
            assert M.metric_residual(fx.metric, c, p) < 1e-9
        assert M.totally_skew_residual(fx.metric, c, fx.alg.probe_points()) < 1e-12

    def test_rejects_non_alternating(self, rng, so3):
        with pytest.raises(StructureError):
            M.skew_torsion_connection(so3.metric, random_field(rng, 3, (3, 3, 3)))

    def test_corollary(self, rng, twisted_j):
        c = M.skew_torsion_connection(twisted_j.metric, twisted_j.H)
        X, Y = (random_field(rng, 4, (4,)) for _ in range(2))
        assert M.corollary_residual(twisted_j.metric, c, X, Y, np.array([0.1, -0.2, 0.3, 0.0])) < 1e-12


class TestUnconditionalFormulas:
    @pytest.mark.parametrize("name", ["hyperbolic", "so3", "twisted_j"])
    def test_random_connections(self, rng, registry, name):
        fx = registry[name]
        a = fx.alg
        for p in a.domain.sample(rng, 3):
            c = random_connection(rng, a)
            X, Y, Z = (random_field(rng, a.n, (a.r,)) for _ in range(3))
            first, second = M.metric_formula_residuals(fx.metric, c, X, Y, Z, p)
            assert first < 1e-7 and second < 1e-7


class TestCurlyBracket:
    def test_relation(self, rng, hyperbolic):
        m = hyperbolic.metric
        lc = M.levi_civita(m)
        X, Y = (random_field(rng, 2, (2,)) for _ in range(2))
        for p in hyperbolic.alg.domain.sample(rng, 5):
            assert M.curly_relation_residual(m, lc, X, Y, p) < 1e-8

    def test_is_symmetric_bracket(self, rng, so3):
        sb = C.SymBracket(so3.alg, random_field(rng, 3, (3, 3, 3)), check=False)
        curly = M.curly_bracket_s(so3.metric, sb)
        X, Y = (random_field(rng, 3, (3,)) for _ in range(2))
        p = np.array([0.3, -0.1, 0.2])
        assert sup_norm(C.sym_apply(curly, X, Y) - M.curly_s(so3.metric, sb, X, Y), p) < 1e-12
