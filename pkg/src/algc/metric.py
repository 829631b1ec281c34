"""Pseudo-Riemannian metrics on an algebroid and their connections.

Covariant 3-tensors built from torsion use ``Tg[i, j, l] = g(T(e_i, e_j), e_l)``.
Residual helpers return absolute sup-norms at a single point.
"""

import numpy as np

from . import jets
from .calculus import (
    Connection,
    SymBracket,
    _alt_jets,
    apply_vec,
    conn_apply,
    conn_on_tensor,
    contract,
    d_a,
    d_s,
    frame_coefficients,
    from_decomposition,
    is_alternating,
    lie_a,
    lie_s,
    nabla_big,
    sym_apply,
    sym_product,
    torsion,
)
from .errors import DimensionError, StructureError
from .fields import Lazy, cached, fein, sup_norm

SYM_TOL = 1e-12
ALT_TOL = 1e-9


class Metric:
    """A nondegenerate symmetric bilinear form ``g[i, j]`` on the algebroid.

    Nondegeneracy is checked at the probe points and again, through the
    inverse, at every point where the inverse is evaluated.
    """

    def __init__(self, alg, g):
        if g.shape != (alg.r, alg.r) or g.n != alg.n:
            raise DimensionError(f"metric must have shape {(alg.r, alg.r)}")
        for p in alg.probe_points():
            v = g(p)
            defect = np.max(np.abs(v - v.T), initial=0.0)
            if defect > SYM_TOL * max(1.0, np.max(np.abs(v), initial=0.0)):
                raise StructureError(f"metric is not symmetric (defect {defect:.3g})")
            jets.inv(g.jet(p, 0), point=p)
        self.alg = alg
        self.g = cached((g + g.transpose((1, 0))) * 0.5)
        self.inverse = cached(
            Lazy(alg.n, g.shape, lambda p, k: jets.inv(self.g.jet(p, k), point=p))
        )

    def __call__(self, X, Y):
        """The function g(X, Y)."""
        return contract(self.g, X, Y)


def flat(m, X):
    m.alg.check_section(X)
    return fein("i,ij->j", X, m.g)


def sharp(m, omega):
    if omega.shape != (m.alg.r,):
        raise DimensionError(f"covector of shape {omega.shape} on a rank-{m.alg.r} algebroid")
    return fein("ij,j->i", m.inverse, omega)


def lower(m, T):
    """Lower the vector index of a VecTensor(2): ``Tg[i, j, l] = g(T(e_i, e_j), e_l)``."""
    return fein("kij,kl->ijl", T, m.g)


def raise_last(m, H):
    """The VecTensor(2) T with g(T(X, Y), Z) = H(X, Y, Z)."""
    return fein("kl,ijl->kij", m.inverse, H)


def torsion_3form(m, c):
    return lower(m, torsion(c))


def totally_skew_residual(m, c, points):
    """Largest deviation of T^g from its alternation over ``points``."""
    Tg = torsion_3form(m, c)
    worst = 0.0
    for p in points:
        t = Tg.jet(p, 0)
        worst = max(worst, float(np.max(np.abs((t - _alt_jets(t)).value), initial=0.0)))
    return worst


def bracket_s(m, X, Y):
    """sharp(L^a_X Y_flat + L^a_Y X_flat - d^a(g(X, Y))) for arbitrary sections."""
    alg = m.alg
    w = lie_a(alg, X, flat(m, Y)) + lie_a(alg, Y, flat(m, X)) - d_a(alg, m(X, Y))
    return sharp(m, w)


def curly_s(m, sb, X, Y):
    """sharp(L^s_X Y_flat + L^s_Y X_flat + d^s(g(X, Y))) for arbitrary sections."""
    w = lie_s(sb, X, flat(m, Y)) + lie_s(sb, Y, flat(m, X)) + d_s(sb, m(X, Y))
    return sharp(m, w)


def sym_bracket_s(m):
    """The metric symmetric bracket, coefficients from frame sections."""
    return SymBracket(m.alg, frame_coefficients(m.alg, lambda X, Y: bracket_s(m, X, Y)))


def curly_bracket_s(m, sb):
    if sb.alg is not m.alg:
        raise DimensionError("bracket and metric live on different algebroids")
    return SymBracket(m.alg, frame_coefficients(m.alg, lambda X, Y: curly_s(m, sb, X, Y)))


def levi_civita(m):
    """nabla_X Y = 1/2([X, Y] + <X:Y>^s)."""
    return from_decomposition(sym_bracket_s(m))


def koszul_oracle(m):
    """Levi-Civita coefficients straight from the Koszul formula in the frame."""
    alg = m.alg

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        c = alg.structure.jet(p, K)
        high = m.g.jet(p, K + 1)
        g, dg = high.truncate(K), high.grad()
        D = jets.einsum("xi,jlx->ijl", rho, dg)
        A = (D + D.transpose((1, 0, 2)) - D.transpose((1, 2, 0))
             + jets.einsum("qij,ql->ijl", c, g)
             - jets.einsum("qil,qj->ijl", c, g)
             - jets.einsum("qjl,qi->ijl", c, g))
        return jets.einsum("kl,ijl->kij", m.inverse.jet(p, K), A) * 0.5

    return Connection(alg, Lazy(alg.n, (alg.r,) * 3, fn))


def skew_torsion_connection(m, H, sb=None):
    """The metric connection with torsion 3-form ``H``.

    Built as 1/2([X, Y] + <X:Y>) + 1/2 T(X, Y) with g(T(X, Y), Z) = H(X, Y, Z)
    and ``sb`` defaulting to the metric symmetric bracket.
    """
    alg = m.alg
    if H.shape != (alg.r,) * 3:
        raise DimensionError(f"3-form must have shape {(alg.r,) * 3}")
    if not is_alternating(H, alg.probe_points(), ALT_TOL):
        raise StructureError("torsion 3-form is not alternating")
    return from_decomposition(sym_bracket_s(m) if sb is None else sb, raise_last(m, H))


def metric_defect(m, c):
    """The covariant 3-tensor nabla g."""
    return nabla_big(c, m.g)


def metric_formula_residuals(m, c, X, Y, Z, p):
    """Residuals of the two unconditional formulas for g(nabla_X X, Z) and g(<X:Y>, Z).

    ``d^s`` and ``<:>`` are those induced by ``c``.
    """
    alg = m.alg
    alg.domain.require(p)
    sb = sym_product(c)
    T = torsion(c)
    Ng = nabla_big(c, m.g)
    Dg = d_s(sb, m.g)

    def along(w, V):
        return m(sharp(m, w), V)

    first = (m(conn_apply(c, X, X), Z)
             - along(lie_a(alg, X, flat(m, X)) - d_a(alg, m(X, X)) * 0.5, Z)
             + m(apply_vec(T, X, Z), X)
             - contract(Ng, Z, X, X)
             + contract(Dg, X, X, Z) * 0.5)
    second = (m(sym_apply(sb, X, Y), Z)
              - along(lie_a(alg, X, flat(m, Y)) + lie_a(alg, Y, flat(m, X)) - d_a(alg, m(X, Y)), Z)
              + m(apply_vec(T, X, Z), Y)
              + m(apply_vec(T, Y, Z), X)
              - contract(Ng, Z, X, Y) * 2.0
              + contract(Dg, X, Y, Z))
    return sup_norm(first, p), sup_norm(second, p)


def corollary_residual(m, c, X, Y, p):
    """nabla_X Y + nabla_Y X against the metric bracket (metric skew-torsion case)."""
    m.alg.domain.require(p)
    return sup_norm(conn_apply(c, X, Y) + conn_apply(c, Y, X) - bracket_s(m, X, Y), p)


def compatibility_residual(m, c, sb, X, p):
    """(i_X o nabla) g - 1/2 (L^a_X + L^s_X) g."""
    alg = m.alg
    alg.domain.require(p)
    lhs = conn_on_tensor(c, X, m.g)
    rhs = (lie_a(alg, X, m.g) + lie_s(sb, X, m.g)) * 0.5
    return sup_norm(lhs - rhs, p)


def criterion_residual(m, sb, X, p):
    """L^a_X g + L^s_X g; vanishes for every X exactly when sb is metric-compatible."""
    m.alg.domain.require(p)
    return sup_norm(lie_a(m.alg, X, m.g) + lie_s(sb, X, m.g), p)


def curly_relation_residual(m, lc, X, Y, p):
    """{X, Y}^s - (2<X:Y> - <X:Y>^s), with <:> the symmetric product of ``lc``."""
    m.alg.domain.require(p)
    sb = sym_product(lc)
    lhs = curly_s(m, sb, X, Y)
    rhs = sym_apply(sb, X, Y) * 2.0 - bracket_s(m, X, Y)
    return sup_norm(lhs - rhs, p)


def torsion_free_residual(c, p):
    return sup_norm(torsion(c), p)


def metric_residual(m, c, p):
    return sup_norm(metric_defect(m, c), p)


__all__ = [
    "Metric",
    "bracket_s",
    "compatibility_residual",
    "corollary_residual",
    "criterion_residual",
    "curly_bracket_s",
    "curly_relation_residual",
    "curly_s",
    "flat",
    "koszul_oracle",
    "levi_civita",
    "lower",
    "metric_defect",
    "metric_residual",
    "raise_last",
    "sharp",
    "skew_torsion_connection",
    "sym_bracket_s",
    "metric_formula_residuals",
    "torsion_3form",
    "torsion_free_residual",
    "totally_skew_residual",
]
