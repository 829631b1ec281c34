"""Almost Hermitian structures on tangent-bundle algebroids.

``J[k, i]`` holds the endomorphism components, ``J e_i = J[k, i] e_k``.
Vector-valued 2-tensors (the Nijenhuis tensor, torsions, ``d^s_nabla J``)
carry the vector index first, as everywhere else in the package.
"""

import numpy as np

from . import jets
from .algebroid import Algebroid, bracket
from .calculus import (
    Connection,
    _frame_derivative,
    _split,
    SymBracket,
    apply_vec,
    contract,
    d_nabla_a,
    d_nabla_s,
    frame_coefficients,
    lie_a,
    nabla_endo,
    sym_apply,
    sym_product,
    torsion,
)
from .errors import DimensionError, StructureError
from .fields import Lazy, cached, fein, sup_norm
from .metric import Metric, bracket_s, flat, metric_defect, sharp

J_TOL = 1e-10
ANCHOR_TOL = 1e-12


class AlmostComplex:
    """An endomorphism field with J o J = -id on a tangent-bundle algebroid."""

    def __init__(self, alg, J):
        if alg.n != alg.r:
            raise DimensionError("an almost complex structure needs a tangent-bundle algebroid")
        if J.shape != (alg.r, alg.r) or J.n != alg.n:
            raise DimensionError(f"J must have shape {(alg.r, alg.r)}")
        eye = np.eye(alg.r)
        for p in alg.probe_points():
            if np.max(np.abs(alg.anchor(p) - eye)) > ANCHOR_TOL:
                raise StructureError("almost complex structures need the identity anchor")
            j = J(p)
            if np.max(np.abs(j @ j + eye)) > J_TOL:
                raise StructureError(f"J o J != -id at {p.tolist()}")
        self.alg = alg
        self.J = cached(J)

    def apply(self, X):
        """The section J X."""
        return fein("ki,i->k", self.J, X)

    def after(self, T):
        """J o T for a vector-valued tensor (vector index first)."""
        rest = "abcdefgh"[: T.ndim - 1]
        return fein(f"kq,q{rest}->k{rest}", self.J, T)

    def pullback(self, omega):
        """The covector omega o J."""
        return fein("k,ki->i", omega, self.J)


def square_residual(ac, p):
    """sup |J o J + id| at ``p``."""
    j = ac.J(p)
    return float(np.max(np.abs(j @ j + np.eye(j.shape[0]))))


def orthogonality_residual(m, ac, p):
    """sup |g(J., J.) - g| at ``p``."""
    j, g = ac.J(p), m.g(p)
    return float(np.max(np.abs(j.T @ g @ j - g)))


def kahler_form(m, ac):
    """Omega(X, Y) = g(JX, Y)."""
    for p in m.alg.probe_points():
        if orthogonality_residual(m, ac, p) > J_TOL:
            raise StructureError(f"J is not orthogonal for the metric at {p.tolist()}")
    return fein("ki,kj->ij", ac.J, m.g)


def nijenhuis_apply(ac, X, Y):
    """N_J(X, Y) = J[JX, Y] + J[X, JY] + [X, Y] - [JX, JY]."""
    alg = ac.alg
    JX, JY = ac.apply(X), ac.apply(Y)
    return (ac.apply(bracket(alg, JX, Y) + bracket(alg, X, JY))
            + bracket(alg, X, Y) - bracket(alg, JX, JY))


def nijenhuis(ac):
    """The Nijenhuis tensor as a field ``N[k, i, j]``."""
    return cached(frame_coefficients(ac.alg, lambda X, Y: nijenhuis_apply(ac, X, Y)))


def tmj_bracket(ac, X, Y):
    """[[X, Y]]^J = [JX, Y] + [X, JY] - J[X, Y] on the base algebroid."""
    alg = ac.alg
    return (bracket(alg, ac.apply(X), Y) + bracket(alg, X, ac.apply(Y))
            - ac.apply(bracket(alg, X, Y)))


def tmj_algebroid(ac, name=None):
    """The tangent bundle with anchor J and bracket [[., .]]^J."""
    alg = ac.alg

    def fn(p, K):
        # [[e_i, e_j]]^J = [Je_i, e_j] + [e_i, Je_j] - J[e_i, e_j] in frame components
        rho = alg.anchor.jet(p, K)
        c = alg.structure.jet(p, K)
        J, dJ = _split(ac.J, p, K)
        A = _frame_derivative(rho, dJ).transpose((1, 2, 0))
        return (A.transpose((0, 2, 1)) - A
                + jets.einsum("kaj,ai->kij", c, J) + jets.einsum("kib,bj->kij", c, J)
                - jets.einsum("kq,qij->kij", J, c))

    anchor = fein("ai,ik->ak", alg.anchor, ac.J)
    structure = Lazy(alg.n, (alg.r,) * 3, fn)
    return Algebroid(alg.coords, anchor, structure, alg.domain,
                     name=name or f"tmj({alg.name})")


def sym_bracket_J_relation(m, ac, X, Y, p, tmj=None):
    """<X:Y>^J - (<JX:Y> + <X:JY> + sharp(<X:Y>_flat o J)).

    Both brackets are symmetric products of Levi-Civita connections, on
    TM^J and on TM respectively.
    """
    m.alg.domain.require(p)
    mj = Metric(tmj or tmj_algebroid(ac), m.g)
    lhs = bracket_s(mj, X, Y)
    rhs = (bracket_s(m, ac.apply(X), Y) + bracket_s(m, X, ac.apply(Y))
           + sharp(m, ac.pullback(flat(m, bracket_s(m, X, Y)))))
    return sup_norm(lhs - rhs, p)


def _check_tangent(alg_rho, ac):
    if alg_rho.n != ac.alg.n or alg_rho.r != ac.alg.r:
        raise DimensionError("P and Q need an algebroid structure on the same tangent bundle")


def p_operator(alg_rho, ac, X, Y):
    """P(X, Y) = -J([X, JY] + [Y, JX]) for the bracket of ``alg_rho``."""
    _check_tangent(alg_rho, ac)
    return -ac.apply(bracket(alg_rho, X, ac.apply(Y)) + bracket(alg_rho, Y, ac.apply(X)))


def q_operator(sb, ac, X, Y):
    """Q(X, Y) = -J(<X:JY> + <Y:JX>) for the symmetric bracket ``sb``."""
    _check_tangent(sb.alg, ac)
    return -ac.apply(sym_apply(sb, X, ac.apply(Y)) + sym_apply(sb, Y, ac.apply(X)))


def pq_apply(alg_rho, sb, ac, X, Y):
    return (p_operator(alg_rho, ac, X, Y) + q_operator(sb, ac, X, Y)) * 0.5


def pq_bracket(alg_rho, sb, ac):
    """1/2 (P + Q) as a symmetric bracket on ``alg_rho``."""
    if sb.alg is not alg_rho:
        raise DimensionError("the symmetric bracket must live on alg_rho")
    return SymBracket(alg_rho, frame_coefficients(
        alg_rho, lambda X, Y: pq_apply(alg_rho, sb, ac, X, Y)))


def pq_lie_formula(m, ac, X, Y):
    """1/2 (P + Q)(X, Y) written through Lie derivatives (identity anchor, metric bracket)."""
    alg = m.alg
    JX, JY = ac.apply(X), ac.apply(Y)
    w = (lie_a(alg, X, flat(m, JY)) + lie_a(alg, Y, flat(m, JX))
         + lie_a(alg, JX, flat(m, Y)) + lie_a(alg, JY, flat(m, X)))
    return -ac.apply(bracket(alg, X, JY) + bracket(alg, Y, JX) + sharp(m, w)) * 0.5


def nabla_j(c, ac):
    """nabla^J_X Y = -J nabla_X (JY)."""
    alg = c.alg
    if alg is not ac.alg:
        raise DimensionError("connection and J live on different algebroids")

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        G = c.coeffs.jet(p, K)
        high = ac.J.jet(p, K + 1)
        J, dJ = high.truncate(K), high.grad()
        inner = jets.einsum("xi,qjx->qij", rho, dJ) + jets.einsum("qip,pj->qij", G, J)
        return -jets.einsum("kq,qij->kij", J, inner)

    return Connection(alg, Lazy(alg.n, (alg.r,) * 3, fn))


def nabla_j_from_brackets(lc, ac, X, Y):
    """-1/2 J([X, JY] + <X:JY>) with <:> the symmetric product of ``lc``."""
    JY = ac.apply(Y)
    return -ac.apply(bracket(lc.alg, X, JY) + sym_apply(sym_product(lc), X, JY)) * 0.5


def first_canonical(lc, nj):
    """The mean 1/2 (nabla + nabla^J)."""
    return Connection(lc.alg, (lc.coeffs + nj.coeffs) * 0.5)


def ds_J(c, ac):
    return d_nabla_s(c, ac.J)


def da_J(c, ac):
    return d_nabla_a(c, ac.J)


def nearly_kahler_residual(c, ac, points):
    """Largest component of d^s_nabla J over ``points``; zero iff nearly Kahler."""
    D = ds_J(c, ac)
    return max(sup_norm(D, p) for p in points)


def torsion_identity_residual(lc, ac, X, Y, p, nj=None):
    """2 T^{nabla^J}(X, Y) + N_J(X, Y) - D(X, JY) + D(JX, Y), D = d^s_nabla J."""
    ac.alg.domain.require(p)
    nj = nj or nabla_j(lc, ac)
    D = ds_J(lc, ac)
    JX, JY = ac.apply(X), ac.apply(Y)
    res = (apply_vec(torsion(nj), X, Y) * 2.0 + nijenhuis_apply(ac, X, Y)
           - apply_vec(D, X, JY) + apply_vec(D, JX, Y))
    return sup_norm(res, p)


def nabla_bar_decomposition(lc, ac, nj=None):
    """Coefficients of nabla - 1/4 J(d^s_nabla J) + 1/4 T^{nabla^J}."""
    nj = nj or nabla_j(lc, ac)
    return Connection(lc.alg, lc.coeffs - ac.after(ds_J(lc, ac)) * 0.25 + torsion(nj) * 0.25)


def nearly_kahler_form(lc, ac):
    """Coefficients of nabla - 1/8 N_J."""
    return Connection(lc.alg, lc.coeffs - nijenhuis(ac) * 0.125)


def j_lemma_residuals(c, m, ac, X, Y, Z, p):
    """The pair ((nabla^J g)(X,Y,Z) - (nabla g)(X,JY,JZ), nabla^J J + nabla J)."""
    m.alg.domain.require(p)
    nj = nabla_j(c, ac)
    a = (contract(metric_defect(m, nj), X, Y, Z)
         - contract(metric_defect(m, c), X, ac.apply(Y), ac.apply(Z)))
    b = nabla_endo(nj, ac.J) + nabla_endo(c, ac.J)
    return sup_norm(a, p), sup_norm(b, p)


def conn_difference(a, b, p):
    return sup_norm(a.coeffs - b.coeffs, p)


__all__ = [
    "AlmostComplex",
    "conn_difference",
    "da_J",
    "ds_J",
    "first_canonical",
    "j_lemma_residuals",
    "kahler_form",
    "nabla_bar_decomposition",
    "nabla_j",
    "nabla_j_from_brackets",
    "nearly_kahler_form",
    "nearly_kahler_residual",
    "nijenhuis",
    "nijenhuis_apply",
    "orthogonality_residual",
    "p_operator",
    "pq_apply",
    "pq_bracket",
    "pq_lie_formula",
    "q_operator",
    "square_residual",
    "sym_bracket_J_relation",
    "tmj_algebroid",
    "tmj_bracket",
    "torsion_identity_residual",
]
