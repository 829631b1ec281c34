"""Identity suites: every identity as a named residual check.

A check maps a fixture context and one sample (a point plus a tuple of
random polynomial sections, functions and tensors) to an absolute
sup-norm residual.  :func:`run_suite` evaluates the registry over seeded
samples and assembles a :class:`Report`.
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

import numpy as np

from . import calculus as C
from . import hermitian as H
from . import metric as M
from .algebroid import almost_lie_residual, anchor_apply, bracket, jacobiator
from .errors import AlgcError
from .expr import fd_check
from .fields import Polynomial, monomials, sup_norm
from .specfile import Fixture, load_fixture

SUITES = ("core", "metric", "hermitian")
TUPLES_PER_POINT = 3
MAX_DEGREE = 3
FD_STEP = 1e-4


def random_polynomial(rng, n, shape, degree=2):
    """Polynomial components with coefficients uniform in [-1, 1]."""
    return Polynomial(n, rng.uniform(-1.0, 1.0, tuple(shape) + (len(monomials(n, degree)),)), degree)


@dataclass
class Sample:
    point: np.ndarray
    X: object
    Y: object
    Z: object
    f: object
    tensors: list
    forms: list
    symmetric: list


def make_samples(alg, rng, count):
    points = alg.domain.sample(rng, count)
    n, r = alg.n, alg.r
    out = []
    for p in points:
        tuples = []
        for _ in range(TUPLES_PER_POINT):
            X, Y, Z = (random_polynomial(rng, n, (r,)) for _ in range(3))
            f = random_polynomial(rng, n, ())
            tensors = [random_polynomial(rng, n, (r,) * k) for k in range(MAX_DEGREE + 1)]
            forms = [tensors[0]] + [C.alternate(t) for t in tensors[1:]]
            symmetric = [tensors[0]] + [C.symmetrize(t) for t in tensors[1:]]
            tuples.append(Sample(p, X, Y, Z, f, tensors, forms, symmetric))
        out.append(tuples)
    return out


class Context:
    """Fixture data plus the derived and random objects the checks share."""

    def __init__(self, fixture, seed):
        self.fx = fixture
        self.alg = fixture.alg
        self.m = fixture.metric
        self.ac = fixture.ac
        alg = self.alg
        n, r = alg.n, alg.r
        rng = np.random.default_rng([seed, 7919])
        self.rand_conn = C.Connection(alg, random_polynomial(rng, n, (r, r, r)))
        S = random_polynomial(rng, n, (r, r, r))
        S = (S + S.transpose((0, 2, 1))) * 0.5
        self.tf_conn = C.Connection(alg, alg.structure * 0.5 + S)
        self.rand_sb = C.SymBracket(alg, random_polynomial(rng, n, (r, r, r)), check=False)
        self.rand_H = C.alternate(random_polynomial(rng, n, (r, r, r)))

    def has(self, need):
        if need == "metric":
            return self.m is not None
        if need == "J":
            return self.m is not None and self.ac is not None
        return True

    @cached_property
    def lc(self):
        return M.levi_civita(self.m)

    @cached_property
    def candidate(self):
        """The connection under test as Levi-Civita: the fixture's, if it ships one."""
        return self.fx.connection if self.fx.connection is not None else self.lc

    @cached_property
    def oracle(self):
        return M.koszul_oracle(self.m)

    @cached_property
    def sbs(self):
        return M.sym_bracket_s(self.m)

    @cached_property
    def H(self):
        return self.fx.H if self.fx.H is not None else self.rand_H

    @cached_property
    def skew(self):
        return M.skew_torsion_connection(self.m, self.H, sb=self.sbs)

    @cached_property
    def nj(self):
        return H.nabla_j(self.lc, self.ac)

    @cached_property
    def nb(self):
        return H.first_canonical(self.lc, self.nj)

    @cached_property
    def tmj(self):
        return H.tmj_algebroid(self.ac)

    @cached_property
    def mj(self):
        return M.Metric(self.tmj, self.m.g)

    @cached_property
    def sbJ(self):
        return M.sym_bracket_s(self.mj)

    @cached_property
    def N(self):
        return H.nijenhuis(self.ac)

    @cached_property
    def dsJ(self):
        return H.ds_J(self.lc, self.ac)

    @cached_property
    def daJ(self):
        return H.da_J(self.lc, self.ac)


@dataclass(frozen=True)
class IdentityCheck:
    id: str
    anchor: str
    suite: str
    residual: object
    needs: str = "none"
    hypothesis: str = None
    tol: float = None
    per_point: bool = False


REGISTRY = {}


def check(id, anchor, suite, needs="none", hypothesis=None, tol=None, per_point=False):
    def register(fn):
        if id in REGISTRY:
            raise ValueError(f"duplicate check id {id!r}")
        REGISTRY[id] = IdentityCheck(id, anchor, suite, fn, needs, hypothesis, tol, per_point)
        return fn

    return register


def _v(F, p):
    return sup_norm(F, p)


def _tangent_structures(ctx):
    """(algebroid, symmetric bracket) pairs on TM used for the P/Q checks."""
    return [(ctx.alg, C.sym_product(ctx.lc)), (ctx.tmj, ctx.sbJ)]


# -- core -------------------------------------------------------------------


def _primitive_fields(ctx):
    fx = ctx.fx
    out = [fx.alg.anchor, fx.alg.structure]
    if fx.metric is not None:
        out.append(fx.metric.g)
    if fx.ac is not None:
        out.append(fx.ac.J)
    if fx.H is not None:
        out.append(fx.H)
    return out


def _fd(ctx, s):
    box = ctx.alg.domain
    res = [fd_check(F, s.point, h=FD_STEP, domain=(box.lower, box.upper)) for F in _primitive_fields(ctx)]
    return res


@check("jets.fd.grad", "jet gradient = central difference", "core", tol=1e-5, per_point=True)
def _(ctx, s):
    return max(r.grad for r in _fd(ctx, s))


@check("jets.fd.hess", "jet Hessian = central difference", "core", tol=1e-3, per_point=True)
def _(ctx, s):
    return max(r.hess for r in _fd(ctx, s))


@check("algebroid.skew", "[X,Y] = -[Y,X]", "core")
def _(ctx, s):
    a = ctx.alg
    return _v(bracket(a, s.X, s.Y) + bracket(a, s.Y, s.X), s.point)


@check("algebroid.leibniz", "[X,fY] = f[X,Y] + rho(X)(f) Y", "core")
def _(ctx, s):
    a = ctx.alg
    lhs = bracket(a, s.X, s.Y * s.f)
    rhs = bracket(a, s.X, s.Y) * s.f + s.Y * anchor_apply(a, s.X, s.f)
    return _v(lhs - rhs, s.point)


@check("connection.leibniz", "nabla_{fX}Y = f nabla_X Y; nabla_X(fY) = f nabla_X Y + rho(X)(f) Y", "core")
def _(ctx, s):
    c, a, p = ctx.rand_conn, ctx.alg, s.point
    r1 = C.conn_apply(c, s.X * s.f, s.Y) - C.conn_apply(c, s.X, s.Y) * s.f
    r2 = (C.conn_apply(c, s.X, s.Y * s.f) - C.conn_apply(c, s.X, s.Y) * s.f
          - s.Y * anchor_apply(a, s.X, s.f))
    return max(_v(r1, p), _v(r2, p))


@check("connection.torsion", "T(X,Y) = nabla_X Y - nabla_Y X - [X,Y]", "core")
def _(ctx, s):
    c, a = ctx.rand_conn, ctx.alg
    lhs = C.apply_vec(C.torsion(c), s.X, s.Y)
    rhs = C.conn_apply(c, s.X, s.Y) - C.conn_apply(c, s.Y, s.X) - bracket(a, s.X, s.Y)
    return _v(lhs - rhs, s.point)


@check("connection.symmetric_product", "<X:Y> = nabla_X Y + nabla_Y X", "core")
def _(ctx, s):
    c = ctx.rand_conn
    lhs = C.sym_apply(C.sym_product(c), s.X, s.Y)
    return _v(lhs - C.conn_apply(c, s.X, s.Y) - C.conn_apply(c, s.Y, s.X), s.point)


@check("connection.decomposition", "nabla_X Y = 1/2([X,Y] + <X:Y>) + 1/2 T(X,Y)", "core")
def _(ctx, s):
    c, a = ctx.rand_conn, ctx.alg
    rhs = ((bracket(a, s.X, s.Y) + C.sym_apply(C.sym_product(c), s.X, s.Y))
           + C.apply_vec(C.torsion(c), s.X, s.Y)) * 0.5
    return _v(C.conn_apply(c, s.X, s.Y) - rhs, s.point)


@check("symbracket.leibniz", "<X:fY> = f<X:Y> + rho(X)(f) Y", "core")
def _(ctx, s):
    sb, a = ctx.rand_sb, ctx.alg
    lhs = C.sym_apply(sb, s.X, s.Y * s.f)
    rhs = C.sym_apply(sb, s.X, s.Y) * s.f + s.Y * anchor_apply(a, s.X, s.f)
    return _v(lhs - rhs, s.point)


@check("cartan.alt.a", "L^a_X = i_X d^a + d^a i_X", "core")
def _(ctx, s):
    a, X, p = ctx.alg, s.X, s.point
    worst = 0.0
    for k, w in enumerate(s.forms):
        rhs = C.interior(X, C.d_a(a, w, check=False))
        if k:
            rhs = rhs + C.d_a(a, C.interior(X, w), check=False)
        worst = max(worst, _v(C.lie_a(a, X, w) - rhs, p))
    return worst


@check("cartan.alt.b", "L^a_X i_Y - i_Y L^a_X = i_[X,Y]", "core")
def _(ctx, s):
    a, X, Y, p = ctx.alg, s.X, s.Y, s.point
    worst = 0.0
    for w in s.forms[1:]:
        res = (C.lie_a(a, X, C.interior(Y, w)) - C.interior(Y, C.lie_a(a, X, w))
               - C.interior(bracket(a, X, Y), w))
        worst = max(worst, _v(res, p))
    return worst


@check("cartan.sym.a", "L^s_X = i_X d^s - d^s i_X", "core")
def _(ctx, s):
    sb, X, p = ctx.rand_sb, s.X, s.point
    others = [s.Y, s.Z, s.X * s.f]
    worst = 0.0
    for k, w in enumerate(s.tensors):
        args = others[:k]
        lhs = C.contract(C.lie_s(sb, X, w), *args)
        rhs = C.d_s_on_sections(sb, w, X, *args)
        if k:
            rhs = rhs - C.d_s_on_sections(sb, C.interior(X, w), *args)
        worst = max(worst, _v(lhs - rhs, p))
    return worst


@check("cartan.sym.b", "L^s_X i_Y - i_Y L^s_X = i_<X:Y>", "core")
def _(ctx, s):
    sb, X, Y, p = ctx.rand_sb, s.X, s.Y, s.point
    worst = 0.0
    for w in s.tensors[1:]:
        res = (C.lie_s(sb, X, C.interior(Y, w)) - C.interior(Y, C.lie_s(sb, X, w))
               - C.interior(C.sym_apply(sb, X, Y), w))
        worst = max(worst, _v(res, p))
    return worst


@check("lie_a.leibniz.a", "L^a_{fX} w = f L^a_X w + (i_X w) d^a f", "core")
def _(ctx, s):
    a, w = ctx.alg, s.forms[1]
    res = (C.lie_a(a, s.X * s.f, w) - C.lie_a(a, s.X, w) * s.f
           - C.d_a(a, s.f) * C.interior(s.X, w))
    return _v(res, s.point)


@check("lie_a.leibniz.b", "L^a_X(f w) = f L^a_X w + rho(X)(f) w", "core")
def _(ctx, s):
    a, w = ctx.alg, s.forms[1]
    res = C.lie_a(a, s.X, w * s.f) - C.lie_a(a, s.X, w) * s.f - w * anchor_apply(a, s.X, s.f)
    return _v(res, s.point)


@check("lie_s.leibniz.a", "L^s_{fX} w = f L^s_X w - (i_X w) d^s f", "core")
def _(ctx, s):
    sb, w = ctx.rand_sb, s.tensors[1]
    res = (C.lie_s(sb, s.X * s.f, w) - C.lie_s(sb, s.X, w) * s.f
           + C.d_s(sb, s.f) * C.interior(s.X, w))
    return _v(res, s.point)


@check("lie_s.leibniz.b", "L^s_X(f w) = f L^s_X w + rho(X)(f) w", "core")
def _(ctx, s):
    a, sb, w = ctx.alg, ctx.rand_sb, s.tensors[1]
    res = C.lie_s(sb, s.X, w * s.f) - C.lie_s(sb, s.X, w) * s.f - w * anchor_apply(a, s.X, s.f)
    return _v(res, s.point)


@check("lie.preserves_type", "L^a keeps forms alternating; L^s keeps symmetric tensors symmetric", "core")
def _(ctx, s):
    a, sb, p = ctx.alg, ctx.rand_sb, s.point
    worst = 0.0
    for k in range(2, MAX_DEGREE + 1):
        la = C.lie_a(a, s.X, s.forms[k])
        ls = C.lie_s(sb, s.X, s.symmetric[k])
        worst = max(worst, _v(la - C.alternate(la), p), _v(ls - C.symmetrize(ls), p))
    return worst


@check("calculus.da_alt_nabla", "d^a = (k+1) Alt o nabla for torsion-free nabla", "core")
def _(ctx, s):
    a, c, p = ctx.alg, ctx.tf_conn, s.point
    worst = 0.0
    for k, w in enumerate(s.forms):
        rhs = C.alternate(C.nabla_big(c, w)) * float(k + 1)
        worst = max(worst, _v(C.d_a(a, w, check=False) - rhs, p))
    return worst


@check("calculus.ds_sym_nabla", "d^s = (k+1) Sym o nabla on symmetric tensors, <:> from nabla", "core")
def _(ctx, s):
    c, p = ctx.rand_conn, s.point
    sb = C.sym_product(c)
    worst = 0.0
    for k, w in enumerate(s.symmetric):
        rhs = C.symmetrize(C.nabla_big(c, w)) * float(k + 1)
        worst = max(worst, _v(C.d_s(sb, w) - rhs, p))
    return worst


@check("calculus.ds_koszul", "d^s in frame components = Koszul-type form on sections (symmetric input)", "core")
def _(ctx, s):
    sb, p = ctx.rand_sb, s.point
    args = [s.X, s.Y, s.Z, s.X * s.f]
    worst = 0.0
    for k, w in enumerate(s.symmetric):
        lhs = C.contract(C.d_s(sb, w), *args[: k + 1])
        worst = max(worst, _v(lhs - C.d_s_on_sections(sb, w, *args[: k + 1]), p))
    return worst


@check("calculus.dd", "Jac = 0 implies d^a o d^a = 0", "core", hypothesis="lie")
def _(ctx, s):
    a, p = ctx.alg, s.point
    worst = 0.0
    for w in s.forms[:2]:
        worst = max(worst, _v(C.d_a(a, C.d_a(a, w, check=False), check=False), p))
    return worst


# -- metric -----------------------------------------------------------------


@check("metric.musical", "sharp(flat(X)) = X; g(sharp w, X) = w(X)", "metric", needs="metric")
def _(ctx, s):
    m, p = ctx.m, s.point
    w = s.forms[1]
    return max(_v(M.sharp(m, M.flat(m, s.X)) - s.X, p),
               _v(m(M.sharp(m, w), s.Y) - C.contract(w, s.Y), p))


@check("lc.koszul", "1/2([.,.] + <.:.>^s) = Koszul-formula connection", "metric", needs="metric",
       per_point=True)
def _(ctx, s):
    return _v(ctx.candidate.coeffs - ctx.oracle.coeffs, s.point)


@check("lc.torsion_free", "T^nabla = 0 for the Levi-Civita connection", "metric", needs="metric",
       per_point=True)
def _(ctx, s):
    return _v(C.torsion(ctx.candidate), s.point)


@check("lc.metric", "nabla g = 0 for the Levi-Civita connection", "metric", needs="metric",
       per_point=True)
def _(ctx, s):
    return _v(M.metric_defect(ctx.m, ctx.candidate), s.point)


@check("lc.ds_g", "d^s g = 0 for the Levi-Civita symmetric product", "metric", needs="metric",
       per_point=True)
def _(ctx, s):
    return _v(C.d_s(C.sym_product(ctx.candidate), ctx.m.g), s.point)


@check("lc.formula", "nabla_X Y = 1/2([X,Y] + <X:Y>^s) on sections", "metric", needs="metric")
def _(ctx, s):
    a, m = ctx.alg, ctx.m
    rhs = (bracket(a, s.X, s.Y) + M.bracket_s(m, s.X, s.Y)) * 0.5
    return _v(C.conn_apply(ctx.candidate, s.X, s.Y) - rhs, s.point)


@check("sbs.leibniz", "<X:fY>^s = f<X:Y>^s + rho(X)(f) Y", "metric", needs="metric")
def _(ctx, s):
    a, m = ctx.alg, ctx.m
    lhs = M.bracket_s(m, s.X, s.Y * s.f)
    rhs = M.bracket_s(m, s.X, s.Y) * s.f + s.Y * anchor_apply(a, s.X, s.f)
    return _v(lhs - rhs, s.point)


@check("sbs.criterion", "L^s_X g = -L^a_X g for <.:.>^s", "metric", needs="metric")
def _(ctx, s):
    return M.criterion_residual(ctx.m, ctx.sbs, s.X, s.point)


@check("metric.nabla_xx", "g(nabla_X X, Z) formula with torsion, nabla g and d^s g terms", "metric",
       needs="metric")
def _(ctx, s):
    return max(M.metric_formula_residuals(ctx.m, c, s.X, s.Y, s.Z, s.point)[0]
               for c in (ctx.rand_conn, ctx.candidate))


@check("metric.sym_product", "g(<X:Y>, Z) formula with torsion, nabla g and d^s g terms", "metric",
       needs="metric")
def _(ctx, s):
    return max(M.metric_formula_residuals(ctx.m, c, s.X, s.Y, s.Z, s.point)[1]
               for c in (ctx.rand_conn, ctx.candidate))


@check("skew.sym_product", "nabla_X Y + nabla_Y X = sharp(L^a_X Y' + L^a_Y X' - d^a g(X,Y)), metric skew torsion",
       "metric", needs="metric")
def _(ctx, s):
    return M.corollary_residual(ctx.m, ctx.skew, s.X, s.Y, s.point)


@check("skew.torsion_form", "T^g = H for the connection built from H", "metric", needs="metric",
       per_point=True)
def _(ctx, s):
    return _v(M.torsion_3form(ctx.m, ctx.skew) - ctx.H, s.point)


@check("skew.metric", "nabla g = 0 for 1/2([.,.] + <.:.>^s) + 1/2 T", "metric", needs="metric",
       per_point=True)
def _(ctx, s):
    return _v(M.metric_defect(ctx.m, ctx.skew), s.point)


@check("skew.totally_skew", "T^g is a 3-form", "metric", needs="metric", per_point=True)
def _(ctx, s):
    return M.totally_skew_residual(ctx.m, ctx.skew, [s.point])


@check("metric.compatibility", "(i_X o nabla) g = 1/2 (L^a_X + L^s_X) g", "metric", needs="metric")
def _(ctx, s):
    sb = ctx.rand_sb
    c = C.from_decomposition(sb, M.raise_last(ctx.m, ctx.H))
    return M.compatibility_residual(ctx.m, c, sb, s.X, s.point)


@check("curly.leibniz", "{X,fY}^s = f{X,Y}^s + rho(X)(f) Y", "metric", needs="metric")
def _(ctx, s):
    a, m, sb = ctx.alg, ctx.m, ctx.rand_sb
    lhs = M.curly_s(m, sb, s.X, s.Y * s.f)
    rhs = M.curly_s(m, sb, s.X, s.Y) * s.f + s.Y * anchor_apply(a, s.X, s.f)
    return _v(lhs - rhs, s.point)


@check("curly.relation", "{X,Y}^s = 2<X:Y> - <X:Y>^s, <:> the Levi-Civita symmetric product", "metric",
       needs="metric")
def _(ctx, s):
    return M.curly_relation_residual(ctx.m, ctx.lc, s.X, s.Y, s.point)


# -- hermitian --------------------------------------------------------------


@check("hermitian.j_squared", "J o J = -id", "hermitian", needs="J", tol=1e-10, per_point=True)
def _(ctx, s):
    return H.square_residual(ctx.ac, s.point)


@check("hermitian.orthogonal", "g(J., J.) = g", "hermitian", needs="J", tol=1e-10, per_point=True)
def _(ctx, s):
    return H.orthogonality_residual(ctx.m, ctx.ac, s.point)


@check("hermitian.kahler_form", "Omega(X,Y) = g(JX,Y) is alternating", "hermitian", needs="J")
def _(ctx, s):
    W = H.kahler_form(ctx.m, ctx.ac)
    return _v(C.contract(W, s.X, s.Y) + C.contract(W, s.Y, s.X), s.point)


@check("nijenhuis.skew", "N_J(X,Y) = -N_J(Y,X)", "hermitian", needs="J")
def _(ctx, s):
    return _v(H.nijenhuis_apply(ctx.ac, s.X, s.Y) + H.nijenhuis_apply(ctx.ac, s.Y, s.X), s.point)


@check("nijenhuis.tmj", "N_J(X,Y) = J[[X,Y]]^J - [JX,JY]", "hermitian", needs="J")
def _(ctx, s):
    ac = ctx.ac
    rhs = ac.apply(H.tmj_bracket(ac, s.X, s.Y)) - bracket(ctx.alg, ac.apply(s.X), ac.apply(s.Y))
    return _v(H.nijenhuis_apply(ac, s.X, s.Y) - rhs, s.point)


@check("tmj.leibniz", "[[X,fY]]^J = f[[X,Y]]^J + (JX)(f) Y", "hermitian", needs="J")
def _(ctx, s):
    ac = ctx.ac
    lhs = H.tmj_bracket(ac, s.X, s.Y * s.f)
    rhs = H.tmj_bracket(ac, s.X, s.Y) * s.f + s.Y * anchor_apply(ctx.alg, ac.apply(s.X), s.f)
    return _v(lhs - rhs, s.point)


@check("tmj.frame", "TM^J bracket from its structure functions = [[.,.]]^J", "hermitian", needs="J")
def _(ctx, s):
    return _v(bracket(ctx.tmj, s.X, s.Y) - H.tmj_bracket(ctx.ac, s.X, s.Y), s.point)


@check("tmj.dj", "d^J f = d^a f o J", "hermitian", needs="J")
def _(ctx, s):
    return _v(C.d_a(ctx.tmj, s.f) - ctx.ac.pullback(C.d_a(ctx.alg, s.f)), s.point)


@check("tmj.lie_j", "L^J_X Y' = L^a_{JX} Y' + L^a_X (JY)' + (L^a_X Y') o J", "hermitian", needs="J")
def _(ctx, s):
    a, m, ac = ctx.alg, ctx.m, ctx.ac
    Yf = M.flat(m, s.Y)
    rhs = (C.lie_a(a, ac.apply(s.X), Yf) + C.lie_a(a, s.X, M.flat(m, ac.apply(s.Y)))
           + ac.pullback(C.lie_a(a, s.X, Yf)))
    return _v(C.lie_a(ctx.tmj, s.X, Yf) - rhs, s.point)


@check("tmj.dg_skew", "d^a(g(JX,Y)) + d^a(g(X,JY)) = 0", "hermitian", needs="J")
def _(ctx, s):
    a, m, ac = ctx.alg, ctx.m, ctx.ac
    return _v(C.d_a(a, m(ac.apply(s.X), s.Y)) + C.d_a(a, m(s.X, ac.apply(s.Y))), s.point)


@check("tmj.jacobiator", "N_J = 0 implies Jac of [[.,.]]^J = 0", "hermitian", needs="J",
       hypothesis="integrable")
def _(ctx, s):
    return _v(jacobiator(ctx.tmj, s.X, s.Y, s.Z), s.point)


@check("tmj.almost_lie", "N_J = 0 implies J[[X,Y]]^J = [JX,JY]", "hermitian", needs="J",
       hypothesis="integrable")
def _(ctx, s):
    return almost_lie_residual(ctx.tmj, s.X, s.Y, s.point)


@check("hermitian.symJ_relation", "<X:Y>^J = <JX:Y> + <X:JY> + sharp(<X:Y>' o J)", "hermitian",
       needs="J")
def _(ctx, s):
    return H.sym_bracket_J_relation(ctx.m, ctx.ac, s.X, s.Y, s.point, tmj=ctx.tmj)


@check("pq.leibniz_p", "P(X,fY) = fP(X,Y) + rho(X)(f) Y + rho(JX)(f) JY", "hermitian", needs="J")
def _(ctx, s):
    ac, X, Y, f = ctx.ac, s.X, s.Y, s.f
    worst = 0.0
    for a, _ in _tangent_structures(ctx):
        rhs = (H.p_operator(a, ac, X, Y) * f + Y * anchor_apply(a, X, f)
               + ac.apply(Y) * anchor_apply(a, ac.apply(X), f))
        worst = max(worst, _v(H.p_operator(a, ac, X, Y * f) - rhs, s.point))
    return worst


@check("pq.leibniz_q", "Q(X,fY) = fQ(X,Y) + rho(X)(f) Y - rho(JX)(f) JY", "hermitian", needs="J")
def _(ctx, s):
    ac, X, Y, f = ctx.ac, s.X, s.Y, s.f
    worst = 0.0
    for a, sb in _tangent_structures(ctx):
        rhs = (H.q_operator(sb, ac, X, Y) * f + Y * anchor_apply(a, X, f)
               - ac.apply(Y) * anchor_apply(a, ac.apply(X), f))
        worst = max(worst, _v(H.q_operator(sb, ac, X, Y * f) - rhs, s.point))
    return worst


@check("pq.bracket", "1/2(P+Q) is a symmetric bracket", "hermitian", needs="J")
def _(ctx, s):
    ac, X, Y, f = ctx.ac, s.X, s.Y, s.f
    worst = 0.0
    for a, sb in _tangent_structures(ctx):
        res = (H.pq_apply(a, sb, ac, X, Y * f) - H.pq_apply(a, sb, ac, X, Y) * f
               - Y * anchor_apply(a, X, f))
        sym = H.pq_apply(a, sb, ac, X, Y) - H.pq_apply(a, sb, ac, Y, X)
        worst = max(worst, _v(res, s.point), _v(sym, s.point))
    return worst


@check("pq.corollary", "1/2(P+Q) = -1/2 J([X,JY] + [Y,JX] + sharp(four Lie-derivative terms))",
       "hermitian", needs="J")
def _(ctx, s):
    sb = C.sym_product(ctx.lc)
    lhs = H.pq_apply(ctx.alg, sb, ctx.ac, s.X, s.Y)
    return _v(lhs - H.pq_lie_formula(ctx.m, ctx.ac, s.X, s.Y), s.point)


@check("nablaJ.formula", "-1/2 J([X,JY] + <X:JY>) = -J nabla_X(JY)", "hermitian", needs="J")
def _(ctx, s):
    lhs = H.nabla_j_from_brackets(ctx.lc, ctx.ac, s.X, s.Y)
    return _v(lhs - C.conn_apply(ctx.nj, s.X, s.Y), s.point)


@check("nablaJ.symmetric_part", "<X:Y>^{nabla^J} = 1/2(P+Q)(X,Y)", "hermitian", needs="J")
def _(ctx, s):
    lhs = C.sym_apply(C.sym_product(ctx.nj), s.X, s.Y)
    rhs = H.pq_apply(ctx.alg, C.sym_product(ctx.lc), ctx.ac, s.X, s.Y)
    return _v(lhs - rhs, s.point)


@check("nablaJ.lemma_a", "(nabla^J g)(X,Y,Z) = (nabla g)(X,JY,JZ)", "hermitian", needs="J")
def _(ctx, s):
    return max(H.j_lemma_residuals(c, ctx.m, ctx.ac, s.X, s.Y, s.Z, s.point)[0]
               for c in (ctx.lc, ctx.rand_conn))


@check("nablaJ.lemma_b", "nabla^J J = -nabla J", "hermitian", needs="J")
def _(ctx, s):
    return max(H.j_lemma_residuals(c, ctx.m, ctx.ac, s.X, s.Y, s.Z, s.point)[1]
               for c in (ctx.lc, ctx.rand_conn))


@check("nablaJ.metric", "nabla^J g = 0", "hermitian", needs="J", per_point=True)
def _(ctx, s):
    return _v(M.metric_defect(ctx.m, ctx.nj), s.point)


@check("nablabar.metric", "nabla-bar g = 0", "hermitian", needs="J", per_point=True)
def _(ctx, s):
    return _v(M.metric_defect(ctx.m, ctx.nb), s.point)


@check("nablabar.J", "nabla-bar J = 0", "hermitian", needs="J", per_point=True)
def _(ctx, s):
    return _v(C.nabla_endo(ctx.nb, ctx.ac.J), s.point)


@check("nablabar.torsion", "T^{nabla-bar} = 1/2 T^{nabla^J}", "hermitian", needs="J", per_point=True)
def _(ctx, s):
    return _v(C.torsion(ctx.nb) - C.torsion(ctx.nj) * 0.5, s.point)


@check("nablaJ.torsion", "T^{nabla^J} = -J o d^a_nabla J", "hermitian", needs="J", per_point=True)
def _(ctx, s):
    return _v(C.torsion(ctx.nj) + ctx.ac.after(ctx.daJ), s.point)


@check("nablaJ.symbracket", "J((d^s_nabla J)(X,Y)) = <X:Y>^nabla - <X:Y>^{nabla^J}", "hermitian",
       needs="J")
def _(ctx, s):
    lhs = ctx.ac.apply(C.apply_vec(ctx.dsJ, s.X, s.Y))
    rhs = (C.sym_apply(C.sym_product(ctx.lc), s.X, s.Y)
           - C.sym_apply(C.sym_product(ctx.nj), s.X, s.Y))
    return _v(lhs - rhs, s.point)


@check("nablabar.symbracket", "<X:Y>^{nabla-bar} = <X:Y>^nabla - 1/2 J((d^s_nabla J)(X,Y))",
       "hermitian", needs="J")
def _(ctx, s):
    lhs = C.sym_apply(C.sym_product(ctx.nb), s.X, s.Y)
    rhs = (C.sym_apply(C.sym_product(ctx.lc), s.X, s.Y)
           - ctx.ac.apply(C.apply_vec(ctx.dsJ, s.X, s.Y)) * 0.5)
    return _v(lhs - rhs, s.point)


@check("nablabar.decomposition", "nabla-bar = nabla - 1/4 J(d^s_nabla J) + 1/4 T^{nabla^J}",
       "hermitian", needs="J", per_point=True)
def _(ctx, s):
    return H.conn_difference(ctx.nb, H.nabla_bar_decomposition(ctx.lc, ctx.ac, ctx.nj), s.point)


@check("hermitian.torsion2", "2T^{nabla^J}(X,Y) = -N_J(X,Y) + (d^s_nabla J)(X,JY) - (d^s_nabla J)(JX,Y)",
       "hermitian", needs="J")
def _(ctx, s):
    return H.torsion_identity_residual(ctx.lc, ctx.ac, s.X, s.Y, s.point, nj=ctx.nj)


@check("nk.torsion", "nearly Kahler implies T^{nabla^J} = -1/2 N_J", "hermitian", needs="J",
       hypothesis="nearly_kahler", per_point=True)
def _(ctx, s):
    return _v(C.torsion(ctx.nj) + ctx.N * 0.5, s.point)


@check("nk.totally_skew", "nearly Kahler implies nabla-bar has totally skew torsion", "hermitian",
       needs="J", hypothesis="nearly_kahler", per_point=True)
def _(ctx, s):
    return M.totally_skew_residual(ctx.m, ctx.nb, [s.point])


@check("nk.nabla_bar", "nearly Kahler implies nabla-bar = nabla - 1/4 J o d^a_nabla J = nabla - 1/8 N_J",
       "hermitian", needs="J", hypothesis="nearly_kahler", per_point=True)
def _(ctx, s):
    a = H.conn_difference(ctx.nb, H.nearly_kahler_form(ctx.lc, ctx.ac), s.point)
    b = _v(ctx.nb.coeffs - ctx.lc.coeffs + ctx.ac.after(ctx.daJ) * 0.25, s.point)
    return max(a, b)


# -- flags ------------------------------------------------------------------


def _flag_lie(ctx, s):
    return _v(jacobiator(ctx.alg, s.X, s.Y, s.Z), s.point)


def _flag_almost_lie(ctx, s):
    return almost_lie_residual(ctx.alg, s.X, s.Y, s.point)


def _flag_integrable(ctx, s):
    return _v(ctx.N, s.point)


def _flag_nearly_kahler(ctx, s):
    return _v(ctx.dsJ, s.point)


FLAGS = {
    "lie": ("none", _flag_lie),
    "almost_lie": ("none", _flag_almost_lie),
    "integrable": ("J", _flag_integrable),
    "nearly_kahler": ("J", _flag_nearly_kahler),
}


# -- harness ----------------------------------------------------------------


@dataclass
class CheckResult:
    id: str
    anchor: str
    max_residual: float
    at_point: list
    status: str
    tol: float
    error: str = None

    def to_dict(self):
        out = {
            "id": self.id,
            "anchor": self.anchor,
            "max_residual": self.max_residual,
            "at_point": self.at_point,
            "status": self.status,
            "tol": self.tol,
        }
        if self.error:
            out["error"] = self.error
        return out


@dataclass
class Report:
    fixture: str
    suite: str
    seed: int
    points: int
    tol: float
    checks: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.status != "fail" for c in self.checks)

    def by_id(self, id):
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def to_dict(self):
        return {
            "fixture": self.fixture,
            "suite": self.suite,
            "seed": self.seed,
            "points": self.points,
            "tol": self.tol,
            "flags": dict(sorted(self.flags.items())),
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.id)],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _evaluate(ctx, fn, samples, per_point):
    """Max residual over samples and the point where it occurs."""
    worst, where = -1.0, None
    for tuples in samples:
        for s in tuples[:1] if per_point else tuples:
            value = float(fn(ctx, s))
            if not math.isfinite(value):
                return math.inf, s.point
            if value > worst:
                worst, where = value, s.point
    return worst, where


def _point_list(p):
    return None if p is None else [float(v) for v in p]


def selected_checks(suite):
    if suite == "all":
        wanted = set(SUITES)
    elif suite in SUITES:
        wanted = {suite}
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    return [c for c in sorted(REGISTRY.values(), key=lambda c: c.id) if c.suite in wanted]


def run_suite(fixture, suite="all", points=20, seed=42, tol=1e-7, only=None):
    """Evaluate every check of ``suite`` on ``fixture`` at seeded samples.

    ``only`` restricts the run to the given check ids.
    """
    checks = selected_checks(suite)
    if only is not None:
        unknown = set(only) - set(REGISTRY)
        if unknown:
            raise KeyError(f"unknown check ids {sorted(unknown)}")
        checks = [c for c in checks if c.id in set(only)]
    ctx = Context(fixture, seed)
    rng = np.random.default_rng(seed)
    samples = make_samples(fixture.alg, rng, points)
    report = Report(fixture.name, suite, int(seed), int(points), float(tol))

    needed_flags = {c.hypothesis for c in checks if c.hypothesis}
    flag_residual = {}
    for name, (needs, fn) in sorted(FLAGS.items()):
        if not ctx.has(needs):
            continue
        if name not in needed_flags and needs == "J" and suite not in ("hermitian", "all"):
            continue
        value, _ = _evaluate(ctx, fn, samples, per_point=(name in ("integrable", "nearly_kahler")))
        flag_residual[name] = value
        report.flags[name] = bool(value < tol)

    for chk in checks:
        limit = chk.tol if chk.tol is not None else tol
        if not ctx.has(chk.needs):
            report.checks.append(CheckResult(chk.id, chk.anchor, None, None, "skipped", limit))
            continue
        if chk.hypothesis and not report.flags.get(chk.hypothesis, False):
            report.checks.append(CheckResult(chk.id, chk.anchor, None, None, "hypothesis not met", limit))
            continue
        try:
            value, where = _evaluate(ctx, chk.residual, samples, chk.per_point)
        except AlgcError as exc:
            report.checks.append(CheckResult(chk.id, chk.anchor, None, None, "fail", limit,
                                             error=f"{type(exc).__name__}: {exc}"))
            continue
        status = "pass" if value < limit else "fail"
        report.checks.append(CheckResult(chk.id, chk.anchor, value, _point_list(where), status, limit))
    report.checks.sort(key=lambda c: c.id)
    return report


FIXTURE_FILES = ("euclid2", "hyperbolic", "so3", "kahler_flat", "twisted_j")


def fixture_path(name):
    return resources.files("algc") / "fixtures" / f"{name}.json"


def fixture_registry():
    """The bundled fixtures F1 to F5 plus F6 = TM^J of the twisted-J fixture."""
    out = [load_fixture(fixture_path(name)) for name in FIXTURE_FILES]
    twisted = out[-1]
    tmj = H.tmj_algebroid(twisted.ac, name="tmj_twisted_j")
    out.append(Fixture("tmj_twisted_j", tmj, M.Metric(tmj, twisted.metric.g), None, None, {},
                       None, None))
    return out


def get_fixture(name):
    for fx in fixture_registry():
        if fx.name == name:
            return fx
    raise KeyError(name)
