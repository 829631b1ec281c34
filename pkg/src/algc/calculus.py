"""Tensor calculus on a skew-symmetric algebroid.

Covariant tensors of degree k are fields of shape ``(r,)*k``; vector-valued
ones carry the vector index first, so a ``VecTensor(k)`` has shape
``(r,)*(k+1)`` with ``T[m, i1, ..., ik] = T^m_{i1..ik}``.  Connection and
symmetric-bracket coefficients follow the same convention::

    nabla_{e_i} e_j = Gamma[k, i, j] e_k        <e_i : e_j> = s[k, i, j] e_k

Every operator is computed in components by feeding constant frame sections
into its invariant formula.  This is legitimate because each result is
C-infinity multilinear in its slots.
"""

from itertools import permutations
from math import factorial

import numpy as np

from . import jets
from .algebroid import Algebroid, derive
from .errors import DimensionError, StructureError
from .fields import Field, Lazy, cached, fein, stack

SLOTS = "abcdefgh"
ALT_TOL = 1e-9
SYM_TOL = 1e-12


def _letters(k):
    if k > len(SLOTS):
        raise DimensionError(f"tensor degree {k} exceeds supported maximum {len(SLOTS)}")
    return SLOTS[:k]


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _alt_jets(t):
    k = t.ndim
    if k < 2:
        return t
    total = None
    for perm in permutations(range(k)):
        term = t.transpose(perm) * float(_perm_sign(perm))
        total = term if total is None else total + term
    return total * (1.0 / factorial(k))


def _sym_jets(t):
    k = t.ndim
    if k < 2:
        return t
    total = None
    for perm in permutations(range(k)):
        term = t.transpose(perm)
        total = term if total is None else total + term
    return total * (1.0 / factorial(k))


def _frame_derivative(rho, dt):
    """E[i, ...] = rho(e_i)(T[...]) from the coordinate gradient of T."""
    return jets.einsum("xi,...x->i...", rho, dt)


def _along(rho, X, dt):
    """rho(X)(T[...]) componentwise."""
    return jets.einsum("xi,i,...x->...", rho, X, dt)


def _slot_sum(t, B):
    """Sum over slots m of T(.., B(e_{i_m}), ..), where ``B[q, i]`` is B(e_i)^q."""
    k = t.ndim
    L = _letters(k)
    total = jets.zeros(t.shape, t.space)
    for m in range(k):
        ts = L[:m] + "q" + L[m + 1:]
        total = total + jets.einsum(f"{ts},q{L[m]}->{L}", t, B)
    return total


def _split(field, p, order):
    """Jet of ``field`` at ``order`` and its gradient (from order + 1)."""
    high = field.jet(p, order + 1)
    return high.truncate(order), high.grad()


class Connection:
    """An A-connection in A, by its coefficients ``Gamma[k, i, j]``."""

    def __init__(self, alg, coeffs):
        if coeffs.shape != (alg.r,) * 3 or coeffs.n != alg.n:
            raise DimensionError(f"connection coefficients must have shape {(alg.r,) * 3}")
        self.alg = alg
        self.coeffs = cached(coeffs)

    def __add__(self, other):
        return Connection(self.alg, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return Connection(self.alg, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return Connection(self.alg, self.coeffs * float(scalar))

    __rmul__ = __mul__


class SymBracket:
    """A symmetric bracket by its coefficients ``s[k, i, j]`` (symmetric in i, j)."""

    def __init__(self, alg, coeffs, check=True):
        if coeffs.shape != (alg.r,) * 3 or coeffs.n != alg.n:
            raise DimensionError(f"bracket coefficients must have shape {(alg.r,) * 3}")
        if check:
            for p in alg.probe_points():
                s = coeffs(p)
                defect = np.max(np.abs(s - s.transpose(0, 2, 1)), initial=0.0)
                if defect > SYM_TOL * max(1.0, np.max(np.abs(s), initial=0.0)):
                    raise StructureError(
                        f"symmetric bracket coefficients are not symmetric (defect {defect:.3g})"
                    )
        self.alg = alg
        self.coeffs = cached((coeffs + coeffs.transpose((0, 2, 1))) * 0.5)

    def __add__(self, other):
        return SymBracket(self.alg, self.coeffs + other.coeffs, check=False)

    def __sub__(self, other):
        """Difference of brackets; a tensor, returned as a coefficient field."""
        return self.coeffs - other.coeffs

    def __mul__(self, scalar):
        return SymBracket(self.alg, self.coeffs * float(scalar), check=False)

    __rmul__ = __mul__


def interior(X, T):
    """Substitution: (i_X T)(X1..X_{k-1}) = T(X, X1..X_{k-1})."""
    k = T.ndim
    if k < 1:
        raise DimensionError("cannot substitute into a degree-0 tensor")
    if X.shape != T.shape[:1]:
        raise DimensionError(f"section {X.shape} does not match tensor {T.shape}")
    rest = _letters(k)[1:]
    return fein(f"i,i{rest}->{rest}", X, T)


def contract(T, *sections):
    """The function T(X1, ..., Xk)."""
    if len(sections) != T.ndim:
        raise DimensionError(f"degree-{T.ndim} tensor fed {len(sections)} sections")
    if not sections:
        return T
    L = _letters(T.ndim)
    return fein(f"{L}," + ",".join(L) + "->", T, *sections)


def apply_vec(T, *sections):
    """The section T(X1, ..., Xk) of a vector-valued tensor (vector index first)."""
    k = T.ndim - 1
    if len(sections) != k:
        raise DimensionError(f"degree-{k} vector-valued tensor fed {len(sections)} sections")
    L = _letters(k)
    return fein(f"q{L}," + ",".join(L) + "->q", T, *sections)


def frame_coefficients(alg, pair):
    """Stack the sections ``pair(e_i, e_j)`` into a field ``s[k, i, j]``."""
    E = [alg.basis(i) for i in range(alg.r)]
    rows = [stack([pair(E[i], E[j]) for j in range(alg.r)], axis=1) for i in range(alg.r)]
    return stack(rows, axis=1)


def alternate(T):
    """Alternator with the 1/k! normalisation."""
    return Lazy(T.n, T.shape, lambda p, k: _alt_jets(T.jet(p, k)))


def symmetrize(T):
    """Symmetriser with the 1/k! normalisation."""
    return Lazy(T.n, T.shape, lambda p, k: _sym_jets(T.jet(p, k)))


def is_alternating(T, points, tol=ALT_TOL):
    for p in points:
        v = T(p)
        if np.max(np.abs(v - _alt_jets(T.jet(p, 0)).value), initial=0.0) > tol * max(
            1.0, np.max(np.abs(v), initial=0.0)
        ):
            return False
    return True


def d_a(alg, eta, check=True):
    """Exterior derivative of an alternating covariant tensor."""
    k = eta.ndim
    if eta.shape != (alg.r,) * k:
        raise DimensionError(f"form of shape {eta.shape} on a rank-{alg.r} algebroid")
    if check and k >= 2 and not is_alternating(eta, alg.probe_points()):
        raise StructureError("d_a needs an alternating tensor")
    rest = _letters(k)[:-1] if k else ""

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        e, de = _split(eta, p, K)
        D = _frame_derivative(rho, de)
        out = jets.zeros((alg.r,) * (k + 1), rho.space)
        for m in range(k + 1):
            out = out + D.moveaxis(0, m) * float((-1) ** m)
        if k >= 1:
            F = jets.einsum(f"pij,p{rest}->ij{rest}", alg.structure.jet(p, K), e)
            for m in range(k + 1):
                for l in range(m + 1, k + 1):
                    out = out + F.moveaxis([0, 1], [m, l]) * float((-1) ** (m + l))
        return out

    return Lazy(alg.n, (alg.r,) * (k + 1), fn)


def lie_a(alg, X, T):
    """Alternating Lie derivative: rho(X)(T(..)) - sum_m T(.., [X, e_m], ..)."""
    alg.check_section(X)

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        x, dx = _split(X, p, K)
        t, dt = _split(T, p, K)
        B = jets.einsum("qpi,p->qi", alg.structure.jet(p, K), x) - jets.einsum("xi,qx->qi", rho, dx)
        return _along(rho, x, dt) - _slot_sum(t, B)

    return Lazy(alg.n, T.shape, fn)


def sym_apply(sb, X, Y):
    """<X : Y> for arbitrary sections, via the Leibniz rule."""
    alg = sb.alg
    alg.check_section(X, Y)
    return derive(alg, X, Y) + derive(alg, Y, X) + fein("kij,i,j->k", sb.coeffs, X, Y)


def d_s(sb, eta):
    """Symmetric derivative (Koszul-type form) evaluated on frame sections.

    The bracket <X_i : X_j> takes slot j, in place of X_j.  On symmetric
    tensors the result is a genuine symmetric tensor.  On other tensors the
    operator is not C-infinity multilinear in its arguments, so these
    components are only its values on the constant frame; use
    :func:`d_s_on_sections` to evaluate it on arbitrary sections.
    """
    alg = sb.alg
    k = eta.ndim
    if eta.shape != (alg.r,) * k:
        raise DimensionError(f"tensor of shape {eta.shape} on a rank-{alg.r} algebroid")
    L = _letters(k)

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        s = sb.coeffs.jet(p, K)
        e, de = _split(eta, p, K)
        D = _frame_derivative(rho, de)
        out = jets.zeros((alg.r,) * (k + 1), rho.space)
        for m in range(k + 1):
            out = out + D.moveaxis(0, m)
        for t in range(k):
            others = L[:t] + L[t + 1:]
            G = jets.einsum(f"{L[:t]}p{L[t + 1:]},pij->{others}ij", e, s)
            l = t + 1
            for m in range(l):
                out = out - G.moveaxis([-2, -1], [m, l])
        return out

    return Lazy(alg.n, (alg.r,) * (k + 1), fn)


def d_s_on_sections(sb, T, *sections):
    """The function (d^s T)(X_1, ..., X_{k+1}) for arbitrary sections."""
    alg = sb.alg
    k = T.ndim
    if len(sections) != k + 1:
        raise DimensionError(f"d_s of a degree-{k} tensor takes {k + 1} sections")
    alg.check_section(*sections)
    total = None
    for j, Xj in enumerate(sections):
        rest = sections[:j] + sections[j + 1:]
        term = derive(alg, Xj, contract(T, *rest))
        total = term if total is None else total + term
    for i in range(k + 1):
        for j in range(i + 1, k + 1):
            args = list(sections[:i] + sections[i + 1:])
            args[j - 1] = sym_apply(sb, sections[i], sections[j])
            total = total - contract(T, *args)
    return total


def lie_s(sb, X, T):
    """Symmetric Lie derivative: rho(X)(T(..)) - sum_m T(.., <X : e_m>, ..)."""
    alg = sb.alg
    alg.check_section(X)

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        x, dx = _split(X, p, K)
        t, dt = _split(T, p, K)
        B = jets.einsum("qip,p->qi", sb.coeffs.jet(p, K), x) + jets.einsum("xi,qx->qi", rho, dx)
        return _along(rho, x, dt) - _slot_sum(t, B)

    return Lazy(alg.n, T.shape, fn)


def conn_apply(c, X, Y):
    """nabla_X Y."""
    alg = c.alg
    alg.check_section(X, Y)
    return derive(alg, X, Y) + fein("kij,i,j->k", c.coeffs, X, Y)


def conn_on_tensor(c, X, T):
    """nabla_X T on a covariant tensor (dual connection extended by Leibniz)."""
    alg = c.alg
    alg.check_section(X)

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        x = X.jet(p, K)
        t, dt = _split(T, p, K)
        B = jets.einsum("qpi,p->qi", c.coeffs.jet(p, K), x)
        return _along(rho, x, dt) - _slot_sum(t, B)

    return Lazy(alg.n, T.shape, fn)


def nabla_big(c, T):
    """(nabla T)(X1, X2, ..) = (nabla_{X1} T)(X2, ..); degree goes up by one."""
    alg = c.alg
    k = T.ndim
    L = _letters(k)

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        G = c.coeffs.jet(p, K)
        t, dt = _split(T, p, K)
        out = _frame_derivative(rho, dt)
        for m in range(k):
            ts = L[:m] + "q" + L[m + 1:]
            out = out - jets.einsum(f"{ts},qi{L[m]}->i{L}", t, G)
        return out

    return Lazy(alg.n, (alg.r,) * (k + 1), fn)


def sym_product(c):
    """<X : Y> = nabla_X Y + nabla_Y X."""
    return SymBracket(c.alg, c.coeffs + c.coeffs.transpose((0, 2, 1)), check=False)


def from_decomposition(sb, T=None):
    """The connection 1/2([X,Y] + <X:Y>) + 1/2 T(X,Y) for a VecTensor(2) ``T``."""
    alg = sb.alg
    coeffs = (alg.structure + sb.coeffs) * 0.5
    if T is not None:
        coeffs = coeffs + T * 0.5
    return Connection(alg, coeffs)


def torsion(c):
    """T^k_ij = Gamma^k_ij - Gamma^k_ji - c^k_ij, as a VecTensor(2)."""
    return c.coeffs - c.coeffs.transpose((0, 2, 1)) - c.alg.structure


def nabla_endo(c, T):
    """D[k, i, j] = ((nabla_{e_i} T) e_j)^k for an endomorphism field ``T[k, j]``."""
    alg = c.alg
    if T.shape != (alg.r, alg.r):
        raise DimensionError(f"endomorphism must have shape {(alg.r, alg.r)}")

    def fn(p, K):
        rho = alg.anchor.jet(p, K)
        G = c.coeffs.jet(p, K)
        t, dt = _split(T, p, K)
        return (jets.einsum("xi,kjx->kij", rho, dt)
                + jets.einsum("kip,pj->kij", G, t)
                - jets.einsum("kp,pij->kij", t, G))

    return Lazy(alg.n, (alg.r,) * 3, fn)


def d_nabla_a(c, T):
    """(nabla_X T)Y - (nabla_Y T)X for an endomorphism field."""
    if T.ndim != 2:
        raise DimensionError("d_nabla_a supports vector-valued degree 1 only")
    D = nabla_endo(c, T)
    return D - D.transpose((0, 2, 1))


def d_nabla_s(c, T):
    """(nabla_X T)Y + (nabla_Y T)X for an endomorphism field."""
    if T.ndim != 2:
        raise DimensionError("d_nabla_s supports vector-valued degree 1 only")
    D = nabla_endo(c, T)
    return D + D.transpose((0, 2, 1))


__all__ = [
    "Algebroid",
    "Connection",
    "Field",
    "SymBracket",
    "alternate",
    "apply_vec",
    "conn_apply",
    "conn_on_tensor",
    "contract",
    "d_a",
    "d_nabla_a",
    "d_nabla_s",
    "d_s",
    "d_s_on_sections",
    "frame_coefficients",
    "from_decomposition",
    "interior",
    "is_alternating",
    "lie_a",
    "lie_s",
    "nabla_big",
    "nabla_endo",
    "sym_apply",
    "sym_product",
    "symmetrize",
    "torsion",
]
