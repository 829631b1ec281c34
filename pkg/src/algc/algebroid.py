"""Skew-symmetric algebroids in local structure data.

An algebroid of rank ``r`` over an ``n``-dimensional chart is given by

* ``anchor[a, i]``: the a-th tangent component of the anchor of ``e_i``;
* ``structure[k, i, j]``: the functions with ``[e_i, e_j] = c^k_ij e_k``.

Sections are fields of shape ``(r,)`` holding frame components.  The bracket
of arbitrary sections follows from the Leibniz rule::

    [X, Y]^k = rho(X)(Y^k) - rho(Y)(X^k) + c^k_ij X^i Y^j
"""

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import DimensionError, DomainError, StructureError
from .fields import Constant, Field, Lazy, cached, derivative, fein, sup_norm

SKEW_TOL = 1e-12


@dataclass(frozen=True)
class Box:
    """Rectangular sampling domain ``lower <= x <= upper``."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise StructureError(f"invalid domain box {lo} .. {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self):
        return len(self.lower)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def require(self, p):
        if not self.contains(p):
            raise DomainError(f"point {list(map(float, p))} lies outside the domain box")

    def sample(self, rng, count, margin=0.05):
        """Uniform samples, kept a relative ``margin`` away from the faces."""
        lo, hi = np.array(self.lower), np.array(self.upper)
        pad = margin * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.n))

    def probe_points(self):
        lo, hi = np.array(self.lower), np.array(self.upper)
        t = np.array([0.5, 0.31, 0.73])
        shifts = np.arange(self.n) * 0.17
        return [lo + ((ti + shifts) % 1.0 * 0.8 + 0.1) * (hi - lo) for ti in t]


class Algebroid:
    """Anchor and structure functions of a skew-symmetric algebroid.

    The structure array is antisymmetrised on construction after checking at
    probe points that the input was already skew to ``SKEW_TOL``.
    """

    def __init__(self, coords, anchor, structure, domain, name=""):
        self.coords = tuple(coords)
        self.n = len(self.coords)
        if anchor.ndim != 2 or anchor.shape[0] != self.n:
            raise DimensionError(f"anchor must have shape (n, r), got {anchor.shape}")
        self.r = anchor.shape[1]
        if structure.shape != (self.r,) * 3:
            raise DimensionError(f"structure must have shape (r, r, r), got {structure.shape}")
        if anchor.n != self.n or structure.n != self.n or domain.n != self.n:
            raise DimensionError("anchor, structure and domain disagree on the base dimension")
        self.domain = domain
        self.name = name
        for p in domain.probe_points():
            c = structure(p)
            defect = np.max(np.abs(c + c.transpose(0, 2, 1)), initial=0.0)
            if defect > SKEW_TOL * max(1.0, np.max(np.abs(c), initial=0.0)):
                raise StructureError(
                    f"structure functions are not skew-symmetric (defect {defect:.3g} at {p.tolist()})"
                )
        self.anchor = cached(anchor)
        self.structure = cached((structure - structure.transpose((0, 2, 1))) * 0.5)

    def probe_points(self):
        return self.domain.probe_points()

    def basis(self, i):
        return Constant(self.n, np.eye(self.r)[i])

    def check_section(self, *sections):
        for X in sections:
            if not isinstance(X, Field) or X.shape != (self.r,) or X.n != self.n:
                raise DimensionError(
                    f"expected a section of shape ({self.r},) on a {self.n}-chart, got {X!r}"
                )

    def __repr__(self):
        return f"Algebroid({self.name!r}, n={self.n}, r={self.r})"


def derive(alg, X, F):
    """Apply the vector field rho(X) to every component of ``F``."""
    alg.check_section(X)
    rho = alg.anchor
    return Lazy(
        alg.n,
        F.shape,
        lambda p, k: jets.einsum("ai,i,...a->...", rho.jet(p, k), X.jet(p, k),
                                 F.jet(p, k + 1).grad()),
    )


def anchor_apply(alg, X, f):
    """The function (rho o X)(f)."""
    if f.n != alg.n:
        raise DimensionError("function lives on a different chart")
    return derive(alg, X, f)


def bracket(alg, X, Y):
    alg.check_section(X, Y)
    return derive(alg, X, Y) - derive(alg, Y, X) + fein("kij,i,j->k", alg.structure, X, Y)


def jacobiator(alg, X, Y, Z):
    return (bracket(alg, bracket(alg, X, Y), Z)
            + bracket(alg, bracket(alg, Z, X), Y)
            + bracket(alg, bracket(alg, Y, Z), X))


def anchored(alg, X):
    """rho(X) as a coordinate vector field (shape ``(n,)``)."""
    alg.check_section(X)
    return fein("ai,i->a", alg.anchor, X)


def vector_field_bracket(V, W):
    """Coordinate Lie bracket of two vector fields on the chart."""
    return fein("b,ab->a", V, derivative(W)) - fein("b,ab->a", W, derivative(V))


def almost_lie_residual(alg, X, Y, p):
    """sup-norm at p of rho([X, Y]) - [rho X, rho Y]."""
    alg.domain.require(p)
    lhs = anchored(alg, bracket(alg, X, Y))
    rhs = vector_field_bracket(anchored(alg, X), anchored(alg, Y))
    return sup_norm(lhs - rhs, p)
