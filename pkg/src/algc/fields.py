"""Lazily evaluated tensor fields.

A :class:`Field` is an array of smooth functions over an ``n``-dimensional
chart.  Evaluating it at a point ``p`` to order ``K`` yields a
:class:`~algc.jets.JetArray` whose component shape is ``Field.shape``.
Fields are immutable; composite fields hold references to their inputs and
recompute on demand.  Structural fields (anchors, connection coefficients,
inverse metrics) may memoise per-point results, which is safe because
evaluation is pure.
"""

import threading
from collections import OrderedDict
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from . import jets
from .errors import DimensionError

_CACHE_SIZE = 512


class Field:
    def __init__(self, n, shape, cache=False):
        self.n = int(n)
        self.shape = tuple(shape)
        self._cache = OrderedDict() if cache else None
        self._lock = threading.Lock() if cache else None

    @property
    def ndim(self):
        return len(self.shape)

    def _jet(self, p, order):
        raise NotImplementedError

    def jet(self, p, order=0):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n,):
            raise DimensionError(f"point of shape {p.shape} on a {self.n}-dimensional chart")
        if self._cache is None:
            return self._jet(p, order)
        key = p.tobytes()
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None and hit.order >= order:
            return hit if hit.order == order else hit.truncate(order)
        out = self._jet(p, order)
        with self._lock:
            self._cache[key] = out
            while len(self._cache) > _CACHE_SIZE:
                self._cache.popitem(last=False)
        return out

    def __call__(self, p):
        """Component values at ``p``."""
        return self.jet(p, 0).value

    def _other(self, other):
        if isinstance(other, Field):
            if other.n != self.n:
                raise DimensionError(f"fields on charts of dimension {self.n} and {other.n}")
            return other
        return Constant(self.n, np.broadcast_to(np.asarray(other, dtype=float), self.shape))

    def __add__(self, other):
        other = self._other(other)
        shape = np.broadcast_shapes(self.shape, other.shape)
        return Lazy(self.n, shape, lambda p, k: self.jet(p, k) + other.jet(p, k))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._other(other)
        shape = np.broadcast_shapes(self.shape, other.shape)
        return Lazy(self.n, shape, lambda p, k: self.jet(p, k) - other.jet(p, k))

    def __rsub__(self, other):
        return self._other(other) - self

    def __neg__(self):
        return Lazy(self.n, self.shape, lambda p, k: -self.jet(p, k))

    def __mul__(self, other):
        if not isinstance(other, Field):
            c = np.asarray(other, dtype=float)
            if c.ndim:
                raise DimensionError("multiply by array constants via fein")
            return Lazy(self.n, self.shape, lambda p, k: self.jet(p, k) * float(c))
        other = self._other(other)
        shape = np.broadcast_shapes(self.shape, other.shape)
        return Lazy(self.n, shape, lambda p, k: jets.multiply(self.jet(p, k), other.jet(p, k)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Field):
            return self * Lazy(other.n, other.shape, lambda p, k: jets.reciprocal(other.jet(p, k)))
        return self * (1.0 / float(other))

    def __getitem__(self, index):
        if not isinstance(index, tuple):
            index = (index,)
        shape = np.empty(self.shape)[index].shape
        return Lazy(self.n, shape, lambda p, k: self.jet(p, k)[index])

    def moveaxis(self, source, destination):
        shape = np.moveaxis(np.empty(self.shape), source, destination).shape
        return Lazy(self.n, shape, lambda p, k: self.jet(p, k).moveaxis(source, destination))

    def transpose(self, axes):
        shape = tuple(self.shape[a] for a in axes)
        return Lazy(self.n, shape, lambda p, k: self.jet(p, k).transpose(axes))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, shape={self.shape})"


class Lazy(Field):
    """Field defined by a function ``(p, order) -> JetArray``."""

    def __init__(self, n, shape, fn, cache=False):
        super().__init__(n, shape, cache=cache)
        self._fn = fn

    def _jet(self, p, order):
        out = self._fn(p, order)
        if out.shape != self.shape:
            raise DimensionError(f"lazy field produced shape {out.shape}, expected {self.shape}")
        return out


class Constant(Field):
    def __init__(self, n, values):
        values = np.array(values, dtype=float)
        super().__init__(n, values.shape)
        self.values = values

    def _jet(self, p, order):
        return jets.constant(self.values, jets.space(self.n, order))


def zero(n, shape=()):
    return Constant(n, np.zeros(shape))


def monomials(n, degree):
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(n), d):
            alpha = [0] * n
            for a in combo:
                alpha[a] += 1
            out.append(tuple(alpha))
    return out


@lru_cache(maxsize=4096)
def _monomial_jets(n, degree, p_bytes, order):
    sp = jets.space(n, order)
    x = jets.coordinates(np.frombuffer(p_bytes), sp)
    rows = []
    for alpha in monomials(n, degree):
        term = jets.constant(1.0, sp)
        for a, e in enumerate(alpha):
            if e:
                term = jets.multiply(term, jets.power(x[a], e))
        rows.append(term.data)
    return np.stack(rows)


class Polynomial(Field):
    """Polynomial components: ``coeffs[..., j]`` multiplies monomial ``j``.

    Monomials are those of :func:`monomials` (graded by total degree).
    """

    def __init__(self, n, coeffs, degree):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape[-1] != len(monomials(n, degree)):
            raise DimensionError("coefficient axis does not match the monomial count")
        super().__init__(n, coeffs.shape[:-1])
        self.coeffs = coeffs
        self.degree = degree

    def _jet(self, p, order):
        basis = _monomial_jets(self.n, self.degree, p.tobytes(), order)
        return jets.JetArray(np.tensordot(self.coeffs, basis, axes=(-1, 0)),
                             jets.space(self.n, order))


def fein(subscripts, *fields):
    """Lazy jet-ring einsum of fields (see :func:`algc.jets.einsum`)."""
    n = fields[0].n
    for f in fields:
        if f.n != n:
            raise DimensionError("fields on charts of different dimension")
    try:
        shape = np.einsum(subscripts, *[np.zeros(f.shape) for f in fields]).shape
    except ValueError as exc:
        raise DimensionError(f"incompatible shapes for {subscripts!r}: {exc}") from None
    return Lazy(n, shape, lambda p, k: jets.einsum(subscripts, *[f.jet(p, k) for f in fields]))


def derivative(field):
    """Coordinate gradient; appends an axis of length n."""
    return Lazy(field.n, field.shape + (field.n,), lambda p, k: field.jet(p, k + 1).grad())


def stack(fields, axis=0):
    fields = list(fields)
    n = fields[0].n
    shape = np.stack([np.zeros(f.shape) for f in fields], axis=axis).shape
    return Lazy(n, shape, lambda p, k: jets.stack([f.jet(p, k) for f in fields], axis=axis))


def sup_norm(field, p):
    return float(np.max(np.abs(field(p)), initial=0.0))


def cached(field):
    """Memoising view of ``field`` (per-point, highest order kept)."""
    return Lazy(field.n, field.shape, field.jet, cache=True)
