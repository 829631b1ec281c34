"""Truncated multivariate Taylor jets.

A jet of order ``K`` at a base point ``p`` of an ``n``-dimensional chart
stores the Taylor coefficients ``c_alpha = d^alpha f(p) / alpha!`` for every
multi-index with ``|alpha| <= K``, in graded order, so truncating to a lower
order is a slice.  :class:`JetArray` holds a whole array of such jets (the
components of a tensor field) with the coefficient axis last; products,
contractions and elementary functions act componentwise in the jet ring.

Differentiating a jet lowers its order by one.  Fields built from derivatives
therefore ask their inputs for one extra order, and no coefficient is ever
silently dropped.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial

import numpy as np

from .errors import DimensionError, DomainError, NonFiniteError, SingularMatrixError

PIVOT_TOL = 1e-10


class JetSpace:
    """Monomial bookkeeping for jets of a given order in ``n`` variables."""

    def __init__(self, n, order):
        if n < 1 or order < 0:
            raise ValueError(f"invalid jet space n={n}, order={order}")
        self.n = n
        self.order = order
        monomials = []
        for degree in range(order + 1):
            for combo in combinations_with_replacement(range(n), degree):
                alpha = [0] * n
                for a in combo:
                    alpha[a] += 1
                monomials.append(tuple(alpha))
        self.monomials = monomials
        self.index = {alpha: i for i, alpha in enumerate(monomials)}
        self.size = m = len(monomials)

        mul = np.zeros((m * m, m))
        for i, alpha in enumerate(monomials):
            for j, beta in enumerate(monomials):
                gamma = tuple(x + y for x, y in zip(alpha, beta))
                k = self.index.get(gamma)
                if k is not None:
                    mul[i * m + j, k] = 1.0
        self.mul = mul

        if order >= 1:
            lower = space(n, order - 1)
            grad = np.zeros((m, n, lower.size))
            for j, beta in enumerate(lower.monomials):
                for a in range(n):
                    alpha = list(beta)
                    alpha[a] += 1
                    grad[self.index[tuple(alpha)], a, j] = beta[a] + 1
            self.grad = grad.reshape(m, n * lower.size)
        else:
            self.grad = None

    def __repr__(self):
        return f"JetSpace(n={self.n}, order={self.order})"


@lru_cache(maxsize=None)
def space(n, order):
    return JetSpace(n, order)


class JetArray:
    """An array of jets; ``shape`` refers to the component axes only."""

    __slots__ = ("data", "space")

    def __init__(self, data, jet_space):
        data = np.asarray(data, dtype=float)
        if data.shape[-1:] != (jet_space.size,):
            raise DimensionError(
                f"coefficient axis {data.shape[-1:]} does not match {jet_space}"
            )
        self.data = data
        self.space = jet_space

    @property
    def shape(self):
        return self.data.shape[:-1]

    @property
    def ndim(self):
        return self.data.ndim - 1

    @property
    def order(self):
        return self.space.order

    @property
    def value(self):
        return self.data[..., 0]

    def _wrap(self, data):
        return JetArray(data, self.space)

    def _coerce(self, other):
        if isinstance(other, JetArray):
            if other.space is not self.space:
                raise DimensionError(f"mixing jets from {self.space} and {other.space}")
            return other
        return constant(other, self.space)

    def __add__(self, other):
        return self._wrap(self.data + self._coerce(other).data)

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.data - self._coerce(other).data)

    def __rsub__(self, other):
        return self._wrap(self._coerce(other).data - self.data)

    def __neg__(self):
        return self._wrap(-self.data)

    def __mul__(self, other):
        if isinstance(other, JetArray):
            return multiply(self, other)
        return self._wrap(self.data * np.asarray(other, dtype=float)[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, JetArray):
            return multiply(self, reciprocal(other))
        return self._wrap(self.data / np.asarray(other, dtype=float)[..., None])

    def __rtruediv__(self, other):
        return multiply(self._coerce(other), reciprocal(self))

    def __getitem__(self, index):
        if not isinstance(index, tuple):
            index = (index,)
        if any(i is Ellipsis for i in index):
            raise IndexError("ellipsis indexing is not supported on jet arrays")
        return self._wrap(self.data[index])

    def moveaxis(self, source, destination):
        nd = self.ndim
        source = [s % nd for s in np.atleast_1d(source)]
        destination = [d % nd for d in np.atleast_1d(destination)]
        return self._wrap(np.moveaxis(self.data, source, destination))

    def transpose(self, axes):
        return self._wrap(self.data.transpose(tuple(axes) + (self.ndim,)))

    def sum(self, axis):
        axis = tuple(a % self.ndim for a in np.atleast_1d(axis))
        return self._wrap(self.data.sum(axis=axis))

    def truncate(self, order):
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return JetArray(self.data[..., : space(self.space.n, order).size],
                        space(self.space.n, order))

    def grad(self):
        """Partial derivatives; appends an axis of length n, lowers the order."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        lower = space(self.space.n, self.order - 1)
        out = self.data @ self.space.grad
        return JetArray(out.reshape(self.shape + (self.space.n, lower.size)), lower)

    def check_finite(self):
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError("non-finite value in jet evaluation")
        return self

    def __repr__(self):
        return f"JetArray(shape={self.shape}, order={self.order})"


def constant(values, jet_space):
    values = np.asarray(values, dtype=float)
    data = np.zeros(values.shape + (jet_space.size,))
    data[..., 0] = values
    return JetArray(data, jet_space)


def zeros(shape, jet_space):
    return JetArray(np.zeros(tuple(shape) + (jet_space.size,)), jet_space)


def coordinates(p, jet_space):
    """Jets of the coordinate functions x_a at the point p."""
    p = np.asarray(p, dtype=float)
    data = np.zeros((jet_space.n, jet_space.size))
    data[:, 0] = p
    if jet_space.order >= 1:
        data[np.arange(jet_space.n), 1 + np.arange(jet_space.n)] = 1.0
    return JetArray(data, jet_space)


def stack(arrays, axis=0):
    arrays = list(arrays)
    sp = arrays[0].space
    return JetArray(np.stack([a.data for a in arrays], axis=axis), sp)


def multiply(a, b):
    """Componentwise jet product with numpy broadcasting of component axes."""
    sp = a.space
    if b.space is not sp:
        raise DimensionError(f"mixing jets from {sp} and {b.space}")
    m = sp.size
    if m == 1:
        return JetArray(a.data * b.data, sp)
    outer = a.data[..., :, None] * b.data[..., None, :]
    out = outer.reshape(outer.shape[:-2] + (m * m,)) @ sp.mul
    return JetArray(out, sp)


def _tokens(subscripts):
    return list(subscripts.replace("...", "@"))


def einsum(subscripts, *operands):
    """Jet-ring analogue of :func:`numpy.einsum` over component axes.

    Products of entries are jet products; operands are combined pairwise so
    only two jet axes are ever materialised at once.
    """
    if "->" not in subscripts:
        raise ValueError("jets.einsum requires an explicit output ('->')")
    lhs, out = subscripts.split("->")
    terms = [_tokens(t) for t in lhs.split(",")]
    out = _tokens(out)
    if len(terms) != len(operands):
        raise ValueError(f"{len(terms)} subscripts for {len(operands)} operands")
    if any(c in "YZ" for t in terms for c in t):
        raise ValueError("subscript letters Y and Z are reserved")
    sp = operands[0].space
    m = sp.size

    def np_subs(tokens):
        return "".join(tokens).replace("@", "...")

    cur, cur_t = operands[0], terms[0]
    if len(operands) == 1:
        data = np.einsum(f"{np_subs(cur_t)}Y->{np_subs(out)}Y", cur.data)
        return JetArray(data, sp)
    for idx in range(1, len(operands)):
        nxt, nxt_t = operands[idx], terms[idx]
        if nxt.space is not sp:
            raise DimensionError(f"mixing jets from {sp} and {nxt.space}")
        needed = set(out)
        for t in terms[idx + 1:]:
            needed.update(t)
        res = []
        for c in cur_t + nxt_t:
            if c in needed and c not in res:
                res.append(c)
        if idx == len(operands) - 1:
            res = out
        outer = np.einsum(
            f"{np_subs(cur_t)}Y,{np_subs(nxt_t)}Z->{np_subs(res)}YZ", cur.data, nxt.data
        )
        data = outer.reshape(outer.shape[:-2] + (m * m,)) @ sp.mul
        cur, cur_t = JetArray(data, sp), res
    return cur


def _series(a, derivatives):
    """f(a) from the derivatives f^(j)(a_0), j = 0..K, by Taylor composition."""
    sp = a.space
    result = constant(derivatives[0], sp)
    if sp.order == 0:
        return result
    u_data = a.data.copy()
    u_data[..., 0] = 0.0
    u = JetArray(u_data, sp)
    power = u
    for j in range(1, sp.order + 1):
        result = result + power * (derivatives[j] / factorial(j))
        if j < sp.order:
            power = multiply(power, u)
    return result


def reciprocal(a):
    a0 = a.value
    if np.any(a0 == 0.0):
        raise DomainError("division by zero")
    K = a.order
    return _series(a, [(-1) ** j * factorial(j) / a0 ** (j + 1) for j in range(K + 1)])


def exp(a):
    e = np.exp(a.value)
    return _series(a, [e] * (a.order + 1)).check_finite()


def log(a):
    a0 = a.value
    if np.any(a0 <= 0.0):
        raise DomainError("log of a non-positive value")
    derivs = [np.log(a0)]
    derivs += [(-1) ** (j - 1) * factorial(j - 1) / a0**j for j in range(1, a.order + 1)]
    return _series(a, derivs)


def sqrt(a):
    a0 = a.value
    if np.any(a0 <= 0.0):
        raise DomainError("sqrt of a non-positive value")
    derivs = []
    coef = 1.0
    for j in range(a.order + 1):
        derivs.append(coef * a0 ** (0.5 - j))
        coef *= 0.5 - j
    return _series(a, derivs)


def sin(a):
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [s, c, -s, -c]
    return _series(a, [cycle[j % 4] for j in range(a.order + 1)])


def cos(a):
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [c, -s, -c, s]
    return _series(a, [cycle[j % 4] for j in range(a.order + 1)])


def power(a, exponent):
    """Integer power by repeated squaring (exact in the jet ring)."""
    if exponent < 0 or int(exponent) != exponent:
        raise ValueError("only non-negative integer exponents are supported")
    result = constant(np.ones(a.shape), a.space)
    base = a
    e = int(exponent)
    while e:
        if e & 1:
            result = multiply(result, base)
        e >>= 1
        if e:
            base = multiply(base, base)
    return result


def inv(a, point=None, pivot_tol=PIVOT_TOL):
    """Inverse of a square matrix of jets by Gauss-Jordan elimination.

    Pivoting is partial, on the value parts.  A pivot below ``pivot_tol`` in
    absolute value raises :class:`SingularMatrixError`.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"cannot invert jet array of shape {a.shape}")
    sp = a.space
    r = a.shape[0]
    work = np.concatenate([a.data, constant(np.eye(r), sp).data], axis=1)
    for col in range(r):
        pivot = col + int(np.argmax(np.abs(work[col:, col, 0])))
        if abs(work[pivot, col, 0]) < pivot_tol:
            raise SingularMatrixError("singular matrix (value-part pivot below threshold)", point)
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        row = multiply(JetArray(work[col], sp), reciprocal(JetArray(work[col, col], sp)))
        work[col] = row.data
        factors = JetArray(work[:, col], sp)
        update = einsum("i,j->ij", factors, row).data
        update[col] = 0.0
        work = work - update
    return JetArray(work[:, r:], sp)


def taylor2(jet):
    """Value, gradient and Hessian arrays of a jet array of order >= 2.

    Component axes lead; ``grad`` appends one axis of length n and ``hess``
    two.  The Hessian is filled from a single coefficient per unordered pair,
    so it is exactly symmetric.
    """
    if jet.order < 2:
        raise ValueError("second derivatives need a jet of order >= 2")
    n = jet.space.n
    sp = space(n, 2)
    c = jet.data[..., : sp.size]
    grad = c[..., 1 : n + 1].copy()
    hess = np.empty(jet.shape + (n, n))
    for a in range(n):
        for b in range(a, n):
            alpha = [0] * n
            alpha[a] += 1
            alpha[b] += 1
            v = c[..., sp.index[tuple(alpha)]]
            hess[..., a, b] = 2.0 * v if a == b else v
            hess[..., b, a] = hess[..., a, b]
    return c[..., 0].copy(), grad, hess


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar quantity at a base point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def from_jets(cls, jet):
        if jet.ndim != 0:
            raise DimensionError("Jet2 needs a scalar jet")
        value, grad, hess = taylor2(jet)
        return cls(float(value), grad, hess)
