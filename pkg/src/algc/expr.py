"""Scalar-field expressions over named coordinates.

Grammar (whitespace is insignificant)::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" integer)?
    atom   := number | ident | func "(" expr ")" | "(" expr ")"
    func   := "sin" | "cos" | "exp" | "log" | "sqrt"

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Exponents
are non-negative integer literals; general powers go through exp/log.
"""

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jets
from .errors import DomainError, NonFiniteError, ParseError, UnknownIdentifierError
from .fields import Field

FUNCTIONS = {
    "sin": jets.sin,
    "cos": jets.cos,
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


class _Parser:
    def __init__(self, text, coords):
        self.text = text
        self.coords = set(coords)
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _offset(self, char_index):
        return len(self.text[:char_index].encode("utf-8"))

    def _tokenize(self, text):
        tokens = []
        i = 0
        while True:
            while i < len(text) and text[i].isspace():
                i += 1
            if i >= len(text):
                break
            m = _TOKEN.match(text, i)
            if m is None or m.end() == i:
                raise ParseError(f"unexpected character {text[i]!r}", self._offset(i))
            kind = m.lastgroup
            start = m.start(kind)
            tokens.append((kind, m.group(kind), self._offset(start)))
            i = m.end()
        tokens.append(("eof", "", self._offset(len(text))))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, text, offset = self.take()
        if text != value or kind == "eof":
            found = "end of input" if kind == "eof" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", offset)

    def parse(self):
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] != ("op", "^"):
            return base
        self.take()
        kind, text, offset = self.take()
        if kind != "num" or not text.isdigit():
            raise ParseError("exponent must be a non-negative integer literal", offset)
        node = Pow(base, int(text))
        if self.peek()[:2] == ("op", "^"):
            raise ParseError("chained '^' is not supported; use parentheses", self.peek()[2])
        return node

    def atom(self):
        kind, text, offset = self.take()
        if kind == "num":
            value = float(text)
            if not np.isfinite(value):
                raise ParseError(f"number {text!r} is not finite", offset)
            return Num(value)
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text not in self.coords:
                raise UnknownIdentifierError(text, offset)
            return Var(text)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "eof" else repr(text)
        raise ParseError(f"unexpected {found}", offset)


def parse_tree(text, coords):
    return _Parser(text, coords).parse()


def to_text(node):
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def is_constant(node):
    if isinstance(node, Num):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, (Neg, Pow, Call)):
        return is_constant(node.arg if not isinstance(node, Pow) else node.base)
    return is_constant(node.left) and is_constant(node.right)


def evaluate(node, x, index):
    """Evaluate a tree on coordinate jets ``x`` (names mapped by ``index``)."""
    if isinstance(node, Num):
        return jets.constant(node.value, x.space)
    if isinstance(node, Var):
        return x[index[node.name]]
    if isinstance(node, Neg):
        return -evaluate(node.arg, x, index)
    if isinstance(node, BinOp):
        a = evaluate(node.left, x, index)
        b = evaluate(node.right, x, index)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return jets.multiply(a, b)
        return jets.multiply(a, jets.reciprocal(b))
    if isinstance(node, Pow):
        return jets.power(evaluate(node.base, x, index), node.exponent)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, x, index))
    raise TypeError(f"not an expression node: {node!r}")


class Expr(Field):
    """A scalar field given by an expression tree."""

    def __init__(self, tree, coords):
        super().__init__(len(coords), ())
        self.tree = tree
        self.coords = tuple(coords)
        self._index = {name: i for i, name in enumerate(self.coords)}

    def _jet(self, p, order):
        sp = jets.space(self.n, order)
        return evaluate(self.tree, jets.coordinates(p, sp), self._index).check_finite()

    @property
    def text(self):
        return to_text(self.tree)

    def __eq__(self, other):
        return isinstance(other, Expr) and (self.tree, self.coords) == (other.tree, other.coords)

    def __hash__(self):
        return hash((self.tree, self.coords))

    def __repr__(self):
        return f"Expr({self.text!r})"


def parse(text, coords):
    """Parse ``text`` into a scalar field over the named coordinates."""
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}", 0)
    return Expr(parse_tree(text, coords), coords)


class ExprArray(Field):
    """A tensor field whose components are expressions.

    Constant entries are evaluated once; only position-dependent entries are
    re-evaluated per point.
    """

    def __init__(self, exprs, coords, cache=False):
        exprs = np.array(exprs, dtype=object)
        super().__init__(len(coords), exprs.shape, cache=cache)
        self.coords = tuple(coords)
        self.exprs = exprs
        self._index = {name: i for i, name in enumerate(self.coords)}
        flat = exprs.reshape(-1)
        self._const = np.zeros(flat.shape)
        self._variable = []
        origin = jets.coordinates(np.zeros(self.n), jets.space(self.n, 0))
        for pos, e in enumerate(flat):
            if is_constant(e.tree):
                self._const[pos] = evaluate(e.tree, origin, self._index).check_finite().value
            else:
                self._variable.append((pos, e.tree))

    @classmethod
    def parse(cls, nested, coords, cache=False):
        arr = np.array(nested, dtype=object)
        out = np.empty(arr.shape, dtype=object)
        for idx in np.ndindex(arr.shape):
            out[idx] = parse(arr[idx], coords)
        return cls(out, coords, cache=cache)

    def texts(self):
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(self.shape):
            out[idx] = self.exprs[idx].text
        return out.tolist()

    def _jet(self, p, order):
        sp = jets.space(self.n, order)
        data = np.zeros((self._const.size, sp.size))
        data[:, 0] = self._const
        if self._variable:
            x = jets.coordinates(p, sp)
            for pos, tree in self._variable:
                data[pos] = evaluate(tree, x, self._index).data
        out = jets.JetArray(data.reshape(self.shape + (sp.size,)), sp)
        return out.check_finite()


def eval_jet2(field, p):
    """Value, gradient and Hessian of a scalar field at ``p``."""
    return jets.Jet2.from_jets(field.jet(p, 2))


@dataclass(frozen=True)
class FDResidual:
    """Max abs differences between jet derivatives and central differences."""

    grad: float
    hess: float


def fd_check(field, p, h=1e-4, domain=None):
    """Compare jet derivatives of ``field`` with central finite differences.

    ``domain`` is an optional ``(lower, upper)`` pair; every stencil point
    must lie inside it.
    """
    p = np.asarray(p, dtype=float)
    n = field.n
    e = np.eye(n) * h

    def at(q):
        if domain is not None:
            lower, upper = (np.asarray(b, dtype=float) for b in domain)
            if np.any(q < lower) or np.any(q > upper):
                raise DomainError(f"finite-difference stencil point {q.tolist()} leaves the domain")
        return field(q)

    _, grad, hess = jets.taylor2(field.jet(p, 2))
    f0 = at(p)
    fd_grad = np.empty(grad.shape)
    fd_hess = np.empty(hess.shape)
    for a in range(n):
        fp, fm = at(p + e[a]), at(p - e[a])
        fd_grad[..., a] = (fp - fm) / (2 * h)
        fd_hess[..., a, a] = (fp - 2 * f0 + fm) / h**2
        for b in range(a + 1, n):
            v = (at(p + e[a] + e[b]) - at(p + e[a] - e[b])
                 - at(p - e[a] + e[b]) + at(p - e[a] - e[b])) / (4 * h**2)
            fd_hess[..., a, b] = fd_hess[..., b, a] = v
    g = float(np.max(np.abs(grad - fd_grad), initial=0.0))
    H = float(np.max(np.abs(hess - fd_hess), initial=0.0))
    if not (np.isfinite(g) and np.isfinite(H)):
        raise NonFiniteError("non-finite finite-difference residual")
    return FDResidual(g, H)
