"""JSON algebroid specification files.

A file describes one chart: coordinates, a sampling box, anchor and
structure functions as expression strings, and optional metric, almost
complex structure, torsion 3-form, named sections and a connection.  Sparse
entries use 0-based indices.  Loading validates the schema, the array
shapes and every expression; :func:`build` turns a spec into live objects.
"""

import json
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

import jsonschema
import numpy as np

from .algebroid import Algebroid, Box
from .calculus import Connection
from .errors import SchemaError
from .expr import ExprArray, parse

_EXPR = {"type": "string"}
_SPARSE3 = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["k", "i", "j", "expr"],
        "properties": {
            "k": {"type": "integer", "minimum": 0},
            "i": {"type": "integer", "minimum": 0},
            "j": {"type": "integer", "minimum": 0},
            "expr": _EXPR,
        },
        "additionalProperties": False,
    },
}
_NESTED = {"type": "array", "items": {"anyOf": [{"$ref": "#/$defs/nested"}, _EXPR]}}

SCHEMA = {
    "type": "object",
    "$defs": {"nested": _NESTED},
    "required": ["name", "base_dim", "rank", "coords", "domain", "anchor", "structure"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "base_dim": {"type": "integer", "minimum": 1},
        "rank": {"type": "integer", "minimum": 1, "maximum": 8},
        "coords": {
            "type": "array",
            "items": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
            "uniqueItems": True,
        },
        "domain": {
            "type": "object",
            "required": ["lower", "upper"],
            "additionalProperties": False,
            "properties": {
                "lower": {"type": "array", "items": {"type": "number"}},
                "upper": {"type": "array", "items": {"type": "number"}},
            },
        },
        "anchor": _NESTED,
        "structure": {"anyOf": [_SPARSE3, _NESTED]},
        "metric": _NESTED,
        "J": _NESTED,
        "torsion3form": _SPARSE3,
        "sections": {"type": "object", "additionalProperties": {"type": "array", "items": _EXPR}},
        "connection": {"anyOf": [_SPARSE3, _NESTED]},
        "derive": {"enum": ["tmj"]},
    },
}

_RESERVED = {"sin", "cos", "exp", "log", "sqrt"}


def _negate(text):
    return "0" if text == "0" else f"-({text})"


def _dense(data, shape, what):
    arr = np.array(data, dtype=object)
    if arr.shape != tuple(shape) or any(not isinstance(v, str) for v in arr.reshape(-1)):
        raise SchemaError(f"{what} must be a {'x'.join(map(str, shape))} array of expression strings")
    return arr.tolist()


def _sparse_skew(entries, r, what):
    """Dense r x r x r array from sparse entries, completing the skew partner."""
    out = np.full((r, r, r), "0", dtype=object)
    seen = {}
    for e in entries:
        k, i, j, text = e["k"], e["i"], e["j"], e["expr"]
        if max(k, i, j) >= r:
            raise SchemaError(f"{what} index ({k},{i},{j}) out of range for rank {r}")
        if i == j:
            raise SchemaError(f"{what} entry ({k},{i},{j}) has equal lower indices")
        key = (k, min(i, j), max(i, j))
        if key in seen:
            if seen[key] == (i, j, text):
                continue
            raise SchemaError(f"conflicting {what} entries for ({k},{i},{j})")
        seen[key] = (i, j, text)
        if i > j:
            text = _negate(text)
        out[k, key[1], key[2]] = text
        out[k, key[2], key[1]] = _negate(text)
    return out.tolist()


def _sparse_plain(entries, r, what):
    out = np.full((r, r, r), "0", dtype=object)
    seen = {}
    for e in entries:
        k, i, j, text = e["k"], e["i"], e["j"], e["expr"]
        if max(k, i, j) >= r:
            raise SchemaError(f"{what} index ({k},{i},{j}) out of range for rank {r}")
        if seen.get((k, i, j), text) != text:
            raise SchemaError(f"conflicting {what} entries for ({k},{i},{j})")
        seen[(k, i, j)] = text
        out[k, i, j] = text
    return out.tolist()


def _parity(idx):
    return sum(idx[a] > idx[b] for a in range(len(idx)) for b in range(a + 1, len(idx))) % 2


def _sparse_alternating(entries, r):
    out = np.full((r, r, r), "0", dtype=object)
    seen = {}
    for e in entries:
        idx = (e["i"], e["j"], e["k"])
        if max(idx) >= r:
            raise SchemaError(f"torsion3form index {idx} out of range for rank {r}")
        if len(set(idx)) < 3:
            raise SchemaError(f"torsion3form entry {idx} has a repeated index")
        key = tuple(sorted(idx))
        if key in seen:
            if seen[key] == (idx, e["expr"]):
                continue
            raise SchemaError(f"conflicting torsion3form entries for {idx}")
        seen[key] = (idx, e["expr"])
        text = e["expr"] if _parity(idx) == 0 else _negate(e["expr"])
        for perm in permutations(key):
            out[perm] = text if _parity(perm) == 0 else _negate(text)
    return out.tolist()


@dataclass(frozen=True)
class AlgebroidSpec:
    """A validated, normalised specification (dense arrays of expression text)."""

    name: str
    coords: tuple
    lower: tuple
    upper: tuple
    anchor: list
    structure: list
    metric: list = None
    J: list = None
    torsion3form: list = None
    sections: dict = field(default_factory=dict)
    connection: list = None
    derive: str = None

    @property
    def base_dim(self):
        return len(self.coords)

    @property
    def rank(self):
        return len(self.anchor[0])

    @classmethod
    def from_dict(cls, doc):
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(map(str, exc.absolute_path)) or "<root>"
            raise SchemaError(f"schema violation at {where}: {exc.message}") from None
        n, r = doc["base_dim"], doc["rank"]
        coords = tuple(doc["coords"])
        if len(coords) != n:
            raise SchemaError(f"{len(coords)} coordinates declared for base_dim {n}")
        if _RESERVED & set(coords):
            raise SchemaError("coordinate names may not shadow function names")
        lower, upper = doc["domain"]["lower"], doc["domain"]["upper"]
        if len(lower) != n or len(upper) != n:
            raise SchemaError("domain bounds must have base_dim entries")
        if any(a >= b for a, b in zip(lower, upper)):
            raise SchemaError("domain lower bounds must be below upper bounds")
        structure = doc["structure"]
        if structure and isinstance(structure[0], dict):
            structure = _sparse_skew(structure, r, "structure")
        elif not structure:
            structure = _sparse_skew([], r, "structure")
        spec = cls(
            name=doc["name"],
            coords=coords,
            lower=tuple(float(v) for v in lower),
            upper=tuple(float(v) for v in upper),
            anchor=_dense(doc["anchor"], (n, r), "anchor"),
            structure=_dense(structure, (r, r, r), "structure"),
            metric=_dense(doc["metric"], (r, r), "metric") if "metric" in doc else None,
            J=_dense(doc["J"], (r, r), "J") if "J" in doc else None,
            torsion3form=_sparse_alternating(doc["torsion3form"], r) if "torsion3form" in doc else None,
            sections={},
            connection=None,
            derive=doc.get("derive"),
        )
        sections = {}
        for name, comps in sorted(doc.get("sections", {}).items()):
            if len(comps) != r:
                raise SchemaError(f"section {name!r} needs {r} components")
            sections[name] = list(comps)
        object.__setattr__(spec, "sections", sections)
        if "connection" in doc:
            conn = doc["connection"]
            conn = _sparse_plain(conn, r, "connection") if conn and isinstance(conn[0], dict) else conn
            object.__setattr__(spec, "connection", _dense(conn, (r, r, r), "connection"))
        spec._check_expressions()
        return spec

    def _check_expressions(self):
        arrays = [self.anchor, self.structure, self.metric, self.J, self.torsion3form,
                  self.connection, *self.sections.values()]
        for arr in arrays:
            if arr is None:
                continue
            for text in np.array(arr, dtype=object).reshape(-1):
                parse(text, self.coords)

    def to_dict(self):
        doc = {
            "name": self.name,
            "base_dim": self.base_dim,
            "rank": self.rank,
            "coords": list(self.coords),
            "domain": {"lower": list(self.lower), "upper": list(self.upper)},
            "anchor": self.anchor,
            "structure": self.structure,
        }
        for key in ("metric", "J", "connection"):
            if getattr(self, key) is not None:
                doc[key] = getattr(self, key)
        if self.torsion3form is not None:
            r = self.rank
            doc["torsion3form"] = [
                {"i": i, "j": j, "k": k, "expr": self.torsion3form[i][j][k]}
                for i in range(r) for j in range(i + 1, r) for k in range(j + 1, r)
                if self.torsion3form[i][j][k] != "0"
            ]
        if self.sections:
            doc["sections"] = dict(self.sections)
        if self.derive is not None:
            doc["derive"] = self.derive
        return doc


def load(path):
    """Read and validate a spec file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SchemaError(f"no such file: {path}") from None
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None
    return AlgebroidSpec.from_dict(doc)


def dumps(spec):
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"


def dump(spec, path):
    Path(path).write_text(dumps(spec), encoding="utf-8")


@dataclass
class Fixture:
    """Live objects built from a spec; optional parts are ``None``."""

    name: str
    alg: Algebroid
    metric: object = None
    ac: object = None
    H: object = None
    sections: dict = field(default_factory=dict)
    connection: object = None
    spec: AlgebroidSpec = None

    def section(self, name):
        """A named section of the spec, or a frame section ``e1`` .. ``er``."""
        if name in self.sections:
            return self.sections[name]
        if name.startswith("e") and name[1:].isdigit() and 1 <= int(name[1:]) <= self.alg.r:
            return self.alg.basis(int(name[1:]) - 1)
        raise SchemaError(f"unknown section {name!r}")


def build(spec):
    """Construct the algebroid, metric, J, 3-form, sections and connection."""
    from .hermitian import AlmostComplex, tmj_algebroid
    from .metric import Metric

    coords = spec.coords
    alg = Algebroid(coords, ExprArray.parse(spec.anchor, coords),
                    ExprArray.parse(spec.structure, coords),
                    Box(spec.lower, spec.upper), name=spec.name)
    ac = AlmostComplex(alg, ExprArray.parse(spec.J, coords)) if spec.J is not None else None
    if spec.derive == "tmj":
        if ac is None:
            raise SchemaError("derive 'tmj' needs an almost complex structure J")
        alg = tmj_algebroid(ac, name=spec.name)
        ac = None
    metric = Metric(alg, ExprArray.parse(spec.metric, coords)) if spec.metric is not None else None
    H = ExprArray.parse(spec.torsion3form, coords) if spec.torsion3form is not None else None
    sections = {k: ExprArray.parse(v, coords) for k, v in spec.sections.items()}
    connection = (Connection(alg, ExprArray.parse(spec.connection, coords))
                  if spec.connection is not None else None)
    return Fixture(spec.name, alg, metric, ac, H, sections, connection, spec)


def load_fixture(path):
    return build(load(path))
