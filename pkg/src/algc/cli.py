"""The ``algc`` command line: check suites, Levi-Civita tables, operator evaluation."""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import calculus as C
from . import hermitian as H
from . import metric as M
from .algebroid import bracket
from .errors import AlgcError, SchemaError
from .specfile import load_fixture
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def parse_point(text, n):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise SchemaError(f"cannot parse point {text!r}; expected {n} comma-separated numbers") from None
    if len(values) != n:
        raise SchemaError(f"point has {len(values)} coordinates, expected {n}")
    return np.array(values)


def _fmt(v):
    return "-" if v is None else f"{v:.3e}"


def cmd_check(args):
    fx = load_fixture(args.file)
    report = run_suite(fx, args.suite, points=args.points, seed=args.seed, tol=args.tol)
    width = max(len(c.id) for c in report.checks)
    print(f"fixture {report.fixture}  suite {report.suite}  points {report.points}  "
          f"seed {report.seed}  tol {report.tol:g}")
    for c in report.checks:
        print(f"{c.id:<{width}}  {_fmt(c.max_residual):>10}  {c.status:<18}  {c.anchor}")
    if report.flags:
        print("flags: " + ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in sorted(report.flags.items())))
    failed = [c.id for c in report.checks if c.status == "fail"]
    print(f"{len(failed)} failed" + (": " + ", ".join(failed) if failed else ""))
    if args.json:
        Path(args.json).write_text(report.to_json(), encoding="utf-8")
    return EXIT_FAIL if failed else EXIT_OK


def _require_metric(fx):
    if fx.metric is None:
        raise SchemaError(f"{fx.name} has no metric")
    return fx.metric


def _require_j(fx):
    _require_metric(fx)
    if fx.ac is None:
        raise SchemaError(f"{fx.name} has no almost complex structure J")
    return fx.ac


def cmd_lc(args):
    fx = load_fixture(args.file)
    m = _require_metric(fx)
    p = parse_point(args.point, fx.alg.n)
    fx.alg.domain.require(p)
    formula = M.levi_civita(m).coeffs(p)
    oracle = M.koszul_oracle(m).coeffs(p)
    r = fx.alg.r
    print(f"Levi-Civita coefficients Gamma[k,i,j] at {p.tolist()} (nabla_{{e_i}} e_j = Gamma[k,i,j] e_k)")
    print(f"{'k':>2} {'i':>2} {'j':>2}  {'formula':>22}  {'koszul':>22}")
    for k in range(r):
        for i in range(r):
            for j in range(r):
                print(f"{k:>2} {i:>2} {j:>2}  {formula[k, i, j]:>22.15g}  {oracle[k, i, j]:>22.15g}")
    print(f"max discrepancy {np.max(np.abs(formula - oracle)):.3e}")
    return EXIT_OK


def _op_bracket(fx, X, Y):
    return bracket(fx.alg, X, Y)


def _op_symbracket_s(fx, X, Y):
    return M.bracket_s(_require_metric(fx), X, Y)


def _op_curly_s(fx, X, Y):
    m = _require_metric(fx)
    return M.curly_s(m, M.sym_bracket_s(m), X, Y)


def _op_torsion(fx, X, Y):
    c = fx.connection if fx.connection is not None else M.levi_civita(_require_metric(fx))
    return C.apply_vec(C.torsion(c), X, Y)


def _op_nijenhuis(fx, X, Y):
    return H.nijenhuis_apply(_require_j(fx), X, Y)


def _op_kahler_form(fx, X, Y):
    ac = _require_j(fx)
    return C.contract(H.kahler_form(fx.metric, ac), X, Y)


def _op_danabla_s_J(fx, X, Y):
    ac = _require_j(fx)
    return C.apply_vec(H.ds_J(M.levi_civita(fx.metric), ac), X, Y)


def _op_nabla_bar(fx, X, Y):
    ac = _require_j(fx)
    lc = M.levi_civita(fx.metric)
    return C.conn_apply(H.first_canonical(lc, H.nabla_j(lc, ac)), X, Y)


OPS = {
    "bracket": _op_bracket,
    "symbracket_s": _op_symbracket_s,
    "curly_s": _op_curly_s,
    "torsion": _op_torsion,
    "nijenhuis": _op_nijenhuis,
    "kahler_form": _op_kahler_form,
    "danabla_s_J": _op_danabla_s_J,
    "nabla_bar": _op_nabla_bar,
}


def cmd_eval(args):
    if args.op not in OPS:
        raise SchemaError(f"unknown op {args.op!r}; choose from {', '.join(OPS)}")
    fx = load_fixture(args.file)
    names = [s.strip() for s in args.args.split(",")]
    if len(names) != 2:
        raise SchemaError(f"--args needs two section names, got {len(names)}")
    X, Y = (fx.section(name) for name in names)
    p = parse_point(args.point, fx.alg.n)
    fx.alg.domain.require(p)
    value = np.atleast_1d(OPS[args.op](fx, X, Y)(p))
    print(f"{args.op}({names[0]}, {names[1]}) at {p.tolist()}")
    print(" ".join(f"{v:.15g}" for v in value))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="algc", description="Calculus on skew-symmetric algebroids.")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run identity suites on a spec file")
    check.add_argument("file")
    check.add_argument("--suite", default="all", choices=SUITES + ("all",))
    check.add_argument("--points", type=int, default=20)
    check.add_argument("--seed", type=int, default=42)
    check.add_argument("--tol", type=float, default=1e-7)
    check.add_argument("--json", metavar="PATH")
    check.set_defaults(func=cmd_check)

    lc = sub.add_parser("lc", help="print Levi-Civita coefficients at a point")
    lc.add_argument("file")
    lc.add_argument("--point", required=True)
    lc.set_defaults(func=cmd_lc)

    ev = sub.add_parser("eval", help="evaluate an operator on two sections at a point")
    ev.add_argument("file")
    ev.add_argument("--op", required=True)
    ev.add_argument("--args", required=True)
    ev.add_argument("--point", required=True)
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except AlgcError as exc:
        print(f"algc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
