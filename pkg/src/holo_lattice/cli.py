"""Command-line interface.  Exit codes: 0 pass, 2 check failure, 1 usage or error."""
from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import observables, oracle, propagate, rps, sholo, suites, transfer
from .lattice import build_square_domain

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_num(obj.real)}, {_num(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _beta(text):
    if text is None:
        return None
    if str(text).lower() in ("bc", "beta_c"):
        return sholo.BETA_C
    return float(text)


def _emit(args, payload, csv_matrix=None):
    if args.format == "csv" and csv_matrix is not None:
        buf = io.StringIO()
        np.savetxt(buf, np.atleast_2d(csv_matrix), delimiter=",", fmt="%.17g")
        text = buf.getvalue()
    else:
        text = dumps(payload) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _coupling(args):
    if args.model == "loop":
        return args.x
    return _beta(args.beta)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_propagator(args) -> int:
    coupling = _coupling(args)
    P = propagate.build_propagator(args.model, args.regime, args.n, coupling, args.variant)
    if args.N is not None:
        P = propagate.matrix_power(P, args.N)
    rep = propagate.spectrum(P, args.tol)
    if args.out:
        propagate.export_csv(P, args.out)
    summary = {"model": args.model, "regime": args.regime, "coupling": P.coupling,
               "variant": args.variant, "n": P.n, "flags": P.flags, "spectrum": rep.to_json()}
    if args.format == "csv" and not args.out:
        _emit(args, summary, P.matrix)
    else:
        sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


def cmd_transfer(args) -> int:
    if args.action == "duality":
        if args.model == "at":
            Js, Us = transfer.at_dual(args.J, args.U)
            r1, r2 = transfer.at_relations(args.J, args.U, Js, Us)
            payload = {"J": args.J, "U": args.U, "J_dual": Js, "U_dual": Us,
                       "relation_defects": [r1, r2]}
            ok = max(abs(r1), abs(r2)) <= args.tol
        else:
            b = _beta(args.beta)
            payload = {"beta": b, "beta_dual": transfer.ising_dual(b)}
            ok = True
        _emit(args, payload)
        return EXIT_OK if ok else EXIT_FAIL
    if args.model == "at":
        V = transfer.build_at_transfer(args.n, args.J, args.U)
    elif args.model == "ising":
        V = transfer.build_ising_transfer(args.n, _beta(args.beta))
    else:
        raise UsageError("transfer supports --model ising or at")
    if args.action == "build":
        payload = V.to_json()
        if args.N is not None:
            payload["strip_partition"] = transfer.strip_partition(V, args.N)
        _emit(args, payload, V.matrix)
        return EXIT_OK
    if args.action == "conjugation-check":
        G = transfer.clifford_generators(V.basis)
        reps = [transfer.conjugation_check(V.factors["Vh_sqrt"], G, "h")]
        if G.n >= 2:
            reps.append(transfer.conjugation_check(V.factors["VV"], G, "V"))
        payload = {"reports": [r.to_json() for r in reps]}
        _emit(args, payload)
        return EXIT_OK if all(r.max_residual <= args.tol for r in reps) else EXIT_FAIL
    raise UsageError(f"unknown transfer action {args.action!r}")


def _read_field(path: str) -> sholo.EdgeField:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("lattice", "square") != "square":
        raise UsageError("field files describe square domains")
    grid = build_square_domain(int(data["width"]), int(data["height"]))
    vals = np.array([complex(*v) if isinstance(v, list) else complex(v) for v in data["values"]])
    return sholo.EdgeField(grid, vals)


def cmd_sholo(args) -> int:
    if not args.field:
        raise UsageError("sholo needs --field FILE")
    field = _read_field(args.field)
    params = sholo.HoloParams(args.model, args.regime,
                              beta=_beta(args.beta) if args.regime == "subcritical" else None,
                              n=args.loop_n if args.model == "loop" else None,
                              s=args.s if args.model == "loop" else None)
    excl = [field.grid.edge_id(complex(*args.exclude))] if args.exclude else []
    rep = sholo.sholo_residuals(field, sholo.make_relations(params), exclude_edges=excl, tol=args.tol)
    payload = {"sholo": rep.to_json()}
    ok = rep.satisfied
    if args.riemann:
        rb = sholo.riemann_bc_residuals(field, convention=args.convention, tol=args.tol)
        payload["riemann"] = rb.to_json()
        ok = ok and rb.satisfied
    _emit(args, payload)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_correlate(args) -> int:
    beta = _beta(args.beta) if args.beta is not None else 0.4
    L, N = args.n, args.N if args.N is not None else 3
    d = build_square_domain(L - 1, N)
    if args.check == "two-point":
        reports = []
        for ak in range(L - 1):
            for ay in range(N + 1):
                for zk in range(L - 1):
                    for zy in range(ay + 1, N + 1):
                        reports += observables.two_point_identities(
                            d, zk + 0.5 + 1j * zy, ak + 0.5 + 1j * ay, beta)
        spreads = {}
        for name in observables.IDENTITIES:
            rs = [r.ratio for r in reports if r.identity == name and r.ratio is not None]
            spreads[name] = max(abs(r - rs[0]) for r in rs) if rs else 0.0
        ok = all(spreads[k] <= args.tol for k in ("psi-psi", "psi-psibar", "psibar-psibar"))
        _emit(args, {"ratio_spread": spreads, "reports": [r.to_json() for r in reports]})
        return EXIT_OK if ok else EXIT_FAIL
    if args.check in ("multipoint", "epsilon"):
        res = suites.run_suite("multipoint", args.seed)
        if args.check == "multipoint":
            ok = res.metrics["pfaffian_vs_direct"] <= 1e-8
            _emit(args, {"pfaffian_vs_direct": res.metrics["pfaffian_vs_direct"]})
        else:
            ok = res.passed
            _emit(args, {"epsilon_identities": observables.epsilon_identities(), **res.metrics})
        return EXIT_OK if ok else EXIT_FAIL
    raise UsageError(f"unknown check {args.check!r}")


def cmd_rps(args) -> int:
    coupling = _coupling(args)
    regime = args.regime
    op = rps.rps_operator(args.model, args.n, coupling, args.N if args.N is not None else 1,
                          regime=regime, variant=args.variant)
    if args.extend:
        if args.u:
            u = np.array([float(t) for t in args.u.split(",")])
        else:
            u = np.random.default_rng(args.seed).normal(size=op.n)
        ext = rps.extend_kernel(op, u, tol=args.tol)
        _emit(args, {"operator": op.to_json(), "u": u, "extension": ext.to_json()})
        return EXIT_OK if ext.sholo.satisfied and ext.riemann.satisfied else EXIT_FAIL
    kernel = rps.rps_kernel(op)
    if args.format == "csv":
        _emit(args, None, np.vstack([op.matrix, kernel.table]))
    else:
        _emit(args, {"operator": op.to_json(), "kernel": kernel.table})
    return EXIT_OK


def cmd_enumerate(args) -> int:
    w, h = args.n, args.N if args.N is not None else args.n
    if args.model == "ising":
        res = oracle.enumerate_ising(oracle.square_grid(w, h, args.bc == "plus"),
                                     _beta(args.beta), args.bc)
    elif args.model == "at":
        res = oracle.enumerate_at(oracle.square_grid(w, h, args.bc == "plus"), args.J, args.U, args.bc)
    elif args.model == "rc":
        res = oracle.enumerate_rc(oracle.square_grid(w, h, args.bc == "wired"), args.p, args.q,
                                  "wired" if args.bc == "wired" else "free")
    elif args.model == "loop":
        from .lattice import build_hex_domain
        centres = [(m, 0) for m in range(w)]
        res = oracle.enumerate_loop(build_hex_domain(centres), args.x, args.loop_n)
    else:
        raise UsageError(f"unknown model {args.model!r}")
    _emit(args, res.to_json())
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(suites.SUITES) if args.suite == "all" else [args.suite]
    if any(n not in suites.SUITES for n in names):
        raise UsageError(f"unknown suite; choose from {', '.join(suites.SUITES)} or all")
    results = [suites.run_suite(n, args.seed) for n in names]
    for r in results:
        sys.stderr.write(f"{'PASS' if r.passed else 'FAIL'} {r.name}\n")
    _emit(args, {"results": [r.to_json() for r in results]})
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_critical_points(args) -> int:
    table = oracle.critical_points()
    if args.format == "json" or args.out:
        _emit(args, table)
    else:
        sys.stdout.write(f"beta_c        {table['beta_c']:.10f}\n")
        sys.stdout.write(f"AT J = U      {table['at_J']:.10f}\n")
        for q, v in table["p_sd"].items():
            sys.stdout.write(f"p_sd({q})       {v:.10f}\n")
        for n, v in table["x_c"].items():
            sys.stdout.write(f"x_c({n})       {v:.10f}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(p, model_choices=("ising", "at", "loop")):
    p.add_argument("--model", choices=model_choices, default=model_choices[0])
    p.add_argument("--regime", choices=sholo.REGIMES, default="critical")
    p.add_argument("--beta", default=None, help="coupling; 'bc' selects the critical value")
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--J", type=float, default=propagate.AT_CRITICAL)
    p.add_argument("--U", type=float, default=propagate.AT_CRITICAL)
    p.add_argument("--n", type=int, default=3, help="interval size")
    p.add_argument("--N", type=int, default=None, help="rows or power")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holo-lattice", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("propagator", help="build a propagator, print its spectrum")
    _common(p)
    p.add_argument("--variant", choices=propagate.VARIANTS, default="literal")
    p.set_defaults(func=cmd_propagator)

    p = sub.add_parser("transfer", help="transfer matrices, duality, conjugation checks")
    _common(p)
    p.add_argument("--action", choices=("build", "duality", "conjugation-check"), default="build")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("sholo", help="relation residuals of a field file")
    _common(p)
    p.add_argument("--field", default=None)
    p.add_argument("--loop-n", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--exclude", type=float, nargs=2, default=None, metavar=("X", "Y"))
    p.add_argument("--riemann", action="store_true")
    p.add_argument("--convention", choices=("normal", "tangent"), default="normal")
    p.set_defaults(func=cmd_sholo)

    p = sub.add_parser("correlate", help="two-point and multipoint identity checks")
    _common(p)
    p.add_argument("--check", choices=("two-point", "multipoint", "epsilon"), default="two-point")
    p.set_defaults(func=cmd_correlate, n=2)

    p = sub.add_parser("rps", help="boundary operator, kernel and extension")
    _common(p)
    p.add_argument("--variant", choices=propagate.VARIANTS, default="consistent")
    p.add_argument("--extend", action="store_true")
    p.add_argument("--u", default=None, help="comma-separated real boundary data")
    p.set_defaults(func=cmd_rps)

    p = sub.add_parser("enumerate", help="exact enumeration oracle")
    _common(p, ("ising", "at", "rc", "loop"))
    p.add_argument("--bc", choices=("free", "plus", "wired"), default="free")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--loop-n", type=float, default=1.0)
    p.set_defaults(func=cmd_enumerate, beta="0.4", x=0.5)

    p = sub.add_parser("verify", help="run a named verification suite")
    p.add_argument("suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("critical-points", help="critical couplings table")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_critical_points)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_ERROR
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_ERROR
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
