"""Command-line interface.

Exit status: 0 when the condition holds / the check passes, 1 when it does
not, 2 for usage errors and for any error raised while computing.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, exprdsl
from .classifier import THEOREMS, ConditionKind, classify, verify_theorem
from .constructor import FAMILIES, build_e2_circle, build_e2_helix, build_example_1, sweep, sweep_to_csv
from .curve import curve_from_csv, curve_to_csv, frenet, legendre_scalar
from .manifold import (BUILTINS, get_builtin, load_manifold_file, random_points,
                       verify_structure)
from .numerics import DEFAULT_STEP

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _number(text: str) -> float:
    """Numeric argument; accepts expressions such as ``3*pi/4``."""
    try:
        return exprdsl.evaluate_text(text)
    except exprdsl.ExprError as err:
        raise argparse.ArgumentTypeError(f"bad number {text!r}: {err}") from None


def _number_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return [_number(t) for t in items]


def _span(text: str) -> tuple[float, float]:
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"span must look like A:B, got {text!r}")
    lo, hi = _number(a), _number(b)
    if not hi > lo:
        raise argparse.ArgumentTypeError(f"span end must exceed start, got {text!r}")
    return lo, hi


def _positive(text: str) -> float:
    value = _number(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _param(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"parameter must look like NAME=VALUE, got {text!r}")
    return key.strip(), _number(value)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _manifold_from_args(args, required: bool):
    if getattr(args, "spec", None):
        return load_manifold_file(args.spec, dict(args.param or []))
    if getattr(args, "builtin", None):
        params = {}
        if args.c2 is not None:
            params["c2"] = args.c2
        return get_builtin(args.builtin, **params)
    if required:
        raise UsageError("one of --spec or --builtin is required")
    return None


def _load_curve(args):
    M = _manifold_from_args(args, required=False)
    return curve_from_csv(Path(args.input).read_text(), M)


# --- subcommands -----------------------------------------------------------

def cmd_manifold_list(args) -> int:
    for name, (_, params) in BUILTINS.items():
        sys.stdout.write(name + (" " + " ".join(params) if params else "") + "\n")
    return EXIT_OK


def cmd_manifold_check(args) -> int:
    M = _manifold_from_args(args, required=True)
    pts = random_points(M, args.points, seed=args.seed) if M.coords else None
    rep = verify_structure(M, pts, tol=args.tol, fd_step=args.fd_step)
    out = rep.to_dict()
    out["seed"] = args.seed
    _emit(_dump(out), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_curve_build(args) -> int:
    if args.example == "ex1":
        c = build_example_1(args.span, args.step)
    else:
        if args.c2 is None or args.theta is None:
            raise UsageError(f"--example {args.example} needs --c2 and --theta")
        builder = build_e2_circle if args.example == "e2-circle" else build_e2_helix
        c = builder(args.c2, args.theta, args.span, args.step)
    _emit(curve_to_csv(c), args.out)
    return EXIT_OK


def cmd_curve_frenet(args) -> int:
    c = _load_curve(args)
    f = frenet(c)
    if args.json:
        G = legendre_scalar(c).values
        out = {
            "order": f.order,
            "samples": len(f.s),
            "curvatures": [{"name": f"k{a + 1}", "min": float(np.min(k)), "max": float(np.max(k))}
                           for a, k in enumerate(f.curvatures)],
            "eta": [{"name": f"eta_v{a + 1}", "min": float(np.min(f.eta[:, a])),
                     "max": float(np.max(f.eta[:, a]))} for a in range(f.order)],
            "legendre_scalar": {"min": float(np.min(G)), "max": float(np.max(G))},
        }
        _emit(_dump(out), args.out)
        return EXIT_OK
    fmt = lambda v: format(float(v), ".17g")
    lines = [",".join(["s"] + [f"k{a + 1}" for a in range(f.order - 1)])]
    for n in range(len(f.s)):
        lines.append(",".join([fmt(f.s[n])] + [fmt(k[n]) for k in f.curvatures]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    c = _load_curve(args)
    rep = classify(c, args.kind, tol=args.tol, lambda_floor=args.lambda_floor)
    _emit(_dump(rep.to_dict(samples=args.samples)), args.out)
    return EXIT_OK if rep.verdict == "holds" else EXIT_FAIL


def cmd_verify(args) -> int:
    c = _load_curve(args)
    rep = verify_theorem(args.theorem, c, tol=args.tol, lambda_floor=args.lambda_floor)
    _emit(_dump(rep.to_dict()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    kinds = [k for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        ConditionKind.parse(k)
    rows = sweep(args.family, args.c2, args.theta, kinds, args.span, args.step,
                 tol=args.tol, lambda_floor=args.lambda_floor)
    _emit(sweep_to_csv(rows), args.out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def _add_manifold_source(p, required: bool):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--spec", metavar="FILE", help="manifold specification (JSON)")
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="builtin manifold")
    p.add_argument("--c2", type=_positive, help="E(2) structure constant")
    p.add_argument("--param", type=_param, action="append", metavar="NAME=VALUE",
                   help="parameter for a --spec manifold (repeatable)")


def _add_tolerances(p):
    p.add_argument("--tol", type=_positive, default=1e-4)
    p.add_argument("--lambda-floor", type=_positive, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contactframe",
        description="Frenet data and mean-curvature conditions for curves in contact metric manifolds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    man = sub.add_parser("manifold", help="list or check manifolds")
    man_sub = man.add_subparsers(dest="action", required=True)
    p = man_sub.add_parser("list", help="list builtin manifolds")
    p.set_defaults(func=cmd_manifold_list)
    p = man_sub.add_parser("check", help="verify the contact metric structure identities")
    _add_manifold_source(p, required=True)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.add_argument("--fd-step", type=_positive, default=1e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_manifold_check)

    cur = sub.add_parser("curve", help="build curves or compute Frenet data")
    cur_sub = cur.add_subparsers(dest="action", required=True)
    p = cur_sub.add_parser("build", help="sample one of the example curves")
    p.add_argument("--example", required=True, choices=["ex1", "e2-circle", "e2-helix"])
    p.add_argument("--c2", type=_positive)
    p.add_argument("--theta", type=_number)
    p.add_argument("--span", type=_span, default=(0.0, 1.0))
    p.add_argument("--step", type=_positive, default=DEFAULT_STEP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve_build)
    p = cur_sub.add_parser("frenet", help="osculating order and curvature functions")
    p.add_argument("--in", dest="input", required=True)
    _add_manifold_source(p, required=False)
    p.add_argument("--json", action="store_true", help="summary report instead of per-sample CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve_frenet)

    p = sub.add_parser("classify", help="decide a C-parallel / C-proper condition")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--kind", required=True, choices=[k.value for k in ConditionKind])
    _add_manifold_source(p, required=False)
    _add_tolerances(p)
    p.add_argument("--samples", action="store_true", help="include per-sample lambda")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="check a theorem's identities on a curve")
    p.add_argument("--theorem", required=True, choices=THEOREMS)
    p.add_argument("--in", dest="input", required=True)
    _add_manifold_source(p, required=False)
    _add_tolerances(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="classify an E(2) family over a parameter grid")
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--c2", required=True, type=_number_list)
    p.add_argument("--theta", required=True, type=_number_list)
    p.add_argument("--kinds", required=True, help="comma-separated condition kinds")
    p.add_argument("--span", type=_span, default=(0.0, 1.0))
    p.add_argument("--step", type=_positive, default=DEFAULT_STEP)
    _add_tolerances(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as err:
        sys.stderr.write(f"usage error: {err}\n")
        return EXIT_ERROR
    except (ValueError, ArithmeticError, OSError, RuntimeError) as err:
        sys.stderr.write(_dump({"error": type(err).__name__, "message": str(err)}))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
