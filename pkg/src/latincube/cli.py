"""Command-line entry point.

Exit codes: 0 success, 1 valid negative answer (unavoidable, infeasible,
invalid cube), 2 usage or I/O error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import secrets
import sys
from fractions import Fraction
from pathlib import Path

from . import bounds as bnd
from .cube import CubeFormatError, boolean_cube, parse_cube, recover_structure, serialize_cube, validate_latin
from .engine import SolveFailed, SolverParams, solve
from .forbidden import ForbiddenFormatError, conflict_stats, conflicts, parse_forbidden, random_forbidden, serialize_forbidden, unavoidable_half
from .oracle import Avoidable, BudgetExceeded, decide_avoidable, enumerate_avoiders, DEFAULT_BUDGET
from .structure import OrderTooLarge, check_property

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(32)
    print(f"seed={seed}", file=sys.stderr)
    return seed


def cmd_gen_boolean(args) -> int:
    try:
        cube = boolean_cube(args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, serialize_cube(cube))
    return EXIT_OK


def cmd_gen_forbidden(args) -> int:
    try:
        A = random_forbidden(args.n, args.m, args.density, _seed(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, serialize_forbidden(A))
    return EXIT_OK


def cmd_gen_unavoidable(args) -> int:
    try:
        A = unavoidable_half(args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, serialize_forbidden(A))
    return EXIT_OK


def _verify(cube, A) -> tuple[bool, str]:
    report = validate_latin(cube)
    if not report.ok:
        return False, f"latin=fail violations={len(report.violations)}"
    if A is None:
        return True, "latin=ok"
    n_conf = len(conflicts(cube, A))
    return n_conf == 0, f"latin=ok conflicts={n_conf}"


def cmd_solve(args) -> int:
    A = parse_forbidden(_read(args.forbidden))
    seed = _seed(args)
    base = SolverParams.asymptotic() if args.paper_constants else SolverParams()
    overrides = {
        "seed": seed,
        "permutation_samples": args.samples,
        "max_restarts": args.restarts,
        "strict_thresholds": args.strict,
        "polish_rounds": args.polish_rounds,
    }
    for name in ("alpha", "kappa", "epsilon", "theta"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        params = SolverParams(**{**base.__dict__, **overrides})
        result = solve(A, params, workers=args.parallel)
    except SolveFailed as exc:
        if args.log:
            _write(args.log, f"seed={seed}\n" + exc.log_text())
        print(f"no avoiding cube after {len(exc.log)} attempts", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok, summary = _verify(result.cube, A)
    if not ok:
        print(f"internal error: solver output failed verification ({summary})", file=sys.stderr)
        return EXIT_USAGE
    if args.log:
        _write(args.log, f"seed={seed}\n" + result.log_text())
    _write(args.out, serialize_cube(result.cube))
    if args.out not in (None, "-"):
        print(f"{summary} restarts={result.restarts} swaps={len(result.plan)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cube = parse_cube(_read(args.cube))
    A = parse_forbidden(_read(args.forbidden)) if args.forbidden else None
    if A is not None and A.n != cube.n:
        raise UsageError(f"order mismatch: cube n={cube.n}, forbidden n={A.n}")
    ok, summary = _verify(cube, A)
    print(summary)
    for v in validate_latin(cube).violations:
        print(f"violated {v}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_NO


def cmd_oracle(args) -> int:
    A = parse_forbidden(_read(args.forbidden))
    if args.enumerate is not None:
        try:
            found = enumerate_avoiders(A, args.enumerate, args.budget)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        except RuntimeError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_BUDGET
        print(f"avoiders={len(found)}")
        if args.out:
            _write(args.out, "".join(serialize_cube(c) for c in found))
        return EXIT_OK if found else EXIT_NO
    result = decide_avoidable(A, args.budget)
    if isinstance(result, Avoidable):
        print(f"avoidable nodes={result.nodes}")
        if args.out:
            _write(args.out, serialize_cube(result.witness))
        return EXIT_OK
    if isinstance(result, BudgetExceeded):
        print(f"budget-exceeded nodes={result.nodes}")
        return EXIT_BUDGET
    print(f"unavoidable nodes={result.nodes}")
    return EXIT_NO


def cmd_bounds(args) -> int:
    if args.paper_constants:
        params = bnd.BoundsParams.asymptotic()
    else:
        missing = [n for n in ("alpha", "gamma", "kappa", "epsilon", "theta") if getattr(args, n) is None]
        if missing:
            raise UsageError(f"missing --{', --'.join(missing)} (or use --paper-constants)")
        try:
            params = bnd.BoundsParams(args.alpha, args.gamma, args.kappa, args.epsilon, args.theta)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        rows = bnd.scan(params, args.t_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for row in rows:
        print(row.line())
    best = next((r.t for r in rows if r.ok), None)
    print(f"min_t={best if best is not None else 'none'}")
    return EXIT_OK if best is not None else EXIT_NO


def cmd_stats(args) -> int:
    cube = parse_cube(_read(args.cube))
    A = parse_forbidden(_read(args.forbidden))
    if A.n != cube.n:
        raise UsageError(f"order mismatch: cube n={cube.n}, forbidden n={A.n}")
    structured = recover_structure(cube)
    if structured is None:
        print("cube is not isomorphic to the Boolean cube", file=sys.stderr)
        return EXIT_NO
    print(conflict_stats(structured, A).summary())
    return EXIT_OK


def cmd_properties(args) -> int:
    cube = parse_cube(_read(args.cube))
    props = args.prop or list(range(1, 11))
    all_pass = True
    for p in props:
        try:
            report = check_property(cube, p, sampled=args.sampled, seed=args.seed or 0)
        except OrderTooLarge as exc:
            print(f"P{p} skipped: {exc}", file=sys.stderr)
            continue
        print(report)
        all_pass &= report.passed
    return EXIT_OK if all_pass else EXIT_NO


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latincube", description="Latin cubes avoiding forbidden entries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-boolean", help="write the Boolean cube of order 2^t")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_boolean)

    p = sub.add_parser("gen-forbidden", help="write a random (m,m,m,m)-cube")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_forbidden)

    p = sub.add_parser("gen-unavoidable", help="write the opposite-corner unavoidable cube")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_unavoidable)

    p = sub.add_parser("solve", help="find a Latin cube avoiding a forbidden cube")
    p.add_argument("--forbidden", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--polish-rounds", type=int)
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--paper-constants", action="store_true")
    for name in ("alpha", "kappa", "epsilon", "theta"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--out")
    p.add_argument("--log")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a cube, optionally against a forbidden cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--forbidden")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="exact avoidability for small orders")
    p.add_argument("--forbidden", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--enumerate", type=int, metavar="L")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bounds", help="scan the feasibility inequalities over t")
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--paper-constants", action="store_true")
    for name in ("alpha", "gamma", "kappa", "epsilon", "theta"):
        p.add_argument(f"--{name}", type=_fraction)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("stats", help="conflict statistics of a Boolean-isomorphic cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--forbidden", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("properties", help="check the structural properties P1-P10")
    p.add_argument("--cube", required=True)
    p.add_argument("--prop", type=int, action="append", choices=range(1, 11))
    p.add_argument("--sampled", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_properties)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "solve" and args.paper_constants and any(
        getattr(args, n) is not None for n in ("alpha", "kappa", "epsilon", "theta")
    ):
        parser.error("--paper-constants cannot be combined with explicit thresholds")
    if args.command == "bounds" and args.paper_constants and any(
        getattr(args, n) is not None for n in ("alpha", "gamma", "kappa", "epsilon", "theta")
    ):
        parser.error("--paper-constants cannot be combined with explicit parameters")
    try:
        return args.func(args)
    except (UsageError, CubeFormatError, ForbiddenFormatError) as exc:
        print(f"latincube: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
