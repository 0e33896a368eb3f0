"""Command-line interface: ``relinv {invariants,check,image-invariant,warp}``.

Exit codes: 0 success, 1 failed check or other library error, 2 parse or
usage error, 3 degenerate configuration, 4 horizon crossing the image support.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import checks
from .errors import (
    FrameSolveFailure,
    HorizonCrossesSupport,
    ParseError,
    RelinvError,
    UnsupportedFormat,
)
from .image_integral import NEAR_SINGULAR_TOL, IntegralSpec, integral_invariant, invariance_experiment, load_pgm, save_pgm, warp_image
from .invariants import compile_expression, fundamental_invariants, invariant_vector, relative_invariant
from .projective_core import apply_config, degeneracy, read_homography, read_points, total_jacobian
from .reports import format_kv
from .sampling import DEFAULT_SEED, MIN_DENOMINATOR, make_rng, random_homography

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_DEGENERATE, EXIT_HORIZON = 0, 1, 2, 3, 4


def _int(text):
    return int(text, 0)


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="relinv", formatter_class=fmt,
                                     description="Relative and absolute projective invariants.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("text", "json"), default="text", help="report format")
        p.add_argument("--output", default=None, help="write the report here instead of stdout")

    p = sub.add_parser("invariants", formatter_class=fmt,
                       help="invariants of a points file (one 'x y' pair per line)")
    p.add_argument("points")
    p.add_argument("--verify", type=int, default=0, metavar="N",
                   help="re-check invariance under N seeded random homographies")
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED, help="seed for --verify (0xC0FFEE)")
    p.add_argument("--weight", type=int, default=None, help="also evaluate a relative invariant of this weight")
    p.add_argument("--expr", default="1", help="absolute part F(I1_5, I2_5, ...) used with --weight")
    common(p)

    p = sub.add_parser("check", formatter_class=fmt, help="run property suites")
    p.add_argument("suite", choices=checks.SUITES)
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED, help="base seed (0xC0FFEE)")
    p.add_argument("--trials", type=int, default=None,
                   help="trials per check (default: each check's own count)")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    common(p)

    p = sub.add_parser("image-invariant", formatter_class=fmt,
                       help="Monte-Carlo integral invariant of a PGM image")
    p.add_argument("image")
    p.add_argument("--n", type=int, default=4, help="points per tuple")
    p.add_argument("--alpha", type=_int_list, default=None,
                   help="comma-separated exponents of I1_i (length n, first four 0; default all 0)")
    p.add_argument("--beta", type=_int_list, default=None,
                   help="comma-separated exponents of I2_i (length n, first four 0; default all 0)")
    p.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo samples")
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED, help="seed (64-bit; 0xC0FFEE)")
    p.add_argument("--warp", default=None, metavar="G_FILE",
                   help="homography file; run the invariance experiment against the warped image")
    p.add_argument("--workers", type=int, default=1, help="worker processes (result does not depend on it)")
    p.add_argument("--signed", action="store_true", help="keep the sign of the invariantized Jacobian")
    p.add_argument("--tol", type=float, default=NEAR_SINGULAR_TOL,
                   help="rejection threshold for near-degenerate tuples (relative to scale**degree)")
    common(p)

    p = sub.add_parser("warp", formatter_class=fmt, help="warp a PGM image by a homography")
    p.add_argument("image")
    p.add_argument("homography")
    p.add_argument("--output", required=True, help="output PGM path")
    p.add_argument("--width", type=int, default=None, help="output width (default: input width)")
    p.add_argument("--height", type=int, default=None, help="output height (default: input height)")
    p.add_argument("--maxval", type=int, default=255, help="output PGM maxval")
    return parser


def _emit(args, fields, text=None):
    body = json.dumps(fields, default=float) + "\n" if args.format == "json" else (text or format_kv(fields))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def _drift(cfg, trials, seed):
    """Largest relative change of the invariants under seeded homographies."""
    rng = make_rng(seed)
    i1, i2 = fundamental_invariants(cfg)
    base = invariant_vector(cfg)
    worst = 0.0
    done = 0
    while done < trials:
        g = random_homography(rng)
        try:
            moved = apply_config(g, cfg)
        except ArithmeticError:
            continue
        if degeneracy(moved, rel=MIN_DENOMINATOR) is not None:
            continue
        m1, m2 = fundamental_invariants(moved)
        for a, b in zip(i1 + i2, m1 + m2):
            worst = max(worst, abs(b - a) / abs(a))
        predicted = base.jinv / total_jacobian(g, cfg)
        worst = max(worst, abs(invariant_vector(moved).jinv - predicted) / abs(predicted))
        done += 1
    return worst


def cmd_invariants(args):
    cfg = read_points(args.points)
    if cfg.n < 4:
        raise ParseError(f"need at least 4 points, got {cfg.n}")
    vec = invariant_vector(cfg)
    fields = {"n": vec.n}
    fields.update({k: float(v) for k, v in vec.generators().items() if k != "J"})
    fields["jinv"] = float(vec.jinv)
    if args.weight is not None:
        fields["weight"] = args.weight
        fields["expr"] = args.expr
        fields["relative_invariant"] = float(relative_invariant(args.weight, compile_expression(args.expr),
                                                                cfg, vec.jinv))
    if args.verify:
        fields["verify_trials"] = args.verify
        fields["verify_seed"] = args.seed
        fields["max_drift"] = _drift(cfg, args.verify, args.seed)
    text = vec.to_text() + format_kv({k: fields[k] for k in fields
                                      if k in ("weight", "expr", "relative_invariant",
                                               "verify_trials", "verify_seed", "max_drift")})
    _emit(args, fields, text)
    return EXIT_OK


def cmd_check(args):
    reports = checks.run_suite(args.suite, args.trials, args.seed, args.inject_fault)
    passed = all(r.passed for r in reports)
    fields = {"suite": args.suite, "seed": args.seed, "pass": passed,
              "reports": [r.to_dict() for r in reports]}
    text = "\n".join(r.to_text() for r in reports) + "\n" + format_kv(
        {"suite": args.suite, "checks": len(reports), "pass": passed})
    if not passed:
        first = next(r for r in reports if not r.passed)
        fields["counterexample"] = first.counterexample
        text += format_kv({"first_failure": first.name, "counterexample": first.counterexample})
    _emit(args, fields, text)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_image_invariant(args):
    img = load_pgm(args.image)
    spec = IntegralSpec(args.n, args.alpha, args.beta, args.samples, args.seed, args.signed)
    if args.warp is None:
        est = integral_invariant(img, spec, workers=args.workers, tol=args.tol)
        _emit(args, est.to_dict())
        return EXIT_OK
    report = invariance_experiment(img, spec, read_homography(args.warp), workers=args.workers,
                                   tol=args.tol)
    fields = report.to_dict()
    fields.update(samples=spec.samples, seed=spec.seed)
    text = format_kv(fields) + f"invariance: {'pass' if report.passed else 'fail'}\n"
    _emit(args, fields, text)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_warp(args):
    img = load_pgm(args.image)
    dims = (args.width or img.width, args.height or img.height)
    save_pgm(args.output, warp_image(img, read_homography(args.homography), dims), args.maxval)
    return EXIT_OK


COMMANDS = {"invariants": cmd_invariants, "check": cmd_check,
            "image-invariant": cmd_image_invariant, "warp": cmd_warp}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, UnsupportedFormat, OSError) as exc:
        return _fail(EXIT_PARSE, exc)
    except FrameSolveFailure as exc:
        return _fail(EXIT_DEGENERATE, exc)
    except HorizonCrossesSupport as exc:
        return _fail(EXIT_HORIZON, exc)
    except RelinvError as exc:
        return _fail(EXIT_FAIL, exc)
    except ValueError as exc:
        return _fail(EXIT_PARSE, exc)


def _fail(code, exc):
    print(f"relinv: error: {exc}", file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
