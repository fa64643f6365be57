"""Command-line surface: gen, verify, exponent, bruteforce.

Exit codes: 0 success, 1 usage or malformed input, 2 search budget
exhausted (partial trace written and flagged), 3 audit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import builder, verifier
from .builder import ApproxFn, BudgetExceeded, SequenceTrace
from .exact_geometry import dec_str
from .families import SearchBudget
from .multilinear import InvalidParameters, load_map
from .quadric import InvalidWitness, load_form, split4

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_AUDIT = 3


def _default_precision() -> int:
    env = os.environ.get("MAXSING_PRECISION_BITS")
    if env:
        try:
            return max(8, int(env))
        except ValueError:
            pass
    return 64


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxsing", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="construct a trace")
    g.add_argument("--family", required=True, choices=["grassmann", "prodforms", "quadric", "klinear"])
    g.add_argument("--n", type=int, help="source dimension (grassmann/prodforms)")
    g.add_argument("--k", type=int, help="arity (grassmann/prodforms)")
    g.add_argument("--quadric-file", help="quadratic form JSON (default: built-in split4)")
    g.add_argument("--klinear-file", help="k-linear map JSON")
    g.add_argument("--phi", nargs="+", required=True, metavar="SPEC",
                   help="decay target: 'log3x' or 'pow p/q' with 0 < p/q < 1")
    g.add_argument("--steps", type=int, required=True, help="number of trace points (>= 2)")
    g.add_argument("--seed", type=int, default=0, help="tie-breaking seed (0: natural order)")
    g.add_argument("--out", required=True, help="output trace path")
    g.add_argument("--precision-bits", type=int, default=None)
    g.add_argument("--max-height", type=int, default=6, help="candidate search height cap")
    g.add_argument("--max-multiplier-bits", type=int, default=4096,
                   help="bit cap for the step multiplier search")

    v = sub.add_parser("verify", help="audit a trace")
    v.add_argument("trace", help="trace JSON path")
    v.add_argument("--precision", type=int, default=None)
    v.add_argument("--bruteforce-xmax", type=int, default=None)
    v.add_argument("--sample-range", type=int, default=20)
    v.add_argument("--out", help="write the audit JSON here (default: stdout)")

    e = sub.add_parser("exponent", help="per-scale certified exponent lower bounds")
    e.add_argument("trace")
    e.add_argument("--precision", type=int, default=None)
    e.add_argument("--json", action="store_true")

    b = sub.add_parser("bruteforce", help="exhaustive best-approximation oracle")
    b.add_argument("trace")
    b.add_argument("--xmax", type=int, required=True)
    b.add_argument("--precision", type=int, default=None)
    b.add_argument("--json", action="store_true")
    return p


def _parse_phi(spec: list[str], precision: int) -> ApproxFn:
    if spec[0] == "log3x":
        if len(spec) != 1:
            raise ValueError("log3x takes no parameter")
        return ApproxFn("log3x", precision_bits=precision)
    if spec[0] == "pow":
        if len(spec) != 2:
            raise ValueError("pow needs one exponent parameter p/q")
        exponent = Fraction(spec[1])
        if not 0 < exponent < 1:
            raise ValueError("power-law exponent must lie strictly between 0 and 1 "
                             "(the decay target maps into (0, 1])")
        return ApproxFn("pow", exponent, precision_bits=precision)
    raise ValueError(f"unknown decay target {spec[0]!r}")


def _make_adapter(args):
    from . import families

    if args.family in ("grassmann", "prodforms"):
        if args.n is None or args.k is None:
            raise ValueError(f"{args.family} needs --n and --k")
        maker = families.grassmann_adapter if args.family == "grassmann" else families.prodforms_adapter
        return maker(args.n, args.k)
    if args.family == "quadric":
        form, wit = load_form(args.quadric_file) if args.quadric_file else split4()
        return families.quadric_adapter(form, wit)
    if args.klinear_file is None:
        raise ValueError("klinear needs --klinear-file")
    return families.KLinearAdapter(load_map(args.klinear_file), "klinear")


def cmd_gen(args) -> int:
    precision = args.precision_bits or _default_precision()
    try:
        phi = _parse_phi(args.phi, precision)
        adapter = _make_adapter(args)
        if args.steps < 2:
            raise ValueError("--steps must be at least 2")
    except (ValueError, InvalidParameters, InvalidWitness, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    budget = SearchBudget(max_height=args.max_height, multiplier_bits=args.max_multiplier_bits)
    try:
        trace = builder.run(adapter, phi, args.steps, seed=args.seed, budget=budget)
    except BudgetExceeded as exc:
        builder.save_trace(exc.partial, args.out)
        print(f"budget exhausted: {exc}", file=sys.stderr)
        print(f"partial trace with {len(exc.partial.entries)} points written to {args.out}",
              file=sys.stderr)
        return EXIT_BUDGET
    except builder.InvalidSteps as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    builder.save_trace(trace, args.out)
    print(f"trace with {len(trace.entries)} points written to {args.out}")
    return EXIT_OK


def _load_trace_or_exit(path: str) -> SequenceTrace | None:
    try:
        return builder.load_trace(path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: cannot load trace {path}: {exc}", file=sys.stderr)
        return None


def cmd_verify(args) -> int:
    trace = _load_trace_or_exit(args.trace)
    if trace is None:
        return EXIT_USAGE
    precision = args.precision or _default_precision()
    try:
        report = verifier.audit_report(
            trace,
            precision_bits=precision,
            bruteforce_xmax=args.bruteforce_xmax,
            sample_range=args.sample_range,
        )
    except (verifier.MalformedTrace, verifier.TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if not report["all_pass"]:
        first = next(
            (f"index {r['index']}: {r['failures'][0]}" for r in report["conditions"] if r["failures"]),
            "spanning or domination failure",
        )
        print(f"audit FAILED ({first})", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def _scale_str(x) -> str:
    digits = str(int(x))
    if len(digits) <= 12:
        return dec_str(x, 4)
    return f"{digits[0]}.{digits[1:7]}e+{len(digits) - 1}"


def cmd_exponent(args) -> int:
    trace = _load_trace_or_exit(args.trace)
    if trace is None:
        return EXIT_USAGE
    precision = args.precision or _default_precision()
    try:
        rows = verifier.exponent_report(trace, precision)
    except builder.TraceTooShort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(
            [
                {"index": r.index, "X": str(r.x_scale), "D_hi": str(r.d_hi),
                 "lambda_lb": str(r.lambda_lb), "lambda_lb_dec": dec_str(r.lambda_lb, 12)}
                for r in rows
            ],
            indent=2,
        ))
        return EXIT_OK
    print(f"{'index':>5}  {'X':>16}  {'lambda_lb':>16}")
    for r in rows:
        print(f"{r.index:>5}  {_scale_str(r.x_scale):>16}  {dec_str(r.lambda_lb, 12):>16}")
    return EXIT_OK


def cmd_bruteforce(args) -> int:
    trace = _load_trace_or_exit(args.trace)
    if trace is None:
        return EXIT_USAGE
    precision = args.precision or _default_precision()
    try:
        lim = builder.limit_point(trace, precision)
        rows = verifier.brute_force_curve(lim, args.xmax, precision)
    except (builder.TraceTooShort, verifier.TooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(
            [
                {"X": r["X"], "lo": str(r["lo"]), "hi": str(r["hi"]),
                 "hi_dec": dec_str(r["hi"], 12), "argmin": [str(a) for a in r["argmin"]]}
                for r in rows
            ],
            indent=2,
        ))
        return EXIT_OK
    print(f"{'X':>5}  {'Dmin hi':>18}  argmin")
    for r in rows:
        arg = "(" + ", ".join(str(a) for a in r["argmin"]) + ")"
        print(f"{r['X']:>5}  {dec_str(r['hi'], 12):>18}  {arg}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handlers = {
        "gen": cmd_gen,
        "verify": cmd_verify,
        "exponent": cmd_exponent,
        "bruteforce": cmd_bruteforce,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
