#!/usr/bin/env python3
"""Generate the standard traces, audit them, and print exponent tables.

Writes trace and audit files into ./out (override with --outdir).
"""

import argparse
import json
import pathlib
import sys

from maxsing.cli import main as cli


RUNS = [
    ("split4_log3x", ["--family", "quadric", "--phi", "log3x", "--steps", "12"]),
    ("split4_pow", ["--family", "quadric", "--phi", "pow", "1/2", "--steps", "12"]),
    ("grassmann42_log3x", ["--family", "grassmann", "--n", "4", "--k", "2",
                           "--phi", "log3x", "--steps", "8", "--max-height", "4"]),
    ("grassmann42_pow", ["--family", "grassmann", "--n", "4", "--k", "2",
                         "--phi", "pow", "1/2", "--steps", "8", "--max-height", "4"]),
    ("prodforms23_log3x", ["--family", "prodforms", "--n", "2", "--k", "3",
                           "--phi", "log3x", "--steps", "8", "--max-height", "4"]),
    ("prodforms23_pow", ["--family", "prodforms", "--n", "2", "--k", "3",
                         "--phi", "pow", "1/2", "--steps", "8", "--max-height", "4"]),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="out")
    ap.add_argument("--seed", default="7")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, spec in RUNS:
        trace = outdir / f"{name}.json"
        print(f"== {name}")
        code = cli(["gen", *spec, "--seed", args.seed, "--out", str(trace)])
        if code not in (0, 2):
            print(f"   gen failed with exit {code}", file=sys.stderr)
            continue
        doc = json.loads(trace.read_text())
        n = len(doc["entries"])
        note = " (partial: decay target exhausted the multiplier budget)" if doc["partial"] else ""
        print(f"   {n} points{note}")
        audit = outdir / f"{name}.audit.json"
        vcode = cli(["verify", str(trace), "--out", str(audit)])
        print(f"   verify exit {vcode} -> {audit}")
        if n >= 3:
            cli(["exponent", str(trace)])
    return 0


if __name__ == "__main__":
    sys.exit(main())
