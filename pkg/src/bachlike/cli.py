"""Command-line driver.

    python -m bachlike suite manifests/default.ini [--seed N] [--jet-order K]
                                                   [--quadrature Q] [--tolerance T] [--out PATH]
    python -m bachlike classify 1/2 1/6
    python -m bachlike grid manifests/default.ini

Exit codes: 0 when every check is PASS or SKIPPED (or otherwise not a
failure), 1 when any check FAILs, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .manifest import ManifestError, load_manifest
from .regime import classify_regime
from .suite import grid_report, suite_report, write_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("manifest", help="INI manifest ([geometry], [suite], [quadrature], [output])")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--jet-order", type=int, help="Taylor-jet order K (2..6)")
    p.add_argument("--quadrature", type=int, metavar="Q", help="Gauss-Legendre nodes per axis")
    p.add_argument("--tolerance", type=float, help="override every pointwise tolerance")
    p.add_argument("--out", help="report path ('-' for stdout only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bachlike", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_overrides(sub.add_parser("suite", help="run the identity and lemma suite of a manifest"))
    _add_overrides(sub.add_parser("grid", help="regime grid and bach-line check of a manifest"))
    c = sub.add_parser("classify", help="regime of alpha U + beta V = 0")
    c.add_argument("alpha", help="number or fraction, e.g. 1/2")
    c.add_argument("beta", help="number or fraction, e.g. 1/6")
    return parser


def _summary_line(doc: dict) -> str:
    s = doc.get("summary")
    if s is None:
        rows = doc["bach_line"]
        return f"regime grid: {len(doc['regime_grid'])} points; bach line checks: " + ", ".join(
            f"alpha={r['alpha']:g} {r['verdict']}" for r in rows)
    return ", ".join(f"{k}={v}" for k, v in s.items() if v)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "classify":
        try:
            v = classify_regime(args.alpha, args.beta)
        except (ValueError, ZeroDivisionError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(json.dumps(v.to_json(), indent=2, sort_keys=True))
        return EXIT_OK
    out = None if args.out == "-" else args.out
    try:
        m = load_manifest(args.manifest, seed=args.seed, jet_order=args.jet_order, quadrature=args.quadrature,
                          tolerance=args.tolerance, out=out)
    except ManifestError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out == "-":
        m = replace(m, out=None)
    doc = suite_report(m) if args.command == "suite" else grid_report(m)
    try:
        text = write_report(doc, m.out)
    except OSError as exc:
        print(f"configuration error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if m.out is None:
        sys.stdout.write(text)
    else:
        print(f"report written to {m.out}", file=sys.stderr)
    print(_summary_line(doc), file=sys.stderr)
    return doc["exit_code"]
