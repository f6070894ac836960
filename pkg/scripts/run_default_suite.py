"""Run the default manifest and print a one-line summary per geometry."""

import argparse
import sys
from collections import Counter
from pathlib import Path

from bachlike.suite import run_manifest

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("manifest", nargs="?", default=str(ROOT / "manifests" / "default.ini"))
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    doc, code = run_manifest(args.manifest, out=args.out)
    by_geom: dict[str, Counter] = {}
    for row in doc["identities"]:
        by_geom.setdefault(row["geometry"], Counter())[row["verdict"]] += 1
    for geom, counts in by_geom.items():
        print(f"{geom:8s} " + "  ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    print("summary", doc["summary"], "exit", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
