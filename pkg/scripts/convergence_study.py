"""Quadrature convergence: region lemma residuals and whole-manifold tails versus q."""

import argparse

from bachlike.geometry import catalog_get
from bachlike.lemmas import verify_lemma


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=int, nargs="+", default=[6, 8, 12, 16, 24])
    ap.add_argument("--lemmas", nargs="+", default=["L3.1", "L4", "L5", "L-VW"])
    args = ap.parse_args()
    print(f"{'geometry':8s} {'lemma':6s} {'q':>3s} {'residual':>10s} {'tol':>10s} {'refine':>10s} {'r':>6s}  verdict")
    for name, r in (("GAUSS", 4.0), ("CYL", 5.0)):
        geom = catalog_get(name)
        for lemma in args.lemmas:
            for q in args.q:
                out = verify_lemma(lemma, geom, r=r, q=q)
                rep = out.report
                print(f"{name:8s} {lemma:6s} {q:3d} {rep.max_residual:10.2e} {rep.tolerance:10.2e} "
                      f"{out.refinement:10.2e} {out.r or 0:6.1f}  {rep.verdict}")


if __name__ == "__main__":
    main()
