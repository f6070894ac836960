"""Print the regime grid as a character map (alpha down, beta across)."""

import argparse
from fractions import Fraction

from bachlike.regime import BACH_LINE, LAMBDA, OPEN, V_ONLY, grid_values, regime_grid

SYMBOL = {LAMBDA: "L", BACH_LINE: "B", V_ONLY: "V", OPEN: "."}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", default="-1")
    ap.add_argument("--hi", default="1")
    ap.add_argument("--step", default="1/4")
    a = ap.parse_args()
    lo, hi, step = Fraction(a.lo), Fraction(a.hi), Fraction(a.step)
    betas = grid_values(lo, hi, step)
    grid = regime_grid(lo, hi, step)
    width = len(betas)
    print("alpha\\beta " + " ".join(f"{float(b):>5.2f}" for b in betas))
    for i in range(0, len(grid), width):
        row = grid[i:i + width]
        print(f"{row[0].alpha:>10.2f} " + " ".join(f"{SYMBOL[v.regime]:>5s}" for v in row))
    counts = {r: sum(v.regime == r for v in grid) for r in SYMBOL}
    print("counts", counts)


if __name__ == "__main__":
    main()
