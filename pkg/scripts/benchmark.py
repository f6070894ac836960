"""Wall time of the jet pipeline per point count and jet order."""

import argparse
import time

from bachlike.fields import PointContext
from bachlike.geometry import RandomMetricSpec, random_metric, sample_points


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, nargs="+", default=[50, 200])
    ap.add_argument("--orders", type=int, nargs="+", default=[4, 5])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    geom = random_metric(RandomMetricSpec(seed=args.seed, epsilon=0.05))
    for order in args.orders:
        for n in args.points:
            pts = sample_points(geom, n, seed=0)
            t0 = time.perf_counter()
            ctx = PointContext(geom, pts, order)
            ctx.B, ctx.U, ctx.V
            if order >= 5:
                ctx.divergence(ctx.B)
            dt = time.perf_counter() - t0
            print(f"order {order}  points {n:5d}  {dt:7.2f} s  {1e3 * dt / n:7.2f} ms/point")


if __name__ == "__main__":
    main()
