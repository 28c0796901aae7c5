"""Locate where optimized rows start beating XOR rows, by scan then bisection."""
import argparse

import numpy as np

from nonlocality.optimizer import OptimizerConfig, optimize, scan_curve, transition_point


def gap(x, n, cfg):
    r = optimize(x, n, cfg)
    return r.best_value - r.xor_value


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--pairs", type=int, nargs="+", default=[3, 4])
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--margin", type=float, default=1e-4)
    p.add_argument("--bisect", type=int, default=6, help="bisection steps after the scan")
    args = p.parse_args()

    cfg = OptimizerConfig(restarts=args.restarts)
    grid = np.round(np.arange(0.40, 0.7001, 0.01), 2)
    for n in args.pairs:
        x_hit = transition_point(scan_curve(n, grid, cfg), args.margin)
        if x_hit is None:
            print(f"n={n}: no transition on the grid")
            continue
        lo, hi = x_hit - 0.01, x_hit
        for _ in range(args.bisect):
            mid = (lo + hi) / 2
            lo, hi = (lo, mid) if gap(mid, n, cfg) > args.margin else (mid, hi)
        print(f"n={n}: grid point {x_hit:.2f}, bracket [{lo:.5f}, {hi:.5f}]")


if __name__ == "__main__":
    main()
