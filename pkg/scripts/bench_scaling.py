#!/usr/bin/env python3
"""Time the solver's per-iteration cost over a ladder of problem sizes.

Builds one synthetic instance per size (fixed points per object, so the
object count grows with ``m``), times a few power-iteration steps after a
warm-up, fits the log-log slope against ``m``, and optionally times full
solves.  Writes ``bench.csv`` when an output directory is given.
"""

import argparse
import csv
import sys
from pathlib import Path

from hippi.cli import RunConfig, bench_ladder, fit_scaling_exponent


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--sizes", default="500,1000,2000,4000",
        help="comma-separated total point counts (default 500,1000,2000,4000)",
    )
    ap.add_argument("--points-per-object", type=int, default=20)
    ap.add_argument("--d", type=int, default=40, help="universe size")
    ap.add_argument("--iters", type=int, default=3, help="timed steps per size")
    ap.add_argument("--full", action="store_true", help="also time full solves")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="directory for bench.csv (default: print only)")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    sizes = tuple(int(s) for s in args.sizes.split(",") if s)
    cfg = RunConfig(
        command="bench",
        sizes=sizes,
        points_per_object=args.points_per_object,
        d=args.d,
        bench_iters=args.iters,
        full_solve=args.full,
        seed=args.seed,
    )
    rows = bench_ladder(cfg)
    for row in rows:
        line = (
            f"m={row['m']:>6} k={row['k']:>4} d={row['d']} "
            f"per-iteration={row['seconds_per_iteration']:.4f}s"
        )
        if "solve_seconds" in row:
            line += f" solve={row['solve_seconds']:.2f}s ({row['iterations']} iterations)"
        print(line)
    exponent = fit_scaling_exponent(
        [row["m"] for row in rows],
        [row["seconds_per_iteration"] for row in rows],
    )
    print(f"fitted exponent: {exponent:.3f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {out / 'bench.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
