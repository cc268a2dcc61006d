#!/usr/bin/env python3
"""Reproduce the random-circuit benchmark panels (full grids, 20 seeds).

Writes one CSV per panel into results/. The depth-240 sweeps take a while on
a laptop; pass --quick for a reduced grid smoke run.
"""

import argparse
from pathlib import Path

from vcplab.experiments import ExperimentConfig, run_experiment

FULL = {
    "fig3b": dict(grid=list(range(20, 241, 20)), layer_depth=20),
    "fig3c": dict(depth=80),
    "fig3d": dict(depth=80),
    "fig3e": dict(depth=240, grid=list(range(1, 13))),
    "fig3fg": dict(depth=80, depth_grid=list(range(40, 241, 40))),
}

QUICK = {
    "fig3b": dict(grid=[20, 40], layer_depth=20, replicates=3),
    "fig3c": dict(depth=20, replicates=3),
    "fig3d": dict(depth=20, replicates=3),
    "fig3e": dict(depth=20, grid=[1, 2, 4], replicates=3),
    "fig3fg": dict(depth=20, depth_grid=[], layer_candidates=[1, 2, 4], replicates=3),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--seed", type=int, default=1, help="base circuit seed")
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--quick", action="store_true", help="small grids for a smoke run")
    parser.add_argument("--panels", nargs="*", default=list(FULL), help="subset of panels")
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = QUICK if args.quick else FULL
    for panel in args.panels:
        overrides = table[panel]
        config = ExperimentConfig.from_dict({"experiment": panel, "seed": args.seed, **overrides})
        path = out_dir / f"{panel}.csv"
        rows, _ = run_experiment(config, threads=args.threads, out_path=path)
        print(f"{panel}: {len(rows)} rows -> {path}")


if __name__ == "__main__":
    main()
