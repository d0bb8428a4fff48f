#!/usr/bin/env python3
"""Block-size sweep on the 2D identification instance.

Each block size gets its own run and trace; the summary table shows how
the block size trades per-iteration cost against convergence per sample.
"""

import argparse
import pathlib

from mmls import ExperimentConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--image-size", type=int, default=256)
    parser.add_argument("--blocksizes", type=int, nargs="+",
                        default=[16, 64, 256, 1024])
    parser.add_argument("--outdir", default="results")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    print(f"{'block':>6} {'iters':>7} {'final nrmse':>12} {'objective':>12} {'seconds':>8}")
    for block in args.blocksizes:
        out = outdir / f"deconv2d_q{block}.csv"
        cfg = ExperimentConfig(
            experiment="deconv2d", seed=args.seed, image_size=args.image_size,
            block_size=block, out=str(out),
        )
        trace = run_experiment(cfg)
        print(f"{block:>6} {len(trace):>7} {trace.final_nrmse:>12.4f} "
              f"{trace.final_objective:>12.6f} {trace.wall_time[-1]:>8.2f}")


if __name__ == "__main__":
    main()
