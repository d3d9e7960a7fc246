"""Coverage of time-slice bootstrap CIs for the pooled temporal MPLE as the
number of periods grows.

Compares the bootstrap standard deviation with the spread of point
estimates across independent experiments.

    python3 scripts/tergm_coverage.py --periods 6 11 21 --experiments 40
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from test_acceptance import TERGM_TRUTH, tergm_experiment  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--periods", type=int, nargs="+", default=[6, 11, 21])
    ap.add_argument("--experiments", type=int, default=40)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--nodes", type=int, default=30)
    args = ap.parse_args()
    print("periods  coverage(per term)          boot_sd/true_sd(per term)   seconds")
    for T in args.periods:
        t0 = time.perf_counter()
        cover, points, boot_sd = [], [], []
        for r in range(args.experiments):
            res = tergm_experiment(r, n=args.nodes, periods=T, R=args.reps)
            cover.append((res.ci_low <= TERGM_TRUTH) & (TERGM_TRUTH <= res.ci_high))
            points.append(res.point_estimate)
            boot_sd.append(res.replicates.std(axis=0))
        cover = np.mean(cover, axis=0)
        ratio = np.mean(boot_sd, axis=0) / np.std(points, axis=0)
        print(f"{T:7d}  {np.array2string(cover, precision=2):26s}  "
              f"{np.array2string(ratio, precision=2):26s}  {time.perf_counter() - t0:.0f}")


if __name__ == "__main__":
    main()
