"""Success rate of the detour scenario as a function of lambda.

Thin wrapper around ``featurefield sweep`` that prints the summary table.

    python scripts/sweep_lambda.py --reps 10 --out runs/lambda
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from featurefield import cli, config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(config.bundled("detour")))
    ap.add_argument("--values", default=",".join(f"{v:.2f}" for v in np.linspace(0.0, 1.0, 11)))
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/sweep_lambda")
    args = ap.parse_args()

    cli.main(["sweep", args.config, "--param", "lambda", "--values", args.values,
              "--reps", str(args.reps), "--workers", str(args.workers), "--out", args.out])
    with open(Path(args.out) / "summary.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'lambda':>8} {'success':>8} {'path m':>8} {'min inl':>8}")
    for row in rows:
        print(f"{row['lambda']:>8} {float(row['success_rate']):8.2f} "
              f"{float(row['mean_path_length']):8.2f} {float(row['mean_min_inliers']):8.1f}")


if __name__ == "__main__":
    main()
