"""Compare the straight-to-goal controller with the feature-field controller.

Runs the bundled detour scenario over a range of seeds for lambda = 1 (goal
only) and the configured lambda, then prints outcome counts and path lengths.

    python scripts/straight_vs_detour.py --seeds 50
"""
import argparse
from collections import Counter

import numpy as np

from featurefield import config
from featurefield.sim_world import run_scenario


def run_many(text, lam, seeds):
    outcomes, lengths = Counter(), []
    for seed in seeds:
        sc = config.loads(text, [f"field.lambda={lam}", f"run.seed={seed}"], name="detour")
        traj = run_scenario(sc.build_arena(), sc.rig, sc.params, sc.controller, sc.max_time, sc.seed)
        outcomes[traj.outcome.value] += 1
        lengths.append(traj.path_length)
    return outcomes, np.array(lengths)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(config.bundled("detour")))
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--lam", type=float, default=None, help="feature-field lambda (default: from config)")
    args = ap.parse_args()

    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    lam = args.lam if args.lam is not None else config.loads(text).params.lam
    for label, value in (("straight", 1.0), ("feature field", lam)):
        outcomes, lengths = run_many(text, value, range(args.seeds))
        counts = ", ".join(f"{k}={v}" for k, v in sorted(outcomes.items()))
        print(f"{label:>13} (lambda={value:g}): {counts}; path length {lengths.mean():.2f} +- {lengths.std():.2f} m")


if __name__ == "__main__":
    main()
