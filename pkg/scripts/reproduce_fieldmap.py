"""Render the field map and charge heat map for a small feature cluster.

Uses the bundled ``cluster`` scenario (one dense cluster, goal up and to the
right) and writes PPM/CSV/JSON artifacts, then prints the label counts.

    python scripts/reproduce_fieldmap.py --out runs/fieldmap
"""
import argparse
import json
from pathlib import Path

from featurefield import cli, config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/fieldmap")
    ap.add_argument("--step", type=int, default=8)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    features = config.bundled("cluster").with_name("cluster_features.csv")
    cli.main(["fieldmap", str(config.bundled("cluster")), "--features", str(features),
              "--out", args.out, "--workers", str(args.workers),
              "--set", f"fieldmap.step={args.step}"])
    for meta in sorted(Path(args.out).rglob("fieldmap.json")):
        counts = json.loads(meta.read_text())["labels"]
        print(meta.parent, counts)


if __name__ == "__main__":
    main()
