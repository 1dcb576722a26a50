"""Command-line entry point: ``simulate``, ``fieldmap`` and ``sweep``.

Exit codes::

    0  success (simulate: vehicle reached the goal while tracked)
    2  command-line usage error
    3  LOST_TRACKING
    4  TIMEOUT
    5  configuration error
    6  I/O error
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import config
from .config import ConfigError
from .field_core import FeatureSet, project_goal_direction
from .field_map import GridSpec, charge_heatmap, evaluate_grid, render
from .sim_world import Outcome, VehicleState, run_scenario, visible_features

EXIT_SUCCESS = 0
EXIT_USAGE = 2
EXIT_LOST = 3
EXIT_TIMEOUT = 4
EXIT_CONFIG = 5
EXIT_IO = 6
OUTCOME_EXIT = {Outcome.SUCCESS: EXIT_SUCCESS, Outcome.LOST_TRACKING: EXIT_LOST,
                Outcome.TIMEOUT: EXIT_TIMEOUT}
SWEEP_PARAMS = {"lambda": "field.lambda", "theta_cs_hat_deg": "field.theta_cs_hat_deg",
                "r": "field.r", "s": "field.s"}


def run_dir(out: Path, scenario) -> Path:
    return Path(out) / f"{scenario.name}_seed{scenario.seed}"


def simulate_to(scenario, out: Path) -> dict:
    """Run one scenario and write ``trajectory.csv`` and ``metadata.json``."""
    arena = scenario.build_arena()
    traj = run_scenario(arena, scenario.rig, scenario.params, scenario.controller,
                        scenario.max_time, scenario.seed)
    dest = run_dir(out, scenario)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "trajectory.csv").write_text(traj.to_csv(), encoding="utf-8")
    summary = {
        "outcome": traj.outcome.value,
        "frames": len(traj),
        "path_length": traj.path_length,
        "min_inliers": traj.min_inliers,
        "clamp_events": traj.clamp_events,
        "world_features": len(arena.features),
    }
    meta = {"scenario": scenario.raw, "result": summary,
            "generated_at": datetime.now(timezone.utc).isoformat()}
    (dest / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    return {**summary, "dir": str(dest)}


def cmd_simulate(args) -> int:
    scenario = config.load(args.config, args.set)
    result = simulate_to(scenario, Path(args.out))
    print(f"{result['outcome']} frames={result['frames']} path_length={result['path_length']:.3f} "
          f"min_inliers={result['min_inliers']} -> {result['dir']}")
    return OUTCOME_EXIT[Outcome(result["outcome"])]


def read_features_csv(path) -> FeatureSet:
    """Image features from a CSV with ``u,v`` columns (header optional)."""
    rows = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read features file {path}: {exc}") from None
    for n, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            rows.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            if n == 1:
                continue  # header
            raise ConfigError(f"{path}: line {n}: expected u,v numbers") from None
    return FeatureSet(np.array(rows, dtype=float).reshape(-1, 2))


def _parse_pose(text: str):
    try:
        x, y = (float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"--pose expects x,y, got {text!r}") from None
    return x, y


def cmd_fieldmap(args) -> int:
    scenario = config.load(args.config, args.set)
    rig = scenario.rig
    if args.pose:
        pose = _parse_pose(args.pose)
    else:
        pose = scenario.pose or scenario.start
    to_goal = np.subtract(scenario.goal, pose)
    if not np.hypot(*to_goal) > 0:
        raise ConfigError("fieldmap pose coincides with the goal; goal direction undefined")
    if args.features:
        feats = read_features_csv(args.features)
        try:
            feats.validate(rig.width, rig.height)
        except ValueError as exc:
            raise ConfigError(f"{args.features}: {exc}") from None
    else:
        state = VehicleState(pose[0], pose[1], scenario.controller.height)
        rng = np.random.default_rng(scenario.seed)
        feats = visible_features(state, scenario.build_arena(), rig, scenario.controller.feature_cap,
                                 scenario.controller.pixel_noise_sigma, rng)
    vg_img = project_goal_direction(to_goal, rig)
    grid = GridSpec(rig.width, rig.height, scenario.grid_step)
    out = run_dir(Path(args.out), scenario)
    extra = {"pose": list(pose), "scenario": scenario.name}
    hmap = charge_heatmap(feats, rig.principal_point, vg_img, scenario.params, rig.width, rig.height)
    render(hmap, out / "charges", extra)
    fmap = evaluate_grid(feats, vg_img, scenario.params, grid, workers=args.workers)
    render(fmap, out / "fieldmap", extra)
    counts = fmap.label_counts()
    print(f"features={len(feats)} " + " ".join(f"{k}={v}" for k, v in counts.items()) + f" -> {out}")
    return EXIT_SUCCESS


def _sweep_cell(raw, name, override, seed, out):
    scenario = config.from_dict(config.apply_overrides(raw, [override, f"run.seed={seed}"]), name=name)
    return simulate_to(scenario, Path(out))


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    try:
        values = [float(v) for v in args.values.split(",")]
    except ValueError:
        raise ConfigError(f"--values expects comma-separated numbers, got {args.values!r}") from None
    base = config.load(args.config, args.set)
    base_seed = base.seed if args.seed is None else args.seed
    key = SWEEP_PARAMS[args.param]
    out = Path(args.out)
    cells = []
    for value in values:
        override = f"{key}={value!r}"
        # validate bounds before spawning any work
        config.from_dict(config.apply_overrides(base.raw, [override]), name=base.name)
        for rep in range(args.reps):
            cells.append((value, (base.raw, base.name, override, base_seed + rep,
                                  str(out / f"{args.param}={value!r}"))))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_cell, *zip(*(c[1] for c in cells))))
    else:
        results = [_sweep_cell(*c[1]) for c in cells]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([args.param, "runs", "success_rate", "mean_path_length", "mean_min_inliers"])
    for value in values:
        rs = [r for (v, _), r in zip(cells, results) if v == value]
        rate = sum(r["outcome"] == Outcome.SUCCESS.value for r in rs) / len(rs)
        w.writerow([repr(value), len(rs), repr(rate),
                    repr(float(np.mean([r["path_length"] for r in rs]))),
                    repr(float(np.mean([r["min_inliers"] for r in rs])))])
        print(f"{args.param}={value!r} success_rate={rate:.2f} runs={len(rs)}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_SUCCESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="featurefield", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario TOML file ('bundled:NAME' for a packaged one)")
        p.add_argument("--out", default="runs", help="output directory (default: runs)")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a config value; repeatable")

    p = sub.add_parser("simulate", help="fly one scenario")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fieldmap", help="charge heat-map and potential field map for one frame")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pose", help="vehicle position x,y in metres")
    group.add_argument("--features", help="CSV of image features u,v")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_fieldmap)

    p = sub.add_parser("sweep", help="repeat a scenario over values of one field parameter")
    common(p)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=None, help="base seed (default: run.seed)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def _resolve(path: str) -> str:
    if path.startswith("bundled:"):
        return str(config.bundled(path.split(":", 1)[1]))
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.config = _resolve(args.config)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
