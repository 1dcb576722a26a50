"""Scenario configuration files.

A scenario is a TOML document with the sections ``[arena]``, ``[features]``,
``[camera]``, ``[field]``, ``[controller]``, ``[tracker]`` and ``[run]``
(plus an optional ``[fieldmap]``). Every section except ``[features]`` and
``[fieldmap]`` must be present; keys inside a section fall back to defaults
unless listed as required.
"""
from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .camera import CameraRig
from .field_core import FieldParams
from .sim_world import Arena, ControllerConfig, WorldFeature


class ConfigError(ValueError):
    """Malformed scenario; the message names the offending key and line."""


SCHEMA: dict[str, dict[str, Any]] = {
    "arena": {"size": [4.0, 3.0], "start": None, "goal": None, "goal_radius": 0.2},
    "features": {"points": [], "cluster": []},
    "camera": {"height": 0.4, "fov_deg": 120.0, "resolution": [720, 480], "fps": 30.0,
               "max_features": 100, "pixel_noise": 0.5},
    "field": {"r": 50.0, "s": 150.0, "theta_cs_hat_deg": 30.0, "lambda": 0.45,
              "epsilon_force": 1e-9},
    "controller": {"max_speed": 0.5, "cutoff_hz": 20.0},
    "tracker": {"min_inliers": 8, "patience": 15},
    "run": {"seed": 0, "max_time": 60.0},
    "fieldmap": {"step": 8, "pose": None},
}
REQUIRED_SECTIONS = ("arena", "camera", "field", "controller", "tracker", "run")
CLUSTER_KEYS = {"center", "radius", "count", "response"}


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header)."""
    if not text:
        return None
    current = None
    header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.]+)\s*\]\]?")
    for n, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1).split(".")[0]
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return n
    return None


def _where(text, section, key=None) -> str:
    line = _locate(text, section, key)
    name = f"{section}.{key}" if key else f"[{section}]"
    return f"{name} (line {line})" if line else name


@dataclass
class Scenario:
    """Validated scenario plus the raw (defaults-filled) document."""

    raw: dict
    arena_size: tuple
    start: tuple
    goal: tuple
    goal_radius: float
    points: list
    clusters: list
    params: FieldParams
    controller: ControllerConfig
    rig: CameraRig
    seed: int
    max_time: float
    grid_step: int
    pose: tuple | None
    name: str = "scenario"

    def build_arena(self, seed: int | None = None) -> Arena:
        """World features from explicit points plus seeded cluster generators."""
        # separate stream from the per-run pixel noise
        rng = np.random.default_rng([self.seed if seed is None else seed, 1])
        width, height = self.arena_size
        feats = [WorldFeature(float(x), float(y), float(q)) for x, y, q in self.points]
        for c in self.clusters:
            n = c["count"]
            rad = c["radius"] * np.sqrt(rng.random(n))
            ang = rng.random(n) * 2.0 * math.pi
            xs = c["center"][0] + rad * np.cos(ang)
            ys = c["center"][1] + rad * np.sin(ang)
            lo, hi = c["response"]
            resp = rng.uniform(lo, hi, n)
            for x, y, q in zip(xs, ys, resp):
                if 0.0 <= x <= width and 0.0 <= y <= height:
                    feats.append(WorldFeature(float(x), float(y), float(q)))
        return Arena(width, height, tuple(feats), self.start, self.goal, self.goal_radius)

    def with_seed(self, seed: int) -> "Scenario":
        raw = copy.deepcopy(self.raw)
        raw["run"]["seed"] = seed
        return from_dict(raw, name=self.name)


def parse_value(text: str):
    """Interpret an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        path, value = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key {path!r} must be section.key")
        section, key = parts
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override key {path!r}")
        doc.setdefault(section, {})[key] = parse_value(value.strip())
    return doc


def _num(doc, text, section, key, *, positive=False, nonneg=False, integer=False):
    val = doc[section][key]
    ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    if ok and integer:
        ok = float(val).is_integer()
    if ok and not math.isfinite(val):
        ok = False
    if ok and positive and not val > 0:
        ok = False
    if ok and nonneg and not val >= 0:
        ok = False
    if not ok:
        kind = "positive " if positive else "non-negative " if nonneg else ""
        raise ConfigError(f"{_where(text, section, key)}: expected a {kind}number, got {val!r}")
    return int(val) if integer else float(val)


def _pair(doc, text, section, key):
    val = doc[section][key]
    if (not isinstance(val, (list, tuple)) or len(val) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
        raise ConfigError(f"{_where(text, section, key)}: expected a pair of numbers, got {val!r}")
    return float(val[0]), float(val[1])


def from_dict(doc: dict, text: str = "", name: str = "scenario") -> Scenario:
    for section in REQUIRED_SECTIONS:
        if section not in doc:
            raise ConfigError(f"missing required section [{section}]")
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {_where(text, section)}")
        if not isinstance(body, dict):
            raise ConfigError(f"{_where(text, section)} must be a table")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {_where(text, section, key)}")
    full = {s: {**copy.deepcopy(d), **copy.deepcopy(doc.get(s, {}))} for s, d in SCHEMA.items()}
    for section, defaults in SCHEMA.items():
        for key, default in defaults.items():
            if default is None and full[section][key] is None and section != "fieldmap":
                raise ConfigError(f"missing required key {section}.{key} in {_where(text, section)}")

    size = _pair(full, text, "arena", "size")
    if not (size[0] > 0 and size[1] > 0):
        raise ConfigError(f"{_where(text, 'arena', 'size')}: dimensions must be positive")
    start = _pair(full, text, "arena", "start")
    goal = _pair(full, text, "arena", "goal")
    for key, p in (("start", start), ("goal", goal)):
        if not (0 <= p[0] <= size[0] and 0 <= p[1] <= size[1]):
            raise ConfigError(f"{_where(text, 'arena', key)}: {p} lies outside the arena")
    goal_radius = _num(full, text, "arena", "goal_radius", positive=True)

    points = []
    for i, p in enumerate(full["features"]["points"]):
        if (not isinstance(p, (list, tuple)) or len(p) != 3
                or not all(isinstance(v, (int, float)) for v in p) or not p[2] > 0):
            raise ConfigError(f"{_where(text, 'features', 'points')}: entry {i} must be [x, y, response>0]")
        if not (0 <= p[0] <= size[0] and 0 <= p[1] <= size[1]):
            raise ConfigError(f"{_where(text, 'features', 'points')}: entry {i} lies outside the arena")
        points.append(tuple(float(v) for v in p))
    clusters = []
    for i, c in enumerate(full["features"]["cluster"]):
        where = f"features.cluster[{i}]"
        line = _locate(text, "features", None)
        if line:
            where += f" (section at line {line})"
        if not isinstance(c, dict) or set(c) - CLUSTER_KEYS or not {"center", "radius", "count"} <= set(c):
            raise ConfigError(f"{where}: needs center, radius, count and optional response")
        resp = c.get("response", [0.2, 1.0])
        try:
            center = (float(c["center"][0]), float(c["center"][1]))
            radius, count = float(c["radius"]), int(c["count"])
            lo, hi = float(resp[0]), float(resp[1])
        except (TypeError, ValueError, IndexError, KeyError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if not (radius >= 0 and count >= 0 and 0 < lo <= hi):
            raise ConfigError(f"{where}: radius, count must be >= 0 and 0 < response[0] <= response[1]")
        clusters.append({"center": center, "radius": radius, "count": count, "response": (lo, hi)})

    cam_h = _num(full, text, "camera", "height", positive=True)
    fov = _num(full, text, "camera", "fov_deg", positive=True)
    if not fov < 180:
        raise ConfigError(f"{_where(text, 'camera', 'fov_deg')}: must be below 180")
    res = _pair(full, text, "camera", "resolution")
    if not (res[0] >= 1 and res[1] >= 1 and res[0].is_integer() and res[1].is_integer()):
        raise ConfigError(f"{_where(text, 'camera', 'resolution')}: expected positive integers")
    fps = _num(full, text, "camera", "fps", positive=True)
    cap = _num(full, text, "camera", "max_features", positive=True, integer=True)
    noise = _num(full, text, "camera", "pixel_noise", nonneg=True)

    try:
        params = FieldParams(
            r=_num(full, text, "field", "r", nonneg=True),
            s=_num(full, text, "field", "s", positive=True),
            theta_cs_hat=math.radians(_num(full, text, "field", "theta_cs_hat_deg", nonneg=True)),
            lam=_num(full, text, "field", "lambda", nonneg=True),
            epsilon_force=_num(full, text, "field", "epsilon_force", positive=True),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{_where(text, 'field')}: {exc}") from None

    controller = ControllerConfig(
        max_speed=_num(full, text, "controller", "max_speed", positive=True),
        cutoff_hz=_num(full, text, "controller", "cutoff_hz", positive=True),
        feature_cap=cap,
        pixel_noise_sigma=noise,
        min_inliers=_num(full, text, "tracker", "min_inliers", nonneg=True, integer=True),
        patience=_num(full, text, "tracker", "patience", positive=True, integer=True),
        height=cam_h,
    )
    rig = CameraRig.nadir(int(res[0]), int(res[1]), fov, fps)
    seed = _num(full, text, "run", "seed", nonneg=True, integer=True)
    max_time = _num(full, text, "run", "max_time", positive=True)

    step = _num(full, text, "fieldmap", "step", positive=True, integer=True)
    if rig.width // step < 2 or rig.height // step < 2:
        raise ConfigError(f"{_where(text, 'fieldmap', 'step')}: stride {step} leaves fewer than "
                          f"2 samples per axis on a {rig.width}x{rig.height} sensor")
    pose = None
    if full["fieldmap"]["pose"] is not None:
        pose = _pair(full, text, "fieldmap", "pose")

    return Scenario(full, size, start, goal, goal_radius, points, clusters, params, controller,
                    rig, seed, max_time, step, pose, name)


def loads(text: str, overrides=(), name: str = "scenario") -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return from_dict(apply_overrides(doc, overrides), text, name)


def load(path, overrides=()) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return loads(text, overrides, name=path.stem)


def bundled(name: str = "detour") -> Path:
    """Path of a scenario shipped with the package."""
    return Path(str(resources.files("featurefield") / "scenarios" / f"{name}.toml"))
