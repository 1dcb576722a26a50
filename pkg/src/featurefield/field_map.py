"""Feature velocity evaluated over a grid of evaluation points.

Cells are labeled by the sign of the feature velocity along the goal
direction: goal-friendly cells push toward the goal, feature-friendly cells
pull away from it toward the features.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .field_core import FeatureSet, FieldParams, charge_arrays, feature_force, feature_velocity

GOAL_FRIENDLY = "goal_friendly"
FEATURE_FRIENDLY = "feature_friendly"
NEUTRAL = "neutral"
LABEL_TOL = 1e-9

COLORS = {
    GOAL_FRIENDLY: (255, 215, 0),
    FEATURE_FRIENDLY: (220, 40, 40),
    NEUTRAL: (128, 128, 128),
}
NEUTRAL_CHARGE = np.array([40, 200, 40], dtype=float)
ATTRACTIVE_CHARGE = np.array([30, 60, 255], dtype=float)


@dataclass(frozen=True)
class GridSpec:
    width_px: int = 720
    height_px: int = 480
    step_px: int = 8

    def __post_init__(self):
        if not (self.width_px > 0 and self.height_px > 0):
            raise ValueError("grid dimensions must be positive")
        if not self.step_px >= 1:
            raise ValueError("grid stride must be >= 1")
        if self.width_px // self.step_px < 2 or self.height_px // self.step_px < 2:
            raise ValueError(f"stride {self.step_px} leaves fewer than 2 samples per axis")

    @property
    def us(self) -> np.ndarray:
        """Cell-center u coordinates."""
        return self.step_px / 2.0 + self.step_px * np.arange(self.width_px // self.step_px)

    @property
    def vs(self) -> np.ndarray:
        return self.step_px / 2.0 + self.step_px * np.arange(self.height_px // self.step_px)


@dataclass
class FieldMap:
    grid: GridSpec
    vg_img: np.ndarray
    params: FieldParams
    n_features: int
    force: np.ndarray  # (ny, nx, 2), unnormalized total force
    direction: np.ndarray  # (ny, nx, 2), zeros where the feature velocity is Zero
    is_zero: np.ndarray  # (ny, nx) bool
    labels: np.ndarray  # (ny, nx) str

    @property
    def shape(self):
        return self.labels.shape

    def label_counts(self) -> dict:
        return {lab: int(np.sum(self.labels == lab)) for lab in (GOAL_FRIENDLY, FEATURE_FRIENDLY, NEUTRAL)}

    def cell_center(self, i, j):
        return float(self.grid.us[j]), float(self.grid.vs[i])


@dataclass
class ChargeHeatMap:
    pc: tuple
    points: np.ndarray
    energies: np.ndarray
    width_px: int = 720
    height_px: int = 480


def label_for(vf, vg_img, tol: float = LABEL_TOL) -> str:
    if vf is None:
        return NEUTRAL
    dot = float(np.dot(vf, vg_img))
    if dot > tol:
        return GOAL_FRIENDLY
    if dot < -tol:
        return FEATURE_FRIENDLY
    return NEUTRAL


def evaluate_cell(features, pc, vg_img, params: FieldParams):
    """Force, feature velocity and label at one evaluation point."""
    f = feature_force(features, pc, vg_img, params)
    vf = feature_velocity(f, params)
    return f, vf, label_for(vf, vg_img)


def evaluate_grid(features, vg_img, params: FieldParams, grid: GridSpec, workers: int = 1) -> FieldMap:
    pts = features.points if isinstance(features, FeatureSet) else np.asarray(features, float).reshape(-1, 2)
    vg = np.asarray(vg_img, dtype=float)
    us, vs = grid.us, grid.vs
    ny, nx = len(vs), len(us)
    force = np.zeros((ny, nx, 2))
    direction = np.zeros((ny, nx, 2))
    is_zero = np.zeros((ny, nx), dtype=bool)
    labels = np.empty((ny, nx), dtype=object)

    def row(i):
        for j in range(nx):
            f, vf, lab = evaluate_cell(pts, (us[j], vs[i]), vg, params)
            force[i, j] = f
            if vf is None:
                is_zero[i, j] = True
            else:
                direction[i, j] = vf
            labels[i, j] = lab

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(row, range(ny)))
    else:
        for i in range(ny):
            row(i)
    return FieldMap(grid, vg, params, len(pts), force, direction, is_zero, labels.astype(str))


def charge_heatmap(features, pc, vg_img, params: FieldParams, width_px=720, height_px=480) -> ChargeHeatMap:
    pts = features.points if isinstance(features, FeatureSet) else np.asarray(features, float).reshape(-1, 2)
    _, _, energy = charge_arrays(pts, pc, vg_img, params.theta_cs)
    return ChargeHeatMap(tuple(float(c) for c in pc), pts.copy(), energy, width_px, height_px)


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary P6 pixmap, 8 bits per channel."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM supported")
    pixels = np.frombuffer(data[pos + 1:pos + 1 + 3 * w * h], dtype=np.uint8)
    return pixels.reshape(h, w, 3)


def map_raster(fmap: FieldMap) -> np.ndarray:
    step = fmap.grid.step_px
    ny, nx = fmap.shape
    img = np.zeros((ny, nx, 3), dtype=np.uint8)
    for lab, color in COLORS.items():
        img[fmap.labels == lab] = color
    return np.repeat(np.repeat(img, step, axis=0), step, axis=1)


def heatmap_raster(hmap: ChargeHeatMap, dot: int = 2) -> np.ndarray:
    img = np.zeros((hmap.height_px, hmap.width_px, 3), dtype=np.uint8)
    for (u, v), q in zip(hmap.points, hmap.energies):
        color = np.round((1.0 - q) * NEUTRAL_CHARGE + q * ATTRACTIVE_CHARGE).astype(np.uint8)
        iu, iv = int(u), int(v)
        img[max(iv - dot, 0):iv + dot + 1, max(iu - dot, 0):iu + dot + 1] = color
    cu, cv = (int(c) for c in hmap.pc)
    img[max(cv - 1, 0):cv + 2, max(cu - 6, 0):cu + 7] = 255
    img[max(cv - 6, 0):cv + 7, max(cu - 1, 0):cu + 2] = 255
    return img


def _params_dict(params: FieldParams) -> dict:
    return {"r": params.r, "s": params.s, "theta_cs_hat_deg": float(np.degrees(params.theta_cs_hat)),
            "lambda": params.lam, "epsilon_force": params.epsilon_force}


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def render(obj, path, extra_meta: dict | None = None) -> list[Path]:
    """Write raster (.ppm), table (.csv) and metadata (.json) next to ``path``.

    ``path`` is a file stem; the suffixes are appended. Returns the written
    paths.
    """
    stem = Path(path)
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {stem.parent}: {exc}") from exc
    raster, table, meta_path = (stem.with_name(stem.name + ext) for ext in (".ppm", ".csv", ".json"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, FieldMap):
        img = map_raster(obj)
        w.writerow(["pc_u", "pc_v", "fx", "fy", "vfx", "vfy", "label"])
        us, vs = obj.grid.us, obj.grid.vs
        for i in range(len(vs)):
            for j in range(len(us)):
                f, d = obj.force[i, j], obj.direction[i, j]
                w.writerow([repr(float(us[j])), repr(float(vs[i])), repr(float(f[0])), repr(float(f[1])),
                            repr(float(d[0])), repr(float(d[1])), obj.labels[i, j]])
        meta = {"kind": "field_map", "field": _params_dict(obj.params),
                "grid": {"width_px": obj.grid.width_px, "height_px": obj.grid.height_px,
                         "step_px": obj.grid.step_px},
                "goal_direction": [float(x) for x in obj.vg_img],
                "feature_count": obj.n_features, "labels": obj.label_counts()}
    elif isinstance(obj, ChargeHeatMap):
        img = heatmap_raster(obj)
        w.writerow(["u", "v", "energy"])
        for (u, v), q in zip(obj.points, obj.energies):
            w.writerow([repr(float(u)), repr(float(v)), repr(float(q))])
        meta = {"kind": "charge_heatmap", "pc": list(obj.pc), "feature_count": len(obj.points),
                "grid": {"width_px": obj.width_px, "height_px": obj.height_px}}
    else:
        raise TypeError(f"cannot render {type(obj).__name__}")
    if extra_meta:
        meta.update(extra_meta)
    meta["generated_at"] = datetime.now(timezone.utc).isoformat()
    try:
        write_ppm(raster, img)
    except OSError as exc:
        raise OSError(f"cannot write {raster}: {exc}") from exc
    _write_text(table, buf.getvalue())
    _write_text(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return [raster, table, meta_path]
