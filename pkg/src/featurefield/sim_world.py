"""Closed-loop planar simulation of a vehicle with a downward camera.

World features lie on the floor (z = 0). Each frame the camera projects the
features in view, keeps the strongest ones, and a co-visibility tracker
judges whether visual odometry would still hold. The feature field biases
the goal velocity, the vehicle integrates the command at the frame rate.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .camera import CameraRig
from .field_core import (
    FeatureSet,
    FieldParams,
    blend_command,
    feature_force,
    feature_velocity,
    image_to_body,
    project_goal_direction,
)


class Outcome(str, enum.Enum):
    SUCCESS = "SUCCESS"
    LOST_TRACKING = "LOST_TRACKING"
    TIMEOUT = "TIMEOUT"


class Status(str, enum.Enum):
    OK = "OK"
    LOST = "LOST"


@dataclass(frozen=True)
class WorldFeature:
    x: float
    y: float
    response: float


@dataclass(frozen=True)
class Arena:
    width: float = 4.0
    height: float = 3.0
    features: tuple = ()
    start: tuple = (0.5, 0.5)
    goal: tuple = (3.5, 0.5)
    goal_radius: float = 0.2

    def __post_init__(self):
        for name in ("start", "goal"):
            x, y = getattr(self, name)
            if not (0 <= x <= self.width and 0 <= y <= self.height):
                raise ValueError(f"{name} {(x, y)} outside the arena")
        xy = np.array([(f.x, f.y) for f in self.features], dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(xy)):
            raise ValueError("feature coordinates must be finite")
        if len(xy) and (xy.min() < 0 or np.any(xy.max(axis=0) > (self.width, self.height))):
            raise ValueError("feature outside the arena")
        object.__setattr__(self, "_xy", xy)
        object.__setattr__(self, "_response", np.array([f.response for f in self.features], dtype=float))

    @property
    def feature_xy(self) -> np.ndarray:
        return self._xy

    @property
    def feature_response(self) -> np.ndarray:
        return self._response


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    z: float = 0.4
    yaw: float = 0.0


@dataclass(frozen=True)
class TrackerState:
    previous: Optional[frozenset] = None
    low_count: int = 0
    status: Status = Status.OK
    min_inliers: int = 8
    patience: int = 15


@dataclass
class FrameRecord:
    t: float
    x: float
    y: float
    vx: float
    vy: float
    vfx: float
    vfy: float
    n_features: int
    inliers: int
    status: str
    clamped: bool


TRAJECTORY_COLUMNS = ("frame", "t", "x", "y", "vx", "vy", "vfx", "vfy",
                      "n_features", "inliers", "status", "clamped")


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    outcome: Optional[Outcome] = None

    def __len__(self):
        return len(self.records)

    @property
    def positions(self) -> np.ndarray:
        return np.array([(r.x, r.y) for r in self.records]).reshape(-1, 2)

    @property
    def path_length(self) -> float:
        p = self.positions
        if len(p) < 2:
            return 0.0
        return float(np.sum(np.hypot(*np.diff(p, axis=0).T)))

    @property
    def min_inliers(self) -> int:
        return min((r.inliers for r in self.records), default=0)

    @property
    def clamp_events(self) -> int:
        return sum(r.clamped for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for i, r in enumerate(self.records):
            w.writerow([i, repr(r.t), repr(r.x), repr(r.y), repr(r.vx), repr(r.vy),
                        repr(r.vfx), repr(r.vfy), r.n_features, r.inliers, r.status,
                        int(r.clamped)])
        return buf.getvalue()


def body_points(state: VehicleState, arena: Arena) -> np.ndarray:
    """World floor features expressed in the (yaw-free) body frame."""
    xy = arena.feature_xy
    out = np.empty((len(xy), 3))
    out[:, 0] = xy[:, 0] - state.x
    out[:, 1] = xy[:, 1] - state.y
    out[:, 2] = -state.z
    return out


def visible_features(state: VehicleState, arena: Arena, rig: CameraRig, cap: int = 100,
                     pixel_noise_sigma: float = 0.5, rng=None) -> FeatureSet:
    """Features in view, strongest ``cap`` first, with seeded pixel noise."""
    if not state.z > 0:
        raise ValueError("vehicle must be above the floor")
    if len(arena.feature_xy) == 0:
        return FeatureSet()
    uv, front = rig.project(body_points(state, arena))
    idx = np.flatnonzero(front & rig.in_sensor(np.where(front[:, None], uv, -1.0)))
    if len(idx) == 0:
        return FeatureSet()
    order = np.argsort(-arena.feature_response[idx], kind="stable")
    idx = idx[order[:cap]]
    pts = uv[idx]
    if pixel_noise_sigma > 0:
        if rng is None:
            raise ValueError("pixel noise requires a random generator")
        pts = pts + rng.normal(0.0, pixel_noise_sigma, size=pts.shape)
        pts[:, 0] = np.clip(pts[:, 0], 0.0, np.nextafter(rig.width, 0))
        pts[:, 1] = np.clip(pts[:, 1], 0.0, np.nextafter(rig.height, 0))
    return FeatureSet(pts, tuple(int(i) for i in idx))


def track_step(tracker: TrackerState, current: FeatureSet):
    """Advance the co-visibility tracker; returns (new state, inlier count).

    The first frame initializes the map, so every feature counts as an inlier.
    """
    ids = frozenset(current.ids)
    inliers = len(ids) if tracker.previous is None else len(ids & tracker.previous)
    if tracker.status is Status.LOST:
        return TrackerState(ids, tracker.low_count, Status.LOST, tracker.min_inliers,
                            tracker.patience), inliers
    low = tracker.low_count + 1 if inliers < tracker.min_inliers else 0
    status = Status.LOST if low >= tracker.patience else Status.OK
    return TrackerState(ids, low, status, tracker.min_inliers, tracker.patience), inliers


def lowpass_alpha(cutoff_hz: float, dt: float) -> float:
    """Smoothing factor of a first-order RC low-pass sampled every ``dt``."""
    rc = 1.0 / (2.0 * math.pi * cutoff_hz)
    return dt / (dt + rc)


def low_pass(previous, new, alpha: float) -> np.ndarray:
    """One exponential smoothing step, ``y + alpha * (x - y)``.

    ``None`` stands for the zero vector on either side. The returned vector is
    the filter state; its normalization (see ``feature_velocity``) is the
    filtered direction.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    y = np.zeros(2) if previous is None else np.asarray(previous, dtype=float)
    x = np.zeros(2) if new is None else np.asarray(new, dtype=float)
    return y + alpha * (x - y)


def step(state: VehicleState, velocity, dt: float, arena: Arena, max_speed: float = 1.0):
    """Euler step with speed saturation and arena clamping; returns (state, clamped)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = np.asarray(velocity, dtype=float)
    speed = float(np.hypot(v[0], v[1]))
    if speed > max_speed:
        v = v * (max_speed / speed)
    x = float(state.x + v[0] * dt)
    y = float(state.y + v[1] * dt)
    cx = min(max(x, 0.0), arena.width)
    cy = min(max(y, 0.0), arena.height)
    clamped = bool(cx != x or cy != y)
    return VehicleState(cx, cy, state.z, state.yaw), clamped


@dataclass(frozen=True)
class ControllerConfig:
    max_speed: float = 0.5
    cutoff_hz: float = 20.0
    feature_cap: int = 100
    pixel_noise_sigma: float = 0.5
    min_inliers: int = 8
    patience: int = 15
    height: float = 0.4


def run_scenario(arena: Arena, rig: CameraRig, params: FieldParams, ctrl: ControllerConfig,
                 max_time: float = 60.0, seed: int = 0) -> Trajectory:
    """Fly from ``arena.start`` toward ``arena.goal`` under the feature field.

    Per frame: sense, track, check for loss or arrival, then command and
    integrate. The feature velocity is evaluated at the principal point.
    """
    if not (ctrl.max_speed > 0 and ctrl.height > 0 and ctrl.cutoff_hz > 0 and max_time > 0):
        raise ValueError("invalid scenario: speed, height, cutoff and max_time must be positive")
    rng = np.random.default_rng(seed)
    dt = 1.0 / rig.fps
    alpha = lowpass_alpha(ctrl.cutoff_hz, dt)
    pc = rig.principal_point
    goal = np.asarray(arena.goal, dtype=float)
    state = VehicleState(float(arena.start[0]), float(arena.start[1]), ctrl.height)
    tracker = TrackerState(min_inliers=ctrl.min_inliers, patience=ctrl.patience)
    vf_state = None
    clamped = False
    traj = Trajectory()
    n_frames = int(round(max_time * rig.fps))
    for k in range(n_frames + 1):
        t = k * dt
        feats = visible_features(state, arena, rig, ctrl.feature_cap, ctrl.pixel_noise_sigma, rng)
        tracker, inliers = track_step(tracker, feats)
        to_goal = goal - (state.x, state.y)
        dist = float(np.hypot(*to_goal))
        arrived = dist <= arena.goal_radius
        if tracker.status is Status.LOST or arrived or k == n_frames:
            traj.records.append(FrameRecord(t, state.x, state.y, 0.0, 0.0, 0.0, 0.0, len(feats),
                                            inliers, tracker.status.value, clamped))
            if tracker.status is Status.LOST:
                traj.outcome = Outcome.LOST_TRACKING
            elif arrived:
                traj.outcome = Outcome.SUCCESS
            else:
                traj.outcome = Outcome.TIMEOUT
            break
        vg_body = to_goal / dist * ctrl.max_speed
        vg_img = project_goal_direction(vg_body, rig)
        vf = feature_velocity(feature_force(feats, pc, vg_img, params), params)
        vf_state = low_pass(vf_state, vf, alpha)
        vf_filtered = feature_velocity(vf_state, params)
        cmd = blend_command(vg_img, vf_filtered, params.lam, params.epsilon_force)
        v_body = image_to_body(cmd, rig, ctrl.max_speed)
        vfx, vfy = (0.0, 0.0) if vf_filtered is None else (float(vf_filtered[0]), float(vf_filtered[1]))
        traj.records.append(FrameRecord(t, state.x, state.y, float(v_body[0]), float(v_body[1]),
                                        vfx, vfy, len(feats), inliers, tracker.status.value, clamped))
        state, clamped = step(state, v_body, dt, arena, ctrl.max_speed)
    return traj
