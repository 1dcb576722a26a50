"""Feature-based potential field.

Inlier image features become attractive or neutral charges depending on
their bearing relative to the projected goal direction. The summed force at
an evaluation point gives a feature velocity, which is blended with the goal
direction to form the commanded velocity.

Vectors (offsets, forces, directions) are plain ``numpy`` arrays of shape
``(2,)`` in image coordinates (u to the right, v down). A zero feature
velocity is reported as ``None``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
DEGENERATE_NORM = 1e-12
MAX_BACKMAP_COND = 1e6


class DegenerateRigError(ValueError):
    """The camera rig cannot map planar body directions to the image."""


class ImagePoint(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class FieldParams:
    """Tunables of the field law.

    r and s are in pixels, ``theta_cs_hat`` is the central angle (rad) of the
    neutral circular segment and ``lam`` the goal weight of the blend.
    """

    r: float = 50.0
    s: float = 150.0
    theta_cs_hat: float = math.radians(30.0)
    lam: float = 0.45
    epsilon_force: float = 1e-9

    def __post_init__(self):
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise ValueError(f"r must be >= 0, got {self.r}")
        if not (self.s > 0.0 and math.isfinite(self.s)):
            raise ValueError(f"s must be > 0, got {self.s}")
        if not 0.0 <= self.theta_cs_hat < TWO_PI:
            raise ValueError(f"theta_cs_hat must lie in [0, 2pi), got {self.theta_cs_hat}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.epsilon_force > 0.0:
            raise ValueError(f"epsilon_force must be > 0, got {self.epsilon_force}")

    @property
    def theta_cs(self) -> float:
        return circular_segment_angle(self.theta_cs_hat)

    @classmethod
    def from_degrees(cls, r=50.0, s=150.0, theta_cs_hat_deg=30.0, lam=0.45, **kw):
        return cls(r=r, s=s, theta_cs_hat=math.radians(theta_cs_hat_deg), lam=lam, **kw)


@dataclass(frozen=True)
class Charge:
    offset: np.ndarray  # feature minus evaluation point, px
    energy: float
    cutoff: float  # theta_cs, rad


@dataclass(frozen=True)
class FeatureSet:
    """Inlier features of one frame, optionally tagged with world identities."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ids: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if self.ids and len(self.ids) != len(pts):
            raise ValueError("ids and points differ in length")

    def __len__(self):
        return len(self.points)

    def validate(self, width: float, height: float, cap: Optional[int] = None) -> None:
        pts = self.points
        if not np.all(np.isfinite(pts)):
            raise ValueError("feature coordinates must be finite")
        inside = (pts[:, 0] >= 0) & (pts[:, 0] < width) & (pts[:, 1] >= 0) & (pts[:, 1] < height)
        if not np.all(inside):
            raise ValueError("feature outside sensor bounds")
        if cap is not None and len(pts) > cap:
            raise ValueError(f"{len(pts)} features exceed cap {cap}")
        if len(pts) > 1:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.hypot(diff[..., 0], diff[..., 1])
            np.fill_diagonal(dist, np.inf)
            if dist.min() < 1e-9:
                raise ValueError("duplicate feature coordinates")


def circular_segment_angle(theta_cs_hat: float) -> float:
    """Angle beyond which charges are neutral, ``pi - theta_cs_hat / 2``."""
    if not 0.0 <= theta_cs_hat < TWO_PI:
        raise ValueError(f"theta_cs_hat must lie in [0, 2pi), got {theta_cs_hat}")
    return math.pi - theta_cs_hat / 2.0


def goal_map(rig) -> np.ndarray:
    """2x2 linear action of K R on planar body directions (vx, vy, 0)."""
    return (rig.K @ rig.R)[:2, :2]


def project_goal_direction(vg_body, rig) -> np.ndarray:
    """Image-plane direction of a planar body velocity.

    The homogeneous coordinate is zero, so the translation drops out and only
    the first two components of ``K R (vx, vy, 0)`` matter.
    """
    vg = np.asarray(vg_body, dtype=float)[:2]
    if not np.linalg.norm(vg) > 0.0:
        raise ValueError("goal velocity must be nonzero")
    img = (rig.K @ rig.R @ np.array([vg[0], vg[1], 0.0]))[:2]
    n = np.linalg.norm(img)
    if n < DEGENERATE_NORM:
        raise DegenerateRigError("goal direction does not project onto the image plane")
    return img / n


def charge_energy(theta, theta_cs: float):
    """Charging policy: linear fall-off from 1 along the goal to 0 at ``theta_cs``."""
    theta = np.asarray(theta, dtype=float)
    return np.where(theta <= theta_cs, 1.0 - theta / theta_cs, 0.0)


def charge_arrays(points: np.ndarray, pc, vg_img, theta_cs: float):
    """Offsets, bearing angles and energies for an (N, 2) array of features."""
    offsets = np.asarray(points, dtype=float).reshape(-1, 2) - np.asarray(pc, dtype=float)
    norms = np.hypot(offsets[:, 0], offsets[:, 1])
    vg = np.asarray(vg_img, dtype=float)
    denom = norms * np.linalg.norm(vg)
    dots = offsets @ vg
    with np.errstate(invalid="ignore", divide="ignore"):
        cosines = np.where(norms < DEGENERATE_NORM, 1.0, dots / denom)
    theta = np.arccos(np.clip(cosines, -1.0, 1.0))
    return offsets, theta, charge_energy(theta, theta_cs)


def force_arrays(offsets: np.ndarray, energy: np.ndarray, r: float, s: float) -> np.ndarray:
    """Per-charge forces, shape (N, 2)."""
    d = np.hypot(offsets[:, 0], offsets[:, 1])
    gain = np.where(d < r, 0.0, np.where(d <= s + r, (d - r) / s, 1.0)) * energy
    with np.errstate(invalid="ignore", divide="ignore"):
        bearing = np.where(d[:, None] > 0.0, offsets / d[:, None], 0.0)
    return gain[:, None] * bearing


def make_charges(features, pc, vg_img, params: FieldParams) -> list[Charge]:
    points = features.points if isinstance(features, FeatureSet) else features
    theta_cs = params.theta_cs
    offsets, _, energy = charge_arrays(points, pc, vg_img, theta_cs)
    return [Charge(off, float(q), theta_cs) for off, q in zip(offsets, energy)]


def charge_force(charge: Charge, params: FieldParams) -> np.ndarray:
    f = force_arrays(charge.offset.reshape(1, 2), np.array([charge.energy]), params.r, params.s)
    return f[0]


def total_force(charges: Sequence[Charge], params: FieldParams) -> np.ndarray:
    if not charges:
        return np.zeros(2)
    offsets = np.array([c.offset for c in charges], dtype=float)
    energy = np.array([c.energy for c in charges], dtype=float)
    return force_arrays(offsets, energy, params.r, params.s).sum(axis=0)


def feature_force(features, pc, vg_img, params: FieldParams) -> np.ndarray:
    """Total force at ``pc`` straight from feature coordinates."""
    points = features.points if isinstance(features, FeatureSet) else np.asarray(features, float)
    if len(points) == 0:
        return np.zeros(2)
    offsets, _, energy = charge_arrays(points, pc, vg_img, params.theta_cs)
    return force_arrays(offsets, energy, params.r, params.s).sum(axis=0)


def feature_velocity(f, params: FieldParams) -> Optional[np.ndarray]:
    """Unit force direction, or None when the force is below ``epsilon_force``."""
    f = np.asarray(f, dtype=float)
    n = np.linalg.norm(f)
    if n > params.epsilon_force:
        return f / n
    return None


def blend_command(vg_img, vf, lam: float, epsilon: float = 1e-9) -> np.ndarray:
    vg = np.asarray(vg_img, dtype=float)
    if vf is None:
        return vg / np.linalg.norm(vg)
    w = lam * vg + (1.0 - lam) * np.asarray(vf, dtype=float)
    n = np.linalg.norm(w)
    if n < epsilon:
        # antiparallel inputs cancel; keep making progress toward the goal
        return vg / np.linalg.norm(vg)
    return w / n


def image_to_body(direction, rig, speed: float) -> np.ndarray:
    """Map an image direction back to a planar body velocity of magnitude ``speed``."""
    m = goal_map(rig)
    if np.linalg.cond(m) > MAX_BACKMAP_COND:
        raise DegenerateRigError("camera rig gives a near-singular image-to-body map")
    body = np.linalg.solve(m, np.asarray(direction, dtype=float))
    return speed * body / np.linalg.norm(body)


def compute_command(features, pc, vg_body, rig, params: FieldParams, speed: float) -> np.ndarray:
    """Full pipeline: planar body velocity biased toward feature-rich regions."""
    if not speed > 0.0:
        raise ValueError("speed must be positive")
    vg_img = project_goal_direction(vg_body, rig)
    f = feature_force(features, pc, vg_img, params)
    vf = feature_velocity(f, params)
    cmd = blend_command(vg_img, vf, params.lam, params.epsilon_force)
    return image_to_body(cmd, rig, speed)
