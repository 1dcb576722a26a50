"""Pinhole camera rig, body frame to image frame (T = K [R | t])."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# body frame: x east, y north, z up (yaw held at zero, so body axes = world axes)
# camera frame: x along image u, y along image v, z along the optical axis
NADIR_R = np.diag([1.0, -1.0, -1.0])


def intrinsics(fx, fy, cx, cy) -> np.ndarray:
    return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class CameraRig:
    K: np.ndarray
    R: np.ndarray = field(default_factory=lambda: NADIR_R.copy())
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    width: int = 720
    height: int = 480
    fps: float = 30.0

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        R = np.asarray(self.R, dtype=float)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).reshape(3))
        if K.shape != (3, 3) or R.shape != (3, 3):
            raise ValueError("K and R must be 3x3")
        if not (K[0, 0] > 0 and K[1, 1] > 0):
            raise ValueError("focal lengths must be positive")
        if K[0, 1] != 0.0:
            raise ValueError("only zero-skew intrinsics are supported")
        if np.linalg.norm(R.T @ R - np.eye(3)) >= 1e-9:
            raise ValueError("R is not orthonormal")
        cx, cy = K[0, 2], K[1, 2]
        if not (0 <= cx < self.width and 0 <= cy < self.height):
            raise ValueError("principal point outside the sensor")

    @classmethod
    def nadir(cls, width=720, height=480, hfov_deg=120.0, fps=30.0):
        """Downward-looking camera at the body origin with square pixels."""
        fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(intrinsics(fx, fx, width / 2.0, height / 2.0), NADIR_R.copy(),
                   np.zeros(3), width, height, fps)

    @property
    def principal_point(self) -> tuple[float, float]:
        return float(self.K[0, 2]), float(self.K[1, 2])

    @property
    def T(self) -> np.ndarray:
        return self.K @ np.hstack([self.R, self.t[:, None]])

    def project(self, body_points: np.ndarray):
        """Project (N, 3) body-frame points.

        Returns pixel coordinates (N, 2) and a mask of points in front of the
        camera.
        """
        pts = np.asarray(body_points, dtype=float).reshape(-1, 3)
        cam = pts @ self.R.T + self.t
        depth = cam[:, 2]
        front = depth > 1e-9
        with np.errstate(divide="ignore", invalid="ignore"):
            uvw = cam @ self.K.T
            uv = uvw[:, :2] / uvw[:, 2:3]
        return uv, front

    def in_sensor(self, uv: np.ndarray) -> np.ndarray:
        return (uv[:, 0] >= 0) & (uv[:, 0] < self.width) & (uv[:, 1] >= 0) & (uv[:, 1] < self.height)

    def footprint(self, height: float):
        """Floor rectangle (xmin, xmax, ymin, ymax) seen by a nadir camera, relative to the body."""
        fx, fy = self.K[0, 0], self.K[1, 1]
        cx, cy = self.principal_point
        # u = fx * dx / h + cx ; v = -fy * dy / h + cy
        return (-cx * height / fx, (self.width - cx) * height / fx,
                (cy - self.height) * height / fy, cy * height / fy)
