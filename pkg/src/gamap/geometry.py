"""Camera-to-grid geometry: back-projection, rigid transforms, ground-plane binning.

Conventions fixed here and used everywhere else:

* A pixel is addressed as (p, q) = (row, col). Back-projection maps the
  column to the camera x-axis (right) and the row to the camera y-axis
  (down): x = (q - cx) / fx * d, y = (p - cy) / fy * d, z = d, with z the
  optical axis. Depth values are optical-axis depth, not ray length.
* World frame: x/y span the ground plane, z points up. A pose heading
  theta is CCW from +x and the camera optical axis points along it, so
  camera-right maps to (sin theta, -cos theta) on the ground and
  camera-down maps to -z.
* Grid cells are (row, col) with row binned from world y and col from
  world x: cell = floor((coord - origin) / resolution).

Depth validity: a depth is usable iff it is finite and 0 < d < max_depth.
The simulator's no-return sentinel equals max_depth, hence the strict
upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GeometryError(Exception):
    pass


class InvalidDepth(GeometryError):
    pass


class OutOfBounds(GeometryError):
    pass


class OutOfMap(GeometryError):
    pass


DEFAULT_MAX_DEPTH = 10.0


def wrap_angle(theta: float) -> float:
    """Normalize an angle to [-pi, pi)."""
    return float((theta + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        """3x3 pinhole matrix acting on [q, p, 1] (col, row) homogeneous pixels."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


def intrinsics_from_fov(width: int, height: int, fov_deg: float) -> CameraIntrinsics:
    """Square-pixel intrinsics from a horizontal field of view."""
    fx = width / (2.0 * math.tan(math.radians(fov_deg) / 2.0))
    return CameraIntrinsics(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0,
                            width=width, height=height)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class GridSpec:
    resolution: float
    rows: int
    cols: int
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("grid must have positive extent")

    def cell_center(self, cell: tuple[int, int]) -> tuple[float, float]:
        """World (x, y) of a cell's center."""
        r, c = cell
        return (self.origin[0] + (c + 0.5) * self.resolution,
                self.origin[1] + (r + 0.5) * self.resolution)

    def contains(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.rows and 0 <= c < self.cols


def back_project(intrinsics: CameraIntrinsics, depth: np.ndarray,
                 pixel: tuple[int, int]) -> np.ndarray:
    """Back-project one pixel to a camera-frame 3D point.

    Returns d * Kinv * [pixel homogeneous], i.e. ((q-cx)/fx*d, (p-cy)/fy*d, d).
    """
    p, q = pixel
    if not (0 <= p < intrinsics.height and 0 <= q < intrinsics.width):
        raise OutOfBounds(f"pixel {pixel} outside {intrinsics.height}x{intrinsics.width}")
    d = float(depth[p, q])
    if not math.isfinite(d) or d <= 0:
        raise InvalidDepth(f"depth {d} at pixel {pixel}")
    return np.array([(q - intrinsics.cx) / intrinsics.fx * d,
                     (p - intrinsics.cy) / intrinsics.fy * d,
                     d])


def back_project_image(intrinsics: CameraIntrinsics, depth: np.ndarray,
                       max_depth: float = DEFAULT_MAX_DEPTH):
    """Vectorized back-projection of a full depth image.

    Returns (points, valid): points is (H, W, 3) camera-frame coordinates and
    valid marks pixels with finite depth in (0, max_depth). Invalid pixels get
    unspecified point values and must be masked by the caller.
    """
    h, w = depth.shape
    if (h, w) != (intrinsics.height, intrinsics.width):
        raise OutOfBounds("depth image does not match intrinsics")
    valid = np.isfinite(depth) & (depth > 0) & (depth < max_depth)
    qs = np.arange(w, dtype=np.float64)
    ps = np.arange(h, dtype=np.float64)
    d = np.where(valid, depth, 1.0).astype(np.float64)
    x = (qs[None, :] - intrinsics.cx) / intrinsics.fx * d
    y = (ps[:, None] - intrinsics.cy) / intrinsics.fy * d
    return np.stack([x, y, d], axis=-1), valid


def to_world(point: np.ndarray, pose: Pose, camera_height: float) -> np.ndarray:
    """Rigid transform of a camera-frame point into the world frame."""
    x_c, y_c, z_c = float(point[0]), float(point[1]), float(point[2])
    ct, st = math.cos(pose.theta), math.sin(pose.theta)
    return np.array([pose.x + z_c * ct + x_c * st,
                     pose.y + z_c * st - x_c * ct,
                     camera_height - y_c])


def transform_to_world(points: np.ndarray, pose: Pose, camera_height: float) -> np.ndarray:
    """Vectorized to_world over an (..., 3) array of camera-frame points."""
    ct, st = math.cos(pose.theta), math.sin(pose.theta)
    x_c, y_c, z_c = points[..., 0], points[..., 1], points[..., 2]
    return np.stack([pose.x + z_c * ct + x_c * st,
                     pose.y + z_c * st - x_c * ct,
                     camera_height - y_c], axis=-1)


def world_to_cell(point, spec: GridSpec) -> tuple[int, int]:
    """Ground-plane cell (row, col) of a world point; z is discarded."""
    r = math.floor((float(point[1]) - spec.origin[1]) / spec.resolution)
    c = math.floor((float(point[0]) - spec.origin[0]) / spec.resolution)
    if not (0 <= r < spec.rows and 0 <= c < spec.cols):
        raise OutOfMap(f"point {tuple(point[:2])} outside the grid")
    return r, c


def world_to_cell_array(points: np.ndarray, spec: GridSpec):
    """Vectorized world_to_cell: returns ((..., 2) int cells, in-map mask)."""
    r = np.floor((points[..., 1] - spec.origin[1]) / spec.resolution).astype(np.int64)
    c = np.floor((points[..., 0] - spec.origin[0]) / spec.resolution).astype(np.int64)
    inmap = (r >= 0) & (r < spec.rows) & (c >= 0) & (c < spec.cols)
    return np.stack([r, c], axis=-1), inmap
