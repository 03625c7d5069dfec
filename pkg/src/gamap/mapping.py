"""The GAMap: per-cell per-attribute score grid plus occupancy and visit state.

Score cells start at the UNOBSERVED sentinel (NaN -- cosine scores can be
legitimately negative, so 0 cannot mean "unseen"). Occupancy is never
downgraded from Obstacle.
"""

from __future__ import annotations

import json
import math
import re

import numpy as np
from scipy import ndimage

from . import _kernels
from .geometry import (GridSpec, OutOfBounds, Pose, back_project_image,
                       transform_to_world, world_to_cell_array)

UNKNOWN = 0
FREE = 1
OBSTACLE = 2

UNOBSERVED = float("nan")

UPDATE_MODES = ("max", "average", "replacement")


class MappingError(Exception):
    pass


class DimensionMismatch(MappingError):
    pass


def update_rule(old: float, new: float, mode: str) -> float:
    """Combine a cell's previous and newly observed score for one channel."""
    if mode not in UPDATE_MODES:
        raise MappingError(f"unknown update mode {mode!r}")
    if math.isnan(old):
        return new
    if mode == "max":
        return max(old, new)
    if mode == "average":
        return (old + new) / 2.0
    return new


class GAMap:
    """Grid map of per-channel attribute scores, occupancy and agent footprint."""

    def __init__(self, spec: GridSpec, channels, *, camera_height: float = 0.8,
                 max_depth: float = 10.0, floor_max: float = 0.2,
                 obstacle_max: float = 1.5, update_mode: str = "max"):
        if update_mode not in UPDATE_MODES:
            raise MappingError(f"unknown update mode {update_mode!r}")
        self.spec = spec
        self.channels = list(channels)
        self.camera_height = camera_height
        self.max_depth = max_depth
        self.floor_max = floor_max
        self.obstacle_max = obstacle_max
        self.update_mode = update_mode
        shape = (spec.rows, spec.cols)
        self.scores = np.full(shape + (len(self.channels),), np.nan)
        self.occupancy = np.full(shape, UNKNOWN, dtype=np.uint8)
        self.visited = np.zeros(shape, dtype=bool)
        self.dropped_points = 0

    @property
    def num_channels(self) -> int:
        return len(self.channels)

    def scored_mask(self) -> np.ndarray:
        return ~np.isnan(self.scores[..., 0])

    def fuse_observation(self, scores, depth, pose: Pose, intrinsics,
                         carve: bool = True) -> None:
        """Fuse one posed observation into the map.

        scores may be None to update occupancy/carving only (used by the
        score-free baseline policy). Per cell and channel the new value is the
        max over this observation's contributing pixels; cells seen before are
        merged with the configured update rule.
        """
        depth = np.asarray(depth, dtype=np.float64)
        if scores is not None:
            scores = np.asarray(scores, dtype=np.float64)
            if scores.shape[:2] != depth.shape:
                raise DimensionMismatch("score image and depth image differ in size")
            if scores.shape[2] != self.num_channels:
                raise DimensionMismatch("score image channel count differs from map")
        cam, valid = back_project_image(intrinsics, depth, self.max_depth)
        world = transform_to_world(cam, pose, self.camera_height)
        z = world[..., 2]
        obstacle_band = valid & (z >= self.floor_max) & (z <= self.obstacle_max)
        floor_band = valid & (z < self.floor_max)
        keep = obstacle_band | floor_band
        # Surface returns sit exactly on cell boundaries; nudge 1 um along the
        # ray so floor() bins them inside the struck cell, not its neighbor.
        gx = world[..., 0] - pose.x
        gy = world[..., 1] - pose.y
        g = np.maximum(np.hypot(gx, gy), 1e-12)
        binned = world.copy()
        binned[..., 0] += gx / g * 1e-6
        binned[..., 1] += gy / g * 1e-6
        cells, inmap = world_to_cell_array(binned, self.spec)
        self.dropped_points += int(np.count_nonzero(keep & ~inmap))
        keep &= inmap

        occ = self.occupancy.ravel()
        flat = cells[..., 0] * self.spec.cols + cells[..., 1]
        floor_flat = flat[floor_band & keep]
        floor_flat = floor_flat[occ[floor_flat] != OBSTACLE]
        occ[floor_flat] = FREE
        occ[flat[obstacle_band & keep]] = OBSTACLE

        if scores is not None and np.any(keep):
            staging = np.full_like(self.scores, -np.inf)
            np.maximum.at(staging, (cells[..., 0][keep], cells[..., 1][keep]),
                          scores[keep])
            hit = staging[..., 0] > -np.inf
            old = self.scores[hit]
            new = staging[hit]
            if self.update_mode == "max":
                merged = np.fmax(old, new)
            elif self.update_mode == "average":
                merged = np.where(np.isnan(old), new, 0.5 * (old + new))
            else:
                merged = new
            self.scores[hit] = merged

        if carve:
            self._carve(depth, valid, pose, intrinsics)

        agent_cells, agent_in = world_to_cell_array(
            np.array([[pose.x, pose.y, 0.0]]), self.spec)
        if agent_in[0]:
            r, c = int(agent_cells[0, 0]), int(agent_cells[0, 1])
            if self.occupancy[r, c] != OBSTACLE:
                self.occupancy[r, c] = FREE
            self.visited[r, c] = True

    def _carve(self, depth, valid, pose, intrinsics):
        # Per column, trace the ground-projected ray out to the farthest valid
        # return (max_depth when the whole column is sentinel) and mark the
        # traversed cells Free, endpoint excluded.
        d_col = np.where(valid, depth, 0.0).max(axis=0)
        d_col[d_col == 0.0] = self.max_depth
        u = (np.arange(intrinsics.width) - intrinsics.cx) / intrinsics.fx
        ct, st = math.cos(pose.theta), math.sin(pose.theta)
        ex = pose.x + d_col * ct + u * d_col * st
        ey = pose.y + d_col * st - u * d_col * ct
        eps = self.spec.resolution * 1e-6
        ex = np.clip(ex, self.spec.origin[0] + eps,
                     self.spec.origin[0] + self.spec.cols * self.spec.resolution - eps)
        ey = np.clip(ey, self.spec.origin[1] + eps,
                     self.spec.origin[1] + self.spec.rows * self.spec.resolution - eps)
        ends = np.stack([ey, ex], axis=-1)
        er = np.floor((ends[:, 0] - self.spec.origin[1]) / self.spec.resolution).astype(np.int64)
        ec = np.floor((ends[:, 1] - self.spec.origin[0]) / self.spec.resolution).astype(np.int64)
        r0 = math.floor((pose.y - self.spec.origin[1]) / self.spec.resolution)
        c0 = math.floor((pose.x - self.spec.origin[0]) / self.spec.resolution)
        if not (0 <= r0 < self.spec.rows and 0 <= c0 < self.spec.cols):
            return
        _kernels.carve_lines(self.occupancy, r0, c0, er, ec, UNKNOWN, FREE)

    def channel_mean(self, cell) -> float:
        """Mean score over all channels, NaN (UNOBSERVED) if the cell was never scored."""
        r, c = cell
        if not (0 <= r < self.spec.rows and 0 <= c < self.spec.cols):
            raise OutOfBounds(f"cell {cell} outside the grid")
        return float(np.mean(self.scores[r, c]))

    def channel_mean_grid(self) -> np.ndarray:
        return self.scores.mean(axis=-1)

    def frontier_mask(self) -> np.ndarray:
        """Free cells with at least one 4-connected Unknown neighbor."""
        free = self.occupancy == FREE
        unknown = self.occupancy == UNKNOWN
        near_unknown = np.zeros_like(free)
        near_unknown[1:, :] |= unknown[:-1, :]
        near_unknown[:-1, :] |= unknown[1:, :]
        near_unknown[:, 1:] |= unknown[:, :-1]
        near_unknown[:, :-1] |= unknown[:, 1:]
        return free & near_unknown

    def frontiers(self) -> set:
        rr, cc = np.nonzero(self.frontier_mask())
        return {(int(r), int(c)) for r, c in zip(rr, cc)}

    def candidate_mask(self, radius: int, exclude_visited: bool = False) -> np.ndarray:
        """Scored Free cells within Chebyshev `radius` of a frontier cell.

        exclude_visited drops cells the agent already stood on, which keeps
        goal selection from re-targeting consumed viewpoints.
        """
        if radius < 0:
            raise MappingError("radius must be >= 0")
        fm = self.frontier_mask()
        if radius > 0:
            size = 2 * radius + 1
            fm = ndimage.binary_dilation(fm, structure=np.ones((size, size), dtype=bool))
        mask = fm & (self.occupancy == FREE) & self.scored_mask()
        if exclude_visited:
            mask &= ~self.visited
        return mask

    def candidate_cells(self, radius: int) -> set:
        rr, cc = np.nonzero(self.candidate_mask(radius))
        return {(int(r), int(c)) for r, c in zip(rr, cc)}

    def save(self, path) -> None:
        meta = {"resolution": self.spec.resolution, "rows": self.spec.rows,
                "cols": self.spec.cols, "origin": list(self.spec.origin),
                "channels": self.channels, "camera_height": self.camera_height,
                "max_depth": self.max_depth, "floor_max": self.floor_max,
                "obstacle_max": self.obstacle_max, "update_mode": self.update_mode}
        np.savez(path, scores=self.scores, occupancy=self.occupancy,
                 visited=self.visited, meta=np.frombuffer(
                     json.dumps(meta).encode(), dtype=np.uint8))

    @classmethod
    def load(cls, path) -> "GAMap":
        data = np.load(path)
        meta = json.loads(bytes(data["meta"]).decode())
        spec = GridSpec(resolution=meta["resolution"], rows=meta["rows"],
                        cols=meta["cols"], origin=tuple(meta["origin"]))
        gm = cls(spec, meta["channels"], camera_height=meta["camera_height"],
                 max_depth=meta["max_depth"], floor_max=meta["floor_max"],
                 obstacle_max=meta["obstacle_max"], update_mode=meta["update_mode"])
        gm.scores = data["scores"]
        gm.occupancy = data["occupancy"]
        gm.visited = data["visited"]
        return gm


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def write_pgm(path, grid: np.ndarray) -> None:
    """16-bit binary PGM of a score grid; [-1, 1] maps to [0, 65535], NaN to 0."""
    filled = np.where(np.isnan(grid), -1.0, grid)
    scaled = np.round((filled + 1.0) / 2.0 * 65535.0).astype(">u2")
    header = f"P5\n{grid.shape[1]} {grid.shape[0]}\n65535\n".encode()
    with open(path, "wb") as fh:
        fh.write(header + scaled.tobytes())


def read_pgm(path) -> np.ndarray:
    """Inverse of write_pgm, back to [-1, 1] floats (NaN is not recovered)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise MappingError("not a binary PGM file")
    w, h = (int(v) for v in parts[1].split())
    grid = np.frombuffer(parts[3], dtype=">u2", count=h * w).reshape(h, w)
    return grid.astype(np.float64) / 65535.0 * 2.0 - 1.0


def export_heatmaps(gamap: GAMap, outdir, step: int | None = None) -> list:
    """Write one PGM per channel plus the channel mean, with a metadata sidecar."""
    import pathlib

    outdir = pathlib.Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    grids = {f"channel_{i:02d}_{_slug(name)}": gamap.scores[..., i]
             for i, name in enumerate(gamap.channels)}
    grids["channel_mean"] = gamap.channel_mean_grid()
    for name, grid in grids.items():
        path = outdir / f"{name}.pgm"
        write_pgm(path, grid)
        written.append(path)
    sidecar = outdir / "heatmap_meta.txt"
    lines = [f"rows {gamap.spec.rows}", f"cols {gamap.spec.cols}",
             f"resolution {gamap.spec.resolution}",
             f"origin {gamap.spec.origin[0]} {gamap.spec.origin[1]}",
             f"step {step if step is not None else -1}",
             "encoding score = value / 65535 * 2 - 1, unobserved = 0"]
    lines += [f"channel {i} {name}" for i, name in enumerate(gamap.channels)]
    sidecar.write_text("\n".join(lines) + "\n")
    written.append(sidecar)
    return written
