"""Path planning over the GAMap: FMM distance fields, descent paths, goal selection.

Unknown cells are traversable at 2x cost (frontier goals border Unknown by
construction), obstacles are inflated by the agent radius, and all
tie-breaking is deterministic (score, then distance, then row-major order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from . import _kernels
from .geometry import GridSpec, Pose, wrap_angle
from .mapping import FREE, OBSTACLE, UNKNOWN, GAMap


class PlannerError(Exception):
    pass


class SourceBlocked(PlannerError):
    pass


class Unreachable(PlannerError):
    pass


class EmptyPath(PlannerError):
    pass


class ExplorationExhausted(PlannerError):
    pass


class ActionCommand(Enum):
    MOVE_FORWARD = "move_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"


@dataclass(frozen=True)
class MotionParams:
    step: float = 0.25
    turn: float = math.radians(30.0)


@dataclass
class DistanceField:
    dist: np.ndarray
    source: tuple[int, int]
    spec: GridSpec

    def at(self, cell) -> float:
        return float(self.dist[cell[0], cell[1]])


def _disk(radius_cells: int) -> np.ndarray:
    span = np.arange(-radius_cells, radius_cells + 1)
    rr, cc = np.meshgrid(span, span, indexing="ij")
    return rr * rr + cc * cc <= radius_cells * radius_cells


def inflated_obstacles(occupancy: np.ndarray, resolution: float,
                       inflate_radius: float) -> np.ndarray:
    mask = occupancy == OBSTACLE
    if inflate_radius > 0:
        cells = math.ceil(inflate_radius / resolution)
        mask = ndimage.binary_dilation(mask, structure=_disk(cells))
    return mask


def fmm_field(gamap: GAMap, source: tuple[int, int], *,
              inflate_radius: float = 0.18, unknown_cost: float = 2.0) -> DistanceField:
    """Eikonal distance field from one source cell over the current map."""
    occ = gamap.occupancy
    r, c = source
    if not gamap.spec.contains(source):
        raise SourceBlocked(f"source {source} outside the grid")
    if occ[r, c] == OBSTACLE:
        raise SourceBlocked(f"source {source} lies inside an obstacle")
    blocked = inflated_obstacles(occ, gamap.spec.resolution, inflate_radius)
    cost = np.where(occ == UNKNOWN, unknown_cost, 1.0)
    cost[blocked] = np.inf
    # The agent may sit inside the inflation margin (e.g. after grazing an
    # obstacle); reopen the margin in a source-centered disk so it can back
    # out. Raw obstacle cells stay blocked.
    if inflate_radius > 0:
        cells = math.ceil(inflate_radius / gamap.spec.resolution)
        rows, cols = occ.shape
        r0, r1 = max(0, r - cells), min(rows, r + cells + 1)
        c0, c1 = max(0, c - cells), min(cols, c + cells + 1)
        pocket = _disk(cells)[r0 - (r - cells):r1 - (r - cells),
                              c0 - (c - cells):c1 - (c - cells)]
        window = (slice(r0, r1), slice(c0, c1))
        reopen = pocket & (occ[window] != OBSTACLE) & blocked[window]
        cost[window] = np.where(reopen,
                                np.where(occ[window] == UNKNOWN, unknown_cost, 1.0),
                                cost[window])
    cost[r, c] = 1.0
    dist = _kernels.fmm_solve(cost, gamap.spec.resolution, r, c)
    return DistanceField(dist=dist, source=(r, c), spec=gamap.spec)


_NEIGHBORS8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def extract_path(field: DistanceField, goal: tuple[int, int]) -> list[tuple[int, int]]:
    """Steepest-descent walk from goal back to the field source, returned source-first."""
    rows, cols = field.dist.shape
    gr, gc = goal
    if not (0 <= gr < rows and 0 <= gc < cols) or not np.isfinite(field.dist[gr, gc]):
        raise Unreachable(f"goal {goal} has no finite distance")
    path = [(gr, gc)]
    cur = (gr, gc)
    for _ in range(rows * cols):
        if field.dist[cur] <= 0.0:
            break
        best = None
        best_val = field.dist[cur]
        for dr, dc in _NEIGHBORS8:
            nr, nc = cur[0] + dr, cur[1] + dc
            if 0 <= nr < rows and 0 <= nc < cols and field.dist[nr, nc] < best_val:
                best = (nr, nc)
                best_val = field.dist[nr, nc]
        if best is None:
            raise Unreachable(f"descent from {goal} stalled at {cur}")
        path.append(best)
        cur = best
    path.reverse()
    return path


def path_length(path, resolution: float) -> float:
    """Metric length of a cell path (diagonal steps count sqrt(2))."""
    total = 0.0
    for (r0, c0), (r1, c1) in zip(path, path[1:]):
        total += math.hypot(r1 - r0, c1 - c0) * resolution
    return total


def select_goal(gamap: GAMap, agent: tuple[int, int], radius: int, *,
                field: DistanceField | None = None, inflate_radius: float = 0.18,
                unknown_cost: float = 2.0,
                exclude_visited: bool = False) -> tuple[int, int]:
    """Highest channel-mean candidate cell near a frontier, reachable from the agent.

    Ties break by smaller field distance, then row-major order. Raises
    ExplorationExhausted when no frontier, no scored candidate, or nothing
    reachable remains.
    """
    cand = gamap.candidate_mask(radius, exclude_visited=exclude_visited)
    if not cand.any():
        raise ExplorationExhausted("no scored candidate cells near any frontier")
    if field is None:
        field = fmm_field(gamap, agent, inflate_radius=inflate_radius,
                          unknown_cost=unknown_cost)
    reach = cand & np.isfinite(field.dist)
    if not reach.any():
        raise ExplorationExhausted("no candidate cell is reachable")
    rr, cc = np.nonzero(reach)
    scores = gamap.channel_mean_grid()[rr, cc]
    dists = field.dist[rr, cc]
    order = np.lexsort((cc, rr, dists, -scores))
    best = order[0]
    return int(rr[best]), int(cc[best])


def nearest_frontier_goal(gamap: GAMap, agent: tuple[int, int], *,
                          field: DistanceField | None = None,
                          inflate_radius: float = 0.18,
                          unknown_cost: float = 2.0,
                          exclude_visited: bool = False) -> tuple[int, int]:
    """Classic frontier-based exploration goal: the closest reachable frontier cell."""
    fm = gamap.frontier_mask()
    if exclude_visited:
        fm = fm & ~gamap.visited
    if not fm.any():
        raise ExplorationExhausted("no frontier cells")
    if field is None:
        field = fmm_field(gamap, agent, inflate_radius=inflate_radius,
                          unknown_cost=unknown_cost)
    reach = fm & np.isfinite(field.dist)
    if not reach.any():
        raise ExplorationExhausted("no frontier cell is reachable")
    rr, cc = np.nonzero(reach)
    dists = field.dist[rr, cc]
    order = np.lexsort((cc, rr, dists))
    best = order[0]
    return int(rr[best]), int(cc[best])


def next_action(pose: Pose, path, spec: GridSpec,
                params: MotionParams = MotionParams()) -> ActionCommand:
    """Waypoint-following action: turn toward the lookahead waypoint, else go forward.

    Positive heading error (waypoint to the left, CCW) turns left. STOP is
    never emitted here; the episode harness owns goal confirmation.
    """
    if not path:
        raise EmptyPath("cannot follow an empty path")
    centers = np.array([spec.cell_center(cell) for cell in path])
    d = np.hypot(centers[:, 0] - pose.x, centers[:, 1] - pose.y)
    nearest = int(np.argmin(d))
    lookahead = max(1, round(params.step / spec.resolution))
    idx = min(nearest + lookahead, len(path) - 1)
    while idx < len(path) - 1 and d[idx] < 0.25 * spec.resolution:
        idx += 1
    wx, wy = centers[idx]
    if math.hypot(wx - pose.x, wy - pose.y) < 0.25 * spec.resolution:
        return ActionCommand.MOVE_FORWARD
    err = wrap_angle(math.atan2(wy - pose.y, wx - pose.x) - pose.theta)
    if abs(err) > params.turn / 2.0:
        return ActionCommand.TURN_LEFT if err > 0 else ActionCommand.TURN_RIGHT
    return ActionCommand.MOVE_FORWARD
