"""Deterministic 2D raycast test world: scenes, RGB-D rendering, synthetic embeddings.

Rendering is wall-slice style with projective extents: each column's wall hit
paints rows between the wall's top and its floor line at the hit depth, rows
below get true per-row floor depths, and rows above keep the no-return
sentinel (= max_depth). Object "part" sub-footprints render as a distinct
color band on the upper part of the wall slice, so a part's apparent pixel
area genuinely shrinks with distance.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernels
from .attributes import FixtureSource
from .geometry import CameraIntrinsics, GridSpec, Pose, intrinsics_from_fov, wrap_angle

FLOOR_COLOR = (45, 45, 45)
WALL_COLOR = (128, 128, 128)
BACKGROUND_COLOR = (210, 225, 240)

_BODY_PALETTE = [(202, 60, 60), (60, 160, 220), (220, 160, 40), (150, 80, 200),
                 (80, 190, 120), (230, 120, 180), (100, 120, 60)]
_PART_PALETTE = [(255, 120, 0), (0, 230, 210), (255, 230, 0), (230, 40, 255),
                 (0, 255, 60), (255, 0, 90), (190, 255, 0)]

CATEGORIES = ["chair", "sofa", "bed", "toilet", "plant", "tv_monitor", "table"]

DIFFICULTIES = ("easy", "maze", "multiscale")


class SimError(Exception):
    pass


class PoseInObstacle(SimError):
    pass


class GenerationFailed(SimError):
    pass


@dataclass(frozen=True)
class SimParams:
    image_size: int = 64
    fov_deg: float = 79.0
    camera_height: float = 0.8
    wall_height: float = 1.5
    part_z_low: float = 1.0  # part band spans [part_z_low, wall_height]
    max_depth: float = 10.0
    detect_range: float = 3.0

    def intrinsics(self) -> CameraIntrinsics:
        return intrinsics_from_fov(self.image_size, self.image_size, self.fov_deg)


@dataclass(frozen=True)
class SceneObject:
    category: str
    cells: tuple
    part_cells: tuple
    body_color: tuple
    part_color: tuple
    body_salience: dict
    part_salience: dict


@dataclass
class Scene:
    spec: GridSpec
    occupancy: np.ndarray  # bool, True = obstacle (walls + object footprints)
    objects: list
    spawn: Pose
    target: str
    seed: int
    difficulty: str = "easy"
    _cell_obj: np.ndarray = field(default=None, repr=False)
    _part_mask: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self._cell_obj = np.full(self.occupancy.shape, -1, dtype=np.int32)
        self._part_mask = np.zeros(self.occupancy.shape, dtype=bool)
        for i, obj in enumerate(self.objects):
            for r, c in obj.cells:
                self._cell_obj[r, c] = i
            for r, c in obj.part_cells:
                self._part_mask[r, c] = True

    def target_object_indices(self) -> list:
        return [i for i, o in enumerate(self.objects) if o.category == self.target]

    def target_cells(self) -> list:
        return [cell for i in self.target_object_indices() for cell in self.objects[i].cells]

    def is_free(self, cell) -> bool:
        r, c = cell
        return bool(self.spec.contains(cell) and not self.occupancy[r, c])

    def color_salience(self) -> dict:
        """Exact-RGB lookup: color -> {attribute: salience}. Unlisted colors score zero."""
        table = {}
        for obj in self.objects:
            table[tuple(obj.body_color)] = dict(obj.body_salience)
            table[tuple(obj.part_color)] = dict(obj.part_salience)
        return table

    def to_text(self) -> str:
        rows = []
        for r in range(self.spec.rows):
            tokens = []
            run_char, run_len = None, 0
            for c in range(self.spec.cols):
                ch = "o" if self.occupancy[r, c] else "f"
                if ch == run_char:
                    run_len += 1
                else:
                    if run_char is not None:
                        tokens.append(f"{run_len}{run_char}")
                    run_char, run_len = ch, 1
            tokens.append(f"{run_len}{run_char}")
            rows.append("".join(tokens))
        payload = {
            "format": "gamap-scene-v1",
            "seed": self.seed,
            "difficulty": self.difficulty,
            "target": self.target,
            "grid": {"resolution": self.spec.resolution, "rows": self.spec.rows,
                     "cols": self.spec.cols, "origin": list(self.spec.origin)},
            "occupancy_rle": rows,
            "spawn": {"x": self.spawn.x, "y": self.spawn.y, "theta": self.spawn.theta},
            "objects": [{
                "category": o.category,
                "cells": [list(c) for c in o.cells],
                "part_cells": [list(c) for c in o.part_cells],
                "body_color": list(o.body_color),
                "part_color": list(o.part_color),
                "body_salience": o.body_salience,
                "part_salience": o.part_salience,
            } for o in self.objects],
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "Scene":
        data = json.loads(text)
        if data.get("format") != "gamap-scene-v1":
            raise SimError("unrecognized scene format")
        g = data["grid"]
        spec = GridSpec(resolution=g["resolution"], rows=g["rows"], cols=g["cols"],
                        origin=tuple(g["origin"]))
        occ = np.zeros((spec.rows, spec.cols), dtype=bool)
        for r, row in enumerate(data["occupancy_rle"]):
            c = 0
            n = ""
            for ch in row:
                if ch.isdigit():
                    n += ch
                else:
                    count = int(n)
                    if ch == "o":
                        occ[r, c:c + count] = True
                    c += count
                    n = ""
        objects = [SceneObject(
            category=o["category"],
            cells=tuple(tuple(c) for c in o["cells"]),
            part_cells=tuple(tuple(c) for c in o["part_cells"]),
            body_color=tuple(o["body_color"]),
            part_color=tuple(o["part_color"]),
            body_salience=dict(o["body_salience"]),
            part_salience=dict(o["part_salience"]),
        ) for o in data["objects"]]
        spawn = Pose(**data["spawn"])
        return cls(spec=spec, occupancy=occ, objects=objects, spawn=spawn,
                   target=data["target"], seed=data["seed"],
                   difficulty=data.get("difficulty", "easy"))


@dataclass
class SyntheticObservation:
    rgb: np.ndarray
    depth: np.ndarray
    pose: Pose


def _column_rays(pose: Pose, intrinsics: CameraIntrinsics, max_depth: float):
    """Unit ground directions and range limits for every image column."""
    u = (np.arange(intrinsics.width) - intrinsics.cx) / intrinsics.fx
    ct, st = math.cos(pose.theta), math.sin(pose.theta)
    dx = ct + st * u
    dy = st - ct * u
    norm = np.sqrt(1.0 + u * u)
    return u, dx / norm, dy / norm, norm, max_depth * norm


def render(scene: Scene, pose: Pose, intrinsics: CameraIntrinsics = None,
           params: SimParams = SimParams()) -> SyntheticObservation:
    """Raycast one posed RGB-D frame from the scene."""
    if intrinsics is None:
        intrinsics = params.intrinsics()
    spec = scene.spec
    agent_r = math.floor((pose.y - spec.origin[1]) / spec.resolution)
    agent_c = math.floor((pose.x - spec.origin[0]) / spec.resolution)
    if not spec.contains((agent_r, agent_c)) or scene.occupancy[agent_r, agent_c]:
        raise PoseInObstacle(f"camera pose {pose} is not in free space")

    u, dirx, diry, norm, max_t = _column_rays(pose, intrinsics, params.max_depth)
    t, hit_r, hit_c, hit = _kernels.cast_rays(
        scene.occupancy, spec.origin[0], spec.origin[1], spec.resolution,
        pose.x, pose.y, dirx, diry, max_t)
    hit = hit.astype(bool)
    d = np.where(hit, t / norm, params.max_depth)  # optical-axis depth per column

    h, w = intrinsics.height, intrinsics.width
    fy, cy = intrinsics.fy, intrinsics.cy
    ps = np.arange(h, dtype=np.float64)[:, None]
    p_top = cy + (params.camera_height - params.wall_height) * fy / d
    p_bot = cy + params.camera_height * fy / d
    p_part = cy + (params.camera_height - params.part_z_low) * fy / d

    wall_mask = hit[None, :] & (ps >= p_top[None, :]) & (ps < p_bot[None, :])
    with np.errstate(divide="ignore"):
        d_floor = np.where(ps > cy, params.camera_height * fy / (ps - cy), np.inf)
    floor_visible = (d_floor < params.max_depth) & ~wall_mask
    floor_visible &= np.where(hit[None, :], ps >= p_bot[None, :], True)

    depth = np.where(wall_mask, d[None, :],
                     np.where(floor_visible, d_floor, params.max_depth))

    rgb = np.empty((h, w, 3), dtype=np.uint8)
    rgb[:] = BACKGROUND_COLOR
    rgb[np.broadcast_to(floor_visible, (h, w))] = FLOOR_COLOR
    body_colors = np.full((w, 3), WALL_COLOR, dtype=np.uint8)
    part_cols = np.zeros(w, dtype=bool)
    part_colors = np.zeros((w, 3), dtype=np.uint8)
    if hit.any():
        hri = hit_r[hit]
        hci = hit_c[hit]
        obj_idx = scene._cell_obj[hri, hci]
        for j, col in enumerate(np.nonzero(hit)[0]):
            oi = obj_idx[j]
            if oi >= 0:
                body_colors[col] = scene.objects[oi].body_color
                if scene._part_mask[hri[j], hci[j]]:
                    part_cols[col] = True
                    part_colors[col] = scene.objects[oi].part_color
    wall_pixels = np.nonzero(wall_mask)
    rgb[wall_pixels[0], wall_pixels[1]] = body_colors[wall_pixels[1]]
    part_mask = wall_mask & part_cols[None, :] & (ps < p_part[None, :])
    part_pixels = np.nonzero(part_mask)
    rgb[part_pixels[0], part_pixels[1]] = part_colors[part_pixels[1]]
    return SyntheticObservation(rgb=rgb, depth=depth, pose=pose)


@dataclass(frozen=True)
class Detection:
    bearing: float  # radians relative to heading, CCW positive
    range: float    # ground distance, meters
    cell: tuple


def oracle_detect(scene: Scene, pose: Pose, intrinsics: CameraIntrinsics = None,
                  params: SimParams = SimParams()):
    """Ground-truth detector: fires iff a rendered ray hits a target-instance cell
    within detect_range. Returns the nearest such hit or None."""
    if intrinsics is None:
        intrinsics = params.intrinsics()
    spec = scene.spec
    u, dirx, diry, norm, max_t = _column_rays(pose, intrinsics, params.max_depth)
    t, hit_r, hit_c, hit = _kernels.cast_rays(
        scene.occupancy, spec.origin[0], spec.origin[1], spec.resolution,
        pose.x, pose.y, dirx, diry, max_t)
    target_ids = set(scene.target_object_indices())
    best = None
    for col in np.nonzero(hit)[0]:
        if t[col] > params.detect_range:
            continue
        oi = scene._cell_obj[hit_r[col], hit_c[col]]
        if oi >= 0 and int(oi) in target_ids:
            if best is None or t[col] < best[0]:
                best = (float(t[col]), int(col), int(hit_r[col]), int(hit_c[col]))
    if best is None:
        return None
    rng, col, r, c = best
    bearing = wrap_angle(math.atan2(diry[col], dirx[col]) - pose.theta)
    return Detection(bearing=bearing, range=rng, cell=(r, c))


def apply_action(scene: Scene, pose: Pose, action, step: float = 0.25,
                 turn: float = math.radians(30.0)):
    """Kinematic step. Forward moves crossing an obstacle are rejected whole.

    Returns (new_pose, collided, blocking_cell); blocking_cell is the first
    obstacle cell on the swept segment (None when the move succeeds).
    """
    from .planner import ActionCommand

    if action == ActionCommand.TURN_LEFT:
        return Pose(pose.x, pose.y, pose.theta + turn), False, None
    if action == ActionCommand.TURN_RIGHT:
        return Pose(pose.x, pose.y, pose.theta - turn), False, None
    if action == ActionCommand.STOP:
        return pose, False, None
    nx = pose.x + step * math.cos(pose.theta)
    ny = pose.y + step * math.sin(pose.theta)
    n = max(2, int(math.ceil(step / (scene.spec.resolution / 4.0))) + 1)
    xs = np.linspace(pose.x, nx, n)
    ys = np.linspace(pose.y, ny, n)
    rr = np.floor((ys - scene.spec.origin[1]) / scene.spec.resolution).astype(int)
    cc = np.floor((xs - scene.spec.origin[0]) / scene.spec.resolution).astype(int)
    inside = (rr >= 0) & (rr < scene.spec.rows) & (cc >= 0) & (cc < scene.spec.cols)
    blocked = ~inside | scene.occupancy[np.clip(rr, 0, scene.spec.rows - 1),
                                        np.clip(cc, 0, scene.spec.cols - 1)]
    if blocked.any():
        first = int(np.argmax(blocked))
        cell = (int(rr[first]), int(cc[first])) if inside[first] else None
        return pose, True, cell
    return Pose(nx, ny, pose.theta), False, None


class SyntheticEmbeddingProvider:
    """Deterministic CLIP stand-in with planted attribute-similarity structure.

    Text channel embeddings are unit basis vectors; an image embeds to the
    normalized area-weighted salience mass of its colors per channel, plus a
    final background axis holding the non-salient mass, making every patch
    cosine an analytic function of visible pixel content.
    """

    def __init__(self, scene: Scene, channels, noise_std: float = 0.0, seed: int = 0):
        self.channels = list(channels)
        self.noise_std = float(noise_std)
        self.seed = int(seed)
        self.dim = len(self.channels) + 1
        self.input_size = None
        self._table = {}
        for color, sal in scene.color_salience().items():
            vec = np.array([float(sal.get(ch, 0.0)) for ch in self.channels])
            self._table[color] = vec

    def embed_texts(self, texts):
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            if text in self.channels:
                out[i, self.channels.index(text)] = 1.0
            else:
                out[i, -1] = 1.0
        return out

    def _embed_one(self, image: np.ndarray) -> np.ndarray:
        pixels = np.asarray(image, dtype=np.uint8).reshape(-1, 3)
        colors, counts = np.unique(pixels, axis=0, return_counts=True)
        total = counts.sum()
        w = np.zeros(self.dim - 1)
        bg = 0.0
        for color, count in zip(colors, counts):
            sal = self._table.get(tuple(int(v) for v in color))
            frac = count / total
            if sal is None:
                bg += frac
            else:
                w += frac * sal
                bg += frac * (1.0 - float(sal.max()))
        if self.noise_std > 0:
            digest = zlib.crc32(np.ascontiguousarray(pixels).tobytes())
            rng = np.random.default_rng([self.seed, digest])
            w = np.clip(w * (1.0 + self.noise_std * rng.standard_normal(w.shape)), 0.0, None)
        vec = np.concatenate([w, [bg]])
        n = np.linalg.norm(vec)
        if n == 0.0:
            vec[-1] = 1.0
            n = 1.0
        return vec / n

    def embed_images(self, images):
        return np.stack([self._embed_one(img) for img in images])


def _flood_labels(occupancy: np.ndarray):
    free = ~occupancy
    labels, _ = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    return labels


def _reachable(scene_occ: np.ndarray, spawn_cell, target_cells) -> bool:
    labels = _flood_labels(scene_occ)
    spawn_label = labels[spawn_cell]
    if spawn_label == 0:
        return False
    rows, cols = scene_occ.shape
    for r, c in target_cells:
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < rows and 0 <= nc < cols and labels[nr, nc] == spawn_label:
                return True
    return False


def _reachable_inflated(scene_occ: np.ndarray, spawn_cell, target_cells,
                        inflate_cells: int = 2, success_cells: float = 8.0) -> bool:
    """Reachability under the planner's obstacle inflation: some inflated-free
    cell connected to spawn must lie within the success radius of the target."""
    size = 2 * inflate_cells + 1
    span = np.arange(-inflate_cells, inflate_cells + 1)
    rr, cc = np.meshgrid(span, span, indexing="ij")
    disk = rr * rr + cc * cc <= inflate_cells * inflate_cells
    blocked = ndimage.binary_dilation(scene_occ, structure=disk)
    labels, _ = ndimage.label(~blocked,
                              structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    spawn_label = labels[spawn_cell]
    if spawn_label == 0:
        return False
    tr = np.array([c[0] for c in target_cells], dtype=float)
    tc = np.array([c[1] for c in target_cells], dtype=float)
    lr, lc = np.nonzero(labels == spawn_label)
    d2 = ((lr[:, None] - tr[None, :]) ** 2 + (lc[:, None] - tc[None, :]) ** 2).min(axis=1)
    return bool((d2 <= success_cells ** 2).any())


def _clearance_mask(occupancy: np.ndarray, clearance: int) -> np.ndarray:
    size = 2 * clearance + 1
    near_obs = ndimage.binary_dilation(occupancy, structure=np.ones((size, size), bool))
    return ~near_obs


def _place_rect(occ: np.ndarray, rng, height: int, width: int, margin: int = 2,
                region=None, tries: int = 60):
    rows, cols = occ.shape
    r_lo, r_hi, c_lo, c_hi = region if region else (1, rows - 1, 1, cols - 1)
    for _ in range(tries):
        r0 = int(rng.integers(r_lo, max(r_lo + 1, r_hi - height)))
        c0 = int(rng.integers(c_lo, max(c_lo + 1, c_hi - width)))
        window = occ[max(0, r0 - margin):r0 + height + margin,
                     max(0, c0 - margin):c0 + width + margin]
        if not window.any():
            return r0, c0
    return None


def _make_object(index: int, category: str, r0: int, c0: int, size: tuple,
                 part_count: int, body_salience: dict, part_salience: dict) -> SceneObject:
    cells = tuple((r0 + dr, c0 + dc) for dr in range(size[0]) for dc in range(size[1]))
    part = tuple(cells[:part_count])  # first row cells: the object's "back" edge
    return SceneObject(category=category, cells=cells, part_cells=part,
                       body_color=_BODY_PALETTE[index % len(_BODY_PALETTE)],
                       part_color=_PART_PALETTE[index % len(_PART_PALETTE)],
                       body_salience=body_salience, part_salience=part_salience)


def _target_saliences(target: str):
    attrs = FixtureSource().fetch(target, 3, 3)
    geo, aff = attrs
    body = {a: 0.5 for a in geo}
    body.update({a: 0.6 for a in aff})
    part = {a: 0.55 for a in geo[1:]}
    part[geo[0]] = 1.0
    part.update({a: 0.6 for a in aff})
    return geo, aff, body, part


def _distractor_saliences(target_channels, rng, level: float):
    base = {a: round(float(rng.uniform(0.0, level)), 3) for a in target_channels}
    return base


def generate_scene(seed: int, difficulty: str = "easy") -> Scene:
    """Seeded procedural scene. Reachability is verified; regenerates up to 20 times."""
    if difficulty not in DIFFICULTIES:
        raise SimError(f"unknown difficulty {difficulty!r}")
    code = DIFFICULTIES.index(difficulty)
    for attempt in range(20):
        rng = np.random.default_rng([code, seed, attempt])
        scene = _try_generate(rng, seed, difficulty)
        if scene is not None:
            return scene
    raise GenerationFailed(f"could not generate a reachable {difficulty} scene for seed {seed}")


def _try_generate(rng, seed: int, difficulty: str):
    rows = cols = 64
    res = 0.1
    spec = GridSpec(resolution=res, rows=rows, cols=cols, origin=(0.0, 0.0))
    occ = np.zeros((rows, cols), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True

    target = CATEGORIES[seed % len(CATEGORIES)]
    geo, aff, body_sal, part_sal = _target_saliences(target)
    target_channels = geo + aff
    objects = []

    if difficulty == "maze":
        _recursive_divide(occ, rng, 1, rows - 1, 1, cols - 1)

    if difficulty == "easy":
        for _ in range(int(rng.integers(2, 5))):
            bh, bw = int(rng.integers(3, 9)), int(rng.integers(3, 9))
            spot = _place_rect(occ, rng, bh, bw, margin=3)
            if spot:
                occ[spot[0]:spot[0] + bh, spot[1]:spot[1] + bw] = True

    # target object
    tsize = (3, 3)
    part_count = 1 if difficulty == "multiscale" else 2
    region = None
    if difficulty == "multiscale":
        corner = int(rng.integers(0, 4))
        span = 18
        region = {0: (2, span, 2, span), 1: (2, span, cols - span, cols - 2),
                  2: (rows - span, rows - 2, 2, span),
                  3: (rows - span, rows - 2, cols - span, cols - 2)}[corner]
    spot = _place_rect(occ, rng, tsize[0], tsize[1], margin=3, region=region)
    if spot is None:
        return None
    objects.append(_make_object(0, target, spot[0], spot[1], tsize,
                                part_count, body_sal, part_sal))
    occ[spot[0]:spot[0] + tsize[0], spot[1]:spot[1] + tsize[1]] = True

    # distractors
    if difficulty == "multiscale":
        sal = _distractor_saliences(target_channels, rng, 0.45)
        dspot = _place_rect(occ, rng, 5, 5, margin=3,
                            region=(rows // 2 - 12, rows // 2 + 12,
                                    cols // 2 - 12, cols // 2 + 12))
        if dspot is None:
            return None
        cat = CATEGORIES[(seed + 3) % len(CATEGORIES)]
        objects.append(_make_object(1, cat, dspot[0], dspot[1], (5, 5), 0, sal, sal))
        occ[dspot[0]:dspot[0] + 5, dspot[1]:dspot[1] + 5] = True
    else:
        for i in range(int(rng.integers(1, 3))):
            cat = CATEGORIES[(seed + 2 + i) % len(CATEGORIES)]
            if cat == target:
                cat = CATEGORIES[(seed + 5 + i) % len(CATEGORIES)]
                if cat == target:
                    continue
            sal = _distractor_saliences(target_channels, rng, 0.2)
            spot2 = _place_rect(occ, rng, 3, 3, margin=3)
            if spot2 is None:
                continue
            objects.append(_make_object(1 + i, cat, spot2[0], spot2[1], (3, 3),
                                        1, sal, sal))
            occ[spot2[0]:spot2[0] + 3, spot2[1]:spot2[1] + 3] = True

    # spawn
    target_cells = objects[0].cells
    tr = np.mean([c[0] for c in target_cells])
    tc = np.mean([c[1] for c in target_cells])
    clear = _clearance_mask(occ, 2)
    rr, cc = np.nonzero(clear)
    if rr.size == 0:
        return None
    dist_cells = np.hypot(rr - tr, cc - tc)
    min_d = {"easy": 20.0, "maze": 25.0, "multiscale": 45.0}[difficulty]
    ok = dist_cells >= min_d
    if not ok.any():
        ok = dist_cells >= dist_cells.max() * 0.95
    idx = int(rng.integers(0, int(ok.sum())))
    sr, sc = int(rr[ok][idx]), int(cc[ok][idx])
    if not _reachable(occ, (sr, sc), target_cells):
        return None
    if not _reachable_inflated(occ, (sr, sc), target_cells):
        return None
    theta = float(rng.uniform(-math.pi, math.pi))
    spawn = Pose(x=(sc + 0.5) * res, y=(sr + 0.5) * res, theta=theta)
    return Scene(spec=spec, occupancy=occ, objects=objects, spawn=spawn,
                 target=target, seed=seed, difficulty=difficulty)


def _recursive_divide(occ, rng, r0, r1, c0, c1, min_size: int = 16, door: int = 7):
    # Doors stay >= 3 cells clear of perpendicular walls so a 2-cell obstacle
    # inflation cannot seal them shut.
    h, w = r1 - r0, c1 - c0
    if h < min_size and w < min_size:
        return
    vertical = w > h or (w == h and rng.random() < 0.5)
    if vertical and w >= min_size:
        wc = int(rng.integers(c0 + 6, c1 - 6))
        if r1 - door - 3 <= r0 + 3:
            return
        gap = int(rng.integers(r0 + 3, r1 - door - 3))
        occ[r0:r1, wc] = True
        occ[gap:gap + door, wc] = False
        _recursive_divide(occ, rng, r0, r1, c0, wc)
        _recursive_divide(occ, rng, r0, r1, wc + 1, c1)
    elif h >= min_size:
        wr = int(rng.integers(r0 + 6, r1 - 6))
        if c1 - door - 3 <= c0 + 3:
            return
        gap = int(rng.integers(c0 + 3, c1 - door - 3))
        occ[wr, c0:c1] = True
        occ[wr, gap:gap + door] = False
        _recursive_divide(occ, rng, r0, wr, c0, c1)
        _recursive_divide(occ, rng, wr + 1, r1, c0, c1)
