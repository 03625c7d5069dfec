"""Episode orchestration, SR/SPL metrics, error taxonomy and suite driver."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .attributes import AttributeEmbeddings, FixtureSource, resolve_attributes
from .geometry import GridSpec, Pose
from .mapping import FREE, OBSTACLE, GAMap
from .planner import (ActionCommand, ExplorationExhausted, MotionParams,
                      Unreachable, extract_path, fmm_field, nearest_frontier_goal,
                      next_action, select_goal)
from .scoring import score_observation
from .simworld import (Scene, SimParams, SyntheticEmbeddingProvider, apply_action,
                       generate_scene, oracle_detect, render)

ERROR_CLASSES = ("detection", "planning", "exploration")


class HarnessError(Exception):
    pass


class EmptyResults(HarnessError):
    pass


class InvalidShortestPath(HarnessError):
    pass


class NotAFailure(HarnessError):
    pass


class EmptySuite(HarnessError):
    pass


class SceneLoadError(HarnessError):
    pass


@dataclass
class EpisodeConfig:
    seed: int = 0
    difficulty: str = "easy"
    scene_path: str | None = None
    target: str | None = None            # None: use the scene's target
    n_g: int = 3
    n_a: int = 1
    levels: int = 3
    aggregate: str = "mean"
    update_mode: str = "max"
    radius: int = 3
    max_steps: int = 500
    success_distance: float = 1.0
    detect_range: float = 3.0
    detector_fn_rate: float = 0.0
    salience_noise: float = 0.0
    provider: str = "synthetic"          # "synthetic" or a service base URL
    policy: str = "gamap"                # "gamap" or "nearest_frontier"
    inflate_radius: float = 0.18
    unknown_cost: float = 2.0
    step: float = 0.25
    turn_deg: float = 30.0
    image_size: int = 64
    fov_deg: float = 79.0
    camera_height: float = 0.8
    max_depth: float = 10.0
    floor_max: float = 0.2
    obstacle_max: float = 1.5
    batch_size: int = 64
    stuck_limit: int = 30
    look_around_steps: int = -1          # -1: one full turn's worth of TURN_LEFTs

    def __post_init__(self):
        if self.max_steps < 1:
            raise HarnessError("max_steps must be >= 1")
        if self.success_distance <= 0:
            raise HarnessError("success_distance must be positive")
        if self.policy not in ("gamap", "nearest_frontier"):
            raise HarnessError(f"unknown policy {self.policy!r}")

    @classmethod
    def from_file(cls, path) -> "EpisodeConfig":
        with open(path) as fh:
            return cls(**json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StepRecord:
    step: int
    x: float
    y: float
    theta: float
    action: str
    goal: tuple | None
    detected: bool


@dataclass
class EpisodeResult:
    success: bool
    steps: int
    path_length: float
    shortest_length: float
    stop_pose: tuple
    error_class: str | None
    seed: int
    target: str
    target_seen: bool = False
    detector_fired: bool = False
    stuck: bool = False
    exhausted: bool = False
    collisions: int = 0
    scoring_seconds: float = 0.0
    wall_seconds: float = 0.0
    trace: list = field(default_factory=list)


def _agent_cell(pose: Pose, spec: GridSpec) -> tuple[int, int]:
    r = math.floor((pose.y - spec.origin[1]) / spec.resolution)
    c = math.floor((pose.x - spec.origin[0]) / spec.resolution)
    return r, c


def _target_distance(pose: Pose, scene: Scene) -> float:
    best = math.inf
    for cell in scene.target_cells():
        x, y = scene.spec.cell_center(cell)
        best = min(best, math.hypot(pose.x - x, pose.y - y))
    return best


def _ground_truth_map(scene: Scene, cfg: EpisodeConfig) -> GAMap:
    gm = GAMap(scene.spec, ["gt"], camera_height=cfg.camera_height,
               max_depth=cfg.max_depth)
    gm.occupancy[:] = FREE
    gm.occupancy[scene.occupancy] = OBSTACLE
    return gm


def shortest_path_length(scene: Scene, cfg: EpisodeConfig) -> float:
    """Geodesic length from spawn to the success region around the target,
    on the fully known scene with the planner's inflation."""
    gm = _ground_truth_map(scene, cfg)
    src = _agent_cell(scene.spawn, scene.spec)
    fld = fmm_field(gm, src, inflate_radius=cfg.inflate_radius,
                    unknown_cost=cfg.unknown_cost)
    centers = np.array([scene.spec.cell_center(c) for c in scene.target_cells()])
    rr, cc = np.nonzero(np.isfinite(fld.dist))
    if rr.size == 0:
        raise InvalidShortestPath("target region unreachable in ground truth")
    xs = scene.spec.origin[0] + (cc + 0.5) * scene.spec.resolution
    ys = scene.spec.origin[1] + (rr + 0.5) * scene.spec.resolution
    d2 = ((xs[:, None] - centers[None, :, 0]) ** 2 +
          (ys[:, None] - centers[None, :, 1]) ** 2).min(axis=1)
    close = d2 <= cfg.success_distance ** 2
    if not close.any():
        raise InvalidShortestPath("no traversable cell within the success distance")
    shortest = float(fld.dist[rr[close], cc[close]].min())
    return max(shortest, scene.spec.resolution)


def _stop_region_goal(field, spec: GridSpec, target_xy, success_distance: float):
    """Reachable cell nearest the agent whose center lies well inside the
    success radius of the detected target."""
    rr, cc = np.nonzero(np.isfinite(field.dist))
    if rr.size == 0:
        return None
    xs = spec.origin[0] + (cc + 0.5) * spec.resolution
    ys = spec.origin[1] + (rr + 0.5) * spec.resolution
    radius = max(0.8 * success_distance, spec.resolution)
    near = (xs - target_xy[0]) ** 2 + (ys - target_xy[1]) ** 2 <= radius ** 2
    if not near.any():
        return None
    d = field.dist[rr[near], cc[near]]
    order = np.lexsort((cc[near], rr[near], d))
    idx = order[0]
    return int(rr[near][idx]), int(cc[near][idx])


def run_episode(config: EpisodeConfig, scene: Scene | None = None) -> EpisodeResult:
    """Run one navigation episode to STOP, budget exhaustion, or dead ends."""
    t_start = time.perf_counter()
    if scene is None:
        if config.scene_path:
            try:
                with open(config.scene_path) as fh:
                    scene = Scene.from_text(fh.read())
            except (OSError, ValueError, KeyError) as exc:
                raise SceneLoadError(f"cannot load scene {config.scene_path}: {exc}") from exc
        else:
            scene = generate_scene(config.seed, config.difficulty)
    target = config.target or scene.target
    attrs = resolve_attributes(target, config.n_g, config.n_a, FixtureSource())
    sim = SimParams(image_size=config.image_size, fov_deg=config.fov_deg,
                    camera_height=config.camera_height, max_depth=config.max_depth,
                    detect_range=config.detect_range)
    intr = sim.intrinsics()
    if config.provider == "synthetic":
        provider = SyntheticEmbeddingProvider(scene, attrs.channels,
                                              noise_std=config.salience_noise,
                                              seed=config.seed)
    else:
        from .remote import RemoteEmbeddingProvider

        provider = RemoteEmbeddingProvider(config.provider)
    attr_emb = AttributeEmbeddings.from_provider(attrs, provider)
    gm = GAMap(scene.spec, attrs.channels, camera_height=config.camera_height,
               max_depth=config.max_depth, floor_max=config.floor_max,
               obstacle_max=config.obstacle_max, update_mode=config.update_mode)
    motion = MotionParams(step=config.step, turn=math.radians(config.turn_deg))
    det_rng = np.random.default_rng([config.seed, 777])

    pose = scene.spawn
    trace = []
    traveled = 0.0
    collisions = 0
    seen = fired = stuck_flag = exhausted = stopped = False
    det_cell = None
    stuck = 0
    scoring_seconds = 0.0
    steps = 0
    look_around = config.look_around_steps
    if look_around < 0:
        look_around = math.ceil(360.0 / config.turn_deg)

    for t in range(config.max_steps):
        steps = t + 1
        obs = render(scene, pose, intr, sim)
        raw_det = oracle_detect(scene, pose, intr, sim)
        det = raw_det
        if raw_det is not None:
            seen = True
            if config.detector_fn_rate > 0 and det_rng.random() < config.detector_fn_rate:
                det = None
        if det is not None:
            fired = True
            if det_cell is None:
                det_cell = det.cell  # latch: a stable approach target

        if config.policy == "gamap":
            t0 = time.perf_counter()
            scores = score_observation(obs.rgb, attr_emb, provider, config.levels,
                                       aggregate=config.aggregate,
                                       batch_size=config.batch_size)
            scoring_seconds += time.perf_counter() - t0
        else:
            scores = None
        gm.fuse_observation(scores, obs.depth, pose, intr)

        agent = _agent_cell(pose, scene.spec)
        action = None
        goal = None
        field = None
        if det_cell is not None:
            tx, ty = scene.spec.cell_center(det_cell)
            if math.hypot(pose.x - tx, pose.y - ty) <= config.success_distance:
                action = ActionCommand.STOP
            else:
                field = fmm_field(gm, agent, inflate_radius=config.inflate_radius,
                                  unknown_cost=config.unknown_cost)
                goal = _stop_region_goal(field, scene.spec, (tx, ty),
                                         config.success_distance)
        if action is None and det_cell is None and t < look_around:
            action = ActionCommand.TURN_LEFT  # initial scan to seed the map
        if action is None:
            if field is None:
                field = fmm_field(gm, agent, inflate_radius=config.inflate_radius,
                                  unknown_cost=config.unknown_cost)
            if goal is None:
                reach_dist = max(config.step, 2 * scene.spec.resolution)
                for _ in range(256):
                    try:
                        if config.policy == "gamap":
                            try:
                                goal = select_goal(gm, agent, config.radius,
                                                   field=field, exclude_visited=True)
                            except ExplorationExhausted:
                                # No scored candidate yet (cold start /
                                # wall-facing views): plain frontier fallback.
                                goal = nearest_frontier_goal(gm, agent, field=field,
                                                             exclude_visited=True)
                        else:
                            goal = nearest_frontier_goal(gm, agent, field=field,
                                                         exclude_visited=True)
                    except ExplorationExhausted:
                        exhausted = True
                        break
                    gx, gy = scene.spec.cell_center(goal)
                    if math.hypot(pose.x - gx, pose.y - gy) <= reach_dist:
                        # Close enough to count as explored from here; consume
                        # the goal so selection moves on.
                        gm.visited[goal] = True
                        goal = None
                        continue
                    break
                if exhausted or goal is None:
                    exhausted = True
                    break
            try:
                path = extract_path(field, goal)
            except Unreachable:
                exhausted = True
                break
            action = next_action(pose, path, scene.spec, motion)

        trace.append(StepRecord(step=t, x=pose.x, y=pose.y, theta=pose.theta,
                                action=action.value, goal=goal,
                                detected=det is not None))
        if action == ActionCommand.STOP:
            stopped = True
            break
        new_pose, collided, blocked_cell = apply_action(
            scene, pose, action, step=config.step,
            turn=math.radians(config.turn_deg))
        if collided:
            collisions += 1
            if blocked_cell is not None:
                gm.occupancy[blocked_cell] = OBSTACLE  # collision feedback
        if action == ActionCommand.MOVE_FORWARD and not collided:
            traveled += config.step
        if new_pose.x == pose.x and new_pose.y == pose.y:
            stuck += 1
        else:
            stuck = 0
        pose = new_pose
        if stuck >= config.stuck_limit:
            stuck_flag = True
            break

    success = stopped and _target_distance(pose, scene) <= config.success_distance
    result = EpisodeResult(
        success=success, steps=steps, path_length=traveled,
        shortest_length=shortest_path_length(scene, config),
        stop_pose=(pose.x, pose.y, pose.theta),
        error_class=None, seed=config.seed, target=target,
        target_seen=seen, detector_fired=fired, stuck=stuck_flag,
        exhausted=exhausted, collisions=collisions,
        scoring_seconds=scoring_seconds,
        wall_seconds=time.perf_counter() - t_start, trace=trace)
    if not success:
        result.error_class = classify_error(result, scene)
    return result


def classify_error(result: EpisodeResult, scene: Scene | None = None) -> str:
    """Assign exactly one failure class, precedence detection > planning > exploration."""
    if result.success:
        raise NotAFailure("episode succeeded")
    if result.target_seen and not result.detector_fired:
        return "detection"
    if result.detector_fired or result.stuck:
        return "planning"
    return "exploration"


def success_rate(results) -> float:
    """Percentage of episodes that stopped within the success distance."""
    results = list(results)
    if not results:
        raise EmptyResults("no episode results")
    return 100.0 * sum(1 for r in results if r.success) / len(results)


def spl(results) -> float:
    """Success weighted by path length, in percent."""
    results = list(results)
    if not results:
        raise EmptyResults("no episode results")
    total = 0.0
    for r in results:
        if r.shortest_length <= 0:
            raise InvalidShortestPath(f"episode seed {r.seed} has L* <= 0")
        if r.success:
            total += r.shortest_length / max(r.path_length, r.shortest_length)
    return 100.0 * total / len(results)


def _aggregate(results) -> dict:
    errors = {cls: 0 for cls in ERROR_CLASSES}
    for r in results:
        if r.error_class:
            errors[r.error_class] += 1
    n = len(results)
    return {
        "episodes": n,
        "sr": success_rate(results),
        "spl": spl(results),
        "error_pct": {cls: 100.0 * errors[cls] / n for cls in ERROR_CLASSES},
    }


def run_suite(matrix: dict, out_dir=None, progress=None) -> dict:
    """Run a seeds x cells matrix of episodes and aggregate a report.

    matrix format: {"seeds": [...], "base": {config overrides}, "cells":
    [{"name": ..., "overrides": {...}}, ...]}. Per-episode failures abort
    only that episode (recorded as an exploration failure).
    """
    seeds = matrix.get("seeds", [])
    cells = matrix.get("cells", [])
    if not seeds or not cells:
        raise EmptySuite("suite matrix needs both seeds and cells")
    base = matrix.get("base", {})
    report_cells = []
    for cell in cells:
        overrides = dict(base)
        overrides.update(cell.get("overrides", {}))
        results = []
        rows = []
        for seed in seeds:
            cfg = EpisodeConfig(**{**overrides, "seed": seed})
            try:
                res = run_episode(cfg)
            except HarnessError as exc:
                res = EpisodeResult(success=False, steps=0, path_length=0.0,
                                    shortest_length=1.0, stop_pose=(0.0, 0.0, 0.0),
                                    error_class="exploration", seed=seed,
                                    target=cfg.target or "", exhausted=True)
            results.append(res)
            rows.append({
                "seed": seed, "success": res.success, "steps": res.steps,
                "path_length": round(res.path_length, 6),
                "shortest_length": round(res.shortest_length, 6),
                "error": res.error_class,
            })
            if progress:
                progress(cell.get("name", "cell"), seed, res)
        agg = _aggregate(results)
        timing = {
            "mean_step_seconds": sum(r.wall_seconds for r in results)
            / max(1, sum(r.steps for r in results)),
            "mean_scoring_seconds_per_step": sum(r.scoring_seconds for r in results)
            / max(1, sum(r.steps for r in results)),
        }
        report_cells.append({
            "name": cell.get("name", "cell"),
            "overrides": {k: overrides[k] for k in sorted(overrides)},
            **agg,
            "episodes_detail": rows,
            "timing": timing,
        })
    report = {"format": "gamap-suite-report-v1",
              "seeds": list(seeds),
              "cells": report_cells}
    if out_dir is not None:
        import pathlib

        out = pathlib.Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report_to_json(report))
        (out / "summary.txt").write_text(report_summary(report))
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True)


def strip_timing(report: dict) -> dict:
    """Report copy without wall-clock fields, for byte-stable comparisons."""
    clean = json.loads(report_to_json(report))
    for cell in clean.get("cells", []):
        cell.pop("timing", None)
    return clean


def report_summary(report: dict) -> str:
    lines = [f"{'cell':24s} {'n':>4s} {'SR%':>7s} {'SPL%':>7s} "
             f"{'det%':>6s} {'plan%':>6s} {'expl%':>6s}"]
    for cell in report["cells"]:
        e = cell["error_pct"]
        lines.append(f"{cell['name']:24s} {cell['episodes']:4d} {cell['sr']:7.1f} "
                     f"{cell['spl']:7.1f} {e['detection']:6.1f} {e['planning']:6.1f} "
                     f"{e['exploration']:6.1f}")
    return "\n".join(lines) + "\n"


def write_trajectory(path, result: EpisodeResult) -> None:
    """Line-delimited JSON records of the per-step trace."""
    with open(path, "w") as fh:
        for rec in result.trace:
            fh.write(json.dumps({
                "step": rec.step, "x": rec.x, "y": rec.y, "theta": rec.theta,
                "action": rec.action,
                "goal": list(rec.goal) if rec.goal else None,
                "detected": rec.detected}, sort_keys=True) + "\n")
