"""Command line entry points: run, suite, render-heatmap, gen-scene."""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

from .harness import EpisodeConfig, run_episode, run_suite, write_trajectory
from .mapping import GAMap, export_heatmaps
from .simworld import generate_scene


def _add_episode_flags(parser):
    # Flags default to None so a config file's values survive unless a flag
    # is passed explicitly; EpisodeConfig supplies the real defaults.
    parser.add_argument("--scene", help="path to a serialized scene file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--difficulty", choices=["easy", "maze", "multiscale"])
    parser.add_argument("--target", help="target category (default: the scene's)")
    parser.add_argument("--levels", type=int)
    parser.add_argument("--ng", type=int)
    parser.add_argument("--na", type=int)
    parser.add_argument("--update-mode", choices=["max", "average", "replacement"])
    parser.add_argument("--radius", type=int)
    parser.add_argument("--max-steps", type=int)
    parser.add_argument("--success-dist", type=float)
    parser.add_argument("--provider", help="'synthetic' or an embed-service base URL")
    parser.add_argument("--policy", choices=["gamap", "nearest_frontier"])
    parser.add_argument("--config", help="JSON config file; flags override its values")


def _episode_config(args) -> EpisodeConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    flags = {
        "scene_path": args.scene, "seed": args.seed, "difficulty": args.difficulty,
        "target": args.target, "levels": args.levels, "n_g": args.ng, "n_a": args.na,
        "update_mode": args.update_mode, "radius": args.radius,
        "max_steps": args.max_steps, "success_distance": args.success_dist,
        "provider": args.provider, "policy": args.policy,
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    return EpisodeConfig(**base)


def _cmd_run(args) -> int:
    cfg = _episode_config(args)
    result = run_episode(cfg)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory(out / "trajectory.jsonl", result)
    summary = {
        "success": result.success, "steps": result.steps,
        "path_length": result.path_length, "shortest_length": result.shortest_length,
        "stop_pose": list(result.stop_pose), "error_class": result.error_class,
        "target": result.target, "seed": result.seed,
        "detector_fired": result.detector_fired, "target_seen": result.target_seen,
    }
    (out / "result.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0 if result.success else 1


def _cmd_suite(args) -> int:
    with open(args.matrix) as fh:
        matrix = json.load(fh)
    def progress(name, seed, res):
        status = "ok " if res.success else "FAIL"
        print(f"[{name}] seed {seed}: {status} steps={res.steps}", file=sys.stderr)
    report = run_suite(matrix, out_dir=args.out,
                       progress=progress if args.verbose else None)
    from .harness import report_summary

    print(report_summary(report))
    return 0


def _cmd_render_heatmap(args) -> int:
    gm = GAMap.load(args.map)
    channel = args.channel
    if channel == "mean":
        grid = gm.channel_mean_grid()
    elif channel in gm.channels:
        grid = gm.scores[..., gm.channels.index(channel)]
    else:
        print(f"unknown channel {channel!r}; available: mean, {', '.join(gm.channels)}",
              file=sys.stderr)
        return 2
    import numpy as np
    from PIL import Image

    filled = np.where(np.isnan(grid), -1.0, grid)
    img = ((filled + 1.0) / 2.0 * 255.0).round().astype("uint8")
    Image.fromarray(img, mode="L").save(args.png)
    if args.pgm_dir:
        export_heatmaps(gm, args.pgm_dir)
    print(f"wrote {args.png}")
    return 0


def _cmd_gen_scene(args) -> int:
    scene = generate_scene(args.seed, args.difficulty)
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(scene.to_text())
    print(f"wrote {out} (target={scene.target})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gamap",
                                     description="GA-score mapping navigation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single episode")
    _add_episode_flags(p_run)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run an episode matrix")
    p_suite.add_argument("--matrix", required=True, help="suite matrix JSON file")
    p_suite.add_argument("--out", required=True, help="output directory")
    p_suite.add_argument("--verbose", action="store_true")
    p_suite.set_defaults(func=_cmd_suite)

    p_heat = sub.add_parser("render-heatmap", help="render a saved map channel to PNG")
    p_heat.add_argument("--map", required=True, help="saved GAMap .npz file")
    p_heat.add_argument("--channel", required=True,
                        help="channel name, or 'mean' for the channel average")
    p_heat.add_argument("--png", required=True, help="output PNG path")
    p_heat.add_argument("--pgm-dir", help="also export all channels as 16-bit PGM here")
    p_heat.set_defaults(func=_cmd_render_heatmap)

    p_gen = sub.add_parser("gen-scene", help="generate and serialize a scene")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--difficulty", default="easy",
                       choices=["easy", "maze", "multiscale"])
    p_gen.add_argument("--out", required=True, help="output scene file")
    p_gen.set_defaults(func=_cmd_gen_scene)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
