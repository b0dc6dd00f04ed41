"""Command-line entry point: scene generation, episode generation, dataset
statistics, agent evaluation, throughput benchmarking, and the teleop
server.

Every subcommand echoes its effective configuration (defaults included)
before doing any work, so a run is reproducible from its own banner. All
randomness derives from --seed. Exit codes: 0 success, 1 usage error, 2
runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .seeding import derive_seed

log = logging.getLogger("navsim")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v for v in text.split(",") if v)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="navsim", description=__doc__)
    p.add_argument("--log-level", default="warning",
                   choices=["debug", "info", "warning", "error"])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-scenes", help="generate procedural scene files")
    g.add_argument("--count", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--rooms", type=_int_list, default=(4, 6),
                   help="room count range, e.g. 4,6")
    g.add_argument("--room-size", type=_str_list, default=("3.5", "6.5"),
                   help="room side range in meters, e.g. 3.5,6.5")
    g.add_argument("--corridor", type=float, default=1.0,
                   help="door opening width in meters")

    e = sub.add_parser("gen-episodes", help="generate an episode dataset")
    e.add_argument("--scenes", required=True, help="directory of scene files")
    e.add_argument("--count", type=int, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--split", default="train", choices=["train", "val", "test"])
    e.add_argument("--min-gdsp", type=float, default=1.0)
    e.add_argument("--max-gdsp", type=float, default=30.0)
    e.add_argument("--ratio-threshold", type=float, default=1.1)
    e.add_argument("--easy-accept-prob", type=float, default=0.2)
    e.add_argument("--out", required=True, help="output JSONL path")

    s = sub.add_parser("stats", help="summarize an episode dataset")
    s.add_argument("--episodes", required=True)
    s.add_argument("--scenes", help="scene directory (needed for --oracle)")
    s.add_argument("--oracle", action="store_true",
                   help="also run the gradient oracle for action-length stats")
    s.add_argument("--out", help="write JSON here instead of stdout")

    v = sub.add_parser("eval", help="evaluate a baseline agent")
    v.add_argument("--agent", required=True,
                   choices=["random", "forward", "goal-follower", "oracle", "mapper"])
    v.add_argument("--episodes", required=True)
    v.add_argument("--scenes", required=True)
    v.add_argument("--seeds", type=int, default=5, help="number of seeds")
    v.add_argument("--seed", type=int, default=0, help="base seed")
    v.add_argument("--depth-noise-sigma", type=float, default=0.0)
    v.add_argument("--out", help="write the JSON report here")

    b = sub.add_parser("bench", help="throughput benchmark")
    b.add_argument("--scene", required=True, help="scene file")
    b.add_argument("--resolutions", type=_int_list, default=(128, 256, 512))
    b.add_argument("--sensors", type=_str_list, default=("rgb", "rgbd", "rgbds"))
    b.add_argument("--workers", type=_int_list, default=(1, 5))
    b.add_argument("--frames", type=int, default=2000)
    b.add_argument("--warmup", type=int, default=200)
    b.add_argument("--format", default="text", choices=["text", "json", "markdown"])
    b.add_argument("--out", help="write the report here instead of stdout")

    r = sub.add_parser("serve", help="run the teleoperation server")
    r.add_argument("--host", default="127.0.0.1")
    r.add_argument("--port", type=int, default=8089)
    r.add_argument("--scenes", required=True)
    r.add_argument("--episodes", required=True)
    r.add_argument("--log", default="trajectories.jsonl",
                   help="append-only trajectory log")
    r.add_argument("--ui", help="static directory with the browser client")
    return p


def _banner(args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items())}
    print(f"navsim {cfg.pop('command')}: " + json.dumps(cfg, default=str))


def _load_scene_dir(path):
    from .scene import load_scene
    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise FileNotFoundError(f"no scene files under {path}")
    return [load_scene(f) for f in files]


def cmd_gen_scenes(args) -> int:
    from .scene import SceneGenParams, generate_scene, save_scene
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    size = tuple(float(v) for v in args.room_size)
    params = SceneGenParams(room_count=tuple(args.rooms), room_size=size,
                            corridor_width=args.corridor)
    for k in range(args.count):
        scene = generate_scene(derive_seed(args.seed, "scene", k), params)
        path = out / f"{scene.id}.json"
        save_scene(scene, path)
        print(f"wrote {path} ({len(scene.walls)} walls)"
              + (f"  warnings: {'; '.join(scene.warnings)}" if scene.warnings else ""))
    return 0


def cmd_gen_episodes(args) -> int:
    from .episodes import GenerationConstraints, generate_dataset, save_dataset
    scenes = _load_scene_dir(args.scenes)
    constraints = GenerationConstraints(
        min_gdsp=args.min_gdsp, max_gdsp=args.max_gdsp,
        easy_ratio_threshold=args.ratio_threshold,
        easy_accept_prob=args.easy_accept_prob,
        count=args.count, seed=args.seed)
    dataset = generate_dataset(scenes, constraints, split=args.split)
    save_dataset(dataset, args.out)
    print(f"wrote {args.out}: {len(dataset.episodes)} episodes over {len(scenes)} scenes")
    return 0


def cmd_stats(args) -> int:
    from .episodes import dataset_stats, load_dataset
    dataset = load_dataset(args.episodes)
    scenes = _load_scene_dir(args.scenes) if args.scenes else None
    stats = dataset_stats(dataset, scenes=scenes, oracle=args.oracle)
    text = json.dumps(stats, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_eval(args) -> int:
    from .episodes import load_dataset
    from .agents import evaluate
    dataset = load_dataset(args.episodes)
    scenes = _load_scene_dir(args.scenes)
    seeds = tuple(derive_seed(args.seed, "worker", k) for k in range(args.seeds))
    report = evaluate(args.agent, dataset, scenes, seeds=seeds,
                      dataset_name=Path(args.episodes).stem,
                      depth_noise_sigma=args.depth_noise_sigma)
    print(report.render_text())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    from .bench import BenchConfig, render_report, run_benchmark
    config = BenchConfig(scene_path=args.scene, resolutions=args.resolutions,
                         sensor_sets=args.sensors, worker_counts=args.workers,
                         frames=args.frames, warmup=args.warmup)
    report = run_benchmark(config)
    text = render_report(report, args.format)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    from .teleop import serve
    serve(args.host, args.port, args.scenes, args.episodes,
          log_path=args.log, ui_dir=args.ui)
    return 0


_COMMANDS = {
    "gen-scenes": cmd_gen_scenes,
    "gen-episodes": cmd_gen_episodes,
    "stats": cmd_stats,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    _banner(args)
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 2
    except Exception as e:
        log.debug("fatal error", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
