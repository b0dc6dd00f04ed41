"""Throughput benchmark harness: frames per second per sensor set, frame
resolution, and concurrent worker count, reported in a sensors-by-columns
table.

Workers are separate processes, each owning its own simulator over the same
immutable scene; the only shared state is the scene file. Cells run
sequentially so they cannot disturb each other's measurements. Timing uses
the system-wide monotonic clock, starting after the warmup frames.
"""
from __future__ import annotations

import json
import multiprocessing as mp
import os
import platform
import time
from dataclasses import asdict, dataclass, field

from .scene import build_scene_graph, load_scene
from .sensors import SensorConfig
from .sim import Action, AgentConfig, Simulator

SENSOR_SETS = {
    "rgb": ("rgb",),
    "rgbd": ("rgb", "depth"),
    "rgbds": ("rgb", "depth", "semantic"),
}


class BenchError(Exception):
    pass


@dataclass(frozen=True)
class BenchConfig:
    scene_path: str
    resolutions: tuple[int, ...] = (128, 256, 512)
    sensor_sets: tuple[str, ...] = ("rgb", "rgbd", "rgbds")
    worker_counts: tuple[int, ...] = (1, 5)
    frames: int = 2000
    warmup: int = 200
    repeats: int = 1  # cells report the median over this many trials

    def __post_init__(self):
        if self.warmup < 0 or self.frames <= self.warmup:
            raise BenchError("need frames > warmup >= 0")
        if any(w < 1 for w in self.worker_counts):
            raise BenchError("worker counts must be at least 1")
        if self.repeats < 1:
            raise BenchError("repeats must be at least 1")
        for s in self.sensor_sets:
            if s not in SENSOR_SETS:
                raise BenchError(f"unknown sensor set {s!r}; choose from {sorted(SENSOR_SETS)}")


@dataclass
class BenchCell:
    sensors: str
    resolution: int
    workers: int
    fps_aggregate: float
    fps_per_worker: list[float]
    frames_per_worker: int
    failed: bool = False
    error: str = ""


@dataclass
class BenchReport:
    scene_id: str
    host: str
    timestamp: str
    config: dict
    cells: list[BenchCell] = field(default_factory=list)

    def cell(self, sensors: str, resolution: int, workers: int) -> BenchCell | None:
        for c in self.cells:
            if (c.sensors, c.resolution, c.workers) == (sensors, resolution, workers):
                return c
        return None

    def to_json(self) -> str:
        return json.dumps({
            "scene_id": self.scene_id,
            "host": self.host,
            "timestamp": self.timestamp,
            "config": self.config,
            "cells": [asdict(c) for c in self.cells],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        data = json.loads(text)
        report = cls(scene_id=data["scene_id"], host=data["host"],
                     timestamp=data["timestamp"], config=data["config"])
        report.cells = [BenchCell(**c) for c in data["cells"]]
        return report


def _cycle_policy(step: int) -> Action:
    return Action.MOVE_FORWARD if step % 2 == 0 else Action.TURN_LEFT


def _pick_start(scene):
    """Deterministic interior pose for stepping: the navigable cell nearest
    the bounds center."""
    import numpy as np

    from . import nav

    grid = nav.rasterize_navigable(scene.segment_array(), scene.bounds())
    cells = grid.navigable_cells()
    if len(cells) == 0:
        raise BenchError(f"scene {scene.id} has no navigable space")
    x0, y0, x1, y1 = scene.bounds()
    center = np.array([(x0 + x1) / 2.0, (y0 + y1) / 2.0])
    centers = grid.origin + grid.resolution * cells[:, ::-1]
    best = cells[int(np.argmin(((centers - center) ** 2).sum(axis=1)))]
    return grid.center_of(*best)


def _worker_main(scene_path, sensors, resolution, frames, warmup,
                 barrier, out_queue, worker_id):
    try:
        scene = load_scene(scene_path)
        configs = tuple(SensorConfig(kind, width=resolution, height=resolution)
                        for kind in SENSOR_SETS[sensors])
        sim = Simulator(build_scene_graph(scene), AgentConfig(), configs)
        start = _pick_start(scene)
        sim.set_agent_state(start, 0.0)
        for k in range(warmup):
            sim.step(_cycle_policy(k))
        barrier.wait()
        t0 = time.perf_counter()
        for k in range(frames):
            sim.step(_cycle_policy(k))
        t1 = time.perf_counter()
        out_queue.put((worker_id, t0, t1, frames, ""))
    except Exception as e:  # report, never hang the coordinator
        try:
            barrier.wait(timeout=60)
        except Exception:
            pass
        out_queue.put((worker_id, 0.0, 0.0, 0, f"{type(e).__name__}: {e}"))


def _run_cell(scene_path: str, sensors: str, resolution: int, workers: int,
              frames: int, warmup: int) -> BenchCell:
    measured = frames - warmup
    ctx = mp.get_context("fork" if hasattr(os, "fork") else "spawn")
    barrier = ctx.Barrier(workers + 1)
    queue = ctx.Queue()
    procs = [ctx.Process(target=_worker_main,
                         args=(scene_path, sensors, resolution, measured,
                               warmup, barrier, queue, w))
             for w in range(workers)]
    for p in procs:
        p.start()
    barrier.wait()
    results = [queue.get() for _ in procs]
    for p in procs:
        p.join()
    results.sort()
    errors = [r[4] for r in results if r[4]]
    if errors:
        return BenchCell(sensors=sensors, resolution=resolution, workers=workers,
                         fps_aggregate=0.0, fps_per_worker=[],
                         frames_per_worker=measured, failed=True,
                         error="; ".join(errors))
    wall = max(r[2] for r in results) - min(r[1] for r in results)
    per_worker = [r[3] / (r[2] - r[1]) for r in results]
    return BenchCell(
        sensors=sensors, resolution=resolution, workers=workers,
        fps_aggregate=sum(r[3] for r in results) / wall,
        fps_per_worker=per_worker,
        frames_per_worker=measured,
    )


def run_benchmark(config: BenchConfig) -> BenchReport:
    """Measure every (sensor set, resolution, workers) cell sequentially."""
    scene = load_scene(config.scene_path)  # fail fast on a bad scene
    report = BenchReport(
        scene_id=scene.id,
        host=f"{platform.node()} ({os.cpu_count()} cpus)",
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"),
        config=asdict(config),
    )
    for sensors in config.sensor_sets:
        for resolution in config.resolutions:
            for workers in config.worker_counts:
                trials: list[BenchCell] = []
                for _ in range(config.repeats):
                    try:
                        trials.append(_run_cell(config.scene_path, sensors,
                                                resolution, workers,
                                                config.frames, config.warmup))
                    except Exception as e:
                        trials.append(BenchCell(
                            sensors=sensors, resolution=resolution,
                            workers=workers, fps_aggregate=0.0,
                            fps_per_worker=[],
                            frames_per_worker=config.frames - config.warmup,
                            failed=True, error=f"{type(e).__name__}: {e}"))
                good = [t for t in trials if not t.failed]
                if good:
                    good.sort(key=lambda t: t.fps_aggregate)
                    report.cells.append(good[len(good) // 2])
                else:
                    report.cells.append(trials[0])
    return report


def render_report(report: BenchReport, fmt: str = "text") -> str:
    """Table with sensor-set rows and (workers x resolution) columns; failed
    cells render as an em-dash placeholder."""
    if fmt == "json":
        return report.to_json()
    resolutions = sorted({c.resolution for c in report.cells})
    workers = sorted({c.workers for c in report.cells})
    sensor_order = [s for s in SENSOR_SETS if any(c.sensors == s for c in report.cells)]

    def value(sensors, res, n):
        c = report.cell(sensors, res, n)
        if c is None or c.failed:
            return "--"
        return f"{c.fps_aggregate:.0f}"

    headers = ["sensors / resolution"]
    for n in workers:
        for res in resolutions:
            headers.append(f"{n}w {res}")
    rows = []
    for s in sensor_order:
        row = [s]
        for n in workers:
            for res in resolutions:
                row.append(value(s, res, n))
        rows.append(row)
    if fmt == "markdown":
        lines = ["| " + " | ".join(headers) + " |",
                 "|" + "|".join("---" for _ in headers) + "|"]
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines)
    if fmt == "text":
        widths = [max(len(str(r[k])) for r in [headers] + rows) for k in range(len(headers))]
        lines = [f"frames per second, scene {report.scene_id}, host {report.host}",
                 "  ".join(h.ljust(widths[k]) for k, h in enumerate(headers))]
        for row in rows:
            lines.append("  ".join(str(v).ljust(widths[k]) for k, v in enumerate(row)))
        return "\n".join(lines)
    raise BenchError(f"unknown report format {fmt!r}")
