"""Episode dataset generation, JSON-lines serialization, statistics, and the
block-shuffled training iterator.

Generation rejection-samples start/goal pairs per scene: geodesic distance
must land in [min_gdsp, max_gdsp], and nearly-straight episodes (ratio below
the threshold) survive only with the configured probability, which keeps the
share of trivial episodes low. Everything is deterministic per seed, with
independent substreams per scene so generation parallelizes.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import nav
from .seeding import derive_rng
from .task import Episode

DATASET_FORMAT_VERSION = 1
SPLITS = ("train", "val", "test")


class DatasetError(Exception):
    pass


class SceneExhaustedError(DatasetError):
    """Rejection sampling made no progress on a scene."""


@dataclass(frozen=True)
class GenerationConstraints:
    min_gdsp: float = 1.0
    max_gdsp: float = 30.0
    easy_ratio_threshold: float = 1.1
    easy_accept_prob: float = 0.2
    count: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.min_gdsp < self.max_gdsp):
            raise DatasetError("need 0 < min_gdsp < max_gdsp")
        if self.easy_ratio_threshold < 1.0:
            raise DatasetError("easy_ratio_threshold must be at least 1")
        if not (0.0 <= self.easy_accept_prob <= 1.0):
            raise DatasetError("easy_accept_prob must be a probability")
        if self.count < 1:
            raise DatasetError("count must be positive")


@dataclass
class EpisodeDataset:
    episodes: list[Episode]
    split: str = "train"
    seed: int = 0
    constraints: GenerationConstraints | None = None
    scene_ids: tuple[str, ...] = ()
    version: int = DATASET_FORMAT_VERSION

    def __post_init__(self):
        ids = [e.episode_id for e in self.episodes]
        if len(set(ids)) != len(ids):
            raise DatasetError("duplicate episode ids in dataset")
        known = set(self.scene_ids)
        for e in self.episodes:
            if known and e.scene_id not in known:
                raise DatasetError(f"episode {e.episode_id} references unknown scene {e.scene_id}")
            e.validate()

    def by_scene(self) -> dict[str, list[Episode]]:
        out: dict[str, list[Episode]] = {}
        for e in self.episodes:
            out.setdefault(e.scene_id, []).append(e)
        return out


_MAX_CONSECUTIVE_REJECTIONS = 100_000
_STARTS_PER_GOAL = 32


def _sample_clear_point(grid, rng, index, radius: float, tries: int = 200) -> np.ndarray:
    """Navigable sample that also strictly clears walls by the agent radius,
    so the simulator will accept it as a pose."""
    for _ in range(tries):
        p = nav.sample_navigable(grid, rng)
        if index.clearance(p) >= radius:
            return p
    raise SceneExhaustedError("cannot sample a wall-clear navigable point")


def _generate_for_scene(scene, quota: int, constraints: GenerationConstraints,
                        rng: np.random.Generator, split: str, scene_index: int,
                        n_scenes: int, resolution: float, agent_radius: float) -> list[Episode]:
    from .geometry import SegmentIndex

    grid = nav.rasterize_navigable(scene.segment_array(), scene.bounds(),
                                   resolution, agent_radius)
    index = SegmentIndex(scene.segment_array())
    episodes: list[Episode] = []
    rejections = 0
    while len(episodes) < quota:
        if rejections > _MAX_CONSECUTIVE_REJECTIONS:
            raise SceneExhaustedError(
                f"scene {scene.id}: {rejections} consecutive rejections")
        goal = _sample_clear_point(grid, rng, index, agent_radius)
        try:
            dist_field = nav.distance_field(grid, goal)
        except nav.NavError:
            rejections += 1
            continue
        accepted = False
        for _ in range(_STARTS_PER_GOAL):
            start = _sample_clear_point(grid, rng, index, agent_radius)
            gdsp = nav.geodesic_distance(dist_field, start)
            if not (constraints.min_gdsp <= gdsp <= constraints.max_gdsp):
                rejections += 1
                continue
            euclidean = float(np.hypot(start[0] - goal[0], start[1] - goal[1]))
            ratio = gdsp / euclidean
            if ratio < constraints.easy_ratio_threshold and \
                    rng.random() >= constraints.easy_accept_prob:
                rejections += 1
                continue
            heading = float(rng.uniform(0.0, 2.0 * math.pi))
            k = scene_index + n_scenes * len(episodes)
            episodes.append(Episode(
                episode_id=f"{split}-{k:06d}",
                scene_id=scene.id,
                start_position=(float(start[0]), float(start[1])),
                start_heading=heading,
                goal_position=(float(goal[0]), float(goal[1])),
                gdsp=float(gdsp),
                euclidean=euclidean,
                ratio=float(ratio),
            ))
            rejections = 0
            accepted = True
            break
        if not accepted:
            rejections += 1
    return episodes


def generate_dataset(scenes, constraints: GenerationConstraints,
                     split: str = "train",
                     resolution: float = nav.DEFAULT_RESOLUTION,
                     agent_radius: float = 0.1) -> EpisodeDataset:
    """Generate `constraints.count` episodes distributed round-robin over the
    scenes, each scene on its own derived random stream."""
    scenes = list(scenes)
    if not scenes:
        raise DatasetError("need at least one scene")
    if split not in SPLITS:
        raise DatasetError(f"split must be one of {SPLITS}")
    n = len(scenes)
    quotas = [constraints.count // n + (1 if i < constraints.count % n else 0)
              for i in range(n)]
    per_scene: list[list[Episode]] = []
    for i, (scene, quota) in enumerate(zip(scenes, quotas)):
        rng = derive_rng(constraints.seed, "scene", i)
        per_scene.append(_generate_for_scene(
            scene, quota, constraints, rng, split, i, n, resolution, agent_radius))
    merged: list[Episode] = []
    for j in range(max(quotas, default=0)):
        for i in range(n):
            if j < len(per_scene[i]):
                merged.append(per_scene[i][j])
    return EpisodeDataset(episodes=merged, split=split, seed=constraints.seed,
                          constraints=constraints,
                          scene_ids=tuple(s.id for s in scenes))


_EPISODE_KEYS = ("episode_id", "scene_id", "start_position", "start_heading",
                 "goal_position", "gdsp", "euclidean", "ratio")


def save_dataset(dataset: EpisodeDataset, path) -> None:
    """JSON lines: a header object, then one episode per line."""
    header = {
        "version": dataset.version,
        "split": dataset.split,
        "seed": dataset.seed,
        "constraints": asdict(dataset.constraints) if dataset.constraints else None,
        "scene_ids": list(dataset.scene_ids),
    }
    with open(path, "w") as f:
        f.write(json.dumps(header) + "\n")
        for e in dataset.episodes:
            row = {
                "episode_id": e.episode_id,
                "scene_id": e.scene_id,
                "start_position": list(e.start_position),
                "start_heading": e.start_heading,
                "goal_position": list(e.goal_position),
                "gdsp": e.gdsp,
                "euclidean": e.euclidean,
                "ratio": e.ratio,
            }
            f.write(json.dumps(row) + "\n")


def load_dataset(path) -> EpisodeDataset:
    with open(path) as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path}: bad header: {e}") from e
    if header.get("version") != DATASET_FORMAT_VERSION:
        raise DatasetError(f"{path}: unsupported dataset version {header.get('version')!r}")
    episodes = []
    for ln in lines[1:]:
        try:
            row = json.loads(ln)
        except json.JSONDecodeError as e:
            raise DatasetError(f"{path}: bad episode line: {e}") from e
        missing = set(_EPISODE_KEYS) - set(row)
        if missing:
            raise DatasetError(f"{path}: episode missing fields {sorted(missing)}")
        episodes.append(Episode(
            episode_id=row["episode_id"],
            scene_id=row["scene_id"],
            start_position=tuple(row["start_position"]),
            start_heading=row["start_heading"],
            goal_position=tuple(row["goal_position"]),
            gdsp=row["gdsp"],
            euclidean=row["euclidean"],
            ratio=row["ratio"],
        ))
    constraints = None
    if header.get("constraints"):
        constraints = GenerationConstraints(**header["constraints"])
    return EpisodeDataset(episodes=episodes, split=header.get("split", "train"),
                          seed=header.get("seed", 0), constraints=constraints,
                          scene_ids=tuple(header.get("scene_ids", ())))


def partition_scenes(scene_ids, num_workers: int) -> list[list[str]]:
    """Scenes split equally among workers, remainder to the earliest."""
    scene_ids = list(scene_ids)
    if num_workers < 1:
        raise DatasetError("num_workers must be at least 1")
    if num_workers > len(scene_ids):
        raise DatasetError(
            f"{num_workers} workers but only {len(scene_ids)} scenes")
    base = len(scene_ids) // num_workers
    extra = len(scene_ids) % num_workers
    out = []
    at = 0
    for w in range(num_workers):
        take = base + (1 if w < extra else 0)
        out.append(scene_ids[at:at + take])
        at += take
    return out


def block_shuffle_pass(dataset: EpisodeDataset, scene_ids, block_size: int,
                       rng: np.random.Generator) -> list[Episode]:
    """One pass for one worker: per-scene blocks of block_size episodes,
    block order shuffled, order within each block preserved."""
    by_scene = dataset.by_scene()
    blocks: list[list[Episode]] = []
    for sid in scene_ids:
        eps = by_scene.get(sid, [])
        for at in range(0, len(eps), block_size):
            blocks.append(eps[at:at + block_size])
    order = rng.permutation(len(blocks))
    out: list[Episode] = []
    for b in order:
        out.extend(blocks[b])
    return out


def block_shuffle_iterator(dataset: EpisodeDataset, num_workers: int,
                           block_size: int = 500, seed: int = 0):
    """Per-worker endless episode streams.

    Scenes are partitioned across workers; each worker's episodes form
    per-scene blocks whose order reshuffles every pass, and the stream runs
    through shuffled copies indefinitely.
    """
    parts = partition_scenes(dataset.scene_ids or sorted(dataset.by_scene()),
                             num_workers)

    def stream(worker: int):
        rng = derive_rng(seed, "worker", worker)
        while True:
            yield from block_shuffle_pass(dataset, parts[worker], block_size, rng)

    return [stream(w) for w in range(num_workers)]


def dataset_stats(dataset: EpisodeDataset, scenes=None,
                  oracle: bool = False) -> dict:
    """Per-split summary: distance statistics plus fixed-bin histograms
    (gdsp 0..30 m step 1, ratio 1..3 step 0.1). With oracle=True and the
    scenes available, also path-length-in-actions statistics for the
    distance-gradient oracle."""
    if not dataset.episodes:
        raise DatasetError("dataset is empty")

    def summary(values):
        v = np.asarray(values, dtype=np.float64)
        return {"count": int(v.size), "min": float(v.min()),
                "median": float(np.median(v)), "mean": float(v.mean()),
                "max": float(v.max())}

    gdsp = [e.gdsp for e in dataset.episodes]
    euclid = [e.euclidean for e in dataset.episodes]
    ratio = [e.ratio for e in dataset.episodes]
    gdsp_hist, gdsp_edges = np.histogram(gdsp, bins=np.arange(0.0, 30.0 + 1.0, 1.0))
    ratio_hist, ratio_edges = np.histogram(ratio, bins=np.arange(1.0, 3.0 + 0.1, 0.1))
    out = {
        "split": dataset.split,
        "episodes": len(dataset.episodes),
        "scenes": sorted(dataset.by_scene()),
        "gdsp": summary(gdsp),
        "euclidean": summary(euclid),
        "ratio": summary(ratio),
        "easy_fraction": float(np.mean([r < 1.1 for r in ratio])),
        "gdsp_histogram": {"edges": gdsp_edges.tolist(), "counts": gdsp_hist.tolist()},
        "ratio_histogram": {"edges": ratio_edges.tolist(), "counts": ratio_hist.tolist()},
    }
    if oracle:
        if scenes is None:
            raise DatasetError("oracle stats require the scenes")
        out["oracle_actions"] = summary(oracle_action_lengths(dataset, scenes))
    return out


def oracle_action_lengths(dataset: EpisodeDataset, scenes) -> list[int]:
    """Steps the distance-gradient oracle takes per episode (collision-aware
    kinematics, privileged field access)."""
    from .agents import geodesic_oracle_agent, run_agent_episode
    from .task import Environment, FieldCache

    by_id = {s.id: s for s in scenes}
    envs: dict[str, Environment] = {}
    cache = FieldCache()
    lengths = []
    for e in dataset.episodes:
        env = envs.get(e.scene_id)
        if env is None:
            if e.scene_id not in by_id:
                raise DatasetError(f"episode references unknown scene {e.scene_id}")
            env = Environment(by_id[e.scene_id], sensor_configs=(), field_cache=cache)
            envs[e.scene_id] = env
        agent = geodesic_oracle_agent()
        outcome = run_agent_episode(env, e, agent)
        lengths.append(outcome.steps)
    return lengths
