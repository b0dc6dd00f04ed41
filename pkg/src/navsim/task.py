"""PointGoal task: episode lifecycle, termination, the success test, SPL,
the shaped reward, and the Environment tying a simulator to episodes.

An episode gives the agent a static goal, expressed once in the episode
frame anchored at its start pose. Success requires issuing stop within the
success radius of the goal, measured geodesically; running out of the
500-action budget is an unsuccessful termination.
"""
from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nav
from . import sensors as sensors_mod
from .nav import DistanceField, OccupancyGrid
from .scene import Scene, build_scene_graph
from .sensors import Observations, default_sensor_suite
from .sim import Action, AgentConfig, Simulator

MAX_EPISODE_STEPS = 500
SUCCESS_RADIUS = 0.2


class TaskError(Exception):
    pass


@dataclass(frozen=True)
class Episode:
    episode_id: str
    scene_id: str
    start_position: tuple[float, float]
    start_heading: float
    goal_position: tuple[float, float]
    gdsp: float
    euclidean: float
    ratio: float

    def validate(self, resolution: float = nav.DEFAULT_RESOLUTION) -> None:
        if not (1.0 - 1e-9 <= self.gdsp <= 30.0 + 1e-9):
            raise TaskError(f"episode {self.episode_id}: gdsp {self.gdsp} outside [1, 30] m")
        if self.gdsp < self.euclidean - 2.0 * resolution:
            raise TaskError(f"episode {self.episode_id}: gdsp below euclidean distance")
        if self.euclidean > 0 and abs(self.ratio - self.gdsp / self.euclidean) > 1e-6:
            raise TaskError(f"episode {self.episode_id}: ratio inconsistent with gdsp/euclidean")


@dataclass(frozen=True)
class RewardParams:
    success_reward: float = 10.0
    step_penalty: float = -0.01


@dataclass(frozen=True)
class EpisodeOutcome:
    success: bool
    shortest_path: float   # precomputed episode gdsp
    path_taken: float
    spl: float
    steps: int
    collisions: int
    terminated_by: str     # "stop" | "step_limit"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EpisodeOutcome":
        return cls(**json.loads(text))


def success_test(d_stop: float, radius: float = SUCCESS_RADIUS) -> bool:
    """Stop counts as success within the closed ball of the success radius,
    distance measured geodesically."""
    return d_stop <= radius


def spl(success: bool, shortest: float, taken: float) -> float:
    """Success weighted by path length: S * l / max(p, l)."""
    if shortest <= 0.0:
        raise TaskError("shortest path must be positive for SPL")
    if taken < 0.0:
        raise TaskError("path taken cannot be negative")
    if not success:
        return 0.0
    return shortest / max(taken, shortest)


def reward(d_prev: float, d_cur: float, reached: bool,
           params: RewardParams = RewardParams()) -> float:
    """Shaped step reward: distance progress plus the step penalty, plus the
    success bonus on the goal-reaching step."""
    base = d_prev - d_cur + params.step_penalty
    return base + params.success_reward if reached else base


class FieldCache:
    """Process-local cache of distance fields keyed by (scene id, goal cell).
    Reads dominate; a lock guards concurrent builders."""

    def __init__(self):
        self._fields: dict[tuple, DistanceField] = {}
        self._lock = threading.Lock()

    def get(self, scene_id: str, grid: OccupancyGrid, goal) -> DistanceField:
        cell = nav._snap_to_navigable(grid, np.asarray(goal, dtype=np.float64))
        if cell is None:
            raise nav.NavError(f"goal ({goal[0]:.3f}, {goal[1]:.3f}) is not navigable")
        key = (scene_id, cell)
        with self._lock:
            hit = self._fields.get(key)
        if hit is not None:
            return hit
        built = nav.distance_field(grid, goal)
        with self._lock:
            return self._fields.setdefault(key, built)


class Environment:
    """Binds one simulator to the episode lifecycle. One environment per
    worker; the scene geometry and field cache may be shared read-only."""

    def __init__(self, scene: Scene, agent: AgentConfig | None = None,
                 sensor_configs=None, reward_params: RewardParams = RewardParams(),
                 resolution: float = nav.DEFAULT_RESOLUTION,
                 field_cache: FieldCache | None = None,
                 depth_noise_sigma: float = 0.0, noise_seed: int = 0):
        self.scene = scene
        self.agent_config = agent or AgentConfig()
        if sensor_configs is None:
            sensor_configs = default_sensor_suite()
        self.sim = Simulator(build_scene_graph(scene), self.agent_config, sensor_configs)
        self.reward_params = reward_params
        self.grid = nav.rasterize_navigable(scene.segment_array(), scene.bounds(),
                                            resolution, self.agent_config.radius)
        self.fields = field_cache or FieldCache()
        self.depth_noise_sigma = depth_noise_sigma
        self._noise_seed = noise_seed
        self._noise_rng = np.random.default_rng(noise_seed)
        self.episode: Episode | None = None
        self.field: DistanceField | None = None
        self.goal_in_frame: np.ndarray | None = None
        self.steps = 0
        self.done = False
        self._outcome: EpisodeOutcome | None = None

    def _snap_start(self, start) -> np.ndarray:
        start = np.asarray(start, dtype=np.float64)
        if self.sim.geometry.index.clearance(start) >= self.agent_config.radius:
            return start
        cell = nav._snap_to_navigable(self.grid, start)
        if cell is None:
            raise TaskError(f"start {tuple(start)} not navigable after snapping")
        return self.grid.center_of(*cell)

    def _distance_to_goal(self, p) -> float:
        """Geodesic distance from p to the episode goal.

        Near the goal with a clear line of sight the geodesic is exactly the
        Euclidean distance, which sidesteps the grid field's discretization
        error right where the success radius needs precision; elsewhere the
        interpolated field answers.
        """
        goal = np.asarray(self.episode.goal_position, dtype=np.float64)
        delta = goal - np.asarray(p, dtype=np.float64)
        euclid = float(np.hypot(delta[0], delta[1]))
        if euclid <= 1.0:
            if euclid < 1e-12:
                return 0.0
            t, _ = self.sim.geometry.index.raycast(p, delta.reshape(1, 2))
            if not (t[0] <= 1.0):
                return euclid
        return nav.geodesic_distance(self.field, p)

    def _decorate(self, obs: Observations) -> Observations:
        obs.goal = self.goal_in_frame.copy()
        if obs.depth is not None and self.depth_noise_sigma > 0.0:
            max_range = max((c.max_range for c in self.sim.sensor_configs
                             if c.kind == "depth"), default=10.0)
            obs.depth = sensors_mod.apply_inverse_depth_noise(
                obs.depth, self.depth_noise_sigma, self._noise_rng, max_range)
        return obs

    def reset(self, episode: Episode) -> Observations:
        if episode.scene_id != self.scene.id:
            raise TaskError(
                f"episode {episode.episode_id} is for scene {episode.scene_id!r}, "
                f"environment holds {self.scene.id!r}")
        episode.validate(self.grid.resolution)
        try:
            self.field = self.fields.get(self.scene.id, self.grid, episode.goal_position)
        except nav.NavError as e:
            raise TaskError(str(e)) from e
        start = self._snap_start(episode.start_position)
        self.sim.set_agent_state(start, episode.start_heading)
        self.episode = episode
        self.steps = 0
        self.done = False
        self._outcome = None
        self._noise_rng = np.random.default_rng(self._noise_seed)
        frame = self.sim.episode_frame
        self.goal_in_frame = frame.to_frame(np.asarray(episode.goal_position))
        self._d_last = self._distance_to_goal(self.sim.state.position)
        return self._decorate(self.sim.observations())

    def step(self, action: Action) -> tuple[Observations, bool, dict]:
        """Advance one action; done on stop or at the step budget."""
        if self.episode is None:
            raise TaskError("environment must be reset before stepping")
        if self.done:
            raise TaskError("episode is finished; reset before stepping again")
        result, obs = self.sim.step(action)
        self.steps += 1
        d_prev = self._d_last
        d_cur = self._distance_to_goal(self.sim.state.position)
        self._d_last = d_cur
        terminated_by = None
        success = False
        if action is Action.STOP:
            terminated_by = "stop"
            success = success_test(d_cur)
        elif self.steps >= MAX_EPISODE_STEPS:
            terminated_by = "step_limit"
        if terminated_by is not None:
            self.done = True
            state = self.sim.state
            self._outcome = EpisodeOutcome(
                success=success,
                shortest_path=self.episode.gdsp,
                path_taken=state.cumulative_path_length,
                spl=spl(success, self.episode.gdsp, state.cumulative_path_length),
                steps=self.steps,
                collisions=state.collision_count,
                terminated_by=terminated_by,
            )
        r = reward(d_prev, d_cur, reached=self.done and success, params=self.reward_params)
        info = {
            "d": d_cur,
            "collided": result.collided,
            "reward": r,
            "steps": self.steps,
            "displacement": result.displacement,
        }
        if self._outcome is not None:
            info["outcome"] = self._outcome
        return self._decorate(obs), self.done, info

    @property
    def outcome(self) -> EpisodeOutcome:
        if self._outcome is None:
            raise TaskError("episode has not terminated")
        return self._outcome


def run_episode(env: Environment, episode: Episode, actions) -> EpisodeOutcome:
    """Replay a fixed action list; the step budget terminates long lists."""
    env.reset(episode)
    for a in actions:
        _, done, _ = env.step(a if isinstance(a, Action) else Action.from_name(a))
        if done:
            break
    if not env.done:
        raise TaskError("action list ended before the episode terminated")
    return env.outcome
