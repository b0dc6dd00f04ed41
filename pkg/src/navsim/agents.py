"""Baseline navigation agents behind one interface, plus the evaluation
runner that aggregates success, SPL, and collision statistics across seeds
and datasets.

Agents see only Observations (GPS, compass, the static goal captured at
reset, and whatever visual channels their sensor set provides). The one
sanctioned exception is the distance-gradient oracle, which runs with
privileged access to the environment's distance field and is flagged as
non-comparable in reports.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels, nav
from .geometry import wrap_angle
from .seeding import derive_seed
from .sensors import Observations, SensorConfig
from .sim import Action
from .task import Environment, EpisodeOutcome, FieldCache, TaskError

log = logging.getLogger(__name__)

STOP_RADIUS = 0.2  # hand-coded agents stop on the GPS-to-goal distance


class AgentInterface:
    """reset(static goal) once per episode, then act(obs) -> Action."""

    name = "agent"
    privileged = False

    def reset(self, goal: np.ndarray) -> None:
        self.goal = np.asarray(goal, dtype=np.float64)

    def act(self, obs: Observations) -> Action:
        raise NotImplementedError


def _goal_distance(obs: Observations, goal: np.ndarray) -> float:
    return float(np.hypot(goal[0] - obs.gps[0], goal[1] - obs.gps[1]))


class RandomAgent(AgentInterface):
    """Uniform over the three motion actions; stops on the GPS goal test."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def act(self, obs: Observations) -> Action:
        if _goal_distance(obs, self.goal) <= STOP_RADIUS:
            return Action.STOP
        return (Action.MOVE_FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT)[
            int(self.rng.integers(3))]


class ForwardOnlyAgent(AgentInterface):
    name = "forward"

    def act(self, obs: Observations) -> Action:
        if _goal_distance(obs, self.goal) <= STOP_RADIUS:
            return Action.STOP
        return Action.MOVE_FORWARD


class GoalFollowerAgent(AgentInterface):
    """Aligns to the goal bearing within 15 degrees, then drives forward."""

    name = "goal-follower"

    def __init__(self, align_deg: float = 15.0):
        self.align = math.radians(align_deg)

    def act(self, obs: Observations) -> Action:
        if _goal_distance(obs, self.goal) <= STOP_RADIUS:
            return Action.STOP
        bearing = math.atan2(self.goal[1] - obs.gps[1], self.goal[0] - obs.gps[0])
        err = wrap_angle(bearing - obs.compass)
        if abs(err) > self.align:
            return Action.TURN_LEFT if err >= 0.0 else Action.TURN_RIGHT
        return Action.MOVE_FORWARD


class GeodesicOracleAgent(AgentInterface):
    """Follows the negative gradient of the goal's geodesic distance field.

    Privileged: reads the environment's field and true agent state, serving
    as a performance ceiling and a dataset sanity check.
    """

    name = "oracle"
    privileged = True

    def __init__(self, goal_radius: float = STOP_RADIUS):
        self.goal_radius = goal_radius
        self._env: Environment | None = None

    def attach_privileged(self, env: Environment) -> None:
        self._env = env

    def act(self, obs: Observations) -> Action:
        env = self._env
        if env is None or env.field is None:
            raise TaskError("oracle agent needs attach_privileged(env) after reset")
        # stop on the task's own distance metric so the oracle stops exactly
        # when the episode will count as successful; the snapped field can
        # read a few centimeters differently right at the radius
        if env._distance_to_goal(env.sim.state.position) <= self.goal_radius:
            return Action.STOP
        return nav.greedy_gradient_action(env.field, env.sim.state,
                                          0.0, env.agent_config,
                                          env.sim.geometry.index)


@dataclass(frozen=True)
class MapperParams:
    cell: float = 0.1
    lo_step: float = 0.7
    lo_clamp: float = 5.0
    unknown_cost: float = 2.0
    waypoint_distance: float = 0.3
    stop_radius: float = STOP_RADIUS
    align_deg: float = 15.0
    inflation_cells: int = 1     # agent radius 0.1 m at 0.1 m cells
    map_margin: float = 10.0


def _dilate8(mask: np.ndarray, iterations: int) -> np.ndarray:
    out = mask
    for _ in range(iterations):
        p = np.pad(out, 1)
        out = (p[1:-1, 1:-1] | p[:-2, 1:-1] | p[2:, 1:-1] | p[1:-1, :-2]
               | p[1:-1, 2:] | p[:-2, :-2] | p[:-2, 2:] | p[2:, :-2] | p[2:, 2:])
    return out


class MappingPlannerAgent(AgentInterface):
    """Classic pipeline: idealized GPS+Compass localization, log-odds
    occupancy mapping from the depth scan's center row, A* replanning every
    step over the inflated map (unknown cells traversable at a cost
    multiplier), and goal-follower steering to the next waypoint.
    """

    name = "mapper"

    def __init__(self, params: MapperParams = MapperParams(),
                 hfov: float = 90.0, max_range: float = 10.0):
        self.p = params
        self.hfov = hfov
        self.max_range = max_range
        self.align = math.radians(params.align_deg)
        self.last_plan: np.ndarray | None = None
        self.last_classes: np.ndarray | None = None
        self.replans = 0
        self._wander_snapshot: np.ndarray | None = None

    def reset(self, goal: np.ndarray) -> None:
        super().reset(goal)
        m = self.p.map_margin
        x0 = min(0.0, self.goal[0]) - m
        y0 = min(0.0, self.goal[1]) - m
        x1 = max(0.0, self.goal[0]) + m
        y1 = max(0.0, self.goal[1]) + m
        w = int(math.ceil((x1 - x0) / self.p.cell))
        h = int(math.ceil((y1 - y0) / self.p.cell))
        self.origin = np.array([x0, y0])
        self.logodds = np.zeros((h, w))
        self.bumped = np.zeros((h, w), dtype=bool)
        self.last_plan = None
        self.last_classes = None
        self.replans = 0
        self._wander_snapshot = None
        self._waypoint: np.ndarray | None = None
        self._waypoint_blocked = 0
        self._last_gps: np.ndarray | None = None
        self._commanded_forward = False

    def _cell_of(self, pt) -> tuple[int, int]:
        j = int(math.floor((pt[0] - self.origin[0]) / self.p.cell))
        i = int(math.floor((pt[1] - self.origin[1]) / self.p.cell))
        i = min(max(i, 0), self.logodds.shape[0] - 1)
        j = min(max(j, 0), self.logodds.shape[1] - 1)
        return i, j

    def _center_of(self, i: int, j: int) -> np.ndarray:
        return self.origin + self.p.cell * (np.array([j, i]) + 0.5)

    def _update_map(self, obs: Observations) -> None:
        depth = obs.depth
        h, w = depth.shape
        row = depth[h // 2]
        focal = (w * 0.5) / math.tan(math.radians(self.hfov) * 0.5)
        u = (np.arange(w) + 0.5 - w * 0.5) / focal
        c, s = math.cos(obs.compass), math.sin(obs.compass)
        fx, fy = c, s
        rx, ry = s, -c
        hit = row < self.max_range - 1e-9
        t = np.minimum(row, self.max_range)
        endx = obs.gps[0] + t * (fx + u * rx)
        endy = obs.gps[1] + t * (fy + u * ry)
        _kernels.carve_depth_rays(self.logodds, float(obs.gps[0]), float(obs.gps[1]),
                                  endx, endy, hit, self.p.cell,
                                  float(self.origin[0]), float(self.origin[1]),
                                  self.p.lo_step, self.p.lo_clamp)

    def _classify(self) -> np.ndarray:
        occupied = (self.logodds >= self.p.lo_step - 1e-9) | self.bumped
        free = (self.logodds <= -self.p.lo_step + 1e-9) & ~self.bumped
        blocked = _dilate8(occupied, self.p.inflation_cells)
        cls = np.zeros(self.logodds.shape, dtype=np.uint8)
        cls[free] = 1
        cls[blocked] = 2
        return cls

    def _bumper_update(self, obs: Observations) -> None:
        """Odometry bumper: a commanded forward that moved the GPS by almost
        nothing means a solid obstacle dead ahead that the depth scan cannot
        resolve (thin walls seen end-on). A collision is ground truth, so it
        lands in a sticky layer that free-space carving cannot erase."""
        if self._commanded_forward and self._last_gps is not None:
            moved = float(np.hypot(obs.gps[0] - self._last_gps[0],
                                   obs.gps[1] - self._last_gps[1]))
            if moved < 0.02:
                ahead = (obs.gps[0] + (0.1 + self.p.cell) * math.cos(obs.compass),
                         obs.gps[1] + (0.1 + self.p.cell) * math.sin(obs.compass))
                self.bumped[self._cell_of(ahead)] = True

    def act(self, obs: Observations) -> Action:
        action = self._decide(obs)
        self._last_gps = np.array(obs.gps)
        self._commanded_forward = action is Action.MOVE_FORWARD
        return action

    def _decide(self, obs: Observations) -> Action:
        if _goal_distance(obs, self.goal) <= self.p.stop_radius:
            return Action.STOP
        if obs.depth is None:
            raise TaskError("mapping agent requires a depth sensor")
        self._bumper_update(obs)
        self._update_map(obs)
        cls = self._classify()
        self.last_classes = cls
        src = self._cell_of(obs.gps)
        dst = self._cell_of(self.goal)
        # own and goal cells are always enterable; inflation may cover them
        cls[src] = min(cls[src], np.uint8(1))
        path = _kernels.astar_grid(cls, src[0], src[1], dst[0], dst[1],
                                   self.p.unknown_cost)
        self.replans += 1
        if len(path) == 0:
            # exhausted map: wander until new evidence arrives
            if self._wander_snapshot is None:
                self._wander_snapshot = cls.copy()
            elif self._wander_snapshot.shape == cls.shape and \
                    not np.array_equal(self._wander_snapshot, cls):
                self._wander_snapshot = None
            self.last_plan = None
            return Action.TURN_LEFT
        self._wander_snapshot = None
        self.last_plan = path
        waypoint = self._steering_target(path, obs.gps, cls)
        bearing = math.atan2(waypoint[1] - obs.gps[1], waypoint[0] - obs.gps[0])
        err = wrap_angle(bearing - obs.compass)
        if abs(err) > self.align:
            return Action.TURN_LEFT if err >= 0.0 else Action.TURN_RIGHT
        return Action.MOVE_FORWARD

    def _steering_target(self, path: np.ndarray, gps, cls: np.ndarray) -> np.ndarray:
        """First plan cell at least the waypoint distance ahead; the previous
        target persists while unreached and unobstructed, which keeps the
        controller from flip-flopping when replans alternate between
        equal-cost routes. Blockage is debounced: single-scan map toggles near
        grazing walls would otherwise cycle the target every step."""
        prev = self._waypoint
        if prev is not None:
            d = float(np.hypot(prev[0] - gps[0], prev[1] - gps[1]))
            if 0.15 <= d <= 1.5:
                if self._segment_clear(gps, prev, cls):
                    self._waypoint_blocked = 0
                    return prev
                self._waypoint_blocked += 1
                if self._waypoint_blocked < 4:
                    return prev
        self._waypoint_blocked = 0
        target = None
        for (ci, cj) in path:
            center = self._center_of(ci, cj)
            if np.hypot(center[0] - gps[0], center[1] - gps[1]) >= \
                    self.p.waypoint_distance:
                target = center
                break
        if target is None:
            target = self._center_of(*path[-1])
        self._waypoint = target
        return target

    def _segment_clear(self, a, b, cls: np.ndarray) -> bool:
        n = max(2, int(np.hypot(b[0] - a[0], b[1] - a[1]) / (self.p.cell * 0.5)) + 1)
        for f in np.linspace(0.0, 1.0, n):
            i, j = self._cell_of((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
            if cls[i, j] == 2:
                return False
        return True


def random_agent(seed: int = 0) -> AgentInterface:
    return RandomAgent(seed)


def forward_only_agent() -> AgentInterface:
    return ForwardOnlyAgent()


def goal_follower_agent() -> AgentInterface:
    return GoalFollowerAgent()


def geodesic_oracle_agent() -> AgentInterface:
    return GeodesicOracleAgent()


def mapping_planner_agent(params: MapperParams = MapperParams()) -> AgentInterface:
    return MappingPlannerAgent(params)


AGENT_FACTORIES = {
    "random": lambda seed: random_agent(seed),
    "forward": lambda seed: forward_only_agent(),
    "goal-follower": lambda seed: goal_follower_agent(),
    "oracle": lambda seed: geodesic_oracle_agent(),
    "mapper": lambda seed: mapping_planner_agent(),
}

# minimum sensor suites per agent; gps_compass is universal
AGENT_SENSORS: dict[str, tuple[SensorConfig, ...]] = {
    "random": (SensorConfig("gps_compass"),),
    "forward": (SensorConfig("gps_compass"),),
    "goal-follower": (SensorConfig("gps_compass"),),
    "oracle": (SensorConfig("gps_compass"),),
    "mapper": (SensorConfig("depth"), SensorConfig("gps_compass")),
}


def run_agent_episode(env: Environment, episode, agent: AgentInterface,
                      max_steps: int | None = None) -> EpisodeOutcome:
    """Drive one agent through one episode to termination."""
    obs = env.reset(episode)
    agent.reset(obs.goal)
    if agent.privileged and hasattr(agent, "attach_privileged"):
        agent.attach_privileged(env)
    done = False
    while not done:
        action = agent.act(obs)
        obs, done, _ = env.step(action)
    return env.outcome


@dataclass
class EvalReport:
    agent: str
    dataset: str
    seeds: tuple[int, ...]
    episodes: int
    success_rate: float
    spl_mean: float
    spl_stderr: float
    collisions_mean: float | None   # over successful episodes; None if no successes
    privileged: bool
    agent_failures: int = 0
    per_seed: list[dict] = field(default_factory=list)
    matrix: list[dict] | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        data = json.loads(text)
        data["seeds"] = tuple(data["seeds"])
        return cls(**data)

    def render_text(self) -> str:
        lines = [
            f"agent: {self.agent}{'  [privileged]' if self.privileged else ''}",
            f"dataset: {self.dataset}  episodes: {self.episodes}  seeds: {list(self.seeds)}",
            f"success: {self.success_rate:.3f}  SPL: {self.spl_mean:.3f} "
            f"± {self.spl_stderr:.3f} (stderr over seeds)",
        ]
        if self.collisions_mean is not None:
            lines.append(f"collisions per successful episode: {self.collisions_mean:.2f}")
        if self.agent_failures:
            lines.append(f"agent failures: {self.agent_failures}")
        if self.matrix:
            lines.append("cross-dataset SPL:")
            for row in self.matrix:
                lines.append(f"  {row['dataset']}: spl={row['spl_mean']:.3f} "
                             f"success={row['success_rate']:.3f}")
        return "\n".join(lines)


def _run_one_seed(agent_name: str, factory, dataset, scenes_by_id, seed: int,
                  sensor_configs, depth_noise_sigma: float) -> dict:
    envs: dict[str, Environment] = {}
    cache = FieldCache()
    outcomes = []
    failures = 0
    for k, episode in enumerate(dataset.episodes):
        env = envs.get(episode.scene_id)
        if env is None:
            scene = scenes_by_id.get(episode.scene_id)
            if scene is None:
                raise TaskError(f"scene {episode.scene_id} not available")
            env = Environment(scene, sensor_configs=sensor_configs,
                              field_cache=cache,
                              depth_noise_sigma=depth_noise_sigma,
                              noise_seed=derive_seed(seed, "noise"))
            envs[episode.scene_id] = env
        agent = factory(derive_seed(seed, "agent", k))
        try:
            outcome = run_agent_episode(env, episode, agent)
            outcomes.append((episode.episode_id, outcome))
        except Exception:
            log.exception("agent %s failed on episode %s (seed %d)",
                          agent_name, episode.episode_id, seed)
            failures += 1
            outcomes.append((episode.episode_id, None))
    outcomes.sort(key=lambda pair: pair[0])
    succ = [o.success for _, o in outcomes if o is not None]
    spls = [o.spl for _, o in outcomes if o is not None]
    succ += [False] * failures
    spls += [0.0] * failures
    coll_success = [o.collisions for _, o in outcomes
                    if o is not None and o.success]
    return {
        "seed": seed,
        "success_rate": float(np.mean(succ)) if succ else 0.0,
        "spl_mean": float(np.mean(spls)) if spls else 0.0,
        "collisions_on_success": coll_success,
        "failures": failures,
        "outcomes": [(eid, None if o is None else asdict(o)) for eid, o in outcomes],
    }


def evaluate(agent_name: str, dataset, scenes, seeds=(0, 1, 2, 3, 4),
             dataset_name: str | None = None, sensor_configs=None,
             depth_noise_sigma: float = 0.0, factory=None) -> EvalReport:
    """Run an agent over every episode for every seed and aggregate.

    SPL stderr follows the papering convention: standard error of the
    per-seed mean SPL across seeds. Collisions average over successful
    episodes only.
    """
    if factory is None:
        if agent_name not in AGENT_FACTORIES:
            raise TaskError(f"unknown agent {agent_name!r}")
        factory = AGENT_FACTORIES[agent_name]
    if sensor_configs is None:
        sensor_configs = AGENT_SENSORS.get(agent_name, (SensorConfig("gps_compass"),))
    scenes_by_id = {s.id: s for s in scenes}
    per_seed = [_run_one_seed(agent_name, factory, dataset, scenes_by_id, seed,
                              sensor_configs, depth_noise_sigma)
                for seed in seeds]
    all_succ = []
    all_spl = []
    seed_means = []
    collisions = []
    failures = 0
    for run in per_seed:
        seed_means.append(run["spl_mean"])
        collisions.extend(run["collisions_on_success"])
        failures += run["failures"]
        for _, o in run["outcomes"]:
            if o is None:
                all_succ.append(False)
                all_spl.append(0.0)
            else:
                all_succ.append(o["success"])
                all_spl.append(o["spl"])
    seed_means = np.asarray(seed_means)
    stderr = float(seed_means.std(ddof=1) / math.sqrt(len(seed_means))) \
        if len(seed_means) > 1 else 0.0
    privileged = bool(getattr(factory(0), "privileged", False))
    slim = [{k: v for k, v in run.items() if k != "outcomes"} for run in per_seed]
    return EvalReport(
        agent=agent_name,
        dataset=dataset_name or getattr(dataset, "split", "dataset"),
        seeds=tuple(seeds),
        episodes=len(dataset.episodes),
        success_rate=float(np.mean(all_succ)) if all_succ else 0.0,
        spl_mean=float(np.mean(all_spl)) if all_spl else 0.0,
        spl_stderr=stderr,
        collisions_mean=float(np.mean(collisions)) if collisions else None,
        privileged=privileged,
        agent_failures=failures,
        per_seed=slim,
    )


def evaluate_matrix(agent_name: str, datasets: dict, seeds=(0, 1, 2)) -> EvalReport:
    """Evaluate one agent on several datasets; the report carries one matrix
    row per dataset. datasets maps name -> (dataset, scenes)."""
    reports = {name: evaluate(agent_name, ds, scenes, seeds, dataset_name=name)
               for name, (ds, scenes) in datasets.items()}
    first = next(iter(reports.values()))
    first.matrix = [
        {"dataset": name, "spl_mean": r.spl_mean, "spl_stderr": r.spl_stderr,
         "success_rate": r.success_rate}
        for name, r in reports.items()
    ]
    return first
