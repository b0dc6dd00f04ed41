"""Continuous-state simulator: cylindrical agent, discrete action kinematics,
sliding collision resolution, and per-step sensor rendering.

The agent is a disc of configurable radius moving in the plane. Forward
motion sweeps the disc against the wall set; contact projects the remaining
displacement onto the wall tangent and re-casts once, so the agent slides
along obstacles instead of stopping dead. State is continuous up to machine
precision and fully deterministic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import scene as scene_mod
from . import sensors as sensors_mod
from .geometry import SegmentIndex, wrap_angle
from .scene import AgentPayload, SceneGraph, SceneNode, SensorPayload
from .sensors import EpisodeFrame, Observations, RenderGeometry

CONTACT_EPSILON = 1e-4  # meters backed off from any contact


class SimError(Exception):
    pass


class Action(enum.Enum):
    MOVE_FORWARD = "move_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"

    @classmethod
    def from_name(cls, name: str) -> "Action":
        for a in cls:
            if a.value == name:
                return a
        raise SimError(f"unknown action {name!r}")


MOTION_ACTIONS = (Action.MOVE_FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT)


@dataclass(frozen=True)
class AgentConfig:
    radius: float = 0.1
    height: float = 1.5
    forward_step: float = 0.25
    turn_angle: float = 10.0  # degrees
    sensor_height: float = 1.5

    def __post_init__(self):
        for name in ("height", "forward_step", "turn_angle", "sensor_height"):
            if getattr(self, name) <= 0.0:
                raise SimError(f"agent {name} must be positive")
        if self.radius < 0.0:
            raise SimError("agent radius must be non-negative")


@dataclass(frozen=True)
class AgentState:
    position: np.ndarray
    heading: float
    cumulative_path_length: float = 0.0
    collision_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=np.float64).reshape(2))


@dataclass(frozen=True)
class StepResult:
    new_state: AgentState
    collided: bool
    displacement: float


def apply_turn(state: AgentState, direction: str, turn_angle: float) -> AgentState:
    """Rotate in place; left is counter-clockwise. Heading wraps to (-pi, pi]."""
    sign = {"left": 1.0, "right": -1.0}[direction]
    heading = wrap_angle(state.heading + sign * math.radians(turn_angle))
    return replace(state, heading=heading)


def apply_forward(state: AgentState, index: SegmentIndex,
                  config: AgentConfig) -> StepResult:
    """Attempt a forward step with sliding contact resolution.

    Cast the disc to first contact, back off by the contact epsilon, project
    what remains of the intended displacement onto the contacted wall's
    tangent, and cast once more along it (two casts total).
    """
    u = config.forward_step * np.array([math.cos(state.heading),
                                        math.sin(state.heading)])
    pos = state.position
    t1, _, tangent = index.cast_disc(pos, u, config.radius)
    if not (t1 < 1.0):
        new_pos = pos + u
        moved = config.forward_step
        collided = False
    else:
        d1 = max(0.0, t1 * config.forward_step - CONTACT_EPSILON)
        unit = u / config.forward_step
        pos1 = pos + unit * d1
        remaining = u * (1.0 - t1)
        slide = np.dot(remaining, tangent) * tangent
        slide_len = float(np.hypot(slide[0], slide[1]))
        d2 = 0.0
        if slide_len > CONTACT_EPSILON:
            t2, _, _ = index.cast_disc(pos1, slide, config.radius)
            if not (t2 < 1.0):
                d2 = slide_len
            else:
                d2 = max(0.0, t2 * slide_len - CONTACT_EPSILON)
            pos1 = pos1 + (slide / slide_len) * d2
        new_pos = pos1
        moved = d1 + d2
        collided = True
    new_state = AgentState(
        position=new_pos,
        heading=state.heading,
        cumulative_path_length=state.cumulative_path_length + moved,
        collision_count=state.collision_count + (1 if collided else 0),
    )
    return StepResult(new_state=new_state, collided=collided, displacement=moved)


class Simulator:
    """One agent in one scene. Owns the flattened render geometry, the
    segment index, and the agent's scene-graph attachment. A simulator is
    exclusively owned by one worker; many simulators can share one scene.
    """

    def __init__(self, graph: SceneGraph, agent: AgentConfig | None = None,
                 sensor_configs=()):
        self.agent = agent or AgentConfig()
        self.sensor_configs = tuple(sensor_configs)
        self.warnings: list[str] = []
        if self.agent.radius == 0.0:
            self.warnings.append("agent radius is 0: point agent")
        sc = graph.scene
        if self.agent.sensor_height > sc.wall_height:
            raise SimError(
                f"sensor height {self.agent.sensor_height} exceeds wall height {sc.wall_height}")
        segs, sem, alb = scene_mod.flatten_arrays(graph)
        self.geometry = RenderGeometry(segs, sem, alb, sc.wall_height,
                                       sc.floor_color, sc.ceiling_color)
        self.graph = graph.clone()
        agent_node = self.graph.root.add_child(
            SceneNode("agent", payload=AgentPayload()))
        for k, cfg in enumerate(self.sensor_configs):
            agent_node.add_child(SceneNode(f"sensor-{k}-{cfg.kind}",
                                           payload=SensorPayload(cfg.kind)))
        self._agent_node = agent_node
        self._state = AgentState(position=np.zeros(2), heading=0.0)
        self._frame: EpisodeFrame | None = None
        self._has_reset = False

    @property
    def state(self) -> AgentState:
        return self._state

    @property
    def episode_frame(self) -> EpisodeFrame | None:
        return self._frame

    def set_agent_state(self, position, heading: float) -> None:
        """Place the agent, zero its episode counters, and anchor the
        episode frame at the new pose."""
        position = np.asarray(position, dtype=np.float64).reshape(2)
        clearance = self.geometry.index.clearance(position)
        if clearance < self.agent.radius:
            raise SimError(
                f"position ({position[0]:.3f}, {position[1]:.3f}) is {clearance:.3f} m "
                f"from the nearest wall; agent radius is {self.agent.radius}")
        self._state = AgentState(position=position, heading=wrap_angle(heading))
        self._frame = EpisodeFrame(origin=position.copy(), heading=self._state.heading)
        self._sync_agent_node()
        self._has_reset = True

    def _sync_agent_node(self):
        from .geometry import Transform2D
        self._agent_node.transform = Transform2D(
            tx=float(self._state.position[0]), ty=float(self._state.position[1]),
            theta=self._state.heading)

    def observations(self) -> Observations:
        obs = sensors_mod.render(self.geometry, self._state.position,
                                 self._state.heading, self.agent.sensor_height,
                                 self.sensor_configs)
        if any(c.kind == "gps_compass" for c in self.sensor_configs):
            gps, compass = sensors_mod.gps_compass(self._state, self._frame)
            obs.gps = gps
            obs.compass = compass
        return obs

    def step(self, action: Action) -> tuple[StepResult, Observations]:
        if not self._has_reset:
            raise SimError("simulator must be reset before stepping")
        if action is Action.STOP:
            result = StepResult(new_state=self._state, collided=False, displacement=0.0)
        elif action is Action.MOVE_FORWARD:
            result = apply_forward(self._state, self.geometry.index, self.agent)
        elif action is Action.TURN_LEFT:
            result = StepResult(apply_turn(self._state, "left", self.agent.turn_angle),
                                collided=False, displacement=0.0)
        elif action is Action.TURN_RIGHT:
            result = StepResult(apply_turn(self._state, "right", self.agent.turn_angle),
                                collided=False, displacement=0.0)
        else:
            raise SimError(f"unknown action {action!r}")
        self._state = result.new_state
        self._sync_agent_node()
        return result, self.observations()


def create_simulator(graph: SceneGraph, agent: AgentConfig | None = None,
                     sensor_configs=()) -> Simulator:
    return Simulator(graph, agent, sensor_configs)
