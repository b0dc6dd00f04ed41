"""Humans-as-agents service: a WebSocket protocol for driving one episode
per session, streaming sensor frames plus a top-down map payload, and
logging every finished session as a trajectory record.

Protocol (text frames, JSON):
  client -> server:  {"type": "reset", "episode_id": str}
                     {"type": "act", "action": "move_forward" | "turn_left"
                                              | "turn_right" | "stop"}
                     {"type": "list_episodes"}
  server -> client:  {"type": "hello", ...}        on connect
                     {"type": "episodes", ...}     reply to list_episodes
                     {"type": "observation", ...}  after reset and each act
                     {"type": "done", ...}         with the final outcome
                     {"type": "error", "code": str, "message": str}

Each session owns its environment exclusively; one action may be in flight
at a time, and acting on a finished or unstarted episode is an ordering
error. All numbers are JSON doubles; images are base64 PNGs (depth 16-bit
scaled by max range, semantic 16-bit ids, RGB 8-bit).
"""
from __future__ import annotations

import base64
import json
import time
from pathlib import Path
from threading import Lock

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import nav
from .episodes import EpisodeDataset, load_dataset
from .scene import Scene, load_scene
from .sensors import (SensorConfig, depth_to_png, rgb_to_png, semantic_to_png)
from .sim import Action
from .task import Environment, FieldCache, TaskError

TELEOP_SENSORS = (SensorConfig("rgb"), SensorConfig("depth"),
                  SensorConfig("semantic"), SensorConfig("gps_compass"))


class TrajectoryLog:
    """Append-only JSON-lines log of finished sessions."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record)
        with self._lock:
            with open(self.path, "a") as f:
                f.write(line + "\n")


class SceneStore:
    """Loads and caches scenes by id from a directory of scene files."""

    def __init__(self, scenes_dir):
        self.dir = Path(scenes_dir)
        self._scenes: dict[str, Scene] = {}

    def get(self, scene_id: str) -> Scene:
        if scene_id not in self._scenes:
            for path in sorted(self.dir.glob("*.json")):
                scene = load_scene(path)
                self._scenes.setdefault(scene.id, scene)
                if scene.id == scene_id:
                    break
        if scene_id not in self._scenes:
            raise TaskError(f"scene {scene_id!r} not found under {self.dir}")
        return self._scenes[scene_id]


def encode_observation(obs, env: Environment, trajectory: list, step: int,
                       collided: bool, d_now: float) -> dict:
    """Build the observation frame: images, localization, and the top-down
    map payload (world-space walls, start, goal, trajectory polyline whose
    index is the step number)."""
    images = {}
    if obs.rgb is not None:
        images["rgb"] = base64.b64encode(rgb_to_png(obs.rgb)).decode()
    if obs.depth is not None:
        max_range = max((c.max_range for c in env.sim.sensor_configs
                         if c.kind == "depth"), default=10.0)
        images["depth"] = base64.b64encode(depth_to_png(obs.depth, max_range)).decode()
    if obs.semantic is not None:
        images["semantic"] = base64.b64encode(semantic_to_png(obs.semantic)).decode()
    frame = env.sim.episode_frame
    agent_world = env.sim.state.position
    return {
        "type": "observation",
        "step": step,
        "gps": [float(obs.gps[0]), float(obs.gps[1])],
        "compass": float(obs.compass),
        "goal": [float(obs.goal[0]), float(obs.goal[1])],
        "d": float(d_now),
        "collided": bool(collided),
        "images": images,
        "map": {
            "walls": env.scene.segment_array().tolist(),
            "start": [float(frame.origin[0]), float(frame.origin[1])],
            "goal": [float(env.episode.goal_position[0]),
                     float(env.episode.goal_position[1])],
            "agent": [float(agent_world[0]), float(agent_world[1]),
                      float(env.sim.state.heading)],
            "trajectory": [[float(x), float(y)] for x, y in trajectory],
            "max_steps": 500,
        },
    }


class Session:
    """One connection: one environment, one episode at a time."""

    def __init__(self, dataset: EpisodeDataset, scenes: SceneStore,
                 log: TrajectoryLog | None, fields: FieldCache):
        self.dataset = dataset
        self.scenes = scenes
        self.log = log
        self.fields = fields
        self.envs: dict[str, Environment] = {}
        self.env: Environment | None = None
        self.episode = None
        self.status = "idle"  # idle | awaiting_action | done
        self.actions: list[str] = []
        self.trajectory: list = []

    def hello(self) -> dict:
        return {
            "type": "hello",
            "dataset": {
                "split": self.dataset.split,
                "episodes": len(self.dataset.episodes),
                "scenes": sorted({e.scene_id for e in self.dataset.episodes}),
            },
            "actions": [a.value for a in Action],
            "success_radius": 0.2,
            "max_steps": 500,
        }

    def list_episodes(self) -> dict:
        return {
            "type": "episodes",
            "episodes": [
                {"episode_id": e.episode_id, "scene_id": e.scene_id,
                 "gdsp": e.gdsp, "euclidean": e.euclidean, "ratio": e.ratio}
                for e in self.dataset.episodes
            ],
        }

    def reset(self, episode_id: str) -> dict:
        matches = [e for e in self.dataset.episodes if e.episode_id == episode_id]
        if not matches:
            raise TaskError(f"unknown episode {episode_id!r}")
        episode = matches[0]
        env = self.envs.get(episode.scene_id)
        if env is None:
            scene = self.scenes.get(episode.scene_id)
            env = Environment(scene, sensor_configs=TELEOP_SENSORS,
                              field_cache=self.fields)
            self.envs[episode.scene_id] = env
        obs = env.reset(episode)
        self.env = env
        self.episode = episode
        self.status = "awaiting_action"
        self.actions = []
        self.trajectory = [tuple(env.sim.state.position)]
        d0 = nav.geodesic_distance(env.field, env.sim.state.position)
        return encode_observation(obs, env, self.trajectory, 0, False, d0)

    def act(self, action_name: str) -> list[dict]:
        if self.status != "awaiting_action":
            raise OrderingError(
                f"act while {self.status}; reset an episode first")
        try:
            action = Action.from_name(action_name)
        except Exception:
            raise ProtocolError(f"unknown action {action_name!r}")
        obs, done, info = self.env.step(action)
        self.actions.append(action.value)
        self.trajectory.append(tuple(self.env.sim.state.position))
        frames = [encode_observation(obs, self.env, self.trajectory,
                                     info["steps"], info["collided"], info["d"])]
        if done:
            self.status = "done"
            outcome = self.env.outcome
            frames.append({
                "type": "done",
                "success": outcome.success,
                "spl": outcome.spl,
                "steps": outcome.steps,
                "collisions": outcome.collisions,
                "terminated_by": outcome.terminated_by,
            })
            if self.log is not None:
                self.log.append({
                    "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                    "episode_id": self.episode.episode_id,
                    "actions": list(self.actions),
                    "outcome": {
                        "success": outcome.success,
                        "spl": outcome.spl,
                        "steps": outcome.steps,
                        "collisions": outcome.collisions,
                        "path_taken": outcome.path_taken,
                        "shortest_path": outcome.shortest_path,
                        "terminated_by": outcome.terminated_by,
                    },
                })
        return frames


class ProtocolError(Exception):
    code = "bad_message"


class OrderingError(ProtocolError):
    code = "out_of_order"


def create_app(scenes_dir, dataset_path, log_path=None, ui_dir=None) -> FastAPI:
    dataset = load_dataset(dataset_path)
    scenes = SceneStore(scenes_dir)
    log = TrajectoryLog(log_path) if log_path else None
    fields = FieldCache()
    app = FastAPI(title="navsim teleop")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(dataset, scenes, log, fields)
        await ws.send_json(session.hello())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    try:
                        msg = json.loads(raw)
                    except json.JSONDecodeError:
                        raise ProtocolError("frame is not valid JSON")
                    if not isinstance(msg, dict) or "type" not in msg:
                        raise ProtocolError("frame must be an object with a type")
                    kind = msg["type"]
                    if kind == "list_episodes":
                        await ws.send_json(session.list_episodes())
                    elif kind == "reset":
                        if "episode_id" not in msg:
                            raise ProtocolError("reset needs an episode_id")
                        await ws.send_json(session.reset(msg["episode_id"]))
                    elif kind == "act":
                        if "action" not in msg:
                            raise ProtocolError("act needs an action")
                        for frame in session.act(msg["action"]):
                            await ws.send_json(frame)
                    else:
                        raise ProtocolError(f"unknown message type {kind!r}")
                except ProtocolError as e:
                    await ws.send_json({"type": "error", "code": e.code,
                                        "message": str(e)})
                except (TaskError, nav.NavError) as e:
                    await ws.send_json({"type": "error", "code": "task_error",
                                        "message": str(e)})
        except WebSocketDisconnect:
            pass

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(host: str, port: int, scenes_dir, dataset_path,
          log_path=None, ui_dir=None) -> None:
    import uvicorn
    app = create_app(scenes_dir, dataset_path, log_path, ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
