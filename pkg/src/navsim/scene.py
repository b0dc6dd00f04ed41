"""2.5D scenes: wall segments with a shared extrusion height, JSON scene
files, validation, the hierarchical scene graph, and procedural generation.

A scene is a set of vertical wall segments standing on an infinite floor
plane under a ceiling plane at wall_height. Everything task-relevant happens
in the plane; the third dimension exists for the sensors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from . import geometry
from .geometry import IDENTITY, SegmentIndex, Transform2D

SCENE_FORMAT_VERSION = 1
MIN_SEGMENT_LENGTH = 1e-6
SENSOR_CLEARANCE = 1.5  # sensors ride at 1.5 m; walls must rise above them
DEFAULT_WALL_HEIGHT = 2.5
VALIDATION_DIRECTIONS = 16
VALIDATION_SAMPLES = 64


class SceneError(Exception):
    """Base for scene file problems."""


class SceneParseError(SceneError):
    """Malformed scene file."""


class SceneValidationError(SceneError):
    """Structurally sound file describing an invalid scene."""


@dataclass(frozen=True)
class WallSegment:
    a: tuple[float, float]
    b: tuple[float, float]
    semantic_id: int
    albedo: tuple[float, float, float] = (0.6, 0.6, 0.6)

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass
class Scene:
    id: str
    walls: list[WallSegment]
    floor_color: tuple[float, float, float] = (0.35, 0.33, 0.30)
    ceiling_color: tuple[float, float, float] = (0.85, 0.85, 0.85)
    wall_height: float = DEFAULT_WALL_HEIGHT
    version: int = SCENE_FORMAT_VERSION
    navigable_hint: list | None = field(default=None, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def segment_array(self) -> np.ndarray:
        """All walls as an (n, 4) float array of (ax, ay, bx, by)."""
        if not self.walls:
            return np.empty((0, 4))
        return np.array([[w.a[0], w.a[1], w.b[0], w.b[1]] for w in self.walls])

    def bounds(self) -> tuple[float, float, float, float]:
        s = self.segment_array()
        if len(s) == 0:
            raise SceneValidationError("scene has no walls")
        return (float(min(s[:, 0].min(), s[:, 2].min())),
                float(min(s[:, 1].min(), s[:, 3].min())),
                float(max(s[:, 0].max(), s[:, 2].max())),
                float(max(s[:, 1].max(), s[:, 3].max())))


def _color(value, what: str) -> tuple[float, float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or not all(isinstance(c, (int, float)) for c in value)):
        raise SceneParseError(f"{what} must be an [r, g, b] triple")
    r, g, b = (float(c) for c in value)
    if not all(0.0 <= c <= 1.0 for c in (r, g, b)):
        raise SceneParseError(f"{what} components must be in [0, 1]")
    return (r, g, b)


def _point(value, what: str) -> tuple[float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(c, (int, float)) for c in value)):
        raise SceneParseError(f"{what} must be an [x, y] pair")
    return (float(value[0]), float(value[1]))


_SCENE_KEYS = {"version", "id", "wall_height", "floor_color", "ceiling_color", "walls"}
_WALL_KEYS = {"a", "b", "semantic_id", "albedo"}


def scene_from_dict(data: dict) -> Scene:
    """Parse and validate the scene-file JSON object."""
    if not isinstance(data, dict):
        raise SceneParseError("scene file must contain a JSON object")
    version = data.get("version")
    if version != SCENE_FORMAT_VERSION:
        raise SceneParseError(f"unsupported scene format version: {version!r}")
    unknown = set(data) - _SCENE_KEYS
    if unknown:
        raise SceneParseError(f"unknown scene fields: {sorted(unknown)}")
    missing = _SCENE_KEYS - set(data)
    if missing:
        raise SceneParseError(f"missing scene fields: {sorted(missing)}")
    if not isinstance(data["id"], str) or not data["id"]:
        raise SceneParseError("scene id must be a non-empty string")
    if not isinstance(data["wall_height"], (int, float)):
        raise SceneParseError("wall_height must be a number")
    if not isinstance(data["walls"], list):
        raise SceneParseError("walls must be a list")
    walls = []
    for k, w in enumerate(data["walls"]):
        if not isinstance(w, dict):
            raise SceneParseError(f"wall {k} must be an object")
        unknown = set(w) - _WALL_KEYS
        if unknown:
            raise SceneParseError(f"wall {k}: unknown fields {sorted(unknown)}")
        missing = _WALL_KEYS - set(w)
        if missing:
            raise SceneParseError(f"wall {k}: missing fields {sorted(missing)}")
        if not isinstance(w["semantic_id"], int):
            raise SceneParseError(f"wall {k}: semantic_id must be an integer")
        walls.append(WallSegment(
            a=_point(w["a"], f"wall {k} a"),
            b=_point(w["b"], f"wall {k} b"),
            semantic_id=w["semantic_id"],
            albedo=_color(w["albedo"], f"wall {k} albedo"),
        ))
    scene = Scene(
        id=data["id"],
        walls=walls,
        floor_color=_color(data["floor_color"], "floor_color"),
        ceiling_color=_color(data["ceiling_color"], "ceiling_color"),
        wall_height=float(data["wall_height"]),
        version=version,
    )
    return scene


def scene_to_dict(scene: Scene) -> dict:
    return {
        "version": scene.version,
        "id": scene.id,
        "wall_height": scene.wall_height,
        "floor_color": list(scene.floor_color),
        "ceiling_color": list(scene.ceiling_color),
        "walls": [
            {"a": list(w.a), "b": list(w.b),
             "semantic_id": w.semantic_id, "albedo": list(w.albedo)}
            for w in scene.walls
        ],
    }


def validate_scene(scene: Scene, max_sensor_range: float = 10.0) -> list[str]:
    """Check scene invariants; raises SceneValidationError, returns warnings.

    Enclosure: 16-direction raycasts from sampled navigable cells must hit a
    wall. A ray escaping all walls entirely is an error (unenclosed scene);
    a hit beyond max_sensor_range only warns, since large-but-closed rooms
    are legitimate scenes whose sensors simply saturate.
    """
    warnings: list[str] = []
    if scene.wall_height <= SENSOR_CLEARANCE:
        raise SceneValidationError(
            f"wall_height {scene.wall_height} must exceed sensor height {SENSOR_CLEARANCE}")
    if not scene.walls:
        raise SceneValidationError("scene has no walls")
    for k, w in enumerate(scene.walls):
        if w.length <= MIN_SEGMENT_LENGTH:
            raise SceneValidationError(f"wall {k} has zero length")
        if w.semantic_id < 1:
            raise SceneValidationError(
                f"wall {k}: semantic_id {w.semantic_id} invalid (0 is reserved for void)")
    segs = scene.segment_array()
    mask, origin, clearance = geometry.navigable_mask(segs, scene.bounds(),
                                                      resolution=0.1, agent_radius=0.1)
    if not mask.any():
        # either wall-packed or leaking to the outside; the raycast escape
        # test over interior-clear cells is the deciding diagnosis
        mask = clearance >= 0.1
        if not mask.any():
            raise SceneValidationError("scene has no navigable space")
    nav_cells = np.argwhere(mask)
    stride = max(1, len(nav_cells) // VALIDATION_SAMPLES)
    sample = nav_cells[::stride][:VALIDATION_SAMPLES]
    index = SegmentIndex(segs)
    angles = 2.0 * math.pi * np.arange(VALIDATION_DIRECTIONS) / VALIDATION_DIRECTIONS
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    far = 0.0
    for ci, cj in sample:
        pos = (origin[0] + 0.1 * cj, origin[1] + 0.1 * ci)
        t, _ = index.raycast(pos, dirs)
        if np.any(np.isinf(t)):
            raise SceneValidationError(
                f"navigable space not enclosed: ray from ({pos[0]:.2f}, {pos[1]:.2f}) escapes")
        far = max(far, float(t.max()))
    if far > max_sensor_range:
        warnings.append(
            f"sight line of {far:.1f} m exceeds sensor range {max_sensor_range:.1f} m")
    return warnings


def load_scene(path) -> Scene:
    """Load and validate a scene file."""
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SceneParseError(f"cannot read scene file {path}: {e}") from e
    scene = scene_from_dict(data)
    warnings = validate_scene(scene)
    return replace(scene, warnings=tuple(warnings))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as f:
        json.dump(scene_to_dict(scene), f, indent=1)
        f.write("\n")


# ---------------------------------------------------------------------------
# scene graph

@dataclass
class ObjectPayload:
    """One logical object instance: all wall segments sharing a semantic id."""
    semantic_id: int
    segments: np.ndarray  # (k, 4) in node-local coordinates
    albedo: np.ndarray    # (3,)


@dataclass
class RegionPayload:
    name: str


@dataclass
class AgentPayload:
    name: str = "agent"


@dataclass
class SensorPayload:
    kind: str = "sensor"


class SceneNode:
    """Tree node with a local rigid transform and an optional payload."""

    def __init__(self, name: str, transform: Transform2D = IDENTITY, payload=None):
        self.name = name
        self.transform = transform
        self.payload = payload
        self.parent: SceneNode | None = None
        self.children: list[SceneNode] = []

    def add_child(self, node: "SceneNode") -> "SceneNode":
        if node.parent is not None:
            raise ValueError(f"node {node.name} already has a parent")
        probe = self
        while probe is not None:
            if probe is node:
                raise ValueError("adding node would create a cycle")
            probe = probe.parent
        node.parent = self
        self.children.append(node)
        return node

    def detach(self) -> "SceneNode":
        if self.parent is None:
            raise ValueError("cannot detach the root")
        self.parent.children.remove(self)
        self.parent = None
        return self

    def world_transform(self) -> Transform2D:
        chain = []
        node: SceneNode | None = self
        while node is not None:
            chain.append(node.transform)
            node = node.parent
        world = IDENTITY
        for t in reversed(chain):
            world = world.compose(t)
        return world

    def walk(self):
        """Depth-first, child order; yields nodes."""
        yield self
        for child in self.children:
            yield from child.walk()

    def find(self, name: str) -> "SceneNode | None":
        for node in self.walk():
            if node.name == name:
                return node
        return None


class SceneGraph:
    def __init__(self, root: SceneNode, scene: Scene):
        self.root = root
        self.scene = scene

    def clone(self) -> "SceneGraph":
        """Structural copy sharing payloads; for per-simulator attachment."""
        def copy(node: SceneNode) -> SceneNode:
            twin = SceneNode(node.name, node.transform, node.payload)
            for child in node.children:
                twin.add_child(copy(child))
            return twin
        return SceneGraph(copy(self.root), self.scene)

    def object_nodes(self) -> list[SceneNode]:
        return [n for n in self.root.walk() if isinstance(n.payload, ObjectPayload)]


def build_scene_graph(scene: Scene) -> SceneGraph:
    """root -> region -> one object node per semantic id (first-seen order)."""
    root = SceneNode("root")
    region = root.add_child(SceneNode("region-0", payload=RegionPayload("region-0")))
    by_id: dict[int, list[WallSegment]] = {}
    order: list[int] = []
    for w in scene.walls:
        if w.semantic_id not in by_id:
            by_id[w.semantic_id] = []
            order.append(w.semantic_id)
        by_id[w.semantic_id].append(w)
    for sid in order:
        group = by_id[sid]
        segs = np.array([[w.a[0], w.a[1], w.b[0], w.b[1]] for w in group])
        region.add_child(SceneNode(
            f"object-{sid}",
            payload=ObjectPayload(semantic_id=sid, segments=segs,
                                  albedo=np.asarray(group[0].albedo, dtype=np.float64)),
        ))
    return SceneGraph(root, scene)


def flatten_arrays(graph: SceneGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """World-space render view: (segments (n,4), semantic ids (n,), albedo (n,3)).

    Deterministic depth-first, child-order traversal; pure in the graph.
    """
    seg_parts: list[np.ndarray] = []
    sem_parts: list[np.ndarray] = []
    alb_parts: list[np.ndarray] = []

    def visit(node: SceneNode, world: Transform2D):
        world = world.compose(node.transform)
        if isinstance(node.payload, ObjectPayload):
            local = node.payload.segments
            if world.is_identity:
                segs = local.copy()
            else:
                a = world.apply(local[:, 0:2])
                b = world.apply(local[:, 2:4])
                segs = np.concatenate([a, b], axis=1)
            seg_parts.append(segs)
            sem_parts.append(np.full(len(local), node.payload.semantic_id, dtype=np.uint16))
            alb_parts.append(np.tile(node.payload.albedo, (len(local), 1)))
        for child in node.children:
            visit(child, world)

    visit(graph.root, IDENTITY)
    if not seg_parts:
        return np.empty((0, 4)), np.empty(0, dtype=np.uint16), np.empty((0, 3))
    return (np.concatenate(seg_parts), np.concatenate(sem_parts),
            np.concatenate(alb_parts))


def flatten_for_render(graph: SceneGraph) -> list[WallSegment]:
    """World-space wall list in deterministic traversal order."""
    segs, sem, alb = flatten_arrays(graph)
    return [WallSegment(a=(s[0], s[1]), b=(s[2], s[3]), semantic_id=int(i),
                        albedo=tuple(c))
            for s, i, c in zip(segs, sem, alb)]


# ---------------------------------------------------------------------------
# procedural generation

@dataclass
class SceneGenParams:
    room_count: tuple[int, int] = (4, 6)
    room_size: tuple[float, float] = (3.5, 6.5)  # meters, per side
    corridor_width: float = 1.0                  # door openings between rooms
    obstacles_per_room: tuple[int, int] = (1, 3)
    wall_height: float = DEFAULT_WALL_HEIGHT


def _clamped(params: SceneGenParams) -> tuple[SceneGenParams, list[str]]:
    warnings = []
    lo, hi = params.room_count
    lo2, hi2 = max(1, int(lo)), min(64, int(hi))
    if hi2 < lo2:
        hi2 = lo2
    if (lo2, hi2) != (lo, hi):
        warnings.append(f"room_count clamped to ({lo2}, {hi2})")
    slo, shi = params.room_size
    slo2, shi2 = min(max(2.0, slo), 12.0), min(max(2.0, shi), 12.0)
    if shi2 < slo2:
        shi2 = slo2
    if (slo2, shi2) != (slo, shi):
        warnings.append(f"room_size clamped to ({slo2}, {shi2})")
    cw = min(max(0.5, params.corridor_width), 3.0)
    if cw != params.corridor_width:
        warnings.append(f"corridor_width clamped to {cw}")
    out = SceneGenParams(room_count=(lo2, hi2), room_size=(slo2, shi2),
                         corridor_width=cw, obstacles_per_room=params.obstacles_per_room,
                         wall_height=params.wall_height)
    return out, warnings


def _bsp_rooms(rng, rect, count, min_side):
    """Split rect into `count` leaves; returns (leaves, splits).

    Each split is (axis, position, lo, hi) describing the dividing wall.
    """
    leaves = []
    splits = []

    def split(r, k):
        x0, y0, x1, y1 = r
        w, h = x1 - x0, y1 - y0
        if k <= 1 or max(w, h) < 2 * min_side + 0.2:
            leaves.append(r)
            return
        axis = 0 if w >= h else 1
        span = w if axis == 0 else h
        frac = rng.uniform(0.38, 0.62)
        pos = (x0 if axis == 0 else y0) + span * frac
        ka = max(1, int(round(k * frac)))
        kb = max(1, k - ka)
        if axis == 0:
            splits.append((0, pos, y0, y1))
            split((x0, y0, pos, y1), ka)
            split((pos, y0, x1, y1), kb)
        else:
            splits.append((1, pos, x0, x1))
            split((x0, y0, x1, pos), ka)
            split((x0, pos, x1, y1), kb)

    split(rect, count)
    return leaves, splits


def _attempt_scene(seed: int, attempt: int, params: SceneGenParams,
                   scene_id: str) -> Scene:
    rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
    count = int(rng.integers(params.room_count[0], params.room_count[1] + 1))
    mean_side = 0.5 * (params.room_size[0] + params.room_size[1])
    cols = max(1, int(math.ceil(math.sqrt(count))))
    rows = max(1, int(math.ceil(count / cols)))
    width = cols * mean_side * rng.uniform(0.95, 1.1)
    height = rows * mean_side * rng.uniform(0.95, 1.1)
    width = min(width, 12.0 * cols)
    height = min(height, 12.0 * rows)
    rect = (0.0, 0.0, width, height)
    leaves, splits = _bsp_rooms(rng, rect, count, params.room_size[0] * 0.5)

    walls: list[WallSegment] = []
    sid = 1

    def add_object(segs, color):
        nonlocal sid
        for (a, b) in segs:
            walls.append(WallSegment(a=a, b=b, semantic_id=sid, albedo=color))
        sid += 1

    boundary_color = tuple(float(c) for c in rng.uniform(0.45, 0.75, 3).round(3))
    add_object([((0.0, 0.0), (width, 0.0))], boundary_color)
    add_object([((width, 0.0), (width, height))], boundary_color)
    add_object([((width, height), (0.0, height))], boundary_color)
    add_object([((0.0, height), (0.0, 0.0))], boundary_color)

    door = params.corridor_width
    for axis, pos, lo, hi in splits:
        span = hi - lo
        dw = min(door, span - 0.5)
        if dw < 0.4:
            dw = max(0.4, span * 0.5)
        off = lo + rng.uniform(0.25, max(0.26, span - dw - 0.25))
        color = tuple(float(c) for c in rng.uniform(0.35, 0.8, 3).round(3))
        segs = []
        if off - lo > MIN_SEGMENT_LENGTH * 10:
            if axis == 0:
                segs.append(((pos, lo), (pos, off)))
            else:
                segs.append(((lo, pos), (off, pos)))
        if hi - (off + dw) > MIN_SEGMENT_LENGTH * 10:
            if axis == 0:
                segs.append(((pos, off + dw), (pos, hi)))
            else:
                segs.append(((off + dw, pos), (hi, pos)))
        add_object(segs, color)

    # interior clutter, kept clear of room borders; only shapes without an
    # enclosable interior so rasterization cannot mint sealed pockets
    margin = max(0.8, door * 0.8)
    olo, ohi = params.obstacles_per_room
    for (x0, y0, x1, y1) in leaves:
        w, h = x1 - x0, y1 - y0
        if w < 2 * margin + 0.6 or h < 2 * margin + 0.6:
            continue
        n_obs = int(rng.integers(olo, ohi + 1))
        for _ in range(n_obs):
            ox = rng.uniform(x0 + margin, x1 - margin)
            oy = rng.uniform(y0 + margin, y1 - margin)
            color = tuple(float(c) for c in rng.uniform(0.2, 0.9, 3).round(3))
            kind = rng.random()

            def clamp_pt(px, py):
                return (min(max(px, x0 + margin), x1 - margin),
                        min(max(py, y0 + margin), y1 - margin))

            if kind < 0.25:
                # pillar: box too small to hold a navigable cell inside
                half = 0.09
                ax0, ay0 = clamp_pt(ox - half, oy - half)
                ax1, ay1 = clamp_pt(ox + half, oy + half)
                add_object([((ax0, ay0), (ax1, ay0)), ((ax1, ay0), (ax1, ay1)),
                            ((ax1, ay1), (ax0, ay1)), ((ax0, ay1), (ax0, ay0))], color)
            elif kind < 0.6:
                # free-standing wall stub
                ang = rng.uniform(0.0, math.pi)
                ln = rng.uniform(0.6, min(2.2, max(0.7, min(w, h) - 2 * margin)))
                ex, ey = clamp_pt(ox + ln * math.cos(ang), oy + ln * math.sin(ang))
                if math.hypot(ex - ox, ey - oy) > 0.3:
                    add_object([((ox, oy), (ex, ey))], color)
            else:
                # L-shaped baffle: two joined stubs
                ang = rng.uniform(0.0, 2.0 * math.pi)
                l1 = rng.uniform(0.5, 1.4)
                l2 = rng.uniform(0.5, 1.4)
                mx, my = clamp_pt(ox + l1 * math.cos(ang), oy + l1 * math.sin(ang))
                ang2 = ang + (math.pi / 2.0 if rng.random() < 0.5 else -math.pi / 2.0)
                ex, ey = clamp_pt(mx + l2 * math.cos(ang2), my + l2 * math.sin(ang2))
                segs = []
                if math.hypot(mx - ox, my - oy) > 0.3:
                    segs.append(((ox, oy), (mx, my)))
                if math.hypot(ex - mx, ey - my) > 0.3:
                    segs.append(((mx, my), (ex, ey)))
                if segs:
                    add_object(segs, color)

    return Scene(id=scene_id, walls=walls, wall_height=params.wall_height)


def generate_scene(seed: int, params: SceneGenParams | None = None) -> Scene:
    """Deterministic procedural scene that always passes load-time validation.

    Rooms come from a BSP partition with one door per dividing wall, so the
    navigable space is connected by construction; interior clutter that
    breaks connectivity triggers a deterministic regeneration attempt.
    """
    params = params or SceneGenParams()
    params, warnings = _clamped(params)
    scene_id = f"gen-{seed}"
    last_error = "unknown"
    for attempt in range(64):
        scene = _attempt_scene(seed, attempt, params, scene_id)
        segs = scene.segment_array()
        mask, _, _ = geometry.navigable_mask(segs, scene.bounds(), 0.05, 0.1)
        if not mask.any():
            last_error = "no navigable space"
            continue
        _, n_comp = ndimage.label(mask, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
        if n_comp != 1:
            last_error = f"{n_comp} navigable components"
            continue
        try:
            more = validate_scene(scene)
        except SceneValidationError as e:
            last_error = str(e)
            continue
        return replace(scene, warnings=tuple(warnings + more))
    raise RuntimeError(f"scene generation failed for seed {seed}: {last_error}")
