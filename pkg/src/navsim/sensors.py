"""Sensor suite: raycast rendering of RGB / depth / semantic-instance frames
in one scene traversal, the idealized GPS+Compass, the inverse-depth noise
model, and PNG frame codecs.

The camera is a pinhole at the agent's sensor height, yaw equal to the
heading, zero pitch. One 2D ray is cast per image column; every pixel in the
column resolves analytically against the wall band [0, wall_height], the
floor plane, and the ceiling plane, so all channels come from the same hit.
Depth is z-depth (distance along the camera forward axis), which makes
frontal walls exactly uniform.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import _kernels
from .geometry import SegmentIndex, segment_normals, wrap_angle

SEM_VOID = _kernels.SEM_VOID
SEM_FLOOR = _kernels.SEM_FLOOR
SEM_CEILING = _kernels.SEM_CEILING

VISUAL_KINDS = ("rgb", "depth", "semantic")
SENSOR_KINDS = VISUAL_KINDS + ("gps_compass",)


class SensorError(Exception):
    pass


@dataclass(frozen=True)
class SensorConfig:
    kind: str
    width: int = 256
    height: int = 256
    hfov: float = 90.0
    max_range: float = 10.0

    def __post_init__(self):
        if self.kind not in SENSOR_KINDS:
            raise SensorError(f"unknown sensor kind {self.kind!r}")
        if self.kind in VISUAL_KINDS:
            if self.width < 1 or self.height < 1:
                raise SensorError("sensor resolution must be at least 1x1")
            if not (0.0 < self.hfov < 180.0):
                raise SensorError("hfov must be in (0, 180) degrees")
            if self.max_range <= 0.0:
                raise SensorError("max_range must be positive")

    @property
    def focal(self) -> float:
        return (self.width * 0.5) / math.tan(math.radians(self.hfov) * 0.5)


def default_sensor_suite() -> tuple[SensorConfig, ...]:
    return (SensorConfig("rgb"), SensorConfig("depth"), SensorConfig("gps_compass"))


@dataclass
class Observations:
    """Per-step sensor bundle. Visual channels are None when not configured;
    goal is the episode's static target, set once per episode by the task."""

    rgb: np.ndarray | None = None        # (h, w, 3) float in [0, 1]
    depth: np.ndarray | None = None      # (h, w) meters, clamped to max_range
    semantic: np.ndarray | None = None   # (h, w) uint16 instance ids, 0 = void
    gps: np.ndarray | None = None        # (2,) meters in the episode frame
    compass: float | None = None         # radians relative to start heading
    goal: np.ndarray | None = None       # (2,) static goal in the episode frame


class RenderGeometry:
    """Immutable render view of a scene: world segments with per-segment
    shading data plus the uniform-grid index. Shareable across workers."""

    def __init__(self, segments: np.ndarray, semantic_ids: np.ndarray,
                 albedo: np.ndarray, wall_height: float,
                 floor_color, ceiling_color):
        self.segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
        self.semantic_ids = np.ascontiguousarray(semantic_ids, dtype=np.uint16)
        self.albedo = np.ascontiguousarray(albedo, dtype=np.float64).reshape(-1, 3)
        self.wall_height = float(wall_height)
        self.floor_color = np.asarray(floor_color, dtype=np.float64)
        self.ceiling_color = np.asarray(ceiling_color, dtype=np.float64)
        self.index = SegmentIndex(self.segments)
        normals = segment_normals(self.segments)
        self.normal_x = np.ascontiguousarray(normals[:, 0])
        self.normal_y = np.ascontiguousarray(normals[:, 1])


def _column_directions(heading: float, config: SensorConfig):
    """Unnormalized per-column ray directions with unit forward component,
    so the 2D hit parameter is the z-depth directly."""
    u = (np.arange(config.width) + 0.5 - config.width * 0.5) / config.focal
    fx, fy = math.cos(heading), math.sin(heading)
    rx, ry = math.sin(heading), -math.cos(heading)
    return fx + u * rx, fy + u * ry


def render(geom: RenderGeometry, position, heading: float, sensor_height: float,
           configs, brute_force: bool = False) -> Observations:
    """Render all requested visual channels from one traversal per camera.

    Sensors sharing (width, height, hfov, max_range) share their traversal.
    brute_force switches the column raycast to the exhaustive all-segments
    scan; results must match the indexed path exactly.
    """
    visual = [c for c in configs if c.kind in VISUAL_KINDS]
    if not visual:
        return Observations()
    kinds = [c.kind for c in visual]
    if len(set(kinds)) != len(kinds):
        raise SensorError("at most one sensor per visual kind")
    if sensor_height > geom.wall_height:
        raise SensorError("sensor height must stay below wall height")
    groups: dict[tuple, list[SensorConfig]] = {}
    for c in visual:
        groups.setdefault((c.width, c.height, c.hfov, c.max_range), []).append(c)
    obs = Observations()
    for (width, height, hfov, max_range), members in groups.items():
        proto = members[0]
        dirx, diry = _column_directions(heading, proto)
        rays = np.stack([dirx, diry], axis=1)
        if brute_force:
            t_col, i_col = geom.index.raycast_brute(position, rays)
        else:
            t_col, i_col = geom.index.raycast(position, rays)
        want_rgb = any(c.kind == "rgb" for c in members)
        want_depth = any(c.kind == "depth" for c in members)
        want_sem = any(c.kind == "semantic" for c in members)
        depth = np.empty((height, width)) if want_depth else np.empty((1, 1))
        rgb = np.empty((height, width, 3)) if want_rgb else np.empty((1, 1, 3))
        sem = np.empty((height, width), dtype=np.uint16) if want_sem else np.empty((1, 1), dtype=np.uint16)
        _kernels.fill_frame(t_col, i_col, height, width, proto.focal,
                            sensor_height, geom.wall_height, max_range,
                            geom.albedo, geom.semantic_ids,
                            geom.normal_x, geom.normal_y, dirx, diry,
                            geom.floor_color, geom.ceiling_color,
                            want_rgb, want_depth, want_sem,
                            depth, rgb, sem)
        if want_rgb:
            obs.rgb = rgb
        if want_depth:
            obs.depth = depth
        if want_sem:
            obs.semantic = sem
    return obs


@dataclass(frozen=True)
class EpisodeFrame:
    """Episode coordinate frame: origin at the start position, x-axis along
    the start heading. GPS, compass, and the static goal live in it."""

    origin: np.ndarray
    heading: float

    def to_frame(self, p) -> np.ndarray:
        dx = p[0] - self.origin[0]
        dy = p[1] - self.origin[1]
        c, s = math.cos(-self.heading), math.sin(-self.heading)
        return np.array([c * dx - s * dy, s * dx + c * dy])

    def to_world(self, p) -> np.ndarray:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return np.array([self.origin[0] + c * p[0] - s * p[1],
                         self.origin[1] + s * p[0] + c * p[1]])


def gps_compass(state, frame: EpisodeFrame) -> tuple[np.ndarray, float]:
    """Idealized localization: position in the episode frame plus heading
    relative to the start heading, wrapped to (-pi, pi]."""
    gps = frame.to_frame(state.position)
    compass = wrap_angle(state.heading - frame.heading)
    return gps, compass


def apply_inverse_depth_noise(depth: np.ndarray, sigma: float,
                              rng: np.random.Generator,
                              max_range: float = 10.0) -> np.ndarray:
    """Gaussian noise in inverse normalized depth: with z = d / max_range,
    z' = 1 / (1/z + eps), eps ~ N(0, sigma).

    Larger depths perturb more. Normalization keeps 1/z well away from zero
    over the sensor's range, so the inverse-domain distribution stays the
    clean Gaussian the moment check expects. Results clamp to
    [0.05 m, max_range]; saturated (void) pixels pass through untouched.
    """
    if sigma < 0.0:
        raise SensorError("sigma must be non-negative")
    out = np.array(depth, dtype=np.float64, copy=True)
    if sigma == 0.0:
        return out
    live = out < max_range
    eps = rng.normal(0.0, sigma, size=out.shape)
    with np.errstate(divide="ignore", over="ignore"):
        inv = max_range / out[live] + eps[live]
        noisy = np.where(inv != 0.0, max_range / inv, np.inf)
    out[live] = np.clip(noisy, 0.05, max_range)
    return out


# ---------------------------------------------------------------------------
# frame codecs (teleop protocol and debug dumps)

def depth_to_png(depth: np.ndarray, max_range: float = 10.0) -> bytes:
    """16-bit grayscale PNG; meters scale linearly so max_range -> 65535."""
    scaled = np.clip(np.round(depth / max_range * 65535.0), 0, 65535).astype(np.uint16)
    img = Image.fromarray(scaled)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png_to_depth(data: bytes, max_range: float = 10.0) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    arr = np.asarray(img, dtype=np.uint16)
    return arr.astype(np.float64) / 65535.0 * max_range


def rgb_to_png(rgb: np.ndarray) -> bytes:
    arr = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_to_rgb(data: bytes) -> np.ndarray:
    arr = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"), dtype=np.uint8)
    return arr.astype(np.float64) / 255.0


def semantic_to_png(semantic: np.ndarray) -> bytes:
    img = Image.fromarray(semantic.astype(np.uint16))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png_to_semantic(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)), dtype=np.uint16)
