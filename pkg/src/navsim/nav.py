"""Navigable-space queries: occupancy rasterization, geodesic distance
fields, uniform point sampling, and the distance-gradient action selector
used by the privileged oracle.

Motion itself stays continuous in the simulator; the grid exists only for
distances and sampling. Resolution defaults to 0.05 m, a fifth of the
forward step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, geometry

DEFAULT_RESOLUTION = 0.05
SNAP_RADIUS = 0.2  # matches the task success radius; beyond it we reject


class NavError(Exception):
    pass


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean navigability per cell center over a scene's bounds."""

    origin: np.ndarray        # world position of cell (0, 0)'s center
    resolution: float
    navigable: np.ndarray     # (height, width) bool; row i is y, col j is x
    clearance: np.ndarray     # (height, width) distance to nearest wall

    @property
    def width(self) -> int:
        return self.navigable.shape[1]

    @property
    def height(self) -> int:
        return self.navigable.shape[0]

    def cell_of(self, p) -> tuple[int, int]:
        j = int(math.floor((p[0] - self.origin[0]) / self.resolution + 0.5))
        i = int(math.floor((p[1] - self.origin[1]) / self.resolution + 0.5))
        return i, j

    def center_of(self, i: int, j: int) -> np.ndarray:
        return self.origin + self.resolution * np.array([j, i], dtype=np.float64)

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.height and 0 <= j < self.width

    def navigable_cells(self) -> np.ndarray:
        """(n, 2) array of navigable (i, j) pairs, row-major order."""
        return np.argwhere(self.navigable)

    def to_pgm(self, path) -> None:
        """Debug dump; 255 marks navigable cells."""
        img = np.where(self.navigable, 255, 0).astype(np.uint8)
        with open(path, "wb") as f:
            f.write(b"P5\n%d %d\n255\n" % (self.width, self.height))
            f.write(img[::-1].tobytes())


def rasterize_navigable(segments: np.ndarray,
                        bounds: tuple[float, float, float, float],
                        resolution: float = DEFAULT_RESOLUTION,
                        agent_radius: float = 0.1) -> OccupancyGrid:
    """Cells whose centers clear every wall by agent_radius and lie inside
    the enclosure."""
    if resolution <= 0.0:
        raise NavError("resolution must be positive")
    if agent_radius < 0.0:
        raise NavError("agent_radius must be non-negative")
    mask, origin, clearance = geometry.navigable_mask(
        np.asarray(segments, dtype=np.float64).reshape(-1, 4),
        bounds, resolution, agent_radius)
    return OccupancyGrid(origin=origin, resolution=resolution,
                         navigable=mask, clearance=clearance)


@dataclass(frozen=True)
class DistanceField:
    """Geodesic distance to a fixed goal over an occupancy grid."""

    grid: OccupancyGrid
    goal: np.ndarray        # world goal as given (pre-snap)
    goal_cell: tuple[int, int]
    dist: np.ndarray        # (height, width); +inf where unreachable

    def interpolate(self, p) -> float:
        """Bilinear distance at a world point; +inf when no finite corner."""
        return geodesic_distance(self, p)


def _snap_to_navigable(grid: OccupancyGrid, p, radius: float = SNAP_RADIUS):
    """Nearest navigable cell within radius of p, else None."""
    i0, j0 = grid.cell_of(p)
    r_cells = int(math.ceil(radius / grid.resolution)) + 1
    best = None
    best_d = np.inf
    for i in range(max(0, i0 - r_cells), min(grid.height, i0 + r_cells + 1)):
        for j in range(max(0, j0 - r_cells), min(grid.width, j0 + r_cells + 1)):
            if not grid.navigable[i, j]:
                continue
            c = grid.center_of(i, j)
            d = math.hypot(c[0] - p[0], c[1] - p[1])
            if d < best_d:
                best_d = d
                best = (i, j)
    if best is None or best_d > radius:
        return None
    return best


def distance_field(grid: OccupancyGrid, goal) -> DistanceField:
    """Dijkstra over 8-connected navigable cells from the goal.

    Axial edges cost one resolution, diagonals sqrt(2) times that, and a
    diagonal is allowed only when both adjacent axial cells are navigable.
    The goal snaps to the nearest navigable cell center within 0.2 m.
    """
    goal = np.asarray(goal, dtype=np.float64)
    cell = _snap_to_navigable(grid, goal)
    if cell is None:
        raise NavError(f"goal ({goal[0]:.3f}, {goal[1]:.3f}) is not navigable")
    dist = _kernels.dijkstra_grid(grid.navigable, cell[0], cell[1], grid.resolution)
    return DistanceField(grid=grid, goal=goal, goal_cell=cell, dist=dist)


def geodesic_distance(field: DistanceField, p) -> float:
    """Bilinear interpolation of the distance field at a world point.

    Infinite corner values fall back to the finite corner nearest the query
    point; all-infinite neighborhoods return +inf.
    """
    grid = field.grid
    fx = (p[0] - grid.origin[0]) / grid.resolution
    fy = (p[1] - grid.origin[1]) / grid.resolution
    if not (-0.5 <= fx <= grid.width - 0.5 and -0.5 <= fy <= grid.height - 0.5):
        raise NavError(f"point ({p[0]:.3f}, {p[1]:.3f}) outside grid bounds")
    j0 = min(max(int(math.floor(fx)), 0), grid.width - 2) if grid.width > 1 else 0
    i0 = min(max(int(math.floor(fy)), 0), grid.height - 2) if grid.height > 1 else 0
    tx = min(max(fx - j0, 0.0), 1.0)
    ty = min(max(fy - i0, 0.0), 1.0)
    corners = []
    values = []
    for (di, dj, wx, wy) in ((0, 0, 1.0 - tx, 1.0 - ty), (0, 1, tx, 1.0 - ty),
                             (1, 0, 1.0 - tx, ty), (1, 1, tx, ty)):
        i, j = i0 + di, j0 + dj
        v = field.dist[i, j] if grid.in_bounds(i, j) else np.inf
        corners.append((di, dj, wx * wy))
        values.append(v)
    finite = [k for k, v in enumerate(values) if np.isfinite(v)]
    if not finite:
        return np.inf
    if len(finite) < 4:
        # nearest finite corner (to the query) substitutes for missing ones
        def corner_dist(k):
            di, dj, _ = corners[k]
            return (di - ty) ** 2 + (dj - tx) ** 2
        nearest = min(finite, key=corner_dist)
        values = [values[k] if np.isfinite(values[k]) else values[nearest]
                  for k in range(4)]
    return float(sum(values[k] * corners[k][2] for k in range(4)))


def sample_navigable(grid: OccupancyGrid, rng: np.random.Generator) -> np.ndarray:
    """Uniform over navigable cells, then uniform within the chosen cell."""
    cells = grid.navigable_cells()
    if len(cells) == 0:
        raise NavError("grid has no navigable space")
    i, j = cells[int(rng.integers(len(cells)))]
    center = grid.center_of(i, j)
    half = grid.resolution / 2.0
    return center + rng.uniform(-half, half, 2)


# Near-ties between action probes resolve by priority (forward, left, right);
# anything closer than this is a tie. Probes must also beat the current
# distance by this margin to count at all: jammed slides against walls move
# at the contact-epsilon scale and would otherwise fill the comparison with
# sub-millimeter noise that can trap the selector in a turn cycle.
PROBE_TIE_EPS = 1e-3


def greedy_gradient_action(field: DistanceField, state, goal_radius: float,
                           config, index: geometry.SegmentIndex):
    """Pick the action that best follows the distance field downhill.

    Within goal_radius: stop. Otherwise each action is probed through the
    real collision kinematics and scored by the interpolated distance of the
    position it leads to; turns are scored by the forward step they enable
    (a turn alone does not move, so scoring it in place would always tie).
    Probes within PROBE_TIE_EPS resolve as forward before left before right.
    When no probe materially descends (wedged against geometry), turn left:
    the monotone sweep revisits every heading, and the probe branches cannot
    cycle because each turn strictly descends the per-heading probe landscape.
    """
    from . import sim  # kinematics live above nav in the module stack

    d_now = geodesic_distance(field, state.position)
    if not np.isfinite(d_now):
        raise NavError("agent is in an unreachable region of the field")
    if d_now <= goal_radius:
        return sim.Action.STOP
    forward = sim.apply_forward(state, index, config)
    d_f = geodesic_distance(field, forward.new_state.position)
    left = sim.apply_turn(state, "left", config.turn_angle)
    right = sim.apply_turn(state, "right", config.turn_angle)
    d_l = geodesic_distance(field, sim.apply_forward(left, index, config).new_state.position)
    d_r = geodesic_distance(field, sim.apply_forward(right, index, config).new_state.position)
    best = min(d_f, d_l, d_r)
    improves = d_now - PROBE_TIE_EPS
    if d_f <= best + PROBE_TIE_EPS and d_f < improves:
        return sim.Action.MOVE_FORWARD
    if min(d_l, d_r) < improves:
        return sim.Action.TURN_LEFT if d_l <= d_r else sim.Action.TURN_RIGHT
    return sim.Action.TURN_LEFT
