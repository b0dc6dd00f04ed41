"""Planar geometry: rigid transforms, segment arrays, the uniform-grid
segment index, and navigable-space rasterization shared by scene validation
and the nav module.

Coordinate convention everywhere: x east, y north, headings in radians
counter-clockwise from +x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    out = math.fmod(theta + math.pi, 2.0 * math.pi)
    if out <= 0.0:
        out += 2.0 * math.pi
    return out - math.pi


@dataclass(frozen=True)
class Transform2D:
    """2D rigid transform: rotate by theta, then translate by (tx, ty)."""

    tx: float = 0.0
    ty: float = 0.0
    theta: float = 0.0

    def compose(self, local: "Transform2D") -> "Transform2D":
        """self ∘ local: apply local first, then self."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Transform2D(
            tx=self.tx + c * local.tx - s * local.ty,
            ty=self.ty + s * local.tx + c * local.ty,
            theta=self.theta + local.theta,
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (n, 2) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        c, s = math.cos(self.theta), math.sin(self.theta)
        out = np.empty_like(pts)
        out[..., 0] = c * pts[..., 0] - s * pts[..., 1] + self.tx
        out[..., 1] = s * pts[..., 0] + c * pts[..., 1] + self.ty
        return out

    @property
    def is_identity(self) -> bool:
        return self.tx == 0.0 and self.ty == 0.0 and self.theta == 0.0


IDENTITY = Transform2D()


def segment_lengths(segs: np.ndarray) -> np.ndarray:
    s = np.asarray(segs, dtype=np.float64)
    return np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1])


def segment_normals(segs: np.ndarray) -> np.ndarray:
    """Unit left normals, (n, 2). Zero-length segments give zeros."""
    s = np.asarray(segs, dtype=np.float64)
    ex = s[:, 2] - s[:, 0]
    ey = s[:, 3] - s[:, 1]
    ln = np.hypot(ex, ey)
    ln = np.where(ln > 0.0, ln, 1.0)
    return np.stack([-ey / ln, ex / ln], axis=1)


def point_segment_distances(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distance from each point to its nearest segment, vectorized.

    points: (m, 2), segs: (n, 4). Returns (m,). Chunked over points to keep
    the (chunk, n) temporaries small.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    s = np.asarray(segs, dtype=np.float64)
    if len(s) == 0:
        return np.full(len(pts), np.inf)
    a = s[:, 0:2]
    e = s[:, 2:4] - a
    l2 = np.maximum(np.einsum("ij,ij->i", e, e), 1e-300)
    out = np.empty(len(pts))
    chunk = max(1, int(4_000_000 / max(len(s), 1)))
    for lo in range(0, len(pts), chunk):
        p = pts[lo:lo + chunk]
        w = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mnk,nk->mn", w, e) / l2[None, :], 0.0, 1.0)
        d = w - t[:, :, None] * e[None, :, :]
        out[lo:lo + chunk] = np.sqrt(np.einsum("mnk,mnk->mn", d, d).min(axis=1))
    return out


class SegmentIndex:
    """Uniform grid over world segments: bucket lookup plus raycast kernels.

    The raycast grid path and the brute-force path share intersection
    arithmetic and tie-breaks, so they agree exactly; the grid only prunes.
    """

    CELL = 1.0

    def __init__(self, segs: np.ndarray):
        s = np.asarray(segs, dtype=np.float64).reshape(-1, 4)
        self.segs = s
        self.ax = np.ascontiguousarray(s[:, 0])
        self.ay = np.ascontiguousarray(s[:, 1])
        self.bx = np.ascontiguousarray(s[:, 2])
        self.by = np.ascontiguousarray(s[:, 3])
        self.ex = self.bx - self.ax
        self.ey = self.by - self.ay
        if len(s):
            self.x0 = float(min(self.ax.min(), self.bx.min())) - 0.5
            self.y0 = float(min(self.ay.min(), self.by.min())) - 0.5
            x1 = float(max(self.ax.max(), self.bx.max())) + 0.5
            y1 = float(max(self.ay.max(), self.by.max())) + 0.5
        else:
            self.x0 = self.y0 = -0.5
            x1 = y1 = 0.5
        self.nx = max(1, int(math.ceil((x1 - self.x0) / self.CELL)))
        self.ny = max(1, int(math.ceil((y1 - self.y0) / self.CELL)))
        buckets: list[list[int]] = [[] for _ in range(self.nx * self.ny)]
        for i in range(len(s)):
            cx0, cy0 = self._cell_of(min(self.ax[i], self.bx[i]), min(self.ay[i], self.by[i]))
            cx1, cy1 = self._cell_of(max(self.ax[i], self.bx[i]), max(self.ay[i], self.by[i]))
            for cy in range(cy0, cy1 + 1):
                for cx in range(cx0, cx1 + 1):
                    buckets[cy * self.nx + cx].append(i)
        starts = np.zeros(self.nx * self.ny + 1, dtype=np.int64)
        items: list[int] = []
        for k, b in enumerate(buckets):
            starts[k + 1] = starts[k] + len(b)
            items.extend(b)
        self.bucket_starts = starts
        self.bucket_items = np.asarray(items, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.segs)

    def _cell_of(self, x: float, y: float) -> tuple[int, int]:
        cx = min(self.nx - 1, max(0, int((x - self.x0) / self.CELL)))
        cy = min(self.ny - 1, max(0, int((y - self.y0) / self.CELL)))
        return cx, cy

    def query_aabb(self, xmin: float, ymin: float, xmax: float, ymax: float) -> np.ndarray:
        """Indices of segments whose bucket cells overlap the box (superset)."""
        cx0, cy0 = self._cell_of(xmin, ymin)
        cx1, cy1 = self._cell_of(xmax, ymax)
        parts = []
        for cy in range(cy0, cy1 + 1):
            base = cy * self.nx
            for cx in range(cx0, cx1 + 1):
                k = base + cx
                parts.append(self.bucket_items[self.bucket_starts[k]:self.bucket_starts[k + 1]])
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(parts))

    def raycast(self, origin, dirs: np.ndarray, t_max: float = 1e9):
        """Nearest hit per ray via grid traversal; t in units of the dir vector."""
        d = np.asarray(dirs, dtype=np.float64).reshape(-1, 2)
        return _kernels.raycast_grid(
            float(origin[0]), float(origin[1]),
            np.ascontiguousarray(d[:, 0]), np.ascontiguousarray(d[:, 1]),
            self.x0, self.y0, self.CELL, self.nx, self.ny,
            self.bucket_starts, self.bucket_items,
            self.ax, self.ay, self.ex, self.ey, t_max)

    def raycast_brute(self, origin, dirs: np.ndarray):
        """Reference path: exhaustive scan over all segments."""
        d = np.asarray(dirs, dtype=np.float64).reshape(-1, 2)
        return _kernels.raycast_all(
            float(origin[0]), float(origin[1]),
            np.ascontiguousarray(d[:, 0]), np.ascontiguousarray(d[:, 1]),
            self.ax, self.ay, self.ex, self.ey)

    def cast_disc(self, pos, motion, radius: float):
        """First contact of a swept disc; returns (t, seg_index, tangent)."""
        px, py = float(pos[0]), float(pos[1])
        ux, uy = float(motion[0]), float(motion[1])
        pad = radius + 1e-6
        cand = self.query_aabb(min(px, px + ux) - pad, min(py, py + uy) - pad,
                               max(px, px + ux) + pad, max(py, py + uy) + pad)
        t, i, tx, ty = _kernels.disc_cast(px, py, ux, uy, radius, cand,
                                          self.ax, self.ay, self.bx, self.by)
        return t, i, np.array([tx, ty])

    def clearance(self, pos, search_radius: float = 2.0) -> float:
        """Distance from pos to the nearest segment (local search, then global)."""
        px, py = float(pos[0]), float(pos[1])
        cand = self.query_aabb(px - search_radius, py - search_radius,
                               px + search_radius, py + search_radius)
        if len(cand):
            d = _kernels.min_seg_distance(px, py, cand, self.ax, self.ay, self.bx, self.by)
            if d <= search_radius:
                return d
        if len(self.segs) == 0:
            return np.inf
        all_idx = np.arange(len(self.segs), dtype=np.int64)
        return _kernels.min_seg_distance(px, py, all_idx, self.ax, self.ay, self.bx, self.by)


def navigable_mask(segs: np.ndarray, bounds: tuple[float, float, float, float],
                   resolution: float, agent_radius: float):
    """Boolean grid of navigable cell centers over bounds (xmin, ymin, xmax, ymax).

    A cell is navigable when its center clears every wall by agent_radius and
    is not connected to the outside of the enclosure. "Outside" is found by
    flood fill from the padded border over cells clearing walls by
    max(agent_radius, resolution), which walls always block since any
    4-connected crossing of a segment passes within one cell of it.

    Returns (mask, origin, clearances) where origin is the world position of
    cell (0, 0)'s center and clearances the per-cell wall distance grid.
    """
    xmin, ymin, xmax, ymax = bounds
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("empty bounds")
    pad = 2 * resolution
    nx = int(math.ceil((xmax - xmin + 2 * pad) / resolution))
    ny = int(math.ceil((ymax - ymin + 2 * pad) / resolution))
    ox = xmin - pad + resolution / 2.0
    oy = ymin - pad + resolution / 2.0
    xs = ox + resolution * np.arange(nx)
    ys = oy + resolution * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys)  # (ny, nx), row i = y
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    dist = point_segment_distances(pts, segs).reshape(ny, nx)
    barrier = max(agent_radius, resolution)
    open_mask = dist >= barrier
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, _ = ndimage.label(open_mask, structure=four)
    border_labels = np.unique(np.concatenate([
        labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]]))
    outside = np.isin(labels, border_labels[border_labels > 0])
    inside_open = open_mask & ~outside
    if agent_radius < barrier:
        # point-like agents: admit thin cells hugging the inside of walls
        inside = ndimage.binary_dilation(inside_open, structure=four,
                                         iterations=max(1, int(math.ceil(barrier / resolution))))
    else:
        inside = inside_open
    mask = (dist >= agent_radius) & inside
    return mask, np.array([ox, oy]), dist
