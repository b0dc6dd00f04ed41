"""Numba kernels for the hot paths: raycasting, grid Dijkstra, A*, swept-disc casts.

Everything here operates on plain numpy arrays so the kernels stay cacheable
and picklable call sites stay trivial. No fastmath: results must be
bit-reproducible across runs and worker processes.
"""
import math

import numpy as np
from numba import njit

# Tie-break rule shared by both raycast paths: smaller t wins, equal t goes to
# the lower segment index, so grid traversal order can never change the result.


@njit(cache=True)
def raycast_all(px, py, dirx, diry, ax, ay, ex, ey):
    """Brute-force nearest hit of each ray against every segment.

    Rays start at (px, py) with unnormalized directions (dirx[k], diry[k]);
    returned t is in units of the direction vector. Misses give (inf, -1).
    """
    m = dirx.shape[0]
    n = ax.shape[0]
    t_out = np.full(m, np.inf)
    i_out = np.full(m, -1, dtype=np.int64)
    for k in range(m):
        dx = dirx[k]
        dy = diry[k]
        best_t = np.inf
        best_i = -1
        for i in range(n):
            den = dx * ey[i] - dy * ex[i]
            if den == 0.0:
                continue
            sx = ax[i] - px
            sy = ay[i] - py
            t = (sx * ey[i] - sy * ex[i]) / den
            if t < 0.0 or t > best_t:
                continue
            r = (sx * dy - sy * dx) / den
            if 0.0 <= r <= 1.0:
                if t < best_t or i < best_i:
                    best_t = t
                    best_i = i
        t_out[k] = best_t
        i_out[k] = best_i
    return t_out, i_out


@njit(cache=True)
def raycast_grid(px, py, dirx, diry, gx0, gy0, cell, gnx, gny,
                 bucket_starts, bucket_items, ax, ay, ex, ey, t_max):
    """Nearest hit per ray using DDA traversal of the uniform 1 m segment grid.

    Must agree exactly with raycast_all: identical intersection arithmetic and
    the same (t, index) tie-break, the grid only prunes which segments are
    tested. t_max bounds the walk for rays that leave the indexed region.
    """
    m = dirx.shape[0]
    t_out = np.full(m, np.inf)
    i_out = np.full(m, -1, dtype=np.int64)
    for k in range(m):
        dx = dirx[k]
        dy = diry[k]
        cx = int(math.floor((px - gx0) / cell))
        cy = int(math.floor((py - gy0) / cell))
        stepx = 1 if dx > 0.0 else -1
        stepy = 1 if dy > 0.0 else -1
        if dx != 0.0:
            nbx = gx0 + (cx + (1 if dx > 0.0 else 0)) * cell
            tnx = (nbx - px) / dx
            tdx = abs(cell / dx)
        else:
            tnx = np.inf
            tdx = np.inf
        if dy != 0.0:
            nby = gy0 + (cy + (1 if dy > 0.0 else 0)) * cell
            tny = (nby - py) / dy
            tdy = abs(cell / dy)
        else:
            tny = np.inf
            tdy = np.inf
        best_t = np.inf
        best_i = -1
        while True:
            if 0 <= cx < gnx and 0 <= cy < gny:
                c = cy * gnx + cx
                for q in range(bucket_starts[c], bucket_starts[c + 1]):
                    i = bucket_items[q]
                    den = dx * ey[i] - dy * ex[i]
                    if den == 0.0:
                        continue
                    sx = ax[i] - px
                    sy = ay[i] - py
                    t = (sx * ey[i] - sy * ex[i]) / den
                    if t < 0.0 or t > best_t:
                        continue
                    r = (sx * dy - sy * dx) / den
                    if 0.0 <= r <= 1.0:
                        if t < best_t or i < best_i:
                            best_t = t
                            best_i = i
            t_exit = tnx if tnx < tny else tny
            if best_t <= t_exit or t_exit > t_max:
                break
            if tnx < tny:
                cx += stepx
                tnx += tdx
            else:
                cy += stepy
                tny += tdy
            if cx < 0 or cx >= gnx or cy < 0 or cy >= gny:
                out_x = (cx < 0 and dx <= 0.0) or (cx >= gnx and dx >= 0.0)
                out_y = (cy < 0 and dy <= 0.0) or (cy >= gny and dy >= 0.0)
                if out_x or out_y:
                    break
        t_out[k] = best_t
        i_out[k] = best_i
    return t_out, i_out


SEM_VOID = 0
SEM_FLOOR = 65534
SEM_CEILING = 65535


@njit(cache=True)
def fill_frame(t_col, i_col, height, width, focal, cam_h, wall_h, max_range,
               seg_albedo, seg_sem, seg_nx, seg_ny, dirx, diry,
               floor_color, ceil_color, want_rgb, want_depth, want_sem,
               depth, rgb, sem):
    """Resolve per-pixel channels from per-column wall hits.

    Walls extrude z in [0, wall_h]; floor and ceiling planes close the volume.
    t is z-depth directly because column directions carry unit forward
    component. Hits at or beyond max_range become void pixels so the
    depth==max_range <=> sem==0 contract holds everywhere.
    """
    for i in range(height):
        v = (height * 0.5 - (i + 0.5)) / focal
        for j in range(width):
            s = t_col[j]
            dx = dirx[j]
            dy = diry[j]
            inv_len = 1.0 / math.sqrt(dx * dx + dy * dy + v * v)
            t = np.inf
            kind = 0  # 0 void, 1 wall, 2 floor, 3 ceiling
            if v < 0.0:
                tf = -cam_h / v
                if tf <= s:
                    t = tf
                    kind = 2
                elif s != np.inf:
                    t = s
                    kind = 1
            elif v > 0.0:
                tc = (wall_h - cam_h) / v
                if tc <= s:
                    t = tc
                    kind = 3
                elif s != np.inf:
                    t = s
                    kind = 1
            else:
                if s != np.inf:
                    t = s
                    kind = 1
            if t >= max_range:
                kind = 0
            if kind == 0:
                if want_depth:
                    depth[i, j] = max_range
                if want_sem:
                    sem[i, j] = SEM_VOID
                if want_rgb:
                    rgb[i, j, 0] = 0.0
                    rgb[i, j, 1] = 0.0
                    rgb[i, j, 2] = 0.0
            elif kind == 1:
                k = i_col[j]
                if want_depth:
                    depth[i, j] = t
                if want_sem:
                    sem[i, j] = seg_sem[k]
                if want_rgb:
                    cos_a = abs(dx * seg_nx[k] + dy * seg_ny[k]) * inv_len
                    shade = 0.2 + 0.8 * cos_a
                    rgb[i, j, 0] = seg_albedo[k, 0] * shade
                    rgb[i, j, 1] = seg_albedo[k, 1] * shade
                    rgb[i, j, 2] = seg_albedo[k, 2] * shade
            else:
                if want_depth:
                    depth[i, j] = t
                if want_sem:
                    sem[i, j] = SEM_FLOOR if kind == 2 else SEM_CEILING
                if want_rgb:
                    cos_a = abs(v) * inv_len
                    shade = 0.2 + 0.8 * cos_a
                    if kind == 2:
                        rgb[i, j, 0] = floor_color[0] * shade
                        rgb[i, j, 1] = floor_color[1] * shade
                        rgb[i, j, 2] = floor_color[2] * shade
                    else:
                        rgb[i, j, 0] = ceil_color[0] * shade
                        rgb[i, j, 1] = ceil_color[1] * shade
                        rgb[i, j, 2] = ceil_color[2] * shade


@njit(cache=True)
def dijkstra_grid(navigable, src_i, src_j, resolution):
    """Geodesic distance to (src_i, src_j) over 8-connected navigable cells.

    Diagonal moves cost resolution*sqrt(2) and require both adjacent axial
    cells navigable (no corner cutting). Unreachable cells stay at inf.
    """
    h, w = navigable.shape
    dist = np.full(h * w, np.inf)
    cap = 4 * h * w + 16
    heap_d = np.empty(cap)
    heap_n = np.empty(cap, dtype=np.int64)
    diag = resolution * math.sqrt(2.0)
    start = src_i * w + src_j
    dist[start] = 0.0
    heap_d[0] = 0.0
    heap_n[0] = start
    size = 1
    while size > 0:
        d0 = heap_d[0]
        node = heap_n[0]
        size -= 1
        heap_d[0] = heap_d[size]
        heap_n[0] = heap_n[size]
        k = 0
        while True:
            left = 2 * k + 1
            right = left + 1
            small = k
            if left < size and heap_d[left] < heap_d[small]:
                small = left
            if right < size and heap_d[right] < heap_d[small]:
                small = right
            if small == k:
                break
            heap_d[k], heap_d[small] = heap_d[small], heap_d[k]
            heap_n[k], heap_n[small] = heap_n[small], heap_n[k]
            k = small
        if d0 > dist[node]:
            continue
        ci = node // w
        cj = node - ci * w
        for di in range(-1, 2):
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                ni = ci + di
                nj = cj + dj
                if ni < 0 or ni >= h or nj < 0 or nj >= w:
                    continue
                if not navigable[ni, nj]:
                    continue
                if di != 0 and dj != 0:
                    if not (navigable[ci, nj] and navigable[ni, cj]):
                        continue
                    nd = d0 + diag
                else:
                    nd = d0 + resolution
                ncode = ni * w + nj
                if nd < dist[ncode]:
                    dist[ncode] = nd
                    heap_d[size] = nd
                    heap_n[size] = ncode
                    k = size
                    size += 1
                    while k > 0:
                        p = (k - 1) // 2
                        if heap_d[p] <= heap_d[k]:
                            break
                        heap_d[k], heap_d[p] = heap_d[p], heap_d[k]
                        heap_n[k], heap_n[p] = heap_n[p], heap_n[k]
                        k = p
    return dist.reshape(h, w)


@njit(cache=True)
def astar_grid(cls, src_i, src_j, dst_i, dst_j, unknown_cost):
    """A* over a classified grid: 0 unknown, 1 free, 2 occupied (blocked).

    Octile move costs scaled by the class multiplier of the target cell
    (unknown cells cost unknown_cost per unit). Returns the path as an
    (n, 2) array of (i, j) from source to destination, or an empty (0, 2)
    array when no path exists. Source and destination are always enterable.
    """
    h, w = cls.shape
    n = h * w
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    cap = 8 * n + 16
    heap_f = np.empty(cap)
    heap_n = np.empty(cap, dtype=np.int64)
    sq2 = math.sqrt(2.0)
    start = src_i * w + src_j
    goal = dst_i * w + dst_j
    g[start] = 0.0
    heap_f[0] = 0.0
    heap_n[0] = start
    size = 1
    while size > 0:
        node = heap_n[0]
        size -= 1
        heap_f[0] = heap_f[size]
        heap_n[0] = heap_n[size]
        k = 0
        while True:
            left = 2 * k + 1
            right = left + 1
            small = k
            if left < size and heap_f[left] < heap_f[small]:
                small = left
            if right < size and heap_f[right] < heap_f[small]:
                small = right
            if small == k:
                break
            heap_f[k], heap_f[small] = heap_f[small], heap_f[k]
            heap_n[k], heap_n[small] = heap_n[small], heap_n[k]
            k = small
        if closed[node]:
            continue
        closed[node] = True
        if node == goal:
            break
        ci = node // w
        cj = node - ci * w
        for di in range(-1, 2):
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                ni = ci + di
                nj = cj + dj
                if ni < 0 or ni >= h or nj < 0 or nj >= w:
                    continue
                ncode = ni * w + nj
                if closed[ncode]:
                    continue
                c = cls[ni, nj]
                if c == 2 and ncode != goal:
                    continue
                if di != 0 and dj != 0:
                    ca = cls[ci, nj]
                    cb = cls[ni, cj]
                    if (ca == 2 or cb == 2) and ncode != goal:
                        continue
                    base = sq2
                else:
                    base = 1.0
                mult = unknown_cost if c == 0 else 1.0
                nd = g[node] + base * mult
                if nd < g[ncode]:
                    g[ncode] = nd
                    parent[ncode] = node
                    ddi = abs(dst_i - ni)
                    ddj = abs(dst_j - nj)
                    hx = ddi if ddi < ddj else ddj
                    heur = (ddi + ddj) + (sq2 - 2.0) * hx
                    heap_f[size] = nd + heur
                    heap_n[size] = ncode
                    k = size
                    size += 1
                    while k > 0:
                        p = (k - 1) // 2
                        if heap_f[p] <= heap_f[k]:
                            break
                        heap_f[k], heap_f[p] = heap_f[p], heap_f[k]
                        heap_n[k], heap_n[p] = heap_n[p], heap_n[k]
                        k = p
    if not closed[goal]:
        return np.empty((0, 2), dtype=np.int64)
    length = 1
    node = goal
    while parent[node] >= 0:
        node = parent[node]
        length += 1
    path = np.empty((length, 2), dtype=np.int64)
    node = goal
    for k in range(length - 1, -1, -1):
        path[k, 0] = node // w
        path[k, 1] = node - (node // w) * w
        node = parent[node]
    return path


@njit(cache=True)
def disc_cast(px, py, ux, uy, radius, cand, ax, ay, bx, by):
    """First contact of a disc swept along (ux, uy) against candidate segments.

    Returns (t, seg, tan_x, tan_y): contact time t in [0, 1] of the sweep
    (inf when free), the contacted segment index, and that segment's unit
    tangent for slide projection. Endpoint (corner) contacts report the same
    segment tangent.
    """
    best_t = np.inf
    best_i = -1
    u2 = ux * ux + uy * uy
    for q in range(cand.shape[0]):
        i = cand[q]
        exi = bx[i] - ax[i]
        eyi = by[i] - ay[i]
        seg_len = math.sqrt(exi * exi + eyi * eyi)
        if seg_len <= 0.0:
            continue
        tx = exi / seg_len
        ty = eyi / seg_len
        nx = -ty
        ny = tx
        relx = px - ax[i]
        rely = py - ay[i]
        d0 = relx * nx + rely * ny
        vn = ux * nx + uy * ny
        # face contact with the infinite line, validated against the span
        if abs(d0) >= radius:
            side = 1.0 if d0 > 0.0 else -1.0
            if vn * side < 0.0:
                t = (side * radius - d0) / vn
                if 0.0 <= t <= 1.0:
                    proj = (relx + t * ux) * tx + (rely + t * uy) * ty
                    if 0.0 <= proj <= seg_len:
                        if t < best_t:
                            best_t = t
                            best_i = i
        else:
            # already within the band (numerical edge): contact now if closing
            proj = relx * tx + rely * ty
            if 0.0 <= proj <= seg_len and vn * d0 < 0.0:
                if 0.0 < best_t:
                    best_t = 0.0
                    best_i = i
        # endpoint contacts
        for e in range(2):
            cxp = ax[i] if e == 0 else bx[i]
            cyp = ay[i] if e == 0 else by[i]
            wx = px - cxp
            wy = py - cyp
            b = wx * ux + wy * uy
            c = wx * wx + wy * wy - radius * radius
            if c < 0.0:
                if b < 0.0 and 0.0 < best_t:
                    best_t = 0.0
                    best_i = i
                continue
            if u2 == 0.0:
                continue
            disc = b * b - u2 * c
            if disc < 0.0:
                continue
            t = (-b - math.sqrt(disc)) / u2
            if 0.0 <= t <= 1.0 and t < best_t:
                best_t = t
                best_i = i
    if best_i < 0:
        return np.inf, -1, 0.0, 0.0
    exi = bx[best_i] - ax[best_i]
    eyi = by[best_i] - ay[best_i]
    seg_len = math.sqrt(exi * exi + eyi * eyi)
    return best_t, best_i, exi / seg_len, eyi / seg_len


@njit(cache=True)
def min_seg_distance(px, py, cand, ax, ay, bx, by):
    """Distance from a point to the nearest of the candidate segments."""
    best = np.inf
    for q in range(cand.shape[0]):
        i = cand[q]
        exi = bx[i] - ax[i]
        eyi = by[i] - ay[i]
        l2 = exi * exi + eyi * eyi
        wx = px - ax[i]
        wy = py - ay[i]
        if l2 > 0.0:
            t = (wx * exi + wy * eyi) / l2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            cx = wx - t * exi
            cy = wy - t * eyi
        else:
            cx = wx
            cy = wy
        d = math.sqrt(cx * cx + cy * cy)
        if d < best:
            best = d
    return best


@njit(cache=True)
def carve_depth_rays(logodds, ox, oy, endx, endy, hit, cell, x0, y0,
                     lo_step, lo_clamp):
    """Log-odds update for one depth scan: -lo_step along each ray (free
    space), +lo_step at endpoints that represent real hits.

    Grid cell (i, j) covers [x0 + j*cell, x0 + (j+1)*cell). Each ray touches
    a cell at most once (consecutive-sample dedupe at half-cell stride) and
    the hit endpoint cell is excluded from its own ray's carve.
    """
    h, w = logodds.shape
    for r in range(endx.shape[0]):
        tx = endx[r]
        ty = endy[r]
        dx = tx - ox
        dy = ty - oy
        dist = math.sqrt(dx * dx + dy * dy)
        ej = int(math.floor((tx - x0) / cell))
        ei = int(math.floor((ty - y0) / cell))
        steps = int(dist / (cell * 0.5)) + 1
        inv = 1.0 / steps
        pi = -1
        pj = -1
        for s in range(steps):
            f = (s + 0.5) * inv
            cxp = ox + dx * f
            cyp = oy + dy * f
            j = int(math.floor((cxp - x0) / cell))
            i = int(math.floor((cyp - y0) / cell))
            if i == pi and j == pj:
                continue
            pi = i
            pj = j
            if i < 0 or i >= h or j < 0 or j >= w:
                continue
            if hit[r] and i == ei and j == ej:
                continue
            new = logodds[i, j] - lo_step
            if new < -lo_clamp:
                new = -lo_clamp
            logodds[i, j] = new
        if hit[r] and 0 <= ei < h and 0 <= ej < w:
            new = logodds[ei, ej] + lo_step
            if new > lo_clamp:
                new = lo_clamp
            logodds[ei, ej] = new
