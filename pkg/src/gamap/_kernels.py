"""Numba-jitted grid kernels: eikonal fast marching, DDA raycasting, ray carving.

These sit on the per-step hot path (one distance field per step, one ray fan
per rendered frame); pure-Python equivalents are ~50x too slow for the
end-to-end suites.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _heap_push(heap_d, heap_i, size, d, i):
    heap_d[size] = d
    heap_i[size] = i
    j = size
    while j > 0:
        parent = (j - 1) // 2
        if heap_d[parent] > heap_d[j]:
            heap_d[parent], heap_d[j] = heap_d[j], heap_d[parent]
            heap_i[parent], heap_i[j] = heap_i[j], heap_i[parent]
            j = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(heap_d, heap_i, size):
    d = heap_d[0]
    i = heap_i[0]
    size -= 1
    heap_d[0] = heap_d[size]
    heap_i[0] = heap_i[size]
    j = 0
    while True:
        left = 2 * j + 1
        right = left + 1
        smallest = j
        if left < size and heap_d[left] < heap_d[smallest]:
            smallest = left
        if right < size and heap_d[right] < heap_d[smallest]:
            smallest = right
        if smallest == j:
            break
        heap_d[smallest], heap_d[j] = heap_d[j], heap_d[smallest]
        heap_i[smallest], heap_i[j] = heap_i[j], heap_i[smallest]
        j = smallest
    return d, i, size


@njit(cache=True)
def fmm_solve(cost, h, src_r, src_c):
    """First-order upwind fast marching from one source cell.

    cost holds the per-cell slowness multiplier (inf = blocked); the solved
    field T satisfies |grad T| = cost with T(source) = 0. Distances are in
    the same units as h (meters).
    """
    rows, cols = cost.shape
    n = rows * cols
    dist = np.full(n, np.inf)
    frozen = np.zeros(n, np.uint8)
    cap = 8 * n + 16
    heap_d = np.empty(cap)
    heap_i = np.empty(cap, np.int64)
    size = 0
    src = src_r * cols + src_c
    if not np.isfinite(cost[src_r, src_c]):
        return dist.reshape(rows, cols)
    dist[src] = 0.0
    size = _heap_push(heap_d, heap_i, size, 0.0, src)
    while size > 0:
        d, idx, size = _heap_pop(heap_d, heap_i, size)
        if frozen[idx]:
            continue
        frozen[idx] = 1
        r = idx // cols
        c = idx % cols
        for k in range(4):
            if k == 0:
                nr, nc = r - 1, c
            elif k == 1:
                nr, nc = r + 1, c
            elif k == 2:
                nr, nc = r, c - 1
            else:
                nr, nc = r, c + 1
            if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
                continue
            nidx = nr * cols + nc
            if frozen[nidx] or not np.isfinite(cost[nr, nc]):
                continue
            a = np.inf  # best along rows axis
            if nr > 0:
                a = dist[nidx - cols]
            if nr + 1 < rows and dist[nidx + cols] < a:
                a = dist[nidx + cols]
            b = np.inf  # best along cols axis
            if nc > 0:
                b = dist[nidx - 1]
            if nc + 1 < cols and dist[nidx + 1] < b:
                b = dist[nidx + 1]
            f = cost[nr, nc] * h
            lo = a if a < b else b
            if lo == np.inf:
                continue
            if np.isfinite(a) and np.isfinite(b) and abs(a - b) <= f:
                t = 0.5 * (a + b + np.sqrt(2.0 * f * f - (a - b) * (a - b)))
            else:
                t = lo + f
            if t < dist[nidx] - 1e-12:
                dist[nidx] = t
                size = _heap_push(heap_d, heap_i, size, t, nidx)
    return dist.reshape(rows, cols)


@njit(cache=True)
def cast_rays(obstacle, origin_x, origin_y, resolution, px, py, dir_x, dir_y, max_t):
    """DDA march of unit-direction rays from (px, py) through an obstacle grid.

    Returns (t, hit_r, hit_c, hit): t is the entry distance into the first
    obstacle cell (or max_t when nothing was hit within range / in bounds).
    The starting cell is not tested.
    """
    rows, cols = obstacle.shape
    q = dir_x.shape[0]
    t_out = np.empty(q)
    hit_r = np.full(q, -1, np.int64)
    hit_c = np.full(q, -1, np.int64)
    hit = np.zeros(q, np.uint8)
    for i in range(q):
        dx = dir_x[i]
        dy = dir_y[i]
        limit = max_t[i]
        c = int(np.floor((px - origin_x) / resolution))
        r = int(np.floor((py - origin_y) / resolution))
        step_c = 1 if dx > 0 else -1
        step_r = 1 if dy > 0 else -1
        if dx > 0:
            tx = ((c + 1) * resolution + origin_x - px) / dx
        elif dx < 0:
            tx = (c * resolution + origin_x - px) / dx
        else:
            tx = np.inf
        if dy > 0:
            ty = ((r + 1) * resolution + origin_y - py) / dy
        elif dy < 0:
            ty = (r * resolution + origin_y - py) / dy
        else:
            ty = np.inf
        tdx = resolution / abs(dx) if dx != 0 else np.inf
        tdy = resolution / abs(dy) if dy != 0 else np.inf
        t_out[i] = limit
        while True:
            if tx < ty:
                t = tx
                tx += tdx
                c += step_c
            else:
                t = ty
                ty += tdy
                r += step_r
            if t > limit:
                break
            if r < 0 or r >= rows or c < 0 or c >= cols:
                break
            if obstacle[r, c]:
                t_out[i] = t
                hit_r[i] = r
                hit_c[i] = c
                hit[i] = 1
                break
    return t_out, hit_r, hit_c, hit


@njit(cache=True)
def carve_lines(occupancy, r0, c0, ends_r, ends_c, unknown_val, free_val):
    """Mark Unknown cells Free along integer lines from (r0, c0), endpoint excluded."""
    for k in range(ends_r.shape[0]):
        r1 = ends_r[k]
        c1 = ends_c[k]
        dr = abs(r1 - r0)
        dc = abs(c1 - c0)
        sr = 1 if r0 < r1 else -1
        sc = 1 if c0 < c1 else -1
        err = dc - dr
        r, c = r0, c0
        while True:
            if r == r1 and c == c1:
                break
            if occupancy[r, c] == unknown_val:
                occupancy[r, c] = free_val
            e2 = 2 * err
            if e2 > -dr:
                err -= dr
                c += sc
            if e2 < dc:
                err += dc
                r += sr
