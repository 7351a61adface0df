"""A* search kernel over 8-connected cost grids.

Edge weight = euclidean step length + lam * destination cell cost; heuristic =
euclidean distance (admissible and consistent, so every cell is closed once).
The hot loop is numba-jitted when available; the pure-Python twin exists for
environments without numba and is selected via ORIONNAV_NO_NUMBA=1.
"""

from __future__ import annotations

import heapq
import math
import os

import numpy as np

_SQRT2 = math.sqrt(2.0)

_DX = np.array([1, -1, 0, 0, 1, 1, -1, -1], dtype=np.int64)
_DY = np.array([0, 0, 1, -1, 1, -1, 1, -1], dtype=np.int64)
_STEP = np.array([1.0, 1.0, 1.0, 1.0, _SQRT2, _SQRT2, _SQRT2, _SQRT2], dtype=np.float64)


def _astar_py(cost, lethal, sx, sy, gx, gy, res, lam):
    h, w = cost.shape
    start = sy * w + sx
    goal = gy * w + gx
    g = {start: 0.0}
    pred = {}
    closed = set()
    heap = [(math.hypot(gx - sx, gy - sy) * res, start)]
    while heap:
        f, i = heapq.heappop(heap)
        if i in closed:
            continue
        closed.add(i)
        if i == goal:
            break
        iy, ix = divmod(i, w)
        gi = g[i]
        for k in range(8):
            nx = ix + int(_DX[k])
            ny = iy + int(_DY[k])
            if nx < 0 or nx >= w or ny < 0 or ny >= h:
                continue
            ni = ny * w + nx
            if lethal[ny, nx]:
                continue
            ng = gi + _STEP[k] * res + lam * cost[ny, nx]
            if ng < g.get(ni, math.inf):
                g[ni] = ng
                pred[ni] = i
                heur = math.hypot(gx - nx, gy - ny) * res
                heapq.heappush(heap, (ng + heur, ni))
    if goal not in closed:
        return None
    path = [goal]
    while path[-1] != start:
        path.append(pred[path[-1]])
    path.reverse()
    return np.array(path, dtype=np.int64)


_astar_nb = None
if not os.environ.get("ORIONNAV_NO_NUMBA"):
    try:
        from numba import njit

        @njit(cache=True)
        def _astar_nb_impl(cost, lethal, sx, sy, gx, gy, res, lam):  # pragma: no cover
            h, w = cost.shape
            n = h * w
            start = sy * w + sx
            goal = gy * w + gx
            g = np.full(n, np.inf)
            pred = np.full(n, -1, dtype=np.int64)
            closed = np.zeros(n, dtype=np.uint8)
            cap = 8 * n + 8
            heap_f = np.empty(cap, dtype=np.float64)
            heap_i = np.empty(cap, dtype=np.int64)
            size = 0

            # push start
            g[start] = 0.0
            heap_f[0] = math.hypot(gx - sx, gy - sy) * res
            heap_i[0] = start
            size = 1

            dx = np.array([1, -1, 0, 0, 1, 1, -1, -1], dtype=np.int64)
            dy = np.array([0, 0, 1, -1, 1, -1, 1, -1], dtype=np.int64)
            sqrt2 = math.sqrt(2.0)

            while size > 0:
                f = heap_f[0]
                i = heap_i[0]
                # pop-min: move last to root, sift down
                size -= 1
                heap_f[0] = heap_f[size]
                heap_i[0] = heap_i[size]
                pos = 0
                while True:
                    left = 2 * pos + 1
                    right = left + 1
                    smallest = pos
                    if left < size and heap_f[left] < heap_f[smallest]:
                        smallest = left
                    if right < size and heap_f[right] < heap_f[smallest]:
                        smallest = right
                    if smallest == pos:
                        break
                    heap_f[pos], heap_f[smallest] = heap_f[smallest], heap_f[pos]
                    heap_i[pos], heap_i[smallest] = heap_i[smallest], heap_i[pos]
                    pos = smallest

                if closed[i] == 1:
                    continue
                closed[i] = 1
                if i == goal:
                    break
                iy = i // w
                ix = i - iy * w
                gi = g[i]
                for k in range(8):
                    nx = ix + dx[k]
                    ny = iy + dy[k]
                    if nx < 0 or nx >= w or ny < 0 or ny >= h:
                        continue
                    if lethal[ny, nx] == 1:
                        continue
                    ni = ny * w + nx
                    step = res if k < 4 else sqrt2 * res
                    ng = gi + step + lam * cost[ny, nx]
                    if ng < g[ni]:
                        g[ni] = ng
                        pred[ni] = i
                        heur = math.hypot(float(gx - nx), float(gy - ny)) * res
                        # sift-up push
                        heap_f[size] = ng + heur
                        heap_i[size] = ni
                        pos = size
                        size += 1
                        while pos > 0:
                            par = (pos - 1) // 2
                            if heap_f[par] <= heap_f[pos]:
                                break
                            heap_f[pos], heap_f[par] = heap_f[par], heap_f[pos]
                            heap_i[pos], heap_i[par] = heap_i[par], heap_i[pos]
                            pos = par

            if closed[goal] == 0:
                return np.empty(0, dtype=np.int64)
            # reconstruct
            count = 1
            cur = goal
            while cur != start:
                cur = pred[cur]
                count += 1
            path = np.empty(count, dtype=np.int64)
            cur = goal
            for j in range(count - 1, -1, -1):
                path[j] = cur
                cur = pred[cur]
            return path

        _astar_nb = _astar_nb_impl
    except Exception:  # numba unavailable or failed to compile
        _astar_nb = None


def astar_indices(cost, lethal, sx, sy, gx, gy, res, lam):
    """Flat cell indices of the optimal path, or None when unreachable."""
    if _astar_nb is not None:
        out = _astar_nb(
            np.ascontiguousarray(cost, dtype=np.float64),
            np.ascontiguousarray(lethal, dtype=np.uint8),
            sx, sy, gx, gy, float(res), float(lam),
        )
        return None if len(out) == 0 else out
    return _astar_py(cost, lethal != 0, sx, sy, gx, gy, res, lam)
