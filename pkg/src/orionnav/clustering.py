"""Density-based clustering over 2D points.

One implementation serves both object association (min_pts=1, where it reduces
to epsilon-connected components) and area clustering (min_pts=2, where noise
points are reported separately).
"""

from __future__ import annotations

import numpy as np

NOISE = -1


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Cluster rows of `points` (N, 2); returns per-point labels, noise = -1.

    Core points have >= min_pts neighbors within eps (the point itself
    counts). Border points join the cluster of the first core point that
    reaches them during ordered BFS expansion, which makes the labeling a
    deterministic function of input order.
    """
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    pts = np.asarray(points, dtype=np.float64)
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    adj = d2 <= eps * eps
    neighbor_counts = adj.sum(axis=1)
    core = neighbor_counts >= min_pts

    labels = np.full(n, NOISE, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        frontier = [i]
        while frontier:
            j = frontier.pop(0)
            for k in np.flatnonzero(adj[j]):
                if labels[k] == NOISE:
                    labels[k] = cluster
                    if core[k]:
                        frontier.append(int(k))
        cluster += 1
    return labels


def connected_components(points: np.ndarray, eps: float) -> np.ndarray:
    """Epsilon-connected components (DBSCAN with min_pts=1: every point is core)."""
    return dbscan(points, eps, min_pts=1)
