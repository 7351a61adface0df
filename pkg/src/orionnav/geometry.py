"""2D rigid-body poses, angle arithmetic, and segment geometry helpers."""

from __future__ import annotations

import math
from typing import NamedTuple

TWO_PI = 2.0 * math.pi


class Pose(NamedTuple):
    x: float
    y: float
    theta: float


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]; in-range angles pass through untouched."""
    if -math.pi < a <= math.pi:
        return a
    r = (a + math.pi) % TWO_PI - math.pi
    if r == -math.pi:
        return math.pi
    return r


def angle_diff(a: float, b: float) -> float:
    """Shortest signed rotation taking b to a."""
    return wrap_angle(a - b)


def compose(p: Pose, q: Pose) -> Pose:
    """Rigid composition: q expressed in p's frame, returned in p's parent frame."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose(
        p.x + c * q.x - s * q.y,
        p.y + s * q.x + c * q.y,
        wrap_angle(p.theta + q.theta),
    )


def inverse(p: Pose) -> Pose:
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), wrap_angle(-p.theta))


def relative_pose(frm: Pose, to: Pose) -> Pose:
    """Pose of `to` expressed in the frame of `frm` (body-frame delta)."""
    return compose(inverse(frm), to)


def transform_point(p: Pose, xy: tuple[float, float]) -> tuple[float, float]:
    """Map a point from p's frame into p's parent frame."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return (p.x + c * xy[0] - s * xy[1], p.y + s * xy[0] + c * xy[1])


def inverse_transform_point(p: Pose, xy: tuple[float, float]) -> tuple[float, float]:
    """Map a point from p's parent frame into p's frame."""
    dx, dy = xy[0] - p.x, xy[1] - p.y
    c, s = math.cos(p.theta), math.sin(p.theta)
    return (c * dx + s * dy, -s * dx + c * dy)


def dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def point_segment_distance(
    px: float, py: float, x1: float, y1: float, x2: float, y2: float
) -> float:
    """Euclidean distance from point (px, py) to segment (x1,y1)-(x2,y2)."""
    vx, vy = x2 - x1, y2 - y1
    wx, wy = px - x1, py - y1
    seg_len2 = vx * vx + vy * vy
    if seg_len2 <= 0.0:
        return math.hypot(wx, wy)
    t = (wx * vx + wy * vy) / seg_len2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (x1 + t * vx), py - (y1 + t * vy))


def segments_intersect(
    ax: float, ay: float, bx: float, by: float,
    cx: float, cy: float, dx: float, dy: float,
) -> bool:
    """True when segment AB strictly or touching intersects segment CD."""
    def orient(ox, oy, px, py, qx, qy):
        return (px - ox) * (qy - oy) - (py - oy) * (qx - ox)

    d1 = orient(cx, cy, dx, dy, ax, ay)
    d2 = orient(cx, cy, dx, dy, bx, by)
    d3 = orient(ax, ay, bx, by, cx, cy)
    d4 = orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True

    def on_seg(ox, oy, px, py, qx, qy):
        return min(ox, px) <= qx <= max(ox, px) and min(oy, py) <= qy <= max(oy, py)

    if d1 == 0 and on_seg(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and on_seg(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and on_seg(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and on_seg(ax, ay, bx, by, dx, dy):
        return True
    return False
