"""Simulated SLAM: drift-injected odometry, a keyframe pose graph with
scripted loop-closure corrections, and tri-state occupancy mapping.

Corrections pull keyframe poses toward ground truth instead of solving a
graph optimization; the point is a controllable trigger for downstream
object relocation, not SLAM itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, angle_diff, compose, wrap_angle
from .seeding import derive_rng

UNEXPLORED = 0
EXPLORED = 1
OCCUPIED = 2

_PGM_SHADE = {OCCUPIED: 0, UNEXPLORED: 128, EXPLORED: 255}


@dataclass
class DriftConfig:
    trans_drift: float = 0.0  # fraction per meter
    rot_drift: float = 0.0    # rad per rad
    correction_gain: float = 1.0

    def validate(self) -> None:
        if self.trans_drift < 0 or self.rot_drift < 0:
            raise ValueError("drift parameters must be nonnegative")
        if not (0.0 <= self.correction_gain <= 1.0):
            raise ValueError("correction_gain must be in [0, 1]")


@dataclass
class PoseEstimate:
    pose_est: Pose
    covariance_scalar: float = 0.0


@dataclass
class Keyframe:
    id: int
    pose_est: Pose
    pose_corrected: Pose
    tick: int = 0


@dataclass
class PoseGraph:
    keyframes: list[Keyframe] = field(default_factory=list)
    correction_log: list[tuple[int, tuple[int, int], float]] = field(default_factory=list)

    def by_id(self, kf_id: int) -> Keyframe:
        for kf in self.keyframes:
            if kf.id == kf_id:
                return kf
        raise KeyError(f"no keyframe with id {kf_id}")

    def last(self) -> Keyframe | None:
        return self.keyframes[-1] if self.keyframes else None


@dataclass
class OccupancyGrid:
    resolution: float
    origin: tuple[float, float]
    cells: np.ndarray  # uint8 [rows = y, cols = x]

    @classmethod
    def from_bounds(
        cls, bounds: tuple[float, float], resolution: float, origin: tuple[float, float] = (0.0, 0.0)
    ) -> "OccupancyGrid":
        w = int(math.ceil(bounds[0] / resolution))
        h = int(math.ceil(bounds[1] / resolution))
        return cls(resolution, origin, np.full((h, w), UNEXPLORED, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (
            int((x - self.origin[0]) / self.resolution),
            int((y - self.origin[1]) / self.resolution),
        )

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.origin, self.cells.copy())


def propagate_odometry(
    est: PoseEstimate, true_delta: Pose, cfg: DriftConfig, rng_seed
) -> PoseEstimate:
    """Advance the estimate by a body-frame delta with multiplicative drift noise.

    With a zero drift config the delta passes through bit-exactly, so the
    estimated trajectory tracks truth exactly.
    """
    delta = true_delta
    cov = est.covariance_scalar
    if cfg.trans_drift > 0.0 or cfg.rot_drift > 0.0:
        rng = derive_rng(*rng_seed) if isinstance(rng_seed, (tuple, list)) else derive_rng(rng_seed)
        trans_scale = 1.0 + cfg.trans_drift * rng.standard_normal()
        rot_scale = 1.0 + cfg.rot_drift * rng.standard_normal()
        delta = Pose(true_delta.x * trans_scale, true_delta.y * trans_scale, true_delta.theta * rot_scale)
        cov += cfg.trans_drift * math.hypot(true_delta.x, true_delta.y) + cfg.rot_drift * abs(
            true_delta.theta
        )
    return PoseEstimate(compose(est.pose_est, delta), cov)


def maybe_keyframe(
    est: PoseEstimate,
    last_kf: Keyframe | None,
    d_kf: float = 0.5,
    a_kf: float = 0.5,
    tick: int = 0,
) -> Keyframe | None:
    """New keyframe iff moved >= d_kf meters or turned >= a_kf radians since the last."""
    pose = est.pose_est
    if last_kf is None:
        return Keyframe(0, pose, pose, tick)
    ref = last_kf.pose_est
    moved = math.hypot(pose.x - ref.x, pose.y - ref.y)
    turned = abs(angle_diff(pose.theta, ref.theta))
    if moved >= d_kf or turned >= a_kf:
        return Keyframe(last_kf.id + 1, pose, pose, tick)
    return None


def simulate_loop_closure(
    graph: PoseGraph, truth: list[Pose], gain: float, tick: int = 0
) -> PoseGraph:
    """Pull every keyframe's corrected pose toward its true pose by `gain`.

    gain=1 snaps exactly to truth. A summary event is appended to the
    correction log. Mutates and returns the graph (single-writer tick loop).
    """
    if not (0.0 <= gain <= 1.0):
        raise ValueError("gain must be in [0, 1]")
    if len(truth) != len(graph.keyframes):
        raise ValueError("truth list must match keyframe count")
    if gain == 0.0 or not graph.keyframes:
        return graph
    total_shift = 0.0
    for kf, true_pose in zip(graph.keyframes, truth):
        cur = kf.pose_corrected
        if gain == 1.0:
            new = true_pose
        else:
            new = Pose(
                cur.x + gain * (true_pose.x - cur.x),
                cur.y + gain * (true_pose.y - cur.y),
                wrap_angle(cur.theta + gain * angle_diff(true_pose.theta, cur.theta)),
            )
        total_shift += math.hypot(new.x - cur.x, new.y - cur.y)
        kf.pose_corrected = new
    ids = (graph.keyframes[0].id, graph.keyframes[-1].id)
    graph.correction_log.append((tick, ids, total_shift / len(graph.keyframes)))
    return graph


def integrate_scan(
    grid: OccupancyGrid, pose_est: Pose, ranges: np.ndarray, max_range: float | None = None
) -> OccupancyGrid:
    """Fold one scan into the grid from the estimated pose.

    Cells along each beam (sampled at half-cell spacing) become explored; the
    terminal cell becomes occupied unless the beam ran to `max_range` (the
    sensor clip distance). Occupied marking happens after free marking so this
    scan's hits win. Re-observing a previously occupied cell as free flips it
    to explored.
    """
    n = len(ranges)
    if n == 0:
        return grid
    res = grid.resolution
    max_r = float(np.max(ranges))
    angles = pose_est.theta + 2.0 * math.pi * np.arange(n) / n
    cos_a, sin_a = np.cos(angles), np.sin(angles)

    ts = np.arange(0.0, max_r, res * 0.5)
    if len(ts) == 0:
        ts = np.array([0.0])
    free_mask = ts[None, :] < np.asarray(ranges)[:, None]  # beams x samples
    px = pose_est.x + np.outer(cos_a, ts)
    py = pose_est.y + np.outer(sin_a, ts)
    ix = np.floor((px - grid.origin[0]) / res).astype(np.int64)
    iy = np.floor((py - grid.origin[1]) / res).astype(np.int64)
    valid = free_mask & (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
    grid.cells[iy[valid], ix[valid]] = EXPLORED

    # Beam endpoints: occupied on a hit, explored at max range.
    ex = pose_est.x + cos_a * ranges
    ey = pose_est.y + sin_a * ranges
    eix = np.floor((ex - grid.origin[0]) / res).astype(np.int64)
    eiy = np.floor((ey - grid.origin[1]) / res).astype(np.int64)
    inb = (eix >= 0) & (eix < grid.width) & (eiy >= 0) & (eiy < grid.height)
    # Hits are strictly inside the sensor clip; tolerate float dust from the caster.
    if max_range is None:
        max_range_hit = np.zeros(n, dtype=bool)
    else:
        max_range_hit = np.asarray(ranges) >= max_range - 1e-12
    is_hit = ~max_range_hit
    grid.cells[eiy[inb & max_range_hit], eix[inb & max_range_hit]] = EXPLORED
    grid.cells[eiy[inb & is_hit], eix[inb & is_hit]] = OCCUPIED
    return grid


def export_pgm(grid: OccupancyGrid, pgm_path, meta_path=None) -> None:
    """Write the grid as a binary PGM (0=occupied, 128=unexplored, 255=explored)
    plus a sidecar text file carrying resolution and origin."""
    shades = np.zeros_like(grid.cells)
    for state, shade in _PGM_SHADE.items():
        shades[grid.cells == state] = shade
    # PGM rows run top-down; our rows run bottom-up in y.
    img = np.flipud(shades)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    with open(pgm_path, "wb") as f:
        f.write(header)
        f.write(img.astype(np.uint8).tobytes())
    if meta_path is None:
        meta_path = str(pgm_path) + ".txt"
    with open(meta_path, "w", encoding="utf-8") as f:
        f.write(f"resolution: {grid.resolution}\n")
        f.write(f"origin: {grid.origin[0]} {grid.origin[1]}\n")
        f.write(f"width: {grid.width}\nheight: {grid.height}\n")
