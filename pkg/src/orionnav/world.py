"""Ground-truth 2D environment: walls, labeled objects, robot kinematics,
ray-cast range sensor, noisy range-bearing object detector, live mutation.

Walls are axis-aligned segments in meters. The robot is a disc of radius
r_robot following unicycle kinematics. All randomness is derived per
(seed, tick, object id) so identical scenarios replay bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    Pose,
    inverse_transform_point,
    point_segment_distance,
    segments_intersect,
    wrap_angle,
)
from .seeding import DETECT, derive_rng

# Points this close to a wall segment count as overlapping it.
OBJECT_WALL_CLEARANCE = 0.05


class MutationError(ValueError):
    """A mutation was rejected; the world is unchanged."""


@dataclass
class ObjectInstance:
    id: int
    label: str
    position: tuple[float, float]
    size_tier: str = "default"
    present: bool = True


@dataclass
class RobotState:
    pose_true: Pose
    v: float = 0.0
    omega: float = 0.0


@dataclass
class SensorConfig:
    lidar_beams: int = 96
    lidar_max_range: float = 6.0
    detector_fov: float = 2.0 * math.pi / 3.0
    detector_max_range: float = 4.0
    p_dropout: float = 0.0
    p_misclass: float = 0.0
    pos_jitter_sigma: float = 0.0
    confusion_pairs: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if not (0.0 <= self.p_dropout <= 1.0 and 0.0 <= self.p_misclass <= 1.0):
            raise ValueError("detection probabilities must be in [0, 1]")
        if self.lidar_max_range <= 0 or self.detector_max_range <= 0:
            raise ValueError("sensor ranges must be positive")
        if not (0.0 < self.detector_fov <= 2.0 * math.pi):
            raise ValueError("detector_fov must be in (0, 2*pi]")
        if self.lidar_beams < 1:
            raise ValueError("lidar_beams must be >= 1")


@dataclass
class Mutation:
    kind: str  # add_object | remove_object | move_object
    object: ObjectInstance | None = None
    target_id: int | None = None
    new_position: tuple[float, float] | None = None
    at_tick: int | None = None


@dataclass
class FrameObject:
    """One detection in the current frame, in the robot frame."""

    label: str
    position_robot: tuple[float, float]
    tick: int

    @property
    def range(self) -> float:
        return math.hypot(*self.position_robot)

    @property
    def bearing(self) -> float:
        return math.atan2(self.position_robot[1], self.position_robot[0])


@dataclass
class WorldModel:
    bounds: tuple[float, float]
    walls: list[tuple[float, float, float, float]]
    objects: list[ObjectInstance]
    robot: RobotState
    tick: int = 0
    dt: float = 0.1
    r_robot: float = 0.35
    v_max: float = 0.8
    omega_max: float = math.pi / 2.0
    last_collision: bool = False
    collision_count: int = 0
    _wall_cache: tuple | None = field(default=None, repr=False, compare=False)

    def wall_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Walls split into vertical / horizontal numpy arrays (cached)."""
        if self._wall_cache is None:
            vert, horiz = [], []
            for x1, y1, x2, y2 in self.walls:
                if x1 == x2:
                    vert.append((x1, min(y1, y2), max(y1, y2)))
                elif y1 == y2:
                    horiz.append((y1, min(x1, x2), max(x1, x2)))
                else:
                    raise ValueError(f"wall {(x1, y1, x2, y2)} is not axis-aligned")
            self._wall_cache = (
                np.asarray(vert, dtype=np.float64).reshape(-1, 3),
                np.asarray(horiz, dtype=np.float64).reshape(-1, 3),
            )
        return self._wall_cache

    def object_by_id(self, oid: int) -> ObjectInstance | None:
        for obj in self.objects:
            if obj.id == oid:
                return obj
        return None

    def min_wall_distance(self, x: float, y: float) -> float:
        if not self.walls:
            return math.inf
        vert, horiz = self.wall_arrays()
        best = math.inf
        if len(vert):
            cy = np.clip(y, vert[:, 1], vert[:, 2])
            best = min(best, float(np.min(np.hypot(vert[:, 0] - x, cy - y))))
        if len(horiz):
            cx = np.clip(x, horiz[:, 1], horiz[:, 2])
            best = min(best, float(np.min(np.hypot(cx - x, horiz[:, 0] - y))))
        return best


def step_robot(world: WorldModel, cmd: tuple[float, float], dt: float | None = None) -> bool:
    """Advance the robot one step of unicycle integration.

    Returns True when the commanded motion would drive the footprint into a
    wall; the pose is then left unchanged (collision is an outcome, not an
    error). The tick always advances.
    """
    dt = world.dt if dt is None else dt
    v = min(world.v_max, max(-world.v_max, cmd[0]))
    omega = min(world.omega_max, max(-world.omega_max, cmd[1]))
    x, y, th = world.robot.pose_true
    # Float op order mirrors the odometry composition so a zero-drift
    # estimate tracks truth bit-exactly.
    vdt = v * dt
    nx = x + math.cos(th) * vdt
    ny = y + math.sin(th) * vdt
    nth = wrap_angle(th + omega * dt)

    moved = (nx, ny) != (x, y)
    collided = moved and world.min_wall_distance(nx, ny) < world.r_robot
    if collided:
        world.last_collision = True
        world.collision_count += 1
        world.robot.v = 0.0
        world.robot.omega = 0.0
    else:
        world.last_collision = False
        world.robot.pose_true = Pose(nx, ny, nth)
        world.robot.v = v
        world.robot.omega = omega
    world.tick += 1
    return collided


def raycast_lidar(world: WorldModel, pose: Pose, cfg: SensorConfig | None = None) -> np.ndarray:
    """Ranges for beams at theta + 2*pi*i/N, clipped to lidar max range.

    Exact ray/segment intersection against the axis-aligned wall set,
    vectorized over beams x segments. Deterministic.
    """
    if cfg is None:
        cfg = SensorConfig()
    n = cfg.lidar_beams
    max_range = cfg.lidar_max_range
    angles = pose.theta + 2.0 * math.pi * np.arange(n) / n
    cos_a = np.cos(angles)
    sin_a = np.sin(angles)
    ranges = np.full(n, max_range, dtype=np.float64)
    vert, horiz = world.wall_arrays()

    if len(vert):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (vert[None, :, 0] - pose.x) / cos_a[:, None]
        y_hit = pose.y + t * sin_a[:, None]
        valid = (t > 1e-12) & (y_hit >= vert[None, :, 1] - 1e-12) & (y_hit <= vert[None, :, 2] + 1e-12)
        t = np.where(valid, t, np.inf)
        ranges = np.minimum(ranges, t.min(axis=1))
    if len(horiz):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (horiz[None, :, 0] - pose.y) / sin_a[:, None]
        x_hit = pose.x + t * cos_a[:, None]
        valid = (t > 1e-12) & (x_hit >= horiz[None, :, 1] - 1e-12) & (x_hit <= horiz[None, :, 2] + 1e-12)
        t = np.where(valid, t, np.inf)
        ranges = np.minimum(ranges, t.min(axis=1))
    return np.minimum(ranges, max_range)


def line_of_sight(world: WorldModel, a: tuple[float, float], b: tuple[float, float]) -> bool:
    """True when segment a-b crosses no wall."""
    for x1, y1, x2, y2 in world.walls:
        if segments_intersect(a[0], a[1], b[0], b[1], x1, y1, x2, y2):
            return False
    return True


def detect_objects(
    world: WorldModel, pose: Pose, cfg: SensorConfig, rng_seed: int
) -> list[FrameObject]:
    """Noisy range-bearing detections of present, in-FOV, unoccluded objects.

    Noise draws come from a generator derived from (rng_seed, tick, object id):
    replays are exact and independent of object ordering.
    """
    out: list[FrameObject] = []
    half_fov = cfg.detector_fov / 2.0
    for obj in world.objects:
        if not obj.present:
            continue
        rel = inverse_transform_point(pose, obj.position)
        rng_dist = math.hypot(rel[0], rel[1])
        if rng_dist > cfg.detector_max_range:
            continue
        bearing = math.atan2(rel[1], rel[0])
        if abs(bearing) > half_fov + 1e-12:
            continue
        if not line_of_sight(world, (pose.x, pose.y), obj.position):
            continue
        rng = derive_rng(rng_seed, DETECT, world.tick, obj.id)
        if rng.random() < cfg.p_dropout:
            continue
        label = obj.label
        if rng.random() < cfg.p_misclass and label in cfg.confusion_pairs:
            label = cfg.confusion_pairs[label]
        rx, ry = rel
        if cfg.pos_jitter_sigma > 0.0:
            rx += rng.normal(0.0, cfg.pos_jitter_sigma)
            ry += rng.normal(0.0, cfg.pos_jitter_sigma)
        out.append(FrameObject(label=label, position_robot=(rx, ry), tick=world.tick))
    return out


def _check_object_placement(world: WorldModel, position: tuple[float, float]) -> None:
    x, y = position
    w, h = world.bounds
    if not (0.0 <= x <= w and 0.0 <= y <= h):
        raise MutationError(f"position {position} outside bounds {world.bounds}")
    if world.min_wall_distance(x, y) < OBJECT_WALL_CLEARANCE:
        raise MutationError(f"position {position} overlaps a wall")


def apply_mutation(world: WorldModel, m: Mutation) -> WorldModel:
    """Apply one object mutation; raises MutationError leaving the world intact."""
    if m.kind == "add_object":
        if m.object is None:
            raise MutationError("add_object requires an object")
        _check_object_placement(world, m.object.position)
        existing = world.object_by_id(m.object.id)
        if existing is not None and existing.present:
            raise MutationError(f"object id {m.object.id} already present")
        if existing is not None:
            existing.label = m.object.label
            existing.position = m.object.position
            existing.size_tier = m.object.size_tier
            existing.present = True
        else:
            world.objects.append(replace(m.object, present=True))
    elif m.kind == "remove_object":
        obj = world.object_by_id(m.target_id) if m.target_id is not None else None
        if obj is None or not obj.present:
            raise MutationError(f"remove_object: no present object with id {m.target_id}")
        obj.present = False
    elif m.kind == "move_object":
        obj = world.object_by_id(m.target_id) if m.target_id is not None else None
        if obj is None:
            raise MutationError(f"move_object: unknown object id {m.target_id}")
        if m.new_position is None:
            raise MutationError("move_object requires new_position")
        _check_object_placement(world, m.new_position)
        obj.position = m.new_position
    else:
        raise MutationError(f"unknown mutation kind {m.kind!r}")
    return world


def rasterize_walls(
    bounds: tuple[float, float],
    walls: list[tuple[float, float, float, float]],
    resolution: float,
) -> np.ndarray:
    """Boolean occupancy mask [rows=y, cols=x] of cells touched by wall segments."""
    w = int(math.ceil(bounds[0] / resolution))
    h = int(math.ceil(bounds[1] / resolution))
    occ = np.zeros((h, w), dtype=bool)
    step = resolution / 4.0
    for x1, y1, x2, y2 in walls:
        length = math.hypot(x2 - x1, y2 - y1)
        n = max(2, int(length / step) + 1)
        ts = np.linspace(0.0, 1.0, n)
        xs = np.clip(((x1 + ts * (x2 - x1)) / resolution).astype(int), 0, w - 1)
        ys = np.clip(((y1 + ts * (y2 - y1)) / resolution).astype(int), 0, h - 1)
        occ[ys, xs] = True
    return occ


def wall_distance_point(
    walls: list[tuple[float, float, float, float]], x: float, y: float
) -> float:
    """Scalar reference distance (used by tests as an independent check)."""
    if not walls:
        return math.inf
    return min(point_segment_distance(x, y, *wseg) for wseg in walls)
