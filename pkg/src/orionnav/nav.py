"""Global planning on inflated costmaps, pure-pursuit path following, the
discrete-time single-constraint CBF velocity filter, and the goto / rotate
behaviors driven by the tick loop (one command out per tick in)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._astar import astar_indices
from .geometry import Pose, angle_diff, wrap_angle
from .localization import OCCUPIED, UNEXPLORED, OccupancyGrid

LETHAL = 255.0
INSCRIBED = 254.0


@dataclass
class NavConfig:
    r_robot: float = 0.35
    inflation_radius: float = 0.55
    cost_scale: float = 5.0
    lam: float = 0.01  # meters of detour worth one cost unit
    unknown_cost: float = 50.0
    lookahead: float = 0.6
    k_omega: float = 2.5
    v_max: float = 0.8
    omega_max: float = math.pi / 2.0
    replan_every: int = 20
    goto_max_ticks: int = 3000
    object_standoff: float = 1.0
    room_standoff: float = 0.5
    frontier_standoff: float = 0.8
    frontier_alpha: float = 50.0
    frontier_score_mode: str = "intent"  # intent | literal


@dataclass
class CbfConfig:
    d_safe: float = 0.45  # r_robot + 0.10
    gamma: float = 0.3    # per-step class-K gain
    v_max: float = 0.8
    omega_max: float = math.pi / 2.0
    k_avoid: float = 1.0

    def validate(self, r_robot: float = 0.35) -> None:
        if self.d_safe <= r_robot:
            raise ValueError("d_safe must exceed the robot radius")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")


@dataclass
class Costmap:
    resolution: float
    origin: tuple[float, float]
    cost: np.ndarray  # float64 [rows = y, cols = x]

    @property
    def width(self) -> int:
        return self.cost.shape[1]

    @property
    def height(self) -> int:
        return self.cost.shape[0]

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


@dataclass
class Path:
    waypoints: list[tuple[float, float]]
    total_cost: float


def build_costmap(
    grid: OccupancyGrid,
    inflation_radius: float = 0.55,
    cost_scale: float = 5.0,
    r_robot: float = 0.35,
    unknown_cost: float | None = 50.0,
) -> Costmap:
    """Inflate occupied cells radially into a cost field.

    Lethal (255) exactly on occupied cells; inscribed (254) within r_robot of
    one; then 253*exp(-cost_scale*(d - r_robot)) out to the inflation radius;
    zero beyond. Unexplored cells take max(inflation cost, unknown_cost), or
    lethal when unknown_cost is None (goto must not plan through unseen space).
    """
    occupied = grid.cells == OCCUPIED
    cost = np.zeros(grid.cells.shape, dtype=np.float64)
    if occupied.any():
        d = ndimage.distance_transform_edt(~occupied) * grid.resolution
        band = (d > r_robot) & (d < inflation_radius)
        cost[band] = 253.0 * np.exp(-cost_scale * (d[band] - r_robot))
        cost[(d <= r_robot) & ~occupied] = INSCRIBED
        cost[occupied] = LETHAL
    unknown = grid.cells == UNEXPLORED
    if unknown_cost is None:
        cost[unknown] = LETHAL
    else:
        cost[unknown] = np.maximum(cost[unknown], unknown_cost)
    return Costmap(grid.resolution, grid.origin, cost)


def plan_path(
    cm: Costmap,
    start: tuple[float, float],
    goal: tuple[float, float],
    lam: float = 0.01,
) -> Path | None:
    """Cost-aware A* between world points; None when no path exists.

    total_cost is recomputed canonically along the returned path (euclidean
    steps plus lam * destination cell cost) so it is directly comparable with
    an independent shortest-path oracle.
    """
    sx, sy = cm.world_to_cell(*start)
    gx, gy = cm.world_to_cell(*goal)
    if not (cm.in_bounds(sx, sy) and cm.in_bounds(gx, gy)):
        return None
    if cm.cost[gy, gx] >= LETHAL:
        return None
    if (sx, sy) == (gx, gy):
        return Path([cm.cell_center(gx, gy)], 0.0)
    lethal = (cm.cost >= LETHAL).astype(np.uint8)
    lethal[sy, sx] = 0  # the robot plans from wherever it already is
    idx = astar_indices(cm.cost, lethal, sx, sy, gx, gy, cm.resolution, lam)
    if idx is None:
        return None
    w = cm.width
    cells = [(int(i % w), int(i // w)) for i in idx]
    waypoints = [cm.cell_center(ix, iy) for ix, iy in cells]
    total = 0.0
    for (ax, ay), (bx, by) in zip(cells[:-1], cells[1:]):
        step = math.hypot(bx - ax, by - ay) * cm.resolution
        total += step + lam * cm.cost[by, bx]
    return Path(waypoints, total)


def follow_path(
    path: Path,
    pose_est: Pose,
    v_max: float = 0.8,
    omega_max: float = math.pi / 2.0,
    lookahead: float = 0.6,
    k_omega: float = 2.5,
    standoff: float = 0.1,
) -> tuple[tuple[float, float], bool]:
    """Pure pursuit toward the lookahead point; ((v, w), arrived)."""
    wps = np.asarray(path.waypoints, dtype=np.float64)
    pos = np.array([pose_est.x, pose_est.y])
    dists = np.hypot(wps[:, 0] - pos[0], wps[:, 1] - pos[1])
    if dists[-1] <= standoff:
        return (0.0, 0.0), True
    nearest = int(np.argmin(dists))
    target_idx = len(wps) - 1
    for i in range(nearest, len(wps)):
        if dists[i] >= lookahead:
            target_idx = i
            break
    tx, ty = wps[target_idx]
    heading_err = wrap_angle(math.atan2(ty - pos[1], tx - pos[0]) - pose_est.theta)
    v = v_max * max(0.0, math.cos(heading_err))
    omega = min(omega_max, max(-omega_max, k_omega * heading_err))
    return (v, omega), False


def cbf_filter(
    cmd: tuple[float, float],
    pose_est: Pose,
    obstacle_points,
    cfg: CbfConfig,
    dt: float = 0.1,
) -> tuple[float, float]:
    """Single-constraint discrete-time CBF projection of a velocity command.

    With h = distance to the nearest scan point minus d_safe, the planar
    velocity must satisfy a . u >= -gamma*h/dt where a points from the
    obstacle toward the robot. Violations are projected onto the half-space
    (closed form for one constraint); an avoidance turn is added only when
    already inside the safety margin.
    """
    pts = np.asarray(obstacle_points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        return cmd
    v, omega = cmd
    pos = np.array([pose_est.x, pose_est.y])
    d2 = np.sum((pts - pos) ** 2, axis=1)
    j = int(np.argmin(d2))
    d = math.sqrt(float(d2[j]))
    if d < 1e-9:
        return (0.0, omega)
    a = (pos - pts[j]) / d
    h = d - cfg.d_safe
    b = -cfg.gamma * h / dt
    heading = np.array([math.cos(pose_est.theta), math.sin(pose_est.theta)])
    u = v * heading
    if float(a @ u) >= b:
        return cmd
    u_proj = u + (b - float(a @ u)) * a
    v_new = min(cfg.v_max, max(0.0, float(u_proj @ heading)))
    # The projection acts on the planar velocity, but a unicycle can only
    # realize speed along its heading; re-clamp so the realized velocity
    # v*heading itself satisfies the half-space (v = 0 when infeasible).
    ah = float(a @ heading)
    if ah < -1e-9:
        bound = b / ah  # v must be <= bound
        v_new = min(v_new, max(0.0, bound))
    elif ah > 1e-9 and b > 0.0:
        v_new = min(cfg.v_max, max(v_new, b / ah))
    elif abs(ah) <= 1e-9 and b > 0.0:
        v_new = 0.0
    omega_new = omega
    if h < 0.0:
        bearing = wrap_angle(math.atan2(pts[j][1] - pos[1], pts[j][0] - pos[0]) - pose_est.theta)
        away = -1.0 if bearing > 0.0 else 1.0
        omega_new = min(cfg.omega_max, max(-cfg.omega_max, omega + cfg.k_avoid * away))
    return (v_new, omega_new)


def scan_to_points(pose_est: Pose, ranges: np.ndarray, max_range: float) -> np.ndarray:
    """World-frame endpoints of beams that actually hit something."""
    n = len(ranges)
    if n == 0:
        return np.empty((0, 2))
    angles = pose_est.theta + 2.0 * math.pi * np.arange(n) / n
    hits = np.asarray(ranges) < max_range - 1e-12
    return np.column_stack(
        (pose_est.x + np.cos(angles[hits]) * ranges[hits],
         pose_est.y + np.sin(angles[hits]) * ranges[hits])
    )


class RotateBehavior:
    """Spin in place until the integrated |heading change| reaches 2*pi."""

    def __init__(self, omega_max: float = math.pi / 2.0, dt: float = 0.1):
        self.omega_max = omega_max
        self.accumulated = 0.0
        self._prev_theta: float | None = None
        self._ticks = 0
        self._max_ticks = int(4 * (2.0 * math.pi / omega_max) / dt) + 10
        self.done = False
        self.outcome = None
        self.log = ""

    def step(self, stack) -> tuple[float, float]:
        theta = stack.est.pose_est.theta
        if self._prev_theta is not None:
            self.accumulated += abs(angle_diff(theta, self._prev_theta))
        self._prev_theta = theta
        if self.accumulated >= 2.0 * math.pi:
            self.done = True
            self.outcome = "completed"
            return (0.0, 0.0)
        self._ticks += 1
        if self._ticks > self._max_ticks:
            self.done = True
            self.outcome = "completed"
            self.log = "rotation finished under obstruction slowdown"
            return (0.0, 0.0)
        return (0.0, self.omega_max)


class GotoBehavior:
    """Plan to a standoff ring around the target and follow with replanning.

    Replans every `replan_every` ticks or as soon as a remaining waypoint's
    grid cell turns occupied. Outcomes: arrived | no_path | aborted.
    """

    def __init__(
        self,
        target: tuple[float, float],
        standoff: float,
        cfg: NavConfig,
        unknown_traversable: bool = False,
        max_ticks: int | None = None,
    ):
        self.target = target
        self.standoff = standoff
        self.cfg = cfg
        self.unknown_traversable = unknown_traversable
        self.max_ticks = max_ticks if max_ticks is not None else cfg.goto_max_ticks
        self.path: Path | None = None
        self._last_plan_tick: int | None = None
        self._ticks = 0
        self._stall_anchor: tuple[float, float] | None = None
        self._stall_ticks = 0
        self.done = False
        self.outcome: str | None = None
        self.log = ""

    def _plan(self, stack) -> bool:
        cm = build_costmap(
            stack.grid,
            inflation_radius=self.cfg.inflation_radius,
            cost_scale=self.cfg.cost_scale,
            r_robot=self.cfg.r_robot,
            unknown_cost=self.cfg.unknown_cost if self.unknown_traversable else None,
        )
        pose = stack.est.pose_est
        goal = _nearest_plannable_goal(cm, self.target, self.standoff)
        if goal is None:
            return False
        self.path = plan_path(cm, (pose.x, pose.y), goal, lam=self.cfg.lam)
        self._last_plan_tick = stack.tick
        return self.path is not None

    def _path_blocked(self, stack) -> bool:
        if self.path is None:
            return True
        grid = stack.grid
        for wx, wy in self.path.waypoints:
            ix, iy = grid.world_to_cell(wx, wy)
            if grid.in_bounds(ix, iy) and grid.cells[iy, ix] == OCCUPIED:
                return True
        return False

    def step(self, stack) -> tuple[float, float]:
        pose = stack.est.pose_est
        if math.hypot(pose.x - self.target[0], pose.y - self.target[1]) <= self.standoff:
            self.done = True
            self.outcome = "arrived"
            return (0.0, 0.0)
        self._ticks += 1
        if self._ticks > self.max_ticks:
            self.done = True
            self.outcome = "aborted"
            self.log = f"goto aborted after {self.max_ticks} ticks"
            return (0.0, 0.0)
        # Stall watchdog: the safety filter can pin the robot short of goals
        # that sit against obstacles; give up instead of grinding the budget.
        if self._stall_anchor is None:
            self._stall_anchor = (pose.x, pose.y)
        if math.hypot(pose.x - self._stall_anchor[0], pose.y - self._stall_anchor[1]) > 0.10:
            self._stall_anchor = (pose.x, pose.y)
            self._stall_ticks = 0
        else:
            self._stall_ticks += 1
            if self._stall_ticks > 80:
                self.done = True
                self.outcome = "aborted"
                self.log = f"goto stalled near {self._stall_anchor}"
                return (0.0, 0.0)
        need_replan = (
            self.path is None
            or stack.tick - (self._last_plan_tick or 0) >= self.cfg.replan_every
            or self._path_blocked(stack)
        )
        if need_replan and not self._plan(stack):
            self.done = True
            self.outcome = "no_path"
            self.log = f"no path to target {self.target}"
            return (0.0, 0.0)
        (v, omega), arrived = follow_path(
            self.path,
            pose,
            v_max=self.cfg.v_max,
            omega_max=self.cfg.omega_max,
            lookahead=self.cfg.lookahead,
            k_omega=self.cfg.k_omega,
            standoff=min(self.standoff, 0.3),
        )
        if arrived:
            # End of the planned path: either we are inside the standoff ring
            # already (caught next step) or the rest is a straight shot.
            heading_err = wrap_angle(
                math.atan2(self.target[1] - pose.y, self.target[0] - pose.x) - pose.theta
            )
            v = self.cfg.v_max * max(0.0, math.cos(heading_err)) * 0.5
            omega = min(self.cfg.omega_max, max(-self.cfg.omega_max, self.cfg.k_omega * heading_err))
        return (v, omega)


def _nearest_plannable_goal(
    cm: Costmap, target: tuple[float, float], standoff: float
) -> tuple[float, float] | None:
    """Closest non-lethal cell center to the target within the standoff ring."""
    tx, ty = cm.world_to_cell(*target)
    r = max(0, int(math.ceil(standoff / cm.resolution)))
    best = None
    best_key = None
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ix, iy = tx + dx, ty + dy
            if not cm.in_bounds(ix, iy):
                continue
            if cm.cost[iy, ix] >= LETHAL:
                continue
            cx, cy = cm.cell_center(ix, iy)
            dist = math.hypot(cx - target[0], cy - target[1])
            if dist > standoff and (dx, dy) != (0, 0):
                continue
            key = (dist, iy, ix)
            if best_key is None or key < best_key:
                best = (cx, cy)
                best_key = key
    return best
