"""The tick-loop runtime: wires world, localization, semantic mapping, scene
graph rebuilds, and the safety filter into one single-writer step function.

Everything stochastic keys off (scenario seed, stream, tick), so a run is a
pure function of (scenario, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, angle_diff, wrap_angle
from .localization import (
    DriftConfig,
    OccupancyGrid,
    PoseEstimate,
    PoseGraph,
    integrate_scan,
    maybe_keyframe,
    propagate_odometry,
    simulate_loop_closure,
)
from .nav import CbfConfig, NavConfig, cbf_filter, scan_to_points
from .scene_graph import SceneGraph, SceneGraphConfig, SceneNode, build_scene_graph_from_map
from .seeding import ODOM
from .semantic_map import (
    AssociationConfig,
    MapObject,
    associate_and_update,
    relocate_after_correction,
)
from .world import (
    Mutation,
    MutationError,
    SensorConfig,
    WorldModel,
    apply_mutation,
    detect_objects,
    raycast_lidar,
    step_robot,
)


@dataclass
class StackConfig:
    resolution: float = 0.05
    sensor: SensorConfig = field(default_factory=SensorConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    assoc: AssociationConfig = field(default_factory=AssociationConfig)
    graph: SceneGraphConfig = field(default_factory=SceneGraphConfig)
    nav: NavConfig = field(default_factory=NavConfig)
    cbf: CbfConfig = field(default_factory=CbfConfig)
    cbf_enabled: bool = True
    map_refresh_every: int = 5     # 2 Hz at dt = 0.1
    graph_rebuild_every: int = 20  # every two seconds
    kf_distance: float = 0.5
    kf_angle: float = 0.5
    auto_closure: bool = True
    closure_revisit_radius: float = 1.0
    closure_min_age_ticks: int = 300
    closure_cooldown_ticks: int = 100


class NavStack:
    def __init__(self, world: WorldModel, cfg: StackConfig, seed: int = 0):
        self.world = world
        self.cfg = cfg
        self.seed = seed
        self.est = PoseEstimate(world.robot.pose_true)
        self.grid = OccupancyGrid.from_bounds(world.bounds, cfg.resolution)
        self.pose_graph = PoseGraph()
        kf0 = maybe_keyframe(self.est, None, tick=world.tick)
        self.pose_graph.keyframes.append(kf0)
        self.kf_truth: list[Pose] = [world.robot.pose_true]
        self.map_objects: list[MapObject] = []
        self.scene_graph = SceneGraph(root=SceneNode("root", "root", 1, (0.0, 0.0)))
        self.scheduled_mutations: list[Mutation] = []
        self.scheduled_closures: dict[int, float] = {}
        self._last_closure_tick = -(10 ** 9)
        self.path_length = 0.0
        self.last_scan: np.ndarray | None = None
        self.last_obstacle_points = np.empty((0, 2))
        self.last_detections: list = []
        self.mutation_log: list[tuple[int, str, str]] = []

    @property
    def tick(self) -> int:
        return self.world.tick

    @property
    def dt(self) -> float:
        return self.world.dt

    def schedule_mutation(self, m: Mutation) -> None:
        if m.at_tick is None:
            raise ValueError("scheduled mutations need at_tick")
        self.scheduled_mutations.append(m)

    def apply_mutation_now(self, m: Mutation) -> None:
        apply_mutation(self.world, m)
        self.mutation_log.append((self.tick, m.kind, "applied"))

    def step(self, cmd: tuple[float, float] = (0.0, 0.0)) -> bool:
        """Advance one tick; returns the collision flag for this step."""
        tick = self.world.tick
        for m in [m for m in self.scheduled_mutations if m.at_tick == tick]:
            self.scheduled_mutations.remove(m)
            try:
                apply_mutation(self.world, m)
                self.mutation_log.append((tick, m.kind, "applied"))
            except MutationError as exc:
                self.mutation_log.append((tick, m.kind, f"rejected: {exc}"))

        if self.cfg.cbf_enabled:
            cmd = cbf_filter(cmd, self.est.pose_est, self.last_obstacle_points, self.cfg.cbf, self.dt)
        collided = step_robot(self.world, cmd)
        v_exec, omega_exec = self.world.robot.v, self.world.robot.omega
        delta = Pose(v_exec * self.dt, 0.0, omega_exec * self.dt)
        self.est = propagate_odometry(self.est, delta, self.cfg.drift, (self.seed, ODOM, tick))
        self.path_length += abs(v_exec) * self.dt

        pose_true = self.world.robot.pose_true
        ranges = raycast_lidar(self.world, pose_true, self.cfg.sensor)
        self.last_scan = ranges
        integrate_scan(self.grid, self.est.pose_est, ranges, self.cfg.sensor.lidar_max_range)
        self.last_obstacle_points = scan_to_points(
            self.est.pose_est, ranges, self.cfg.sensor.lidar_max_range
        )

        kf = maybe_keyframe(
            self.est, self.pose_graph.last(), self.cfg.kf_distance, self.cfg.kf_angle, self.world.tick
        )
        if kf is not None:
            self.pose_graph.keyframes.append(kf)
            self.kf_truth.append(pose_true)

        gain = self.scheduled_closures.pop(self.world.tick, None)
        if gain is None and self._auto_closure_due(pose_true):
            gain = self.cfg.drift.correction_gain
        if gain:
            simulate_loop_closure(self.pose_graph, self.kf_truth, gain, self.world.tick)
            relocate_after_correction(self.map_objects, self.pose_graph)
            self._last_closure_tick = self.world.tick
            # Loop closure also pulls the live estimate toward truth.
            cur = self.est.pose_est
            self.est = PoseEstimate(
                Pose(
                    cur.x + gain * (pose_true.x - cur.x),
                    cur.y + gain * (pose_true.y - cur.y),
                    wrap_angle(cur.theta + gain * angle_diff(pose_true.theta, cur.theta)),
                ),
                self.est.covariance_scalar * (1.0 - gain),
            )

        if self.world.tick % self.cfg.map_refresh_every == 0:
            dets = detect_objects(self.world, pose_true, self.cfg.sensor, self.seed)
            self.last_detections = dets
            self.map_objects = associate_and_update(
                self.map_objects,
                dets,
                self.est.pose_est,
                self.pose_graph.last(),
                self.cfg.assoc,
                self.pose_graph,
            )
        if self.world.tick % self.cfg.graph_rebuild_every == 0:
            self.rebuild_graph()
        return collided

    def _auto_closure_due(self, pose_true: Pose) -> bool:
        if not self.cfg.auto_closure or self.cfg.drift.correction_gain <= 0.0:
            return False
        if self.cfg.drift.trans_drift == 0.0 and self.cfg.drift.rot_drift == 0.0:
            return False
        if self.world.tick - self._last_closure_tick < self.cfg.closure_cooldown_ticks:
            return False
        for kf, truth in zip(self.pose_graph.keyframes, self.kf_truth):
            if self.world.tick - kf.tick < self.cfg.closure_min_age_ticks:
                continue
            if math.hypot(pose_true.x - truth.x, pose_true.y - truth.y) <= self.cfg.closure_revisit_radius:
                return True
        return False

    def rebuild_graph(self) -> SceneGraph:
        self.scene_graph = build_scene_graph_from_map(
            self.map_objects, self.cfg.graph, built_at_tick=self.world.tick
        )
        return self.scene_graph

    def fresh_detections(self) -> list:
        """Detector output at the current tick (deterministic per tick)."""
        return detect_objects(self.world, self.world.robot.pose_true, self.cfg.sensor, self.seed)

    def map_object_by_key(self, key: str) -> MapObject | None:
        for m in self.map_objects:
            if m.key == key:
                return m
        return None


def run_behavior(stack: NavStack, behavior, tick_budget: int | None = None) -> int:
    """Drive a behavior to completion; returns ticks consumed."""
    used = 0
    while not behavior.done:
        if tick_budget is not None and used >= tick_budget:
            break
        cmd = behavior.step(stack)
        if behavior.done:
            break
        stack.step(cmd)
        used += 1
    return used
