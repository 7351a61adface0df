"""Scenario loading and validation, seeded end-to-end runs, metrics with
failure attribution, suite execution, and report emission."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import vocabulary
from .explore import ExploreBehavior
from .geometry import Pose
from .llm_gateway import EndpointConfig, RecordingCompleter, ReplayCompleter, complete
from .localization import EXPLORED, OCCUPIED, DriftConfig, export_pgm
from .nav import CbfConfig, NavConfig
from .planner import (
    DEFAULT_MAX_STEPS,
    DEFAULT_MAX_TICKS,
    LlmBackend,
    ObjectMapSearchBackend,
    OracleBackend,
    Task,
    TaskResult,
    frontier_search_baseline,
    parse_command,
    run_task,
)
from .scene_graph import SceneGraphConfig, serialize_graph
from .semantic_map import AssociationConfig, export_map_records
from .stack import NavStack, StackConfig, run_behavior
from .world import (
    Mutation,
    ObjectInstance,
    RobotState,
    SensorConfig,
    WorldModel,
    rasterize_walls,
)

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Scenario file failed validation; the message names the offending field."""


@dataclass
class Scenario:
    name: str
    bounds: tuple[float, float]
    walls: list[tuple[float, float, float, float]]
    objects: list[dict]
    robot_start: tuple[float, float, float]
    tasks: list[Task]
    mutations: list[dict] = field(default_factory=list)
    closures: list[tuple[int, float]] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3])
    planner: str = "oracle"
    premap_ticks: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    max_ticks: int = DEFAULT_MAX_TICKS
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "world": {
                "bounds": list(self.bounds),
                "walls": [list(w) for w in self.walls],
                "objects": self.objects,
                "robot_start": list(self.robot_start),
            },
            "tasks": [{"command": t.command} for t in self.tasks],
            "mutations": self.mutations,
            "closures": [list(c) for c in self.closures],
            "seeds": self.seeds,
            "planner": self.planner,
            "premap_ticks": self.premap_ticks,
            "max_steps": self.max_steps,
            "max_ticks": self.max_ticks,
            "config": self.config,
        }


_TOP_FIELDS = {
    "schema_version", "name", "world", "tasks", "mutations", "closures",
    "seeds", "planner", "premap_ticks", "max_steps", "max_ticks", "config",
}
_WORLD_FIELDS = {"bounds", "walls", "objects", "robot_start"}
_OBJECT_FIELDS = {"id", "label", "position", "size_tier"}
_MUTATION_FIELDS = {"kind", "at_tick", "object", "target_id", "new_position"}
_CONFIG_SECTIONS = {"resolution", "sensor", "drift", "association", "nav", "cbf",
                    "exploration", "scene_graph", "stack"}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioError(f"unknown field(s) {sorted(unknown)} in {where}")


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be an object")
    _reject_unknown(data, _TOP_FIELDS, "scenario")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version must be {SCHEMA_VERSION}")
    for req in ("name", "world", "tasks"):
        if req not in data:
            raise ScenarioError(f"missing required field {req!r}")
    world = data["world"]
    _reject_unknown(world, _WORLD_FIELDS, "world")
    bounds = tuple(world.get("bounds", ()))
    if len(bounds) != 2 or min(bounds) <= 0:
        raise ScenarioError("world.bounds must be [width, height] with positive entries")
    walls = [tuple(w) for w in world.get("walls", [])]
    for w in walls:
        if len(w) != 4:
            raise ScenarioError(f"wall {w} must have four coordinates")
        if w[0] != w[2] and w[1] != w[3]:
            raise ScenarioError(f"wall {w} is not axis-aligned")
    objects = world.get("objects", [])
    seen_ids = set()
    for obj in objects:
        _reject_unknown(obj, _OBJECT_FIELDS, f"object {obj.get('id')}")
        label = obj.get("label")
        if label not in vocabulary.KNOWN_LABELS:
            raise ScenarioError(f"unknown object label {label!r}")
        if obj.get("id") in seen_ids:
            raise ScenarioError(f"duplicate object id {obj.get('id')}")
        seen_ids.add(obj.get("id"))
        pos = obj.get("position", ())
        if len(pos) != 2 or not (0 <= pos[0] <= bounds[0] and 0 <= pos[1] <= bounds[1]):
            raise ScenarioError(f"object {obj.get('id')} position {pos} outside bounds")
    start = tuple(world.get("robot_start", ()))
    if len(start) != 3:
        raise ScenarioError("world.robot_start must be [x, y, theta]")
    if not (0 <= start[0] <= bounds[0] and 0 <= start[1] <= bounds[1]):
        raise ScenarioError("world.robot_start outside bounds")

    tasks = []
    for t in data["tasks"]:
        _reject_unknown(t, {"command"}, "task")
        if not t.get("command"):
            raise ScenarioError("task.command must be nonempty")
        tasks.append(Task(command=t["command"]))

    premap = int(data.get("premap_ticks", 0))
    max_ticks = int(data.get("max_ticks", DEFAULT_MAX_TICKS))
    budget = premap + max_ticks * max(1, len(tasks))
    mutations = data.get("mutations", [])
    for m in mutations:
        _reject_unknown(m, _MUTATION_FIELDS, "mutation")
        if m.get("kind") not in ("add_object", "remove_object", "move_object"):
            raise ScenarioError(f"mutation kind {m.get('kind')!r} unknown")
        at = m.get("at_tick")
        if at is not None and not (0 <= at <= budget):
            raise ScenarioError(f"mutation at_tick {at} outside the run budget {budget}")
        if m.get("kind") == "add_object":
            obj = m.get("object") or {}
            _reject_unknown(obj, _OBJECT_FIELDS, "mutation.object")
            if obj.get("label") not in vocabulary.KNOWN_LABELS:
                raise ScenarioError(f"unknown mutation object label {obj.get('label')!r}")

    config = data.get("config", {})
    _reject_unknown(config, _CONFIG_SECTIONS, "config")

    return Scenario(
        name=data["name"],
        bounds=bounds,
        walls=walls,
        objects=objects,
        robot_start=start,
        tasks=tasks,
        mutations=mutations,
        closures=[tuple(c) for c in data.get("closures", [])],
        seeds=[int(s) for s in data.get("seeds", [1, 2, 3])],
        planner=data.get("planner", "oracle"),
        premap_ticks=premap,
        max_steps=int(data.get("max_steps", DEFAULT_MAX_STEPS)),
        max_ticks=max_ticks,
        config=config,
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def _sub_config(cls, overrides: dict):
    obj = cls()
    for k, v in overrides.items():
        if not hasattr(obj, k):
            raise ScenarioError(f"unknown {cls.__name__} option {k!r}")
        setattr(obj, k, v)
    return obj


def build_stack(scenario: Scenario, seed: int) -> NavStack:
    cfg_data = scenario.config
    stack_cfg = StackConfig(
        resolution=float(cfg_data.get("resolution", 0.05)),
        sensor=_sub_config(SensorConfig, cfg_data.get("sensor", {})),
        drift=_sub_config(DriftConfig, cfg_data.get("drift", {})),
        assoc=_sub_config(AssociationConfig, cfg_data.get("association", {})),
        graph=_sub_config(SceneGraphConfig, cfg_data.get("scene_graph", {})),
        nav=_sub_config(NavConfig, cfg_data.get("nav", {})),
        cbf=_sub_config(CbfConfig, cfg_data.get("cbf", {})),
    )
    for k, v in cfg_data.get("stack", {}).items():
        if not hasattr(stack_cfg, k):
            raise ScenarioError(f"unknown stack option {k!r}")
        setattr(stack_cfg, k, v)
    exploration = cfg_data.get("exploration", {})
    _reject_unknown(exploration, {"alpha", "score_mode"}, "config.exploration")
    if "alpha" in exploration:
        stack_cfg.nav.frontier_alpha = float(exploration["alpha"])
    if "score_mode" in exploration:
        stack_cfg.nav.frontier_score_mode = str(exploration["score_mode"])
    stack_cfg.sensor.validate()
    stack_cfg.drift.validate()
    stack_cfg.assoc.validate()
    stack_cfg.cbf.validate(stack_cfg.nav.r_robot)

    objects = [
        ObjectInstance(
            id=o["id"],
            label=o["label"],
            position=tuple(o["position"]),
            size_tier=o.get("size_tier", vocabulary.size_tier(o["label"])),
        )
        for o in scenario.objects
    ]
    world = WorldModel(
        bounds=scenario.bounds,
        walls=list(scenario.walls),
        objects=objects,
        robot=RobotState(pose_true=Pose(*scenario.robot_start)),
        v_max=stack_cfg.nav.v_max,
        omega_max=stack_cfg.nav.omega_max,
        r_robot=stack_cfg.nav.r_robot,
    )
    stack = NavStack(world, stack_cfg, seed)
    for m in scenario.mutations:
        if m.get("at_tick") is not None:
            stack.schedule_mutation(_mutation_from_dict(m))
    for tick, gain in scenario.closures:
        stack.scheduled_closures[int(tick)] = float(gain)
    return stack


def _mutation_from_dict(m: dict) -> Mutation:
    obj = None
    if m.get("object") is not None:
        o = m["object"]
        obj = ObjectInstance(
            id=o["id"],
            label=o["label"],
            position=tuple(o["position"]),
            size_tier=o.get("size_tier", vocabulary.size_tier(o["label"])),
        )
    return Mutation(
        kind=m["kind"],
        object=obj,
        target_id=m.get("target_id"),
        new_position=tuple(m["new_position"]) if m.get("new_position") else None,
        at_tick=m.get("at_tick"),
    )


def make_backend(name: str, scenario: Scenario, llm_completer=None):
    if name == "oracle":
        return OracleBackend()
    if name == "objectmap":
        return ObjectMapSearchBackend()
    if name == "llm":
        if llm_completer is None:
            endpoint = EndpointConfig.from_env()
            if endpoint is None:
                raise ScenarioError("llm backend needs ORION_LLM_URL or an explicit completer")
            llm_completer = lambda messages: complete(messages, endpoint)
        return LlmBackend(llm_completer)
    if name == "frontier":
        return "frontier"  # sentinel: handled by run_scenario
    raise ScenarioError(f"unknown planner backend {name!r}")


@dataclass
class RunMetrics:
    success: bool
    planner_steps: int
    sim_ticks: int
    wall_time: float
    path_length: float
    coverage: float
    failure_category: str  # none | localization | exploration | perception | navigation

    def deterministic_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_time")
        return d


def reachable_free_mask(scenario: Scenario, resolution: float) -> np.ndarray:
    """Ground-truth free cells flood-filled from the robot start (4-connected)."""
    occ = rasterize_walls(scenario.bounds, scenario.walls, resolution)
    h, w = occ.shape
    sx = min(w - 1, max(0, int(scenario.robot_start[0] / resolution)))
    sy = min(h - 1, max(0, int(scenario.robot_start[1] / resolution)))
    reach = np.zeros_like(occ)
    if occ[sy, sx]:
        return reach
    stack = [(sx, sy)]
    reach[sy, sx] = True
    while stack:
        x, y = stack.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < w and 0 <= ny < h and not occ[ny, nx] and not reach[ny, nx]:
                reach[ny, nx] = True
                stack.append((nx, ny))
    return reach


def _failure_category(stack: NavStack, task: Task, result: TaskResult) -> str:
    """Attribute a failed run to one subsystem (mirrors the failure breakdown).

    Precedence: gross pose error -> localization; a no-path navigation
    failure or a collision -> navigation; a present target that ended within
    detector range and line of sight yet was never confirmed -> perception;
    everything else (the target region was simply never reached in budget)
    -> exploration.
    """
    if result.accomplished:
        return "none"
    pose_true = stack.world.robot.pose_true
    est = stack.est.pose_est
    if math.hypot(pose_true.x - est.x, pose_true.y - est.y) > 1.0:
        return "localization"
    if stack.world.collision_count > 0 or any(
        r.outcome == "nav_failure" and ("no path" in r.log or "stalled" in r.log)
        for r in result.history
    ):
        return "navigation"
    try:
        target = parse_command(task.command)
    except Exception:
        return "exploration"
    if target.kind == "object":
        from .world import line_of_sight

        for obj in stack.world.objects:
            if not obj.present or obj.label != target.label:
                continue
            dist = math.hypot(obj.position[0] - pose_true.x, obj.position[1] - pose_true.y)
            if dist <= stack.cfg.sensor.detector_max_range and line_of_sight(
                stack.world, (pose_true.x, pose_true.y), obj.position
            ):
                return "perception"
    return "exploration"


def prepare_stack(scenario: Scenario, seed: int, frontier_mode: str = "intent") -> NavStack:
    """Build the stack and run the pre-task protocol: map (premap phase),
    return to the start pose, then apply phase-boundary mutations."""
    stack = build_stack(scenario, seed)
    if frontier_mode != "intent":
        stack.cfg.nav.frontier_score_mode = frontier_mode

    if scenario.premap_ticks > 0:
        premap = ExploreBehavior(
            budget_ticks=scenario.premap_ticks,
            nav_cfg=stack.cfg.nav,
            rng_seed=seed,
        )
        run_behavior(stack, premap, scenario.premap_ticks)
        from .nav import GotoBehavior

        home = GotoBehavior(
            (scenario.robot_start[0], scenario.robot_start[1]),
            standoff=0.3,
            cfg=stack.cfg.nav,
            unknown_traversable=False,
        )
        run_behavior(stack, home, 2000)
        stack.rebuild_graph()

    # Mutations without a tick are phase-boundary events: the environment
    # changes after the mapping phase, before tasking begins.
    for m in scenario.mutations:
        if m.get("at_tick") is None:
            stack.apply_mutation_now(_mutation_from_dict(m))
    return stack


def run_scenario(
    scenario: Scenario,
    seed: int,
    backend_name: str | None = None,
    out_dir: str | Path | None = None,
    llm_completer=None,
    frontier_mode: str = "intent",
) -> list[RunMetrics]:
    """Run every task of a scenario under one seed; archive artifacts."""
    backend_name = backend_name or scenario.planner
    stack = prepare_stack(scenario, seed, frontier_mode)
    backend = make_backend(backend_name, scenario, llm_completer)
    reach = reachable_free_mask(scenario, stack.grid.resolution)
    reach_count = max(1, int(reach.sum()))

    metrics: list[RunMetrics] = []
    transcript: list[dict] = []
    recorder = None
    if isinstance(backend, LlmBackend) and not isinstance(backend.completer, ReplayCompleter):
        recorder = RecordingCompleter(backend.completer)
        backend.completer = recorder

    for task in scenario.tasks:
        t_start = time.perf_counter()
        if backend == "frontier":
            result = frontier_search_baseline(stack, task, scenario.max_ticks)
        else:
            result = run_task(
                stack,
                task,
                backend,
                max_steps=scenario.max_steps,
                max_ticks=scenario.max_ticks,
                transcript=transcript,
            )
        wall = time.perf_counter() - t_start
        explored = (stack.grid.cells == EXPLORED) | (stack.grid.cells == OCCUPIED)
        coverage = float((explored & reach).sum()) / reach_count
        metrics.append(
            RunMetrics(
                success=result.accomplished,
                planner_steps=result.planner_steps,
                sim_ticks=result.sim_ticks,
                wall_time=wall,
                path_length=result.path_length,
                coverage=coverage,
                failure_category=_failure_category(stack, task, result),
            )
        )

    if out_dir is not None:
        out = Path(out_dir) / f"{scenario.name}_seed{seed}_{backend_name}"
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.json", "w", encoding="utf-8") as f:
            json.dump([m.deterministic_dict() for m in metrics], f, indent=2, sort_keys=True)
            f.write("\n")
        with open(out / "transcript.jsonl", "w", encoding="utf-8") as f:
            for rec in transcript:
                f.write(json.dumps(rec, separators=(",", ":"), sort_keys=True) + "\n")
        export_pgm(stack.grid, out / "grid.pgm")
        with open(out / "map.jsonl", "w", encoding="utf-8") as f:
            f.write(export_map_records(stack.map_objects))
        with open(out / "graph.json", "w", encoding="utf-8") as f:
            f.write(serialize_graph(stack.rebuild_graph()) + "\n")
        if recorder is not None:
            from .llm_gateway import save_transcript

            save_transcript(out / "llm_calls.jsonl", recorder.records)
    return metrics


@dataclass
class RunRow:
    scenario: str
    seed: int
    backend: str
    task_index: int
    metrics: RunMetrics


@dataclass
class Report:
    rows: list[RunRow] = field(default_factory=list)

    def aggregates(self) -> dict:
        agg: dict[str, dict] = {}
        for row in self.rows:
            a = agg.setdefault(
                row.backend,
                {"runs": 0, "successes": 0, "planner_steps": 0, "sim_ticks": 0},
            )
            a["runs"] += 1
            a["successes"] += int(row.metrics.success)
            a["planner_steps"] += row.metrics.planner_steps
            a["sim_ticks"] += row.metrics.sim_ticks
        out = {}
        for backend, a in agg.items():
            runs = a["runs"]
            out[backend] = {
                "runs": runs,
                "successes": a["successes"],
                "success_rate": a["successes"] / runs if runs else 0.0,
                "mean_planner_steps": a["planner_steps"] / runs if runs else 0.0,
                "mean_sim_ticks": a["sim_ticks"] / runs if runs else 0.0,
            }
        return out


def run_suite(
    scenarios: list[Scenario],
    seeds: list[int] | None = None,
    backends: list[str] | None = None,
    out_dir: str | Path | None = None,
) -> Report:
    """Cartesian product of (scenario, seed, backend); one row per task run."""
    report = Report()
    for scenario in scenarios:
        use_seeds = seeds if seeds is not None else scenario.seeds
        use_backends = backends if backends is not None else [scenario.planner]
        for backend in use_backends:
            for seed in use_seeds:
                per_task = run_scenario(scenario, seed, backend, out_dir=out_dir)
                for i, m in enumerate(per_task):
                    report.rows.append(RunRow(scenario.name, seed, backend, i, m))
    return report


def write_report(report: Report, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.jsonl", "w", encoding="utf-8") as f:
        for row in report.rows:
            rec = {
                "scenario": row.scenario,
                "seed": row.seed,
                "backend": row.backend,
                "task_index": row.task_index,
                **asdict(row.metrics),
            }
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["backend", "runs", "successes", "success_rate", "mean_planner_steps", "mean_sim_ticks"])
        for backend, a in sorted(report.aggregates().items()):
            writer.writerow([
                backend, a["runs"], a["successes"],
                f"{a['success_rate']:.4f}", f"{a['mean_planner_steps']:.3f}", f"{a['mean_sim_ticks']:.1f}",
            ])
