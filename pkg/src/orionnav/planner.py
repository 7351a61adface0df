"""Task executive: fetch the latest scene graph, let a backend pick one of the
action primitives, execute it, verify goto completion, and loop with feedback
and history until the task is done or the budget runs out. Also hosts the
rule-based oracle backend and the two comparison baselines."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import vocabulary
from .explore import ExploreBehavior
from .geometry import Pose, angle_diff
from .llm_gateway import (
    FEEDBACK_NOT_ACCOMPLISHED,
    ChatMessage,
    ParseError,
    ParsedAction,
    format_action,
    parse_action,
    render_planner_prompt,
)
from .nav import GotoBehavior, RotateBehavior
from .scene_graph import RoomScoreTable, SceneGraph, serialize_graph
from .stack import NavStack, run_behavior

VERIFY_RADIUS = 2.0
EXPLORE_ACTION_TICKS = 600  # one sim minute at dt = 0.1
DEFAULT_MAX_STEPS = 10
DEFAULT_MAX_TICKS = 6000  # ten sim minutes


class CommandError(ValueError):
    """The task command could not be grounded in the known vocabulary."""


@dataclass
class Task:
    command: str
    ground_truth_target: tuple[str, str, tuple[float, float]] | None = None  # eval only


@dataclass
class TargetSpec:
    kind: str  # object | room
    label: str


@dataclass
class ActionRecord:
    action: ParsedAction | None
    outcome: str  # success | nav_failure | parse_failure | not_found
    log: str
    started_tick: int
    ended_tick: int
    verified: bool | None = None


@dataclass
class TaskResult:
    accomplished: bool
    planner_steps: int
    sim_ticks: int
    path_length: float
    history: list[ActionRecord] = field(default_factory=list)


def parse_command(command: str, candidate_rooms=vocabulary.CANDIDATE_ROOMS) -> TargetSpec:
    """Ground a natural-language command in the known vocabulary.

    Room labels win over object labels only when no object label matches
    (object-retrieval phrasing usually names the object). Longest match wins
    so "coffee maker" beats "coffee".
    """
    text = command.lower()
    for alias, canonical in sorted(vocabulary.SYNONYMS.items(), key=lambda kv: -len(kv[0])):
        if alias in text:
            text = text.replace(alias, canonical)
    object_hits = [lab for lab in vocabulary.KNOWN_LABELS if lab in text and lab not in vocabulary.EXCLUDED_LABELS]
    room_hits = [r for r in candidate_rooms if r in text]
    if object_hits:
        return TargetSpec("object", max(object_hits, key=len))
    if room_hits:
        return TargetSpec("room", max(room_hits, key=len))
    raise CommandError(f"command {command!r} names no known object or room")


@dataclass
class DecisionContext:
    command: str
    graph: SceneGraph
    graph_json: str
    map_objects: list
    robot_xy: tuple[float, float]
    feedback: str | None
    history: list[ActionRecord]


class OracleBackend:
    """Deterministic stand-in for the remote LLM planner.

    Rules, in order: goto a mapped target instance; goto a matching room;
    search the unsearched room with the highest affinity for the target
    class; otherwise explore. Candidates equal to previously failed history
    entries are skipped.
    """

    name = "oracle"
    flat_map = False

    def __init__(self, score_table: RoomScoreTable | None = None):
        self.table = score_table or RoomScoreTable()

    def reply(self, messages: list[ChatMessage], ctx: DecisionContext) -> str:
        target = parse_command(ctx.command, self.table.candidate_rooms)
        skip = _failed_signatures(ctx.history)
        searched_rooms = {
            r.action.room
            for r in ctx.history
            if r.action is not None and r.action.kind == "search_room"
        }

        if target.kind == "object":
            candidates = [
                (room, obj)
                for room in ctx.graph.rooms()
                for obj in room.children
                if obj.label == target.label
            ]
            candidates.sort(key=lambda c: _dist(c[1].location, ctx.robot_xy))
            for room, obj in candidates:
                action = ParsedAction("goto_object", room=room.key, object=obj.key)
                if action.signature() not in skip:
                    return _reply(action, f"{obj.key} is mapped inside {room.key}.")
        if target.kind == "room":
            rooms = [r for r in ctx.graph.rooms() if r.label == target.label]
            rooms.sort(key=lambda r: _dist(r.location, ctx.robot_xy))
            for room in rooms:
                action = ParsedAction("goto_room", room=room.key)
                if action.signature() not in skip:
                    return _reply(action, f"the map contains {room.key}.")
        if target.kind == "object":
            best_room_label = self.table.best_room_for_object(target.label)
            if best_room_label is not None:
                rooms = [r for r in ctx.graph.rooms() if r.label == best_room_label]
                rooms.sort(key=lambda r: _dist(r.location, ctx.robot_xy))
                for room in rooms:
                    if room.key in searched_rooms:
                        continue
                    action = ParsedAction("search_room", room=room.key)
                    if action.signature() not in skip:
                        return _reply(
                            action,
                            f"a {target.label} is most likely in a {best_room_label}; "
                            f"{room.key} has not been searched.",
                        )
        return _reply(
            ParsedAction("explore_globally"),
            "the map lacks the information needed for a targeted action.",
        )


class ObjectMapSearchBackend:
    """Baseline policy over the flat object map (no room labels).

    Goes to the target when mapped; otherwise visits the nearest unsearched
    object of a class that tends to share a room with the target; otherwise
    explores.
    """

    name = "object_map_search"
    flat_map = True

    def __init__(self, score_table: RoomScoreTable | None = None):
        self.table = score_table or RoomScoreTable()

    def _related_classes(self, label: str) -> set[str]:
        room = self.table.best_room_for_object(label)
        if room is None:
            return set()
        return {
            other
            for other, votes in self.table.votes.items()
            if other != label and votes.get(room, 0.0) > 0.0
        }

    def reply(self, messages: list[ChatMessage], ctx: DecisionContext) -> str:
        target = parse_command(ctx.command, self.table.candidate_rooms)
        if target.kind != "object":
            return _reply(ParsedAction("explore_globally"), "object-map mode handles object targets only.")
        skip = _failed_signatures(ctx.history)
        visited = {
            r.action.object
            for r in ctx.history
            if r.action is not None and r.action.kind == "search_object"
        }
        mapped = sorted(ctx.map_objects, key=lambda m: _dist(m.position_world, ctx.robot_xy))
        for m in mapped:
            if m.label != target.label:
                continue
            action = ParsedAction("search_object", object=m.key)
            if action.signature() not in skip:
                return _reply(action, f"{m.key} is in the object map.")
        related = self._related_classes(target.label)
        for m in mapped:  # nearest related instance first, whatever its class
            if m.label not in related or m.key in visited:
                continue
            action = ParsedAction("search_object", object=m.key)
            if action.signature() not in skip:
                return _reply(
                    action,
                    f"a {target.label} is often found near a {m.label}; checking {m.key}.",
                )
        return _reply(ParsedAction("explore_globally"), "no mapped object is related to the target.")


class LlmBackend:
    """Remote (or replayed/recorded) chat-completion backend."""

    name = "llm"
    flat_map = False

    def __init__(self, completer):
        self.completer = completer

    def reply(self, messages: list[ChatMessage], ctx: DecisionContext) -> str:
        return self.completer(messages)


class ScriptedBackend:
    """Canned replies, for conformance tests."""

    name = "scripted"
    flat_map = False

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.cursor = 0

    def reply(self, messages: list[ChatMessage], ctx: DecisionContext) -> str:
        if self.cursor >= len(self.replies):
            raise RuntimeError("scripted backend ran out of replies")
        reply = self.replies[self.cursor]
        self.cursor += 1
        return reply


def _reply(action: ParsedAction, reason: str) -> str:
    return f"{format_action(action)}\nReasoning: {reason}"


def _dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _failed_signatures(history: list[ActionRecord]) -> set:
    """Signatures the planner must not repeat: hard failures plus goto /
    search_object successes whose verification came back false."""
    out = set()
    for rec in history:
        if rec.action is None:
            continue
        if rec.outcome != "success" or rec.verified is False:
            out.add(rec.action.signature())
    return out


def flat_map_json(map_objects) -> str:
    objs = {
        m.key: {"location": [m.position_world[0], m.position_world[1]]}
        for m in sorted(map_objects, key=lambda m: (m.label, m.instance_id))
    }
    return json.dumps({"objects": objs}, separators=(", ", ": "))


def make_stop_predicate(target: TargetSpec):
    if target.kind == "object":
        return lambda stack: any(m.label == target.label for m in stack.map_objects)
    return lambda stack: any(r.label == target.label for r in stack.scene_graph.rooms())


def execute_action(
    stack: NavStack, action: ParsedAction, task: Task, tick_budget: int, explore_seed: int = 0
) -> tuple[str, str]:
    """Run one primitive to completion; returns (outcome, log)."""
    cfg = stack.cfg.nav
    try:
        target_spec = parse_command(task.command)
    except CommandError:
        target_spec = None

    if action.kind in ("goto_room", "goto_object"):
        if action.kind == "goto_object":
            node = stack.scene_graph.find_object(action.room, action.object)
            if node is None:
                return "not_found", (
                    f"object {action.object} in room {action.room} is not in the current map"
                )
            target, standoff = node.location, cfg.object_standoff
        else:
            room = stack.scene_graph.room(action.room)
            if room is None:
                return "not_found", f"room {action.room} is not in the current map"
            target, standoff = room.location, cfg.room_standoff
        goto = GotoBehavior(target, standoff, cfg, unknown_traversable=False)
        run_behavior(stack, goto, tick_budget)
        if goto.outcome == "arrived":
            return "success", f"arrived at {action.room if action.kind == 'goto_room' else action.object}"
        return "nav_failure", goto.log or "no path"

    if action.kind == "search_room":
        room = stack.scene_graph.room(action.room)
        if room is None:
            return "not_found", f"room {action.room} is not in the current map"
        goto = GotoBehavior(room.location, cfg.room_standoff, cfg, unknown_traversable=False)
        used = run_behavior(stack, goto, tick_budget)
        if goto.outcome != "arrived":
            return "nav_failure", goto.log or "no path"
        rotate = RotateBehavior(cfg.omega_max, stack.dt)
        run_behavior(stack, rotate, max(0, tick_budget - used))
        if not rotate.done:
            return "nav_failure", "tick budget exhausted during room scan"
        return "success", f"searched {action.room}"

    if action.kind == "explore_globally":
        stop = make_stop_predicate(target_spec) if target_spec else None
        explore = ExploreBehavior(
            budget_ticks=min(EXPLORE_ACTION_TICKS, tick_budget),
            nav_cfg=cfg,
            rng_seed=explore_seed,
            stop_predicate=stop,
        )
        run_behavior(stack, explore, tick_budget)
        if explore.done:
            return "success", f"exploration {explore.outcome}"
        return "nav_failure", "tick budget exhausted during exploration"

    if action.kind == "search_object":
        obj = stack.map_object_by_key(action.object)
        if obj is None:
            return "not_found", f"object {action.object} is not in the object map"
        goto = GotoBehavior(obj.position_world, cfg.object_standoff, cfg, unknown_traversable=False)
        used = run_behavior(stack, goto, tick_budget)
        if goto.outcome != "arrived":
            return "nav_failure", goto.log or "no path"
        rotate = RotateBehavior(cfg.omega_max, stack.dt)
        run_behavior(stack, rotate, max(0, tick_budget - used))
        if not rotate.done:
            return "nav_failure", "tick budget exhausted during object scan"
        return "success", f"searched around {action.object}"

    return "not_found", f"unsupported action kind {action.kind}"


def verify_completion(stack: NavStack, task: Task) -> bool:
    """Completion check after a successful navigation action.

    Object tasks: the robot looks around (up to one full turn, checking the
    detector every tick) for a matching detection within the verification
    radius. The turn makes the check robust to both the detector's limited
    field of view and dropped frames; a consistently negative full turn means
    the object really is not there.
    """
    target = parse_command(task.command)
    if target.kind == "object":
        turned = 0.0
        prev_theta = stack.est.pose_est.theta
        while True:
            for det in stack.fresh_detections():
                if det.label == target.label and det.range <= VERIFY_RADIUS:
                    return True
            if turned >= 2.0 * math.pi:
                return False
            stack.step((0.0, stack.cfg.nav.omega_max))
            theta = stack.est.pose_est.theta
            turned += abs(angle_diff(theta, prev_theta))
            prev_theta = theta
    graph = stack.rebuild_graph()
    rooms = graph.rooms()
    if not rooms:
        return False
    pose = stack.est.pose_est
    nearest = min(rooms, key=lambda r: _dist(r.location, (pose.x, pose.y)))
    return nearest.label == target.label


def run_task(
    stack: NavStack,
    task: Task,
    backend,
    max_steps: int = DEFAULT_MAX_STEPS,
    max_ticks: int = DEFAULT_MAX_TICKS,
    transcript: list[dict] | None = None,
) -> TaskResult:
    """The task-execution loop (decide -> record -> execute -> verify)."""
    history: list[ActionRecord] = []
    feedback: str | None = None
    accomplished = False
    t0 = stack.tick
    path0 = stack.path_length

    stack.rebuild_graph()
    if stack.scene_graph.is_empty():
        rotate = RotateBehavior(stack.cfg.nav.omega_max, stack.dt)
        run_behavior(stack, rotate, max_ticks)
        stack.rebuild_graph()

    while not accomplished and len(history) < max_steps and stack.tick - t0 < max_ticks:
        graph = stack.rebuild_graph()
        graph_json = (
            flat_map_json(stack.map_objects) if backend.flat_map else serialize_graph(graph)
        )
        messages = render_planner_prompt(
            task.command, graph_json, history, feedback, include_search_object=backend.flat_map
        )
        ctx = DecisionContext(
            command=task.command,
            graph=graph,
            graph_json=graph_json,
            map_objects=list(stack.map_objects),
            robot_xy=(stack.est.pose_est.x, stack.est.pose_est.y),
            feedback=feedback,
            history=history,
        )
        reply = backend.reply(messages, ctx)
        started = stack.tick
        known_rooms = {r.key for r in graph.rooms()}
        known_objects = {o.key for o in graph.objects()}
        try:
            action = parse_action(reply, known_rooms=known_rooms, known_objects=known_objects)
        except ParseError as exc:
            feedback = str(exc)
            rec = ActionRecord(None, "parse_failure", str(exc), started, stack.tick)
            history.append(rec)
            _record(transcript, len(history), messages, reply, None, rec, feedback)
            continue

        budget_left = max(0, max_ticks - (stack.tick - t0))
        outcome, log = execute_action(
            stack, action, task, budget_left, explore_seed=stack.seed + len(history)
        )
        rec = ActionRecord(action, outcome, log, started, stack.tick)
        if outcome == "success":
            verifying = action.kind in ("goto_room", "goto_object") or (
                backend.flat_map and action.kind == "search_object"
            )
            if verifying:
                rec.verified = verify_completion(stack, task)
                if rec.verified:
                    accomplished = True
                    feedback = None
                else:
                    feedback = FEEDBACK_NOT_ACCOMPLISHED
            else:
                feedback = FEEDBACK_NOT_ACCOMPLISHED
        else:
            feedback = log
        history.append(rec)
        _record(transcript, len(history), messages, reply, action, rec, feedback)

    return TaskResult(
        accomplished=accomplished,
        planner_steps=len(history),
        sim_ticks=stack.tick - t0,
        path_length=stack.path_length - path0,
        history=history,
    )


def _record(transcript, step, messages, reply, action, rec: ActionRecord, feedback) -> None:
    if transcript is None:
        return
    transcript.append(
        {
            "step": step,
            "messages": [m.as_dict() for m in messages],
            "reply": reply,
            "action": format_action(action) if action is not None else None,
            "outcome": rec.outcome,
            "verified": rec.verified,
            "feedback": feedback,
            "started_tick": rec.started_tick,
            "ended_tick": rec.ended_tick,
        }
    )


def frontier_search_baseline(
    stack: NavStack, task: Task, max_ticks: int = DEFAULT_MAX_TICKS
) -> TaskResult:
    """Planner-free exploration baseline.

    Explores continuously; succeeds iff the target object enters the semantic
    map and the robot then reaches it within the budget (the operator's manual
    map inspection, automated).
    """
    target = parse_command(task.command)
    t0 = stack.tick
    path0 = stack.path_length
    accomplished = False
    if max_ticks > 0:
        explore = ExploreBehavior(
            budget_ticks=max_ticks,
            nav_cfg=stack.cfg.nav,
            rng_seed=stack.seed,
            stop_predicate=make_stop_predicate(target),
        )
        run_behavior(stack, explore, max_ticks)
        if explore.outcome == "stopped_early":
            mapped = [m for m in stack.map_objects if m.label == target.label]
            if mapped:
                goto = GotoBehavior(
                    mapped[0].position_world,
                    stack.cfg.nav.object_standoff,
                    stack.cfg.nav,
                    unknown_traversable=False,
                )
                run_behavior(stack, goto, max(0, max_ticks - (stack.tick - t0)))
                if goto.outcome == "arrived":
                    accomplished = verify_completion(stack, task)
    return TaskResult(
        accomplished=accomplished,
        planner_steps=0,
        sim_ticks=stack.tick - t0,
        path_length=stack.path_length - path0,
        history=[],
    )
