"""Live-run gateway: stream snapshots and accept operator commands over a
newline-delimited JSON socket, with a one-shot HTTP GET for polling clients.

All stack mutation funnels through a single command queue drained at tick
boundaries, preserving the single-writer model. Snapshots are assembled from
one consistent tick and fanned out to every connected client.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .harness import Scenario, _mutation_from_dict, make_backend, prepare_stack
from .planner import run_task
from .scene_graph import serialize_graph
from .world import MutationError, apply_mutation

DEFAULT_PORT = 8700
SNAPSHOT_EVERY = 5


def rle_encode(cells: np.ndarray) -> list[list[int]]:
    """Row-major run-length encoding: [[value, count], ...]."""
    flat = cells.reshape(-1)
    if len(flat) == 0:
        return []
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(flat)]))
    return [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]


def rle_decode(runs: list[list[int]], shape: tuple[int, int]) -> np.ndarray:
    parts = [np.full(count, value, dtype=np.uint8) for value, count in runs]
    flat = np.concatenate(parts) if parts else np.empty(0, dtype=np.uint8)
    if flat.size != shape[0] * shape[1]:
        raise ValueError("run-length data does not match the grid shape")
    return flat.reshape(shape)


def snapshot_state(stack, plan_log: list[dict], task_state: dict) -> dict:
    """Consistent snapshot of the whole pipeline at the current tick."""
    grid = stack.grid
    pose_t = stack.world.robot.pose_true
    pose_e = stack.est.pose_est
    from .explore import detect_frontiers

    frontiers = detect_frontiers(grid, (pose_e.x, pose_e.y))
    return {
        "type": "snapshot",
        "tick": stack.tick,
        "robot": {
            "true": [pose_t.x, pose_t.y, pose_t.theta],
            "est": [pose_e.x, pose_e.y, pose_e.theta],
        },
        "grid_rle": rle_encode(grid.cells),
        "grid_meta": {
            "resolution": grid.resolution,
            "origin": [grid.origin[0], grid.origin[1]],
            "width": grid.width,
            "height": grid.height,
        },
        "objects": [
            {
                "label": m.label,
                "instance_id": m.instance_id,
                "x": m.position_world[0],
                "y": m.position_world[1],
                "anchor": m.anchor_keyframe,
                "observation_count": m.observation_count,
            }
            for m in stack.map_objects
        ],
        "scene_graph": json.loads(serialize_graph(stack.scene_graph)),
        "frontiers": [
            {"x": f.centroid[0], "y": f.centroid[1], "size": f.size, "distance": f.distance, "score": f.score}
            for f in frontiers
        ],
        "plan_log": plan_log[-20:],
        "task": dict(task_state),
    }


@dataclass
class _Client:
    conn: socket.socket
    lock: threading.Lock = field(default_factory=threading.Lock)

    def send_json(self, obj: dict) -> bool:
        data = (json.dumps(obj, separators=(",", ":")) + "\n").encode("utf-8")
        try:
            with self.lock:
                self.conn.sendall(data)
            return True
        except OSError:
            return False


class ServiceServer:
    """Socket front end around one scenario run.

    Deterministic mode (the default) advances only on `step` commands, so a
    scripted client drives a bit-reproducible run; `resume` switches to
    wall-clock pacing with a speed multiplier.
    """

    def __init__(self, scenario: Scenario, seed: int | None = None, port: int = DEFAULT_PORT):
        self.scenario = scenario
        self.seed = seed if seed is not None else scenario.seeds[0]
        self.port = port
        # Same pre-task protocol as CLI runs, so transcripts are comparable.
        self.stack = prepare_stack(scenario, self.seed)
        self.commands: queue.Queue = queue.Queue()
        self.clients: list[_Client] = []
        self.clients_lock = threading.Lock()
        self.plan_log: list[dict] = []
        self.task_state = {"text": None, "status": "idle", "steps": 0}
        self.paused = True
        self.speed = 1.0
        self._pending_steps = 0
        self._task_request: str | None = None
        self._stop = threading.Event()
        self._server_sock: socket.socket | None = None
        self._snapshot_cache: dict | None = None

    # -- network plumbing ---------------------------------------------------

    def start(self) -> int:
        self._server_sock = socket.create_server(("127.0.0.1", self.port))
        self.port = self._server_sock.getsockname()[1]
        threading.Thread(target=self._accept_loop, daemon=True).start()
        threading.Thread(target=self._run_loop, daemon=True).start()
        return self.port

    def stop(self) -> None:
        self._stop.set()
        if self._server_sock is not None:
            try:
                self._server_sock.close()
            except OSError:
                pass

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._server_sock.accept()
            except OSError:
                return
            threading.Thread(target=self._client_loop, args=(conn,), daemon=True).start()

    def _client_loop(self, conn: socket.socket) -> None:
        buf = b""
        # Peek briefly: an HTTP GET gets the one-shot snapshot and the socket
        # closes; anything else (including silence) is a duplex NDJSON client.
        conn.settimeout(0.25)
        try:
            first = conn.recv(4096)
            if not first:
                conn.close()
                return
        except socket.timeout:
            first = b""
        except OSError:
            conn.close()
            return
        conn.settimeout(1.0)
        if first.startswith(b"GET "):
            body = json.dumps(self._latest_snapshot()).encode("utf-8")
            head = (
                b"HTTP/1.1 200 OK\r\nContent-Type: application/json\r\n"
                + f"Content-Length: {len(body)}\r\n".encode("ascii")
                + b"Connection: close\r\n\r\n"
            )
            try:
                conn.sendall(head + body)
            finally:
                conn.close()
            return
        buf = first
        client = _Client(conn)
        with self.clients_lock:
            self.clients.append(client)
        client.send_json(self._latest_snapshot())
        while not self._stop.is_set():
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if line.strip():
                    self._handle_line(client, line)
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
        with self.clients_lock:
            if client in self.clients:
                self.clients.remove(client)
        conn.close()

    def _handle_line(self, client: _Client, line: bytes) -> None:
        try:
            cmd = json.loads(line.decode("utf-8"))
            if not isinstance(cmd, dict) or "type" not in cmd:
                raise ValueError("command must be an object with a type")
        except (ValueError, UnicodeDecodeError) as exc:
            client.send_json({"type": "rejection", "request_id": None, "code": "bad_request",
                              "message": str(exc)})
            return
        self.commands.put((client, cmd))

    # -- tick loop ----------------------------------------------------------

    def _latest_snapshot(self) -> dict:
        if self._snapshot_cache is None:
            self._snapshot_cache = snapshot_state(self.stack, self.plan_log, self.task_state)
        return self._snapshot_cache

    def _broadcast(self) -> None:
        self._snapshot_cache = snapshot_state(self.stack, self.plan_log, self.task_state)
        with self.clients_lock:
            clients = list(self.clients)
        for c in clients:
            if not c.send_json(self._snapshot_cache):
                with self.clients_lock:
                    if c in self.clients:
                        self.clients.remove(c)

    def _drain_commands(self) -> None:
        while True:
            try:
                client, cmd = self.commands.get_nowait()
            except queue.Empty:
                return
            self._apply_command(client, cmd)

    def _apply_command(self, client: _Client, cmd: dict) -> None:
        rid = cmd.get("request_id")
        kind = cmd.get("type")
        try:
            if kind == "task":
                if self.task_state["status"] == "running" or self._task_request is not None:
                    client.send_json({"type": "rejection", "request_id": rid, "code": "task_running",
                                      "message": "a task is already in progress"})
                    return
                text = cmd.get("text")
                if not text:
                    raise ValueError("task command needs text")
                self._task_request = text
            elif kind == "mutate":
                payload = {k: v for k, v in cmd.items() if k not in ("type", "request_id")}
                # Operators click positions, not world ids: resolve `near` to
                # the closest present object.
                near = payload.pop("near", None)
                if near is not None and payload.get("target_id") is None:
                    target = self._nearest_world_object(near)
                    if target is None:
                        client.send_json({"type": "rejection", "request_id": rid,
                                          "code": "invalid_mutation",
                                          "message": f"no object within 1.0 m of {near}"})
                        return
                    payload["target_id"] = target.id
                mutation = _mutation_from_dict(payload)
                try:
                    apply_mutation(self.stack.world, mutation)
                    self.stack.mutation_log.append((self.stack.tick, mutation.kind, "applied"))
                except MutationError as exc:
                    client.send_json({"type": "rejection", "request_id": rid, "code": "invalid_mutation",
                                      "message": str(exc)})
                    return
            elif kind == "pause":
                self.paused = True
            elif kind == "resume":
                self.paused = False
            elif kind == "step":
                self._pending_steps += int(cmd.get("n", 1))
            elif kind == "speed":
                self.speed = max(0.1, float(cmd.get("x", 1.0)))
            else:
                client.send_json({"type": "rejection", "request_id": rid, "code": "bad_request",
                                  "message": f"unknown command type {kind!r}"})
                return
        except (TypeError, ValueError, KeyError) as exc:
            client.send_json({"type": "rejection", "request_id": rid, "code": "bad_request",
                              "message": str(exc)})
            return
        client.send_json({"type": "ack", "request_id": rid, "applied_tick": self.stack.tick})

    def _nearest_world_object(self, near):
        import math

        best, best_d = None, 1.0
        for obj in self.stack.world.objects:
            if not obj.present:
                continue
            d = math.hypot(obj.position[0] - near[0], obj.position[1] - near[1])
            if d <= best_d:
                best, best_d = obj, d
        return best

    def _run_loop(self) -> None:
        while not self._stop.is_set():
            self._drain_commands()
            if self._task_request is not None:
                self._run_task(self._task_request)
                self._task_request = None
                continue
            if self._pending_steps > 0:
                self._pending_steps -= 1
                self.stack.step((0.0, 0.0))
                if self.stack.tick % SNAPSHOT_EVERY == 0:
                    self._broadcast()
            elif not self.paused:
                self.stack.step((0.0, 0.0))
                if self.stack.tick % SNAPSHOT_EVERY == 0:
                    self._broadcast()
                time.sleep(self.stack.dt / self.speed)
            else:
                time.sleep(0.01)

    def _run_task(self, text: str) -> None:
        from .planner import Task

        self.task_state = {"text": text, "status": "running", "steps": 0}
        self._broadcast()
        backend = make_backend(self.scenario.planner, self.scenario)
        stack = self.stack
        service = self

        # Wrap the stack's step so the run streams snapshots and drains
        # structural commands at tick boundaries mid-task.
        original_step = stack.step

        def streaming_step(cmd=(0.0, 0.0)):
            service._drain_task_safe_commands()
            out = original_step(cmd)
            if stack.tick % SNAPSHOT_EVERY == 0:
                service.task_state["steps"] = len(transcript)
                service._broadcast()
            return out

        transcript: list[dict] = []
        stack.step = streaming_step
        try:
            result = run_task(
                stack,
                Task(text),
                backend,
                max_steps=self.scenario.max_steps,
                max_ticks=self.scenario.max_ticks,
                transcript=transcript,
            )
        finally:
            stack.step = original_step
        self.plan_log.extend(transcript)
        self.task_state = {
            "text": text,
            "status": "done" if result.accomplished else "failed",
            "steps": result.planner_steps,
        }
        self._broadcast()

    def _drain_task_safe_commands(self) -> None:
        """While a task runs, apply everything except new task submissions."""
        pending = []
        while True:
            try:
                client, cmd = self.commands.get_nowait()
            except queue.Empty:
                break
            if cmd.get("type") == "task":
                client.send_json({"type": "rejection", "request_id": cmd.get("request_id"),
                                  "code": "task_running", "message": "a task is already in progress"})
            else:
                pending.append((client, cmd))
        for client, cmd in pending:
            self._apply_command(client, cmd)


def serve(scenario: Scenario, seed: int | None = None, port: int = DEFAULT_PORT) -> ServiceServer:
    server = ServiceServer(scenario, seed, port)
    server.start()
    return server
