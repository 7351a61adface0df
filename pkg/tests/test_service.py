import json
import socket
import time

import numpy as np
import pytest

from orionnav.harness import Scenario
from orionnav.planner import Task
from orionnav.service import ServiceServer, rle_decode, rle_encode


def tiny_scenario():
    w, h = 8.0, 6.0
    walls = [(0, 0, w, 0), (0, h, w, h), (0, 0, 0, h), (w, 0, w, h)]
    return Scenario(
        name="svc",
        bounds=(w, h),
        walls=walls,
        objects=[{"id": 1, "label": "monitor", "position": [4.5, 3.0]},
                 {"id": 2, "label": "desk", "position": [4.0, 2.4]}],
        robot_start=(2.0, 3.0, 0.0),
        tasks=[Task("find a monitor")],
        seeds=[1],
    )


# --- RLE -------------------------------------------------------------------

def test_rle_round_trip_random_grids():
    rng = np.random.default_rng(6)
    for _ in range(50):
        shape = (int(rng.integers(1, 40)), int(rng.integers(1, 40)))
        cells = rng.integers(0, 3, size=shape).astype(np.uint8)
        assert np.array_equal(rle_decode(rle_encode(cells), shape), cells)


def test_rle_known_pattern():
    cells = np.array([[0, 0, 1], [1, 2, 2]], dtype=np.uint8)
    assert rle_encode(cells) == [[0, 2], [1, 2], [2, 2]]


def test_rle_shape_mismatch_raises():
    with pytest.raises(ValueError):
        rle_decode([[1, 3]], (2, 2))


# --- socket protocol ----------------------------------------------------------


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.buf = b""
        self.rid = 0

    def send(self, obj):
        self.rid += 1
        obj = dict(obj)
        obj["request_id"] = self.rid
        self.sock.sendall((json.dumps(obj) + "\n").encode())
        return self.rid

    def recv(self, timeout=5.0):
        deadline = time.time() + timeout
        while b"\n" not in self.buf:
            self.sock.settimeout(max(0.05, deadline - time.time()))
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("closed")
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        return json.loads(line)

    def recv_until(self, predicate, timeout=10.0):
        deadline = time.time() + timeout
        while time.time() < deadline:
            msg = self.recv(timeout=deadline - time.time())
            if predicate(msg):
                return msg
        raise TimeoutError


@pytest.fixture
def server():
    srv = ServiceServer(tiny_scenario(), seed=1, port=0)
    srv.start()
    yield srv
    srv.stop()


def test_initial_snapshot_fresh_run(server):
    c = Client(server.port)
    snap = c.recv()
    assert snap["type"] == "snapshot"
    assert snap["tick"] == 0
    assert snap["objects"] == []
    assert snap["scene_graph"] == {"rooms": {}}
    assert snap["task"]["status"] == "idle"


def test_step_advances_and_snapshots_monotone(server):
    c = Client(server.port)
    first = c.recv()
    rid = c.send({"type": "step", "n": 12})
    ticks = [first["tick"]]
    acked = False
    for _ in range(10):
        msg = c.recv()
        if msg.get("type") == "ack" and msg.get("request_id") == rid:
            acked = True
        if msg.get("type") == "snapshot":
            ticks.append(msg["tick"])
            if msg["tick"] >= 10:
                break
    assert acked
    assert all(b > a for a, b in zip(ticks, ticks[1:]))


def test_mutation_ack_and_rejection(server):
    c = Client(server.port)
    c.recv()
    rid = c.send({"type": "mutate", "kind": "add_object",
                  "object": {"id": 9, "label": "bag", "position": [6.0, 4.0]}})
    msg = c.recv_until(lambda m: m.get("type") in ("ack", "rejection"))
    assert msg["type"] == "ack" and msg["request_id"] == rid

    rid = c.send({"type": "mutate", "kind": "remove_object", "target_id": 404})
    msg = c.recv_until(lambda m: m.get("type") in ("ack", "rejection"))
    assert msg["type"] == "rejection" and msg["code"] == "invalid_mutation"


def test_mutation_near_resolves_world_object(server):
    c = Client(server.port)
    c.recv()
    # desk sits at (4.0, 2.4); a click nearby removes it
    rid = c.send({"type": "mutate", "kind": "remove_object", "near": [4.2, 2.5]})
    msg = c.recv_until(lambda m: m.get("type") in ("ack", "rejection"))
    assert msg["type"] == "ack" and msg["request_id"] == rid
    assert not server.stack.world.object_by_id(2).present

    rid = c.send({"type": "mutate", "kind": "remove_object", "near": [7.5, 5.5]})
    msg = c.recv_until(lambda m: m.get("type") in ("ack", "rejection"))
    assert msg["type"] == "rejection" and msg["code"] == "invalid_mutation"


def test_malformed_command_rejected(server):
    c = Client(server.port)
    c.recv()
    c.sock.sendall(b"this is not json\n")
    msg = c.recv_until(lambda m: m.get("type") == "rejection")
    assert msg["code"] == "bad_request"


def test_task_runs_and_second_task_conflicts(server):
    c = Client(server.port)
    c.recv()
    rid1 = c.send({"type": "task", "text": "find a monitor"})
    c.recv_until(lambda m: m.get("type") == "ack" and m.get("request_id") == rid1)
    rid2 = c.send({"type": "task", "text": "find a desk"})
    rej = c.recv_until(lambda m: m.get("type") == "rejection")
    assert rej["request_id"] == rid2
    assert rej["code"] == "task_running"
    done = c.recv_until(
        lambda m: m.get("type") == "snapshot" and m["task"]["status"] in ("done", "failed"),
        timeout=60.0,
    )
    assert done["task"]["status"] == "done"
    assert any(o["label"] == "monitor" for o in done["objects"])


def test_http_one_shot_snapshot(server):
    import urllib.request

    with urllib.request.urlopen(f"http://127.0.0.1:{server.port}/snapshot", timeout=5) as resp:
        body = json.loads(resp.read())
    assert body["type"] == "snapshot"
    assert "grid_rle" in body


def test_service_transcript_matches_cli_run(tmp_path):
    """A task via the service must byte-match the CLI transcript (same seed)."""
    from orionnav.harness import run_scenario

    scn = tiny_scenario()
    transcript_dir = tmp_path / "cli"
    run_scenario(scn, 1, "oracle", out_dir=transcript_dir)
    cli_transcript = (
        transcript_dir / f"{scn.name}_seed1_oracle" / "transcript.jsonl"
    ).read_text()

    srv = ServiceServer(tiny_scenario(), seed=1, port=0)
    srv.start()
    try:
        c = Client(srv.port)
        c.recv()
        c.send({"type": "task", "text": "find a monitor"})
        c.recv_until(
            lambda m: m.get("type") == "snapshot" and m["task"]["status"] in ("done", "failed"),
            timeout=60.0,
        )
        service_records = srv.plan_log
    finally:
        srv.stop()
    service_transcript = "".join(
        json.dumps(rec, separators=(",", ":"), sort_keys=True) + "\n" for rec in service_records
    )
    assert service_transcript == cli_transcript
