"""Canned runs shared by the conformance tests and golden regeneration.

Regenerate after a deliberate behavior change with:
    python tests/golden_runs.py regen
"""

import json
import sys
from pathlib import Path

from orionnav.harness import Scenario, build_stack
from orionnav.nav import RotateBehavior
from orionnav.planner import ScriptedBackend, Task, run_task
from orionnav.stack import run_behavior
from orionnav.world import Mutation, apply_mutation

DATA_DIR = Path(__file__).parent / "data"


def golden_scenario() -> Scenario:
    w, h = 10.0, 8.0
    walls = [(0, 0, w, 0), (0, h, w, h), (0, 0, 0, h), (w, 0, w, h)]
    return Scenario(
        name="golden",
        bounds=(w, h),
        walls=walls,
        objects=[
            {"id": 1, "label": "monitor", "position": [4.5, 3.0]},
            {"id": 2, "label": "desk", "position": [4.0, 2.6]},
            {"id": 3, "label": "computer", "position": [4.9, 2.7]},
        ],
        robot_start=(2.0, 3.0, 0.0),
        tasks=[Task("find a monitor")],
        seeds=[1],
    )


def run_golden(name: str) -> tuple[bool, list[dict]]:
    transcript: list[dict] = []
    if name == "direct":
        stack = build_stack(golden_scenario(), 1)
        replies = ["goto(office-1, monitor-1)\nReasoning: mapped."]
        result = run_task(stack, Task("find a monitor"), ScriptedBackend(replies), transcript=transcript)
    elif name == "recover":
        stack = build_stack(golden_scenario(), 1)
        replies = [
            "search_room(office-1)\nReasoning: look around the office.",
            "I would suggest checking the office first.",
            "goto(office-1, monitor-1)\nReasoning: mapped now.",
        ]
        result = run_task(stack, Task("find a monitor"), ScriptedBackend(replies), transcript=transcript)
    elif name == "unverified":
        stack = build_stack(golden_scenario(), 1)
        run_behavior(stack, RotateBehavior(stack.cfg.nav.omega_max, stack.dt), 100)
        apply_mutation(stack.world, Mutation("remove_object", target_id=1))
        replies = [
            "goto(office-1, monitor-1)\nReasoning: mapped.",
            "explore_globally()\nReasoning: target gone.",
        ]
        result = run_task(
            stack, Task("find a monitor"), ScriptedBackend(replies), max_steps=2, transcript=transcript
        )
    else:
        raise KeyError(name)
    return result.accomplished, transcript


GOLDEN_NAMES = ("direct", "recover", "unverified")


def transcript_bytes(transcript: list[dict]) -> str:
    return "".join(json.dumps(rec, separators=(",", ":"), sort_keys=True) + "\n" for rec in transcript)


def golden_path(name: str) -> Path:
    return DATA_DIR / f"golden_run_{name}.jsonl"


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "regen":
        DATA_DIR.mkdir(exist_ok=True)
        for name in GOLDEN_NAMES:
            _, transcript = run_golden(name)
            golden_path(name).write_text(transcript_bytes(transcript))
            print(f"wrote {golden_path(name)}")
