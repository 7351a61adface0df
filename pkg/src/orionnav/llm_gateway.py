"""Prompt rendering, the chat-completion wire client, and strict reply parsing.

Prompt templates are versioned constants pinned by golden-file tests: any
wording change must update the goldens deliberately. All traffic can be
recorded to, and replayed from, JSONL transcripts so end-to-end runs work
offline.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

import requests

TEMPLATE_VERSION = "1"

PRIMITIVE_NAMES = ("goto", "search_room", "explore_globally", "search_object")

FEEDBACK_NOT_ACCOMPLISHED = "Task has not been accomplished."


class TransportError(Exception):
    """Network failure, timeout, or non-2xx reply."""


class DecodeError(Exception):
    """The endpoint replied but the body did not match the wire schema."""


class ParseError(Exception):
    """The reply text did not contain exactly one well-formed action call."""


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def as_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ParsedAction:
    kind: str  # goto_room | goto_object | search_room | explore_globally | search_object
    room: str | None = None
    object: str | None = None
    reasoning: str = field(default="", compare=False)

    def signature(self) -> tuple[str, str | None, str | None]:
        return (self.kind, self.room, self.object)


def format_action(a: ParsedAction) -> str:
    if a.kind == "goto_room":
        return f"goto({a.room})"
    if a.kind == "goto_object":
        return f"goto({a.room}, {a.object})"
    if a.kind == "search_room":
        return f"search_room({a.room})"
    if a.kind == "explore_globally":
        return "explore_globally()"
    if a.kind == "search_object":
        return f"search_object({a.object})"
    raise ValueError(f"unknown action kind {a.kind!r}")


ROOM_SYSTEM_PROMPT = (
    "You label rooms of an indoor environment. Given the objects observed in "
    "one area, answer with exactly one room label taken verbatim from the "
    "candidate list. Answer with the label only: no punctuation, no "
    "explanation. Prefer the label whose typical contents best match the "
    "objects; when uncertain, pick the most generic candidate."
)

PLANNER_SYSTEM_PROMPT = """You are the high-level task planner of an indoor mobile robot. Each turn you \
receive the current map and a task; you answer with exactly one action.

Actions:
- goto(<room>): navigate to a room already present in the map. Use it when the task \
asks for a room and a matching room exists.
- goto(<room>, <object>): navigate to an object in the map. Always pass the room the \
object belongs to as the first argument and the object as the second. On arrival the \
robot checks whether the task is accomplished.
- search_room(<room>): navigate to a room and perform a 360 degree rotation inside it \
to observe objects the map may be missing. Use it when a room likely contains the \
target but the target is not in the map yet.
- explore_globally(): frontier-based exploration of unknown space for about one \
minute. Use it when the map is empty or none of the mapped rooms is likely to \
contain the target.

Arguments are map keys of the form <label>-<id>, for example office-2 or printer-1.

The map is JSON: {"rooms": {"<room label>-<id>": {"location": [x, y], "objects": \
{"<object label>-<id>": {"location": [x, y]}}}}}. Locations are meters in the map frame.

Do not repeat an action that already failed. Reply with the action call on the first \
line, then a single line starting with "Reasoning:" that justifies the choice."""

SEARCH_OBJECT_PROMPT_ADDENDUM = """
- search_object(<object>): navigate to an object in the map and perform a 360 degree \
scan to search for other nearby objects (object-map mode without rooms)."""


def render_room_prompt(object_labels, candidate_rooms) -> list[ChatMessage]:
    """Room-labeling prompt; byte-stable for fixed inputs (labels sorted)."""
    labels = ", ".join(sorted(object_labels))
    candidates = ", ".join(candidate_rooms)
    user = (
        f"Objects observed in this area: {labels}\n"
        f"Candidate room labels: {candidates}\n"
        "Which candidate label fits this area best?"
    )
    return [ChatMessage("system", ROOM_SYSTEM_PROMPT), ChatMessage("user", user)]


def render_planner_prompt(
    task: str,
    graph_json: str,
    history=None,
    feedback: str | None = None,
    include_search_object: bool = False,
) -> list[ChatMessage]:
    """Planner prompt per the documented section layout.

    The user message embeds the map, then the command history (omitted when
    empty), then feedback (omitted when absent), then the task.
    """
    system = PLANNER_SYSTEM_PROMPT
    if include_search_object:
        system += SEARCH_OBJECT_PROMPT_ADDENDUM
    parts = [f"Map:\n{graph_json}"]
    if history:
        lines = []
        for i, rec in enumerate(history, start=1):
            action = rec.action
            call = format_action(action) if action is not None else "<unparseable>"
            lines.append(f"{i}. {call} -> {rec.outcome}")
        parts.append("Command history:\n" + "\n".join(lines))
    if feedback is not None:
        parts.append(f"Feedback: {feedback}")
    parts.append(f"Task: {task}")
    return [ChatMessage("system", system), ChatMessage("user", "\n\n".join(parts))]


@dataclass
class EndpointConfig:
    url: str
    model: str = "gpt-4-turbo"
    api_key: str | None = None
    temperature: float = 0.0
    timeout: float = 30.0

    @classmethod
    def from_env(cls, model: str | None = None) -> "EndpointConfig | None":
        url = os.environ.get("ORION_LLM_URL")
        if not url:
            return None
        return cls(
            url=url,
            model=model or os.environ.get("ORION_LLM_MODEL", "gpt-4-turbo"),
            api_key=os.environ.get("ORION_LLM_KEY"),
        )


def complete(messages: list[ChatMessage], endpoint: EndpointConfig) -> str:
    """One blocking chat completion; returns the first choice's content."""
    body = {
        "model": endpoint.model,
        "messages": [m.as_dict() for m in messages],
        "temperature": endpoint.temperature,
    }
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    try:
        resp = requests.post(endpoint.url, json=body, headers=headers, timeout=endpoint.timeout)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    if not (200 <= resp.status_code < 300):
        raise TransportError(f"endpoint returned HTTP {resp.status_code}")
    try:
        payload = resp.json()
        content = payload["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise DecodeError(f"malformed completion body: {exc}") from exc
    if not isinstance(content, str):
        raise DecodeError("completion content is not text")
    return content


_CALL_RE = re.compile(r"\b([a-zA-Z_]+)\s*\(([^()]*)\)")
_KEY_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_ ]*?)-(\d+)$")


def _parse_key(arg: str, role: str) -> str:
    arg = arg.strip()
    if not _KEY_RE.match(arg):
        raise ParseError(
            f"argument {arg!r} is not a valid {role} key; expected the form label-id"
        )
    return arg


def parse_action(
    text: str,
    known_rooms: set[str] | None = None,
    known_objects: set[str] | None = None,
) -> ParsedAction:
    """Extract the single action call from a planner reply.

    The remaining text becomes the reasoning. When node-key context is given,
    goto with a single argument that names an object (and not a room) is
    rejected: object goto requires both the room and the object.
    """
    matches = list(_CALL_RE.finditer(text))
    call = None
    for m in matches:
        if m.group(1) in PRIMITIVE_NAMES:
            call = m
            break
    if call is None:
        if matches:
            raise ParseError(
                f"unknown action name {matches[0].group(1)!r}; expected one of "
                + ", ".join(PRIMITIVE_NAMES)
            )
        raise ParseError("no action call found in reply")

    name = call.group(1)
    raw_args = [a for a in (s.strip() for s in call.group(2).split(",")) if a]
    reasoning = (text[: call.start()] + text[call.end():]).strip()
    if reasoning.lower().startswith("reasoning:"):
        reasoning = reasoning[len("reasoning:"):].strip()

    if name == "explore_globally":
        if raw_args:
            raise ParseError("explore_globally takes no arguments")
        return ParsedAction("explore_globally", reasoning=reasoning)
    if name == "search_room":
        if len(raw_args) != 1:
            raise ParseError("search_room takes exactly one room argument")
        return ParsedAction("search_room", room=_parse_key(raw_args[0], "room"), reasoning=reasoning)
    if name == "search_object":
        if len(raw_args) != 1:
            raise ParseError("search_object takes exactly one object argument")
        return ParsedAction(
            "search_object", object=_parse_key(raw_args[0], "object"), reasoning=reasoning
        )
    # goto
    if len(raw_args) == 1:
        key = _parse_key(raw_args[0], "room")
        if known_objects is not None and key in known_objects and not (
            known_rooms is not None and key in known_rooms
        ):
            raise ParseError(
                f"goto to an object requires two arguments: goto(<room>, {key}); "
                "single-argument goto is for rooms only"
            )
        return ParsedAction("goto_room", room=key, reasoning=reasoning)
    if len(raw_args) == 2:
        return ParsedAction(
            "goto_object",
            room=_parse_key(raw_args[0], "room"),
            object=_parse_key(raw_args[1], "object"),
            reasoning=reasoning,
        )
    raise ParseError("goto takes one room argument or a room and an object")


# ---------------------------------------------------------------------------
# Transcript record / replay


class ReplayExhausted(TransportError):
    pass


class ReplayMismatch(TransportError):
    pass


class ReplayCompleter:
    """Serves recorded replies in order, verifying prompts match the recording."""

    def __init__(self, records: list[dict], strict: bool = True):
        self.records = records
        self.strict = strict
        self.cursor = 0

    def __call__(self, messages: list[ChatMessage]) -> str:
        if self.cursor >= len(self.records):
            raise ReplayExhausted(f"transcript exhausted after {self.cursor} calls")
        rec = self.records[self.cursor]
        self.cursor += 1
        if self.strict:
            sent = [m.as_dict() for m in messages]
            if sent != rec["messages"]:
                raise ReplayMismatch(f"prompt #{self.cursor} diverged from the recording")
        return rec["reply"]


class RecordingCompleter:
    """Wraps any completer and appends (messages, reply) records."""

    def __init__(self, inner):
        self.inner = inner
        self.records: list[dict] = []

    def __call__(self, messages: list[ChatMessage]) -> str:
        reply = self.inner(messages)
        self.records.append({"messages": [m.as_dict() for m in messages], "reply": reply})
        return reply


def save_transcript(path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")


def load_transcript(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
