"""Hierarchical scene graph: area clustering over map objects, room labeling,
tree assembly, and the canonical serialization consumed by the planner."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import vocabulary
from .clustering import NOISE, dbscan
from .semantic_map import MapObject

log = logging.getLogger(__name__)

UNASSIGNED = "unassigned"


@dataclass
class SceneNode:
    level: str  # root | room | object
    label: str
    instance_id: int
    location: tuple[float, float]
    parent: "SceneNode | None" = field(default=None, repr=False, compare=False)
    children: list["SceneNode"] = field(default_factory=list)
    map_ref: tuple[str, int] | None = field(default=None, compare=False)

    @property
    def key(self) -> str:
        return f"{self.label}-{self.instance_id}"


@dataclass
class SceneGraph:
    root: SceneNode
    built_at_tick: int = 0

    def rooms(self) -> list[SceneNode]:
        return list(self.root.children)

    def room(self, key: str) -> SceneNode | None:
        for r in self.root.children:
            if r.key == key:
                return r
        return None

    def find_object(self, room_key: str, object_key: str) -> SceneNode | None:
        room = self.room(room_key)
        if room is None:
            return None
        for o in room.children:
            if o.key == object_key:
                return o
        return None

    def objects(self) -> list[SceneNode]:
        return [o for r in self.root.children for o in r.children]

    def is_empty(self) -> bool:
        return not self.root.children


@dataclass
class RoomScoreTable:
    votes: dict[str, dict[str, float]] = field(
        default_factory=lambda: {k: dict(v) for k, v in vocabulary.ROOM_VOTES.items()}
    )
    candidate_rooms: tuple[str, ...] = vocabulary.CANDIDATE_ROOMS

    def affinity(self, object_label: str) -> dict[str, float]:
        return dict(self.votes.get(object_label, {}))

    def best_room_for_object(self, object_label: str) -> str | None:
        """Room with the highest vote for one object class, None when unopinionated."""
        scores = self.affinity(object_label)
        best, best_score = None, 0.0
        for room in self.candidate_rooms:
            s = scores.get(room, 0.0)
            if s > best_score:
                best, best_score = room, s
        return best


def cluster_areas(
    objects: list[MapObject], eps_area: float = 2.5, min_pts_area: int = 2
) -> tuple[list[list[int]], list[int]]:
    """DBSCAN over object world positions.

    Returns (clusters, noise): lists of positional indices into `objects`.
    Noise points belong to the reserved "unassigned" room.
    """
    if not objects:
        return [], []
    pts = np.array([o.position_world for o in objects], dtype=np.float64)
    labels = dbscan(pts, eps_area, min_pts_area)
    clusters = [
        [int(i) for i in np.flatnonzero(labels == c)] for c in sorted(set(labels)) if c != NOISE
    ]
    noise = [int(i) for i in np.flatnonzero(labels == NOISE)]
    return clusters, noise


def label_room(
    object_labels,
    backend: str = "rule_table",
    table: RoomScoreTable | None = None,
    endpoint=None,
) -> str:
    """Pick a room label for a multiset of object labels.

    rule_table sums per-object votes and takes the argmax (ties broken by
    candidate order; an empty multiset degenerates to the first candidate).
    remote_llm renders the room prompt and parses a single candidate from the
    reply, falling back to the rule table on any transport or parse failure.
    """
    table = table or RoomScoreTable()
    labels = list(object_labels)
    if backend == "remote_llm":
        reply = _remote_room_label(labels, table, endpoint)
        if reply is not None:
            return reply
        backend = "rule_table"
    if backend != "rule_table":
        raise ValueError(f"unknown room labeler backend {backend!r}")

    scores = {room: 0.0 for room in table.candidate_rooms}
    for lab in labels:
        for room, w in table.affinity(lab).items():
            if room in scores:
                scores[room] += w
    best = table.candidate_rooms[0]
    for room in table.candidate_rooms:
        if scores[room] > scores[best]:
            best = room
    return best


def _remote_room_label(labels, table: RoomScoreTable, endpoint) -> str | None:
    from .llm_gateway import TransportError, complete, render_room_prompt

    if endpoint is None:
        log.warning("remote room labeler has no endpoint; falling back to rule table")
        return None
    messages = render_room_prompt(labels, table.candidate_rooms)
    try:
        reply = complete(messages, endpoint)
    except TransportError as exc:
        log.warning("remote room labeler unreachable (%s); falling back to rule table", exc)
        return None
    text = reply.strip().lower()
    exact = [room for room in table.candidate_rooms if text == room]
    if exact:
        return exact[0]
    mentioned = [room for room in table.candidate_rooms if room in text]
    if len(mentioned) == 1:
        return mentioned[0]
    log.warning("room labeler reply %r did not parse; falling back to rule table", reply)
    return None


def build_graph(
    objects: list[MapObject],
    clusters: list[list[int]],
    room_labels: list[str],
    noise: list[int] | None = None,
    built_at_tick: int = 0,
) -> SceneGraph:
    """Assemble root -> room -> object tree with deterministic instance numbering.

    Duplicate room labels are numbered in cluster-centroid lexicographic
    order; object leaves are renumbered per room and label, ordered by
    (label, map instance id).
    """
    root = SceneNode("root", "root", 1, (0.0, 0.0))
    groups: list[tuple[str, tuple[float, float], list[int]]] = []
    for idx_list, label in zip(clusters, room_labels):
        members = [objects[i] for i in idx_list]
        cx = sum(m.position_world[0] for m in members) / len(members)
        cy = sum(m.position_world[1] for m in members) / len(members)
        groups.append((label, (cx, cy), idx_list))
    if noise:
        members = [objects[i] for i in noise]
        cx = sum(m.position_world[0] for m in members) / len(members)
        cy = sum(m.position_world[1] for m in members) / len(members)
        groups.append((UNASSIGNED, (cx, cy), list(noise)))

    groups.sort(key=lambda g: (g[0], g[1]))
    room_counter: dict[str, int] = {}
    for label, centroid, idx_list in groups:
        room_counter[label] = room_counter.get(label, 0) + 1
        room = SceneNode("room", label, room_counter[label], centroid, parent=root)
        members = sorted((objects[i] for i in idx_list), key=lambda m: (m.label, m.instance_id))
        obj_counter: dict[str, int] = {}
        for m in members:
            obj_counter[m.label] = obj_counter.get(m.label, 0) + 1
            node = SceneNode(
                "object",
                m.label,
                obj_counter[m.label],
                m.position_world,
                parent=room,
                map_ref=(m.label, m.instance_id),
            )
            room.children.append(node)
        root.children.append(room)

    if root.children:
        cx = sum(r.location[0] for r in root.children) / len(root.children)
        cy = sum(r.location[1] for r in root.children) / len(root.children)
        root.location = (cx, cy)
    return SceneGraph(root=root, built_at_tick=built_at_tick)


def serialize_graph(g: SceneGraph) -> str:
    """Canonical JSON text: rooms and objects keyed "label-id", stable ordering."""
    rooms: dict[str, dict] = {}
    for room in sorted(g.root.children, key=lambda r: (r.label, r.instance_id)):
        objs: dict[str, dict] = {}
        for o in sorted(room.children, key=lambda o: (o.label, o.instance_id)):
            objs[o.key] = {"location": [o.location[0], o.location[1]]}
        rooms[room.key] = {"location": [room.location[0], room.location[1]], "objects": objs}
    return json.dumps({"rooms": rooms}, separators=(", ", ": "))


def parse_graph(text: str, built_at_tick: int = 0) -> SceneGraph:
    """Inverse of serialize_graph (modulo built_at_tick and map references)."""
    data = json.loads(text)
    root = SceneNode("root", "root", 1, (0.0, 0.0))
    for room_key, room_data in data.get("rooms", {}).items():
        label, iid = split_key(room_key)
        room = SceneNode("room", label, iid, tuple(room_data["location"]), parent=root)
        for obj_key, obj_data in room_data.get("objects", {}).items():
            olabel, oid = split_key(obj_key)
            room.children.append(
                SceneNode("object", olabel, oid, tuple(obj_data["location"]), parent=room)
            )
        root.children.append(room)
    if root.children:
        cx = sum(r.location[0] for r in root.children) / len(root.children)
        cy = sum(r.location[1] for r in root.children) / len(root.children)
        root.location = (cx, cy)
    return SceneGraph(root=root, built_at_tick=built_at_tick)


def split_key(key: str) -> tuple[str, int]:
    label, _, iid = key.rpartition("-")
    if not label or not iid.isdigit():
        raise ValueError(f"malformed node key {key!r}")
    return label, int(iid)


@dataclass
class SceneGraphConfig:
    eps_area: float = 2.5
    min_pts_area: int = 2
    score_table: RoomScoreTable = field(default_factory=RoomScoreTable)
    labeler_backend: str = "rule_table"
    labeler_endpoint: object = None


def build_scene_graph_from_map(
    map_objects: list[MapObject], cfg: SceneGraphConfig, built_at_tick: int = 0
) -> SceneGraph:
    """Cluster, label, and assemble in one pass (the runtime's rebuild hook)."""
    clusters, noise = cluster_areas(map_objects, cfg.eps_area, cfg.min_pts_area)
    labels = [
        label_room(
            [map_objects[i].label for i in idx],
            backend=cfg.labeler_backend,
            table=cfg.score_table,
            endpoint=cfg.labeler_endpoint,
        )
        for idx in clusters
    ]
    return build_graph(map_objects, clusters, labels, noise, built_at_tick)
