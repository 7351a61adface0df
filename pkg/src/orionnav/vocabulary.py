"""Shared class vocabulary: size tiers, room-affinity votes, and synonyms.

The vote table is the deterministic room labeler's knowledge base and also
powers the rule-based planner's object->room reasoning (inverted lookup).
"""

from __future__ import annotations

LARGE_CLASSES = frozenset({"table", "door", "noticeboard", "sofa", "refrigerator"})
SMALL_CLASSES = frozenset({"book", "bottle", "cup", "mouse"})

# Labels segmented but never mapped as objects.
EXCLUDED_LABELS = frozenset({"wall", "floor", "ceiling"})

CANDIDATE_ROOMS = ("office", "break room", "conference room", "corridor", "storage room")

# object label -> {room label -> vote weight}
ROOM_VOTES: dict[str, dict[str, float]] = {
    "computer": {"office": 3.0},
    "monitor": {"office": 3.0},
    "printer": {"office": 3.0},
    "keyboard": {"office": 2.0},
    "mouse": {"office": 2.0},
    "desk": {"office": 2.0},
    "book": {"office": 1.0},
    "noticeboard": {"office": 1.0, "conference room": 1.0},
    "cabinet": {"office": 1.0, "storage room": 1.5},
    "coffee maker": {"break room": 3.0},
    "microwave": {"break room": 3.0},
    "refrigerator": {"break room": 3.0},
    "sink": {"break room": 2.0},
    "cup": {"break room": 1.0},
    "bottle": {"break room": 1.0},
    "whiteboard": {"conference room": 3.0},
    "projector": {"conference room": 3.0},
    "tv": {"conference room": 2.0},
    "sofa": {"break room": 1.0, "conference room": 1.0},
    "table": {"office": 0.5, "break room": 0.5, "conference room": 1.0},
    "chair": {"office": 0.5, "break room": 0.5, "conference room": 0.5},
    "box": {"storage room": 3.0},
    "shelf": {"storage room": 2.0},
    "door": {"corridor": 1.0},
    "bin": {"corridor": 1.0},
    "potted plant": {"corridor": 1.0, "office": 0.5},
    "bag": {},
    "person": {},
}

KNOWN_LABELS = frozenset(ROOM_VOTES) | LARGE_CLASSES | SMALL_CLASSES | EXCLUDED_LABELS

# Command-language aliases resolved before vocabulary lookup.
SYNONYMS: dict[str, str] = {
    "screen": "monitor",
    "display": "monitor",
    "pc": "computer",
    "fridge": "refrigerator",
    "couch": "sofa",
    "plant": "potted plant",
    "trash can": "bin",
    "kitchen": "break room",
    "breakroom": "break room",
    "meeting room": "conference room",
    "hallway": "corridor",
    "storage": "storage room",
}


def size_tier(label: str) -> str:
    if label in LARGE_CLASSES:
        return "large"
    if label in SMALL_CLASSES:
        return "small"
    return "default"


def room_affinity(label: str) -> dict[str, float]:
    """Vote weights a single object label contributes to each room."""
    return dict(ROOM_VOTES.get(label, {}))
