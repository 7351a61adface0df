"""Bundled scenario library.

Desk-scale analogs of the experiment suites: 12 short-range retrieval
scenarios, 15 long-range ones, 5 room-navigation ones, 9 dynamic-mutation
comparison scenarios, plus the two-room coverage benchmark and the operator
demo world. All layouts are hand-placed so outcomes are deterministic.
"""

from __future__ import annotations

from .harness import Scenario
from .planner import Task

MILD_NOISE = {"sensor": {"p_dropout": 0.1}}


def _perimeter(w: float, h: float) -> list[tuple[float, float, float, float]]:
    return [(0, 0, w, 0), (0, h, w, h), (0, 0, 0, h), (w, 0, w, h)]


def _vwall(x: float, y0: float, y1: float, gaps=()) -> list[tuple[float, float, float, float]]:
    """Vertical wall from y0 to y1 with door gaps (list of (gap_lo, gap_hi))."""
    segments = []
    cur = y0
    for g0, g1 in sorted(gaps):
        if g0 > cur:
            segments.append((x, cur, x, g0))
        cur = max(cur, g1)
    if cur < y1:
        segments.append((x, cur, x, y1))
    return segments


def _hwall(y: float, x0: float, x1: float, gaps=()) -> list[tuple[float, float, float, float]]:
    segments = []
    cur = x0
    for g0, g1 in sorted(gaps):
        if g0 > cur:
            segments.append((cur, y, g0, y))
        cur = max(cur, g1)
    if cur < x1:
        segments.append((cur, y, x1, y))
    return segments


def _objects(specs) -> list[dict]:
    return [
        {"id": i + 1, "label": label, "position": [float(x), float(y)]}
        for i, (label, (x, y)) in enumerate(specs)
    ]


# ---------------------------------------------------------------------------
# Scenario A: short-range object retrieval (single room, target near start)

_A_VARIANTS = [
    # (W, H, start, target label, target pos, decoys, phrasing)
    (8, 6, (2.0, 3.0, 0.0), "monitor", (4.5, 3.0), [("table", (4.5, 2.2)), ("chair", (5.2, 3.8))], "go to a monitor"),
    (8, 6, (2.5, 2.5, 1.6), "potted plant", (3.2, 5.0), [("sofa", (6.0, 4.5)), ("table", (6.0, 1.5))], "find a potted plant"),
    (9, 6, (3.0, 3.0, 0.0), "chair", (5.5, 4.0), [("table", (6.0, 3.2)), ("bin", (7.0, 2.0))], "find a chair"),
    (8, 7, (2.5, 3.5, -1.6), "bag", (4.0, 1.8), [("chair", (5.0, 5.0)), ("table", (5.8, 5.2))], "find a bag"),
    (7, 6, (2.0, 2.0, 0.8), "bottle", (3.8, 3.9), [("refrigerator", (5.5, 4.8)), ("table", (4.5, 4.6))], "find a bottle"),
    (8, 6, (2.2, 3.0, 0.0), "book", (4.8, 3.5), [("shelf", (6.2, 4.0)), ("box", (6.5, 2.0))], "find a book"),
    (9, 7, (3.0, 3.5, 0.0), "printer", (5.8, 3.7), [("desk", (6.5, 3.0)), ("computer", (7.0, 4.0)), ("chair", (5.5, 5.0))], "go to a printer"),
    (7, 5, (2.0, 2.5, 0.0), "cup", (4.2, 2.8), [("table", (4.8, 2.2)), ("microwave", (5.5, 3.5))], "find a cup"),
    (8, 6, (2.5, 3.0, 1.0), "tv", (4.3, 5.0), [("sofa", (5.5, 4.6)), ("table", (3.0, 5.0))], "go to a tv"),
    (8, 7, (2.8, 3.5, 0.0), "box", (5.5, 4.4), [("shelf", (6.8, 4.8)), ("cabinet", (6.5, 2.0))], "find a box"),
    (9, 6, (3.0, 2.5, 0.5), "keyboard", (5.2, 4.1), [("desk", (6.0, 4.5)), ("monitor", (6.3, 3.6))], "find a keyboard"),
    (8, 6, (2.3, 2.6, 0.0), "sofa", (5.0, 4.2), [("table", (6.2, 3.0)), ("potted plant", (6.8, 4.8))], "go to a sofa"),
]


def scenario_a(i: int) -> Scenario:
    w, h, start, target, tpos, decoys, phrase = _A_VARIANTS[i]
    return Scenario(
        name=f"a{i + 1:02d}_{target.replace(' ', '_')}",
        bounds=(float(w), float(h)),
        walls=_perimeter(w, h),
        objects=_objects([(target, tpos)] + decoys),
        robot_start=start,
        tasks=[Task(phrase)],
        config=dict(MILD_NOISE),
    )


# ---------------------------------------------------------------------------
# Scenario B: long-range object retrieval (multi-room, exploration needed)

def _b_two_room(i: int, target: str, tpos, door_y: float, extra) -> Scenario:
    w, h = 12.0, 8.0
    walls = _perimeter(w, h) + _vwall(6.0, 0.0, h, gaps=[(door_y, door_y + 1.2)])
    objs = [("table", (2.0, 6.0)), ("chair", (2.6, 6.3)), (target, tpos)] + extra
    return Scenario(
        name=f"b{i:02d}_{target.replace(' ', '_')}",
        bounds=(w, h),
        walls=walls,
        objects=_objects(objs),
        robot_start=(2.0, 2.0, 0.0),
        tasks=[Task(f"find a {target}")],
        config=dict(MILD_NOISE),
    )


def _b_three_zone(i: int, target: str, tpos, extra) -> Scenario:
    w, h = 16.0, 10.0
    walls = (
        _perimeter(w, h)
        + _vwall(5.5, 0.0, h, gaps=[(4.4, 5.6)])
        + _vwall(10.5, 0.0, h, gaps=[(4.4, 5.6)])
    )
    objs = [("table", (2.0, 2.0)), ("chair", (2.7, 2.3)), ("potted plant", (2.0, 8.0)), (target, tpos)] + extra
    return Scenario(
        name=f"b{i:02d}_{target.replace(' ', '_')}",
        bounds=(w, h),
        walls=walls,
        objects=_objects(objs),
        robot_start=(2.5, 5.0, 0.0),
        tasks=[Task(f"find a {target}")],
        config=dict(MILD_NOISE),
    )


def _b_corridor(i: int, target: str, tpos, room_extra) -> Scenario:
    w, h = 16.0, 11.0
    walls = (
        _perimeter(w, h)
        + _hwall(4.5, 0.0, w, gaps=[(3.4, 4.6), (11.4, 12.6)])
        + _hwall(6.5, 0.0, w, gaps=[(3.4, 4.6), (11.4, 12.6)])
        + _vwall(8.0, 0.0, 4.5)
        + _vwall(8.0, 6.5, 11.0)
    )
    objs = [
        ("bin", (1.0, 5.2)),
        ("table", (2.0, 2.0)),
        ("chair", (2.6, 2.4)),
        (target, tpos),
    ] + room_extra
    return Scenario(
        name=f"b{i:02d}_{target.replace(' ', '_')}",
        bounds=(w, h),
        walls=walls,
        objects=_objects(objs),
        robot_start=(1.5, 5.5, 0.0),
        tasks=[Task(f"find a {target}")],
        config=dict(MILD_NOISE),
    )


def scenario_b(i: int) -> Scenario:
    n = i + 1
    if i < 5:
        variants = [
            ("bag", (9.5, 6.5), 3.4, [("box", (10.5, 2.0))]),
            ("bottle", (10.0, 2.0), 2.0, [("table", (9.0, 6.0))]),
            ("cup", (8.5, 5.5), 5.2, [("sofa", (10.5, 6.5))]),
            ("box", (10.5, 6.0), 1.4, [("shelf", (11.0, 2.0))]),
            ("potted plant", (9.0, 1.5), 4.8, [("bin", (11.0, 7.0))]),
        ]
        target, tpos, door_y, extra = variants[i]
        return _b_two_room(n, target, tpos, door_y, extra)
    if i < 10:
        variants = [
            ("monitor", (13.5, 7.0), [("desk", (14.0, 7.6)), ("chair", (13.0, 7.8)), ("bottle", (8.0, 2.0))]),
            ("printer", (13.0, 2.5), [("desk", (13.8, 2.0)), ("cabinet", (14.8, 3.0)), ("cup", (8.0, 8.0))]),
            ("bag", (14.0, 8.0), [("box", (8.0, 2.5)), ("table", (13.0, 2.0))]),
            ("tv", (13.5, 3.0), [("sofa", (14.2, 3.8)), ("table", (8.0, 7.5))]),
            ("book", (13.8, 7.5), [("shelf", (14.5, 7.0)), ("table", (8.2, 2.2))]),
        ]
        target, tpos, extra = variants[i - 5]
        return _b_three_zone(n, target, tpos, extra)
    variants = [
        ("cup", (13.5, 2.0), [("table", (14.0, 2.6)), ("microwave", (15.0, 1.5))]),
        ("bag", (13.0, 9.0), [("sofa", (14.5, 9.5))]),
        ("bottle", (14.0, 2.5), [("refrigerator", (15.2, 1.2))]),
        ("box", (12.5, 9.5), [("shelf", (14.8, 10.0)), ("cabinet", (15.0, 8.0))]),
        ("book", (14.2, 1.8), [("shelf", (15.2, 2.5)), ("desk", (12.8, 1.5))]),
    ]
    target, tpos, extra = variants[i - 10]
    scn = _b_corridor(n, target, tpos, extra)
    if i == 14:
        # One long-range variant runs with odometry drift and loop closures.
        scn.config = dict(scn.config)
        scn.config["drift"] = {"trans_drift": 0.004, "rot_drift": 0.002, "correction_gain": 1.0}
    return scn


# ---------------------------------------------------------------------------
# Scenario C: room navigation (canonical object sets per room)

_ROOM_SETS = {
    "office": [("computer", (0.0, 0.0)), ("monitor", (0.6, 0.2)), ("table", (1.2, 0.0)),
               ("cabinet", (-0.5, 1.5)), ("chair", (1.8, 0.5))],
    "break room": [("coffee maker", (0.0, 0.0)), ("microwave", (0.8, 0.0)),
                   ("refrigerator", (2.5, 0.2)), ("table", (1.0, 1.0)), ("chair", (1.6, 1.3))],
    "conference room": [("whiteboard", (0.0, 0.0)), ("projector", (0.8, 0.3)),
                        ("table", (1.5, 0.8)), ("chair", (2.1, 1.1)), ("chair", (0.9, 1.4))],
    "storage room": [("box", (0.0, 0.0)), ("shelf", (0.9, 0.3)), ("cabinet", (1.8, 0.1))],
}


def _place_set(room: str, origin) -> list:
    ox, oy = origin
    return [(label, (ox + dx, oy + dy)) for label, (dx, dy) in _ROOM_SETS[room]]


def scenario_c(i: int) -> Scenario:
    variants = [
        # (target room, start-room set, start set origin, target set origin, split)
        ("break room", "office", (1.5, 1.8), (9.5, 1.8), "v"),
        ("break room", "conference room", (5.5, 1.5), (5.5, 6.5), "h"),
        ("office", "break room", (1.5, 1.8), (9.5, 1.8), "v"),
        ("conference room", "office", (1.5, 1.8), (9.5, 1.8), "v"),
        ("storage room", "break room", (1.5, 1.8), (9.8, 1.8), "v"),
    ]
    target_room, start_room, s_origin, t_origin, split = variants[i]
    w, h = 14.0, 9.0
    if split == "v":
        walls = _perimeter(w, h) + _vwall(7.0, 0.0, h, gaps=[(3.9, 5.1)])
        start = (2.5, 4.5, 0.0)
    else:
        walls = _perimeter(w, h) + _hwall(4.5, 0.0, w, gaps=[(6.4, 7.6)])
        start = (7.0, 2.8, 1.6)
    objs = _place_set(start_room, s_origin) + _place_set(target_room, t_origin)
    return Scenario(
        name=f"c{i + 1:02d}_{target_room.replace(' ', '_')}",
        bounds=(w, h),
        walls=walls,
        objects=_objects(objs),
        robot_start=start,
        tasks=[Task(f"find a {target_room}")],
        config=dict(MILD_NOISE),
    )


# ---------------------------------------------------------------------------
# Dynamic-mutation comparison scenarios (baseline suite)

def _dyn_world(w, h, decoys, office_aux="computer"):
    """Near zone (break room, office, corridor, conference room) in x < 12,
    plus a maze of wing chambers filling the rest.

    The wings stay unexplored through the short premap phase; they exist to
    keep exploration-style search busy for the whole task budget, since the
    added target appears in the office, an area explored early.
    """
    walls = (
        _perimeter(w, h)
        + _hwall(5.0, 0.0, 12.0, gaps=[(2.4, 3.6), (8.4, 9.6)])
        + _vwall(6.0, 0.0, 5.0)
        + _vwall(12.0, 0.0, 5.0)
        + _vwall(12.0, 9.0, h)
        + _hwall(9.0, 0.0, 12.0, gaps=[(5.4, 6.6)])
    )
    # Wing chambers with alternating narrow doors force a long snaking tour.
    x = 16.0
    top = True
    while x < w - 2.0:
        gap = (h - 2.6, h - 1.4) if top else (1.4, 2.6)
        walls += _vwall(x, 0.0, h, gaps=[gap])
        mid_gap_x = (x - 4.0 + 1.2, x - 4.0 + 2.4)
        walls += _hwall(h / 2.0, x - 4.0, x, gaps=[mid_gap_x])
        top = not top
        x += 4.0
    # Office furniture sits in the left half of the office; the task target
    # will appear in the far right corner, beyond the verification radius of
    # every piece of furniture and out of detector range of door transits.
    objs = [
        ("refrigerator", (1.0, 1.2)),
        ("microwave", (1.8, 1.2)),
        ("coffee maker", (2.6, 1.2)),
        ("table", (3.0, 2.5)),
        ("chair", (3.7, 2.8)),
        ("desk", (7.5, 2.0)),
        (office_aux, (8.1, 2.2)),
        ("table", (6.9, 1.5)),
        ("cabinet", (6.7, 0.8)),
        ("chair", (7.2, 2.9)),
        ("table", (3.0, 11.5)),
        ("whiteboard", (2.0, 12.3)),
        ("chair", (3.7, 11.8)),
        ("potted plant", (0.8, 7.0)),
        ("bin", (11.2, 8.3)),
        ("noticeboard", (7.0, 8.5)),
    ] + decoys
    return walls, objs


_CHAIR_FARM = [
    # Conference-hall seating plus scattered surfaces: a long greedy tour for
    # any nearest-related-object search policy.
    ("chair", (1.2, 10.2)), ("chair", (2.0, 10.4)), ("chair", (5.2, 11.2)),
    ("chair", (6.0, 11.0)), ("chair", (7.4, 11.6)), ("chair", (8.6, 11.2)),
    ("chair", (10.2, 11.8)), ("chair", (10.8, 13.4)), ("chair", (8.8, 14.2)),
    ("chair", (6.4, 14.4)), ("chair", (4.2, 14.0)), ("chair", (1.4, 13.6)),
    ("table", (9.6, 12.6)), ("table", (5.4, 12.8)), ("table", (1.6, 11.8)),
    ("book", (10.6, 6.2)), ("book", (1.0, 5.8)), ("cabinet", (11.4, 6.4)),
    ("noticeboard", (3.2, 8.5)), ("potted plant", (11.6, 13.0)),
]


def scenario_dynamic(i: int) -> Scenario:
    # Variants vary world width, premap length, decoy load, and target class.
    variants = [
        ("monitor", 30.0, 16.0, 900, 7, []),
        ("monitor", 31.0, 16.0, 900, 18, [("book", (10.0, 7.0))]),
        ("printer", 28.0, 16.0, 850, 29, []),
        ("monitor", 30.0, 16.0, 950, 40, [("book", (1.2, 10.5))]),
        ("computer", 28.0, 15.0, 850, 51, []),
        ("printer", 33.0, 16.0, 900, 62, [("cabinet", (10.8, 6.2))]),
        ("monitor", 34.0, 16.0, 950, 73,
         list(_CHAIR_FARM) + [("book", (2.4, 3.4)), ("cabinet", (1.5, 3.2)),
                              ("table", (3.9, 1.0)), ("book", (3.3, 0.9)),
                              ("chair", (1.1, 2.2))]),
        ("monitor", 32.0, 16.0, 950, 84,
         list(_CHAIR_FARM[:14]) + [("cabinet", (1.0, 6.0)), ("table", (5.2, 7.8)),
                                   ("book", (0.8, 10.8))]),
        ("computer", 30.0, 16.0, 900, 95,
         [("table", (1.4, 6.8)), ("book", (10.2, 14.0)), ("cabinet", (9.8, 6.0))]),
    ]
    target, w, h, premap, seed, decoys = variants[i]
    office_aux = "keyboard" if target == "computer" else "computer"
    walls, objs = _dyn_world(w, h, decoys, office_aux)
    target_pos = [10.6, 1.4]
    next_id = len(objs) + 1
    return Scenario(
        name=f"dyn{i + 1:02d}_{target.replace(' ', '_')}",
        bounds=(w, h),
        walls=walls,
        objects=_objects(objs),
        robot_start=(4.5, 7.0, 0.0),
        tasks=[Task(f"find a {target}")],
        mutations=[{
            "kind": "add_object",
            "object": {"id": next_id, "label": target, "position": target_pos},
        }],
        premap_ticks=premap,
        seeds=[seed],
        config={},
    )


# ---------------------------------------------------------------------------
# Fixed special-purpose worlds

def coverage_benchmark() -> Scenario:
    """Noiseless two-room world for the exploration coverage benchmark."""
    w, h = 20.0, 20.0
    walls = _perimeter(w, h) + _vwall(10.0, 0.0, h, gaps=[(9.0, 11.0)])
    return Scenario(
        name="coverage_two_room",
        bounds=(w, h),
        walls=walls,
        objects=[],
        robot_start=(5.0, 10.0, 0.0),
        tasks=[Task("find a bag")],  # unused by the coverage benchmark
        config={},
    )


def demo_scenario() -> Scenario:
    """Premapped office world for the operator-console demo: the office has no
    monitor until the operator injects one."""
    w, h = 16.0, 9.0
    walls = _perimeter(w, h) + _vwall(8.0, 0.0, h, gaps=[(3.9, 5.1)])
    objs = [
        ("table", (2.0, 2.0)),
        ("chair", (2.7, 2.3)),
        ("desk", (12.0, 2.0)),
        ("computer", (12.6, 2.2)),
        ("cabinet", (14.0, 1.5)),
        ("chair", (11.5, 2.8)),
    ]
    return Scenario(
        name="demo_office",
        bounds=(w, h),
        walls=walls,
        objects=_objects(objs),
        robot_start=(2.5, 6.5, 0.0),
        tasks=[Task("find a monitor")],
        premap_ticks=700,
        seeds=[5],
        max_steps=4,
        max_ticks=3000,
        config={},
    )


SUITES = {
    "scenario_a": lambda: [scenario_a(i) for i in range(12)],
    "scenario_b": lambda: [scenario_b(i) for i in range(15)],
    "scenario_c": lambda: [scenario_c(i) for i in range(5)],
    "dynamic": lambda: [scenario_dynamic(i) for i in range(9)],
}


def get_suite(name: str):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
    return SUITES[name]()


def get_scenario(name: str) -> Scenario:
    specials = {"coverage_two_room": coverage_benchmark, "demo_office": demo_scenario}
    if name in specials:
        return specials[name]()
    for suite in SUITES.values():
        for scn in suite():
            if scn.name == name:
                return scn
    raise KeyError(f"unknown bundled scenario {name!r}")
