"""Frontier detection, scoring, blacklisting, random-goal fallback, and the
budgeted exploration behavior."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .localization import EXPLORED, UNEXPLORED, OccupancyGrid
from .nav import GotoBehavior, NavConfig, RotateBehavior
from .seeding import EXPLORE, derive_rng

BLACKLIST_MATCH_RADIUS = 0.5
FALLBACK_MIN_DIST = 1.0

_EIGHT = np.ones((3, 3), dtype=np.int64)


@dataclass
class Frontier:
    centroid: tuple[float, float]
    distance: float
    size: int
    score: float = 0.0


@dataclass
class ExplorationState:
    blacklist: list[tuple[float, float]] = field(default_factory=list)
    rng_seed: int = 0
    budget_ticks_remaining: int = 0
    draws: int = 0

    def is_blacklisted(self, centroid: tuple[float, float]) -> bool:
        return any(
            math.hypot(centroid[0] - bx, centroid[1] - by) <= BLACKLIST_MATCH_RADIUS
            for bx, by in self.blacklist
        )


def detect_frontiers(grid: OccupancyGrid, robot: tuple[float, float]) -> list[Frontier]:
    """Cluster unexplored cells that touch explored free space.

    Frontier cells are unexplored cells 4-adjacent to at least one explored
    cell; 8-connected components of those cells form the clusters. Ordered by
    (size desc, centroid lex) so the result is deterministic.
    """
    unexplored = grid.cells == UNEXPLORED
    explored = grid.cells == EXPLORED
    touch = np.zeros_like(explored)
    touch[1:, :] |= explored[:-1, :]
    touch[:-1, :] |= explored[1:, :]
    touch[:, 1:] |= explored[:, :-1]
    touch[:, :-1] |= explored[:, 1:]
    frontier_cells = unexplored & touch
    if not frontier_cells.any():
        return []
    labeled, count = ndimage.label(frontier_cells, structure=_EIGHT)
    ys, xs = np.nonzero(frontier_cells)
    labs = labeled[ys, xs]
    sizes = np.bincount(labs, minlength=count + 1)
    sum_x = np.bincount(labs, weights=xs, minlength=count + 1)
    sum_y = np.bincount(labs, weights=ys, minlength=count + 1)
    out: list[Frontier] = []
    for c in range(1, count + 1):
        n = int(sizes[c])
        cx = grid.origin[0] + (sum_x[c] / n + 0.5) * grid.resolution
        cy = grid.origin[1] + (sum_y[c] / n + 0.5) * grid.resolution
        out.append(
            Frontier(
                centroid=(cx, cy),
                distance=math.hypot(cx - robot[0], cy - robot[1]),
                size=n,
            )
        )
    out.sort(key=lambda f: (-f.size, f.centroid))
    return out


def score_frontiers(frontiers: list[Frontier], alpha: float = 50.0, mode: str = "intent") -> list[Frontier]:
    """Attach selection scores.

    intent (default): score = alpha*distance - size, chosen by MINIMUM, which
    prefers close frontiers and, among comparable distances, larger ones.
    literal: score = alpha*distance + size, chosen by MAXIMUM.
    """
    for f in frontiers:
        if mode == "literal":
            f.score = alpha * f.distance + f.size
        else:
            f.score = alpha * f.distance - f.size
    return frontiers


def select_frontier(frontiers: list[Frontier], mode: str = "intent") -> Frontier | None:
    if not frontiers:
        return None
    if mode == "literal":
        return max(frontiers, key=lambda f: (f.score, [-c for c in f.centroid]))
    return min(frontiers, key=lambda f: (f.score, f.centroid))


def next_goal(
    frontiers: list[Frontier],
    state: ExplorationState,
    grid: OccupancyGrid,
    robot: tuple[float, float],
    alpha: float = 50.0,
    mode: str = "intent",
) -> tuple[tuple[float, float], str] | None:
    """Best non-blacklisted frontier, else a seeded random explored-free goal.

    Returns (goal, provenance) with provenance in {frontier, random_fallback};
    None only when no explored free cell exists at all.
    """
    usable = [f for f in score_frontiers(list(frontiers), alpha, mode) if not state.is_blacklisted(f.centroid)]
    pick = select_frontier(usable, mode)
    if pick is not None:
        return pick.centroid, "frontier"

    ys, xs = np.nonzero(grid.cells == EXPLORED)
    if len(xs) == 0:
        return None
    cx = grid.origin[0] + (xs + 0.5) * grid.resolution
    cy = grid.origin[1] + (ys + 0.5) * grid.resolution
    far = np.hypot(cx - robot[0], cy - robot[1]) >= FALLBACK_MIN_DIST
    if far.any():
        cx, cy = cx[far], cy[far]
    rng = derive_rng(state.rng_seed, EXPLORE, state.draws)
    state.draws += 1
    i = int(rng.integers(0, len(cx)))
    return (float(cx[i]), float(cy[i])), "random_fallback"


@dataclass
class ExplorationOutcome:
    reason: str
    coverage_delta: int  # newly explored cells
    goal_history: list[tuple[tuple[float, float], str]] = field(default_factory=list)


def run_exploration(
    stack,
    budget_s: float,
    stop_predicate=None,
    rng_seed: int = 0,
    alpha: float = 50.0,
    mode: str = "intent",
) -> ExplorationOutcome:
    """Drive the exploration behavior for a sim-time budget; reports the
    newly explored cell count and why it stopped."""
    from .stack import run_behavior

    before = int(np.count_nonzero(stack.grid.cells != UNEXPLORED))
    budget_ticks = int(round(budget_s / stack.dt))
    behavior = ExploreBehavior(
        budget_ticks=budget_ticks,
        nav_cfg=stack.cfg.nav,
        rng_seed=rng_seed,
        stop_predicate=stop_predicate,
        alpha=alpha,
        mode=mode,
    )
    run_behavior(stack, behavior, budget_ticks)
    after = int(np.count_nonzero(stack.grid.cells != UNEXPLORED))
    return ExplorationOutcome(
        reason=behavior.outcome or "budget_exhausted",
        coverage_delta=after - before,
        goal_history=behavior.goal_history,
    )


class ExploreBehavior:
    """Budgeted frontier exploration: initial 360 scan, then detect -> select
    -> goto cycles with blacklisting on failure and random fallback goals.

    The stop predicate is evaluated every tick so exploration ends early the
    moment its condition holds (e.g. the target object entered the map).
    """

    def __init__(
        self,
        budget_ticks: int,
        nav_cfg: NavConfig,
        rng_seed: int = 0,
        stop_predicate=None,
        alpha: float | None = None,
        mode: str | None = None,
        initial_rotate: bool = True,
    ):
        self.state = ExplorationState(rng_seed=rng_seed, budget_ticks_remaining=budget_ticks)
        self.nav_cfg = nav_cfg
        self.stop_predicate = stop_predicate
        self.alpha = nav_cfg.frontier_alpha if alpha is None else alpha
        self.mode = nav_cfg.frontier_score_mode if mode is None else mode
        self._sub = RotateBehavior(nav_cfg.omega_max) if initial_rotate else None
        self._sub_goal: tuple[float, float] | None = None
        self._sub_provenance: str | None = None
        self.done = False
        self.outcome: str | None = None
        self.log = ""
        self.goal_history: list[tuple[tuple[float, float], str]] = []

    def step(self, stack) -> tuple[float, float]:
        if self.stop_predicate is not None and self.stop_predicate(stack):
            self.done = True
            self.outcome = "stopped_early"
            return (0.0, 0.0)
        if self.state.budget_ticks_remaining <= 0:
            self.done = True
            self.outcome = "budget_exhausted"
            return (0.0, 0.0)
        self.state.budget_ticks_remaining -= 1

        if self._sub is not None and not self._sub.done:
            cmd = self._sub.step(stack)
            if not self._sub.done:
                return cmd
        if self._sub is not None and self._sub.done:
            # A frontier goal is spent once its goto completes: on arrival the
            # scan from here either dissolved it (its centroid moves, escaping
            # the match radius) or it sits behind a wall; on failure it is
            # unreachable. Either way, never chase the same centroid again.
            if self._sub_provenance == "frontier" and self._sub_goal is not None:
                self.state.blacklist.append(self._sub_goal)
            self._sub = None
            self._sub_goal = None
            self._sub_provenance = None

        pose = stack.est.pose_est
        frontiers = detect_frontiers(stack.grid, (pose.x, pose.y))
        while True:
            picked = next_goal(frontiers, self.state, stack.grid, (pose.x, pose.y), self.alpha, self.mode)
            if picked is None:
                # Nothing explored yet and no frontiers: idle one cycle.
                return (0.0, 0.0)
            goal, provenance = picked
            if provenance == "frontier" and (
                math.hypot(goal[0] - pose.x, goal[1] - pose.y) <= self.nav_cfg.frontier_standoff
            ):
                # Already standing at it; observing from here is all a goto
                # could achieve, so retire the centroid and pick again.
                self.state.blacklist.append(goal)
                continue
            break
        self.goal_history.append((goal, provenance))
        self._sub = GotoBehavior(
            goal,
            standoff=self.nav_cfg.frontier_standoff,
            cfg=self.nav_cfg,
            unknown_traversable=True,
            max_ticks=min(self.state.budget_ticks_remaining + 1, self.nav_cfg.goto_max_ticks),
        )
        self._sub_goal = goal
        self._sub_provenance = provenance
        return self._sub.step(stack)
