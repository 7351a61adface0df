"""Persistent semantic object map.

Detections are projected to the world frame, associated with existing map
objects per class via density clustering (min_pts=1, i.e. epsilon-connected
components), given instance IDs, anchored to keyframes through a stored
relative transform, and relocated exactly whenever keyframe poses change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import vocabulary
from .clustering import connected_components
from .geometry import Pose, inverse_transform_point, transform_point
from .localization import Keyframe, PoseGraph
from .world import FrameObject

__all__ = [
    "FrameObject",
    "MapObject",
    "AssociationConfig",
    "project_to_world",
    "class_epsilon",
    "associate_and_update",
    "relocate_after_correction",
    "export_map_records",
]


@dataclass
class MapObject:
    label: str
    instance_id: int
    position_world: tuple[float, float]
    anchor_keyframe: int
    rel_transform: tuple[float, float]  # object position in the anchor keyframe frame
    first_seen_tick: int = 0
    observation_count: int = 1

    @property
    def key(self) -> str:
        return f"{self.label}-{self.instance_id}"


@dataclass
class AssociationConfig:
    eps_large: float = 2.0
    eps_small: float = 0.5
    eps_default: float = 1.0
    min_pts: int = 1
    large_classes: frozenset[str] = vocabulary.LARGE_CLASSES
    small_classes: frozenset[str] = vocabulary.SMALL_CLASSES
    excluded_labels: frozenset[str] = vocabulary.EXCLUDED_LABELS

    def validate(self) -> None:
        if min(self.eps_large, self.eps_small, self.eps_default) <= 0:
            raise ValueError("epsilon thresholds must be positive")
        if self.large_classes & self.small_classes:
            raise ValueError("large and small class sets must be disjoint")


def project_to_world(fo: FrameObject, pose_est: Pose) -> tuple[float, float]:
    """Rigid composition of the estimated pose with the robot-frame position."""
    return transform_point(pose_est, fo.position_robot)


def class_epsilon(label: str, cfg: AssociationConfig) -> float:
    if label in cfg.large_classes:
        return cfg.eps_large
    if label in cfg.small_classes:
        return cfg.eps_small
    return cfg.eps_default


def associate_and_update(
    map_objects: list[MapObject],
    frame: list[FrameObject],
    pose_est: Pose,
    current_keyframe: Keyframe,
    cfg: AssociationConfig,
    pose_graph: PoseGraph | None = None,
) -> list[MapObject]:
    """Associate frame detections with map objects per class and update the map.

    Per label, epsilon-connected components are formed over the union of map
    and frame positions. A component holding map objects keeps exactly one
    (smallest instance id; its position moves to the centroid of the
    component's frame observations when any are present). A component of only
    frame objects spawns a new map object anchored to the current keyframe.
    Inputs are sorted by (label, position) first, so the result is independent
    of detection ordering.
    """
    frame_world: list[tuple[str, tuple[float, float], int]] = []
    for fo in frame:
        if fo.label in cfg.excluded_labels:
            continue
        frame_world.append((fo.label, project_to_world(fo, pose_est), fo.tick))
    frame_world.sort(key=lambda r: (r[0], r[1]))

    labels = sorted({m.label for m in map_objects} | {r[0] for r in frame_world})
    next_id = {}
    for m in map_objects:
        next_id[m.label] = max(next_id.get(m.label, 0), m.instance_id)

    updated: list[MapObject] = []
    for label in labels:
        members = sorted(
            (m for m in map_objects if m.label == label), key=lambda m: (m.position_world, m.instance_id)
        )
        fr = [r for r in frame_world if r[0] == label]
        pts = np.array(
            [m.position_world for m in members] + [r[1] for r in fr], dtype=np.float64
        ).reshape(-1, 2)
        comp = connected_components(pts, class_epsilon(label, cfg))
        n_map = len(members)
        for c in sorted(set(comp)):
            idx = np.flatnonzero(comp == c)
            map_idx = [int(i) for i in idx if i < n_map]
            frame_idx = [int(i) - n_map for i in idx if i >= n_map]
            frame_pts = [fr[i][1] for i in frame_idx]
            if map_idx:
                cluster_objs = sorted((members[i] for i in map_idx), key=lambda m: m.instance_id)
                keeper = cluster_objs[0]
                keeper.observation_count += sum(o.observation_count for o in cluster_objs[1:])
                keeper.observation_count += len(frame_idx)
                if frame_pts:
                    cx = sum(p[0] for p in frame_pts) / len(frame_pts)
                    cy = sum(p[1] for p in frame_pts) / len(frame_pts)
                    keeper.position_world = (cx, cy)
                    # The anchor stays the first-observation keyframe; the
                    # relative transform is re-derived against its current
                    # corrected pose so relocation stays exact.
                    if keeper.anchor_keyframe == current_keyframe.id:
                        anchor = current_keyframe
                    elif pose_graph is not None:
                        anchor = pose_graph.by_id(keeper.anchor_keyframe)
                    else:
                        raise KeyError(
                            f"anchor keyframe {keeper.anchor_keyframe} needs pose_graph"
                        )
                    keeper.rel_transform = inverse_transform_point(anchor.pose_corrected, (cx, cy))
                updated.append(keeper)
            else:
                cx = sum(p[0] for p in frame_pts) / len(frame_pts)
                cy = sum(p[1] for p in frame_pts) / len(frame_pts)
                iid = next_id.get(label, 0) + 1
                next_id[label] = iid
                updated.append(
                    MapObject(
                        label=label,
                        instance_id=iid,
                        position_world=(cx, cy),
                        anchor_keyframe=current_keyframe.id,
                        rel_transform=inverse_transform_point(current_keyframe.pose_corrected, (cx, cy)),
                        first_seen_tick=min(fr[i][2] for i in frame_idx),
                        observation_count=len(frame_idx),
                    )
                )
    updated.sort(key=lambda m: (m.label, m.instance_id))
    return updated


def relocate_after_correction(map_objects: list[MapObject], pose_graph: PoseGraph) -> list[MapObject]:
    """Recompute every object's world position from its anchor's corrected pose.

    Exact rigid composition; a dangling anchor id is an invariant violation
    and raises.
    """
    for obj in map_objects:
        kf = pose_graph.by_id(obj.anchor_keyframe)
        obj.position_world = transform_point(kf.pose_corrected, obj.rel_transform)
    return map_objects


def export_map_records(map_objects: list[MapObject]) -> str:
    """Line-delimited map snapshot: one JSON record per object."""
    lines = []
    for m in sorted(map_objects, key=lambda m: (m.label, m.instance_id)):
        lines.append(
            json.dumps(
                {
                    "label": m.label,
                    "instance_id": m.instance_id,
                    "x": m.position_world[0],
                    "y": m.position_world[1],
                    "anchor": m.anchor_keyframe,
                    "observation_count": m.observation_count,
                },
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
