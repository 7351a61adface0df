import math

import pytest

from orionnav.geometry import Pose
from orionnav.world import ObjectInstance, RobotState, WorldModel


def make_world(
    bounds=(10.0, 8.0),
    walls=None,
    objects=None,
    start=(2.0, 2.0, 0.0),
    **kwargs,
):
    if walls is None:
        w, h = bounds
        walls = [(0, 0, w, 0), (0, h, w, h), (0, 0, 0, h), (w, 0, w, h)]
    return WorldModel(
        bounds=bounds,
        walls=walls,
        objects=objects or [],
        robot=RobotState(pose_true=Pose(*start)),
        **kwargs,
    )


def obj(i, label, x, y, **kw):
    return ObjectInstance(id=i, label=label, position=(x, y), **kw)


@pytest.fixture
def empty_world():
    return make_world(walls=[], objects=[])
