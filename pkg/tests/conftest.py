import dataclasses

import pytest

from sappo.scenario import Waypoint, default_scenario


@pytest.fixture
def scenario():
    return default_scenario()


def place_robot(sc, x, y, heading_deg=-90.0, **changes):
    """Copy of ``sc`` with the robot parked at one pose."""
    robot = dataclasses.replace(sc.robot, path=[Waypoint(0.0, x, y, heading_deg)])
    return dataclasses.replace(sc, robot=robot, **changes)
