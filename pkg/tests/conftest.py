"""Shared fixtures: the default schedule/timing pair and the baseline scenario."""

import pytest

from uavcsma import BackoffSchedule, MacTiming, Scenario


@pytest.fixture
def schedule():
    return BackoffSchedule()


@pytest.fixture
def timing():
    return MacTiming()


@pytest.fixture
def baseline(schedule, timing):
    # 1 km disk, 10 m/s, 50 devices per km^2
    return Scenario(radius=1000.0, velocity=10.0, density=50e-6,
                    schedule=schedule, timing=timing)
