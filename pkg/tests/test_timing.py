"""Backoff schedule and busy-period arithmetic, checked against hand sums."""

from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from uavcsma import (
    AccessMode,
    BackoffSchedule,
    FreezeDivergenceError,
    MacTiming,
    UndefinedMixtureError,
    busy_collision_time,
    busy_success_time,
    mean_backoff_counter,
    mean_freeze_time,
    post_collision_wait,
    traversal_cost,
)


def test_window_doubles_per_stage(schedule):
    assert schedule.windows() == (8, 16, 32, 64, 128, 256, 512, 1024)
    assert schedule.window(0) == 8
    assert schedule.window(7) == 1024


def test_window_cap():
    s = BackoffSchedule(cw_min=8, retry_limit=7, cw_max=64)
    assert s.windows() == (8, 16, 32, 64, 64, 64, 64, 64)


def test_schedule_validation():
    with pytest.raises(ValueError):
        BackoffSchedule(cw_min=6)          # not a power of two
    with pytest.raises(ValueError):
        BackoffSchedule(cw_min=1)
    with pytest.raises(ValueError):
        BackoffSchedule(retry_limit=-1)
    with pytest.raises(ValueError):
        BackoffSchedule(cw_min=16, cw_max=8)
    with pytest.raises(ValueError):
        BackoffSchedule(cw_max=48)
    with pytest.raises(ValueError):
        BackoffSchedule().window(8)        # only stages 0..7 exist


def test_mean_backoff_counter(schedule):
    # (7 + 15 + 31 + 63 + 127 + 255 + 511 + 1023) / 2, summed by hand
    assert mean_backoff_counter(schedule) == 1016.0
    assert mean_backoff_counter(BackoffSchedule(cw_min=8, retry_limit=7, cw_max=64)) == 184.0
    assert mean_backoff_counter(BackoffSchedule(cw_min=2, retry_limit=0)) == 0.5


def test_busy_periods_basic(timing):
    # header + payload + sifs + ack + difs + 2 us propagation
    assert busy_success_time(timing) == 400 + 65536 + 28 + 112 + 128 + 2 == 66206
    assert busy_collision_time(timing) == 400 + 65536 + 128 + 1 == 66065
    assert post_collision_wait(timing) == 28 + 300 == 328


def test_busy_periods_rtscts(timing):
    t = replace(timing, access_mode=AccessMode.RTSCTS)
    assert busy_success_time(t) == 160 + 112 + 400 + 65536 + 3 * 28 + 112 + 128 == 66532
    # a collided RTS costs only the RTS plus the reply-sized wait
    assert busy_collision_time(t) == 160 + 28 + 112 + 128 == 428
    assert post_collision_wait(t) == 28 + 300 == 328


def test_timing_validation(timing):
    assert timing.validate() is timing
    with pytest.raises(ValueError):
        replace(timing, t_payload=0).validate()
    with pytest.raises(ValueError):
        replace(timing, t_ack=-5).validate()
    with pytest.raises(ValueError):
        replace(timing, delta_idle=50.0).validate()   # microints only
    with pytest.raises(ValueError):
        replace(timing, sifs=True).validate()


def test_freeze_law():
    assert mean_freeze_time(1016.0, 0.0) == 0.0
    assert mean_freeze_time(1016.0, 0.3) == pytest.approx(1016.0 * 0.3 / 0.7, rel=1e-15)
    with pytest.raises(FreezeDivergenceError):
        mean_freeze_time(1016.0, 1.0)
    with pytest.raises(ValueError):
        mean_freeze_time(10.0, 1.5)


def test_traversal_cost_freeze_free(timing, schedule):
    # 1016 idle slots plus 7 own collisions with their reply timeouts
    assert traversal_cost(timing, schedule, 0.0, 1.0, 1.0) == 1016 * 50 + 7 * (66065 + 328)
    assert traversal_cost(timing, schedule, 0.0, 1.0, 1.0) == 515551.0


def test_traversal_cost_oracle(timing, schedule):
    # rebuild the expectation term by term
    q, p_s, p_b = 0.3, 0.2, 0.5
    freezes = 1016.0 * q / (1.0 - q)
    mix = (p_s / p_b) * 66206 + (1.0 - p_s / p_b) * 66065
    by_hand = 1016 * 50 + freezes * mix + 7 * (66065 + 328)
    assert traversal_cost(timing, schedule, q, p_s, p_b) == pytest.approx(by_hand, rel=1e-14)


def test_traversal_cost_errors(timing, schedule):
    with pytest.raises(FreezeDivergenceError):
        traversal_cost(timing, schedule, 1.0, 0.5, 0.6)
    with pytest.raises(UndefinedMixtureError):
        traversal_cost(timing, schedule, 0.4, 0.0, 0.0)
    with pytest.raises(ValueError):
        traversal_cost(timing, schedule, 0.2, 0.7, 0.5)   # p_s > p_b
    # q = 0 with p_b = 0 is fine: no freezes, so no mixture needed
    assert traversal_cost(timing, schedule, 0.0, 0.0, 0.0) == 515551.0


@given(q=st.floats(0.0, 0.99), dq=st.floats(0.0, 0.009))
def test_traversal_cost_monotone_in_q(q, dq):
    t, s = MacTiming(), BackoffSchedule()
    lo = traversal_cost(t, s, q, 0.5, 0.8)
    hi = traversal_cost(t, s, q + dq, 0.5, 0.8)
    assert hi >= lo
