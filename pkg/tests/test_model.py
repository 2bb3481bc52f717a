"""Per-band chain, coupled solver, and throughput weighting.

Chain closed forms are checked against a dense stationary solve; the busy
probability against direct Poisson series; the coupled solver against a
frozen baseline fixture and against its own residual contracts.
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavcsma import (
    BackoffSchedule,
    Cluster,
    ClusterSet,
    ConvergenceError,
    InfeasibleScenarioError,
    MacTiming,
    QuitMode,
    Scenario,
    SolverOptions,
    busy_probability,
    quitting_probability,
    saturation_throughput,
    solve_fixed_count,
    solve_fixed_point,
    solve_partition,
    stationary_b00,
    stationary_distribution,
    success_probabilities,
    transmission_probability,
)
from uavcsma import reference


def band_set(*mean_counts, traversals=None, delta=1.0):
    """Synthetic partition with prescribed intensities (geometry-free)."""
    ms = traversals or tuple(range(1, len(mean_counts) + 1))
    clusters = tuple(
        Cluster(index=m, lateral_bounds=(0.0, 0.0), area=1.0, mean_count=mu)
        for m, mu in zip(ms, mean_counts))
    return ClusterSet(clusters=clusters, traversal_cost=delta, radius=1.0,
                      residual_area=0.0)


# ---------------------------------------------------------------- chain

def test_quitting_probability():
    assert quitting_probability(0.3, 5) == (1.0 - 0.3) ** 5
    assert quitting_probability(0.0, 3) == 1.0
    assert quitting_probability(1.0, 3) == 0.0
    with pytest.raises(ValueError):
        quitting_probability(0.3, 0)
    with pytest.raises(ValueError):
        quitting_probability(1.2, 3)


def test_stationary_b00_hand_sum(schedule):
    # normalization over stages: sum_j p^j (W_j + 1) / 2
    denom = sum(0.25 ** j * (w + 1) / 2.0
                for j, w in enumerate((8, 16, 32, 64, 128, 256, 512, 1024)))
    got = stationary_b00(0.25, 0.25, 0.0, schedule)
    assert got == pytest.approx(1.0 / denom, rel=1e-13)
    assert got == pytest.approx(0.11580230770590003, rel=1e-12)


def test_stationary_b00_single_stage():
    s = BackoffSchedule(cw_min=8, retry_limit=0)
    for p in (0.0, 0.3, 0.9):
        assert stationary_b00(p, p, 0.0, s) == pytest.approx(2.0 / 9.0, rel=1e-15)


def test_stationary_b00_saturating_p(schedule):
    assert stationary_b00(1.0, 1.0, 0.0, schedule) == 0.0


def test_stationary_b00_consistency_guard(schedule):
    # p_eq must equal q + quit (1 - q)
    with pytest.raises(ValueError):
        stationary_b00(0.5, 0.1, 0.1, schedule)
    # and the composed value passes
    q, quit_p = 0.1, 0.1
    stationary_b00(q + quit_p * (1 - q), q, quit_p, schedule)


@pytest.mark.parametrize("cw,limit,p", [(8, 2, 0.3), (4, 4, 0.7), (16, 1, 0.5),
                                        (8, 7, 0.25), (2, 0, 0.9)])
def test_b00_against_dense_chain(cw, limit, p):
    s = BackoffSchedule(cw_min=cw, retry_limit=limit)
    dense = reference.chain_stationary_dense(s, p)
    assert stationary_b00(p, p, 0.0, s) == pytest.approx(dense["b00"], abs=1e-12)


@given(p=st.floats(0.0, 0.999), cw_exp=st.integers(1, 6), limit=st.integers(0, 7))
def test_stationary_distribution_normalized(p, cw_exp, limit):
    s = BackoffSchedule(cw_min=2 ** cw_exp, retry_limit=limit)
    stages = stationary_distribution(p, p, 0.0, s)
    assert len(stages) == limit + 1
    total = sum(float(np.sum(stage)) for stage in stages)
    assert total == pytest.approx(1.0, abs=1e-9)
    assert all(float(np.min(stage)) >= 0.0 for stage in stages)
    assert stages[0][0] == pytest.approx(stationary_b00(p, p, 0.0, s), rel=1e-12)


# ------------------------------------------------------- channel factors

def test_busy_probability_series_oracle():
    cs = band_set(2.0, 3.5)
    taus = np.array([0.1, 0.2])
    got = busy_probability(cs, taus)
    for i in range(2):
        j = 1 - i
        others = math.exp(-cs.clusters[j].mean_count * taus[j])
        tagged = reference.tagged_silence_series(cs.clusters[i].mean_count, taus[i])
        assert got[i] == pytest.approx(1.0 - others * tagged, abs=1e-10)


def test_busy_probability_zero_tau():
    # with nobody transmitting, only the existence weight remains
    cs = band_set(2.0, 3.5)
    got = busy_probability(cs, [0.0, 0.0])
    assert got[0] == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert got[1] == pytest.approx(math.exp(-3.5), rel=1e-12)


def test_busy_probability_negligible_band():
    # a deserted band drops out of every product, including its own
    cs = band_set(1e-15, 3.0)
    got = busy_probability(cs, [0.5, 0.2])
    assert got[0] == pytest.approx(1.0 - math.exp(-0.6), rel=1e-12)
    expected = 1.0 - reference.tagged_silence_series(3.0, 0.2)
    assert got[1] == pytest.approx(expected, abs=1e-10)


def test_busy_probability_shape_guard():
    with pytest.raises(ValueError):
        busy_probability(band_set(1.0, 2.0), [0.1])


def test_transmission_probability_single_band():
    cs = band_set(1.0)
    assert transmission_probability(cs, [1.0]) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)


def test_success_probabilities_single_band():
    cs = band_set(1.0)
    ps = success_probabilities(cs, [1.0])
    assert ps[0] == pytest.approx(math.exp(-1.0), rel=1e-12)


@given(mus=st.lists(st.floats(1e-6, 50.0), min_size=1, max_size=5),
       tau=st.floats(0.001, 1.0))
def test_success_below_transmission(mus, tau):
    cs = band_set(*mus)
    taus = np.full(len(mus), tau)
    p_tr = transmission_probability(cs, taus)
    p_s = float(success_probabilities(cs, taus).sum())
    assert 0.0 <= p_s <= p_tr + 1e-12
    assert p_tr <= 1.0


def test_saturation_throughput_hand_values(timing):
    p_tr, p_s = 0.5, 0.3
    w = p_s / p_tr
    slot = 0.5 * 50 + w * 0.5 * 66206 + 0.5 * (1 - w) * 66065
    assert saturation_throughput(p_tr, p_s, timing) == pytest.approx(
        w * 0.5 * 65536 / slot, rel=1e-14)
    slot_u = 0.5 * 50 + p_s * 0.5 * 66206 + 0.5 * (1 - p_s) * 66065
    assert saturation_throughput(p_tr, p_s, timing, conditional=False) == pytest.approx(
        p_s * 0.5 * 65536 / slot_u, rel=1e-14)


def test_saturation_throughput_edges(timing):
    assert saturation_throughput(0.0, 0.0, timing) == 0.0
    with pytest.raises(ValueError):
        saturation_throughput(0.3, 0.5, timing)
    with pytest.raises(ValueError):
        saturation_throughput(1.2, 0.5, timing)


# ---------------------------------------------------------- fixed count

@pytest.mark.parametrize("n", [1, 2, 5, 10, 50])
def test_fixed_count_against_bisection(n, schedule, timing):
    fc = solve_fixed_count(n, schedule, timing, SolverOptions(inner_tol=1e-13))
    tau_ref, p_ref = reference.fixed_count_fixed_point(n, schedule)
    assert fc.tau == pytest.approx(tau_ref, abs=1e-10)
    assert fc.throughput == pytest.approx(
        reference.fixed_count_throughput(n, schedule, timing), abs=1e-10)


def test_fixed_count_alone(schedule, timing):
    fc = solve_fixed_count(1, schedule, timing)
    assert fc.tau == pytest.approx(2.0 / 9.0, rel=1e-12)   # never collides
    assert fc.q_busy == 0.0
    with pytest.raises(ValueError):
        solve_fixed_count(0, schedule, timing)


# --------------------------------------------------------- partition solve

def test_partition_idle_branch(schedule):
    # deserted band: idle chain, no busy slots, no quitting
    states, residuals, iters = solve_partition(band_set(1e-20), schedule)
    assert states[0].tau == pytest.approx(2.0 / 9.0, rel=1e-15)
    assert states[0].q_busy == 0.0
    assert states[0].quit == 0.0
    assert max(residuals.values()) < 1e-10


def test_partition_residual_contract(schedule):
    states, residuals, iters = solve_partition(band_set(20.0, 45.0, 70.0), schedule)
    assert max(residuals.values()) < 1e-10
    for s in states:
        assert 0.0 < s.tau < 1.0
        assert 0.0 <= s.q_busy < 1.0
        assert 0.0 <= s.quit <= 1.0
        assert s.p_eq == pytest.approx(s.q_busy + s.quit * (1.0 - s.q_busy), abs=1e-12)


def test_partition_quit_vanishes_for_many_traversals(schedule):
    # (1 - p)^m with m ~ 1e7 kills the quit path, so the stationary and
    # disabled laws must land on the same point
    cs = band_set(137.0, traversals=(10 ** 7,), delta=0.01)
    st_s, _, _ = solve_partition(cs, schedule, SolverOptions(quit_mode=QuitMode.STATIONARY))
    st_d, _, _ = solve_partition(cs, schedule, SolverOptions(quit_mode=QuitMode.DISABLED))
    assert st_s[0].quit < 1e-15
    assert abs(st_s[0].tau - st_d[0].tau) < 1e-9
    assert abs(st_s[0].q_busy - st_d[0].q_busy) < 1e-8
    taus_s = [st_s[0].tau]
    taus_d = [st_d[0].tau]
    s_s = saturation_throughput(transmission_probability(cs, taus_s),
                                float(success_probabilities(cs, taus_s).sum()), MacTiming())
    s_d = saturation_throughput(transmission_probability(cs, taus_d),
                                float(success_probabilities(cs, taus_d).sum()), MacTiming())
    assert abs(s_s - s_d) < 1e-6


def test_partition_rejects_empty(schedule):
    with pytest.raises(ValueError):
        solve_partition(ClusterSet(clusters=(), traversal_cost=1.0, radius=1.0,
                                   residual_area=0.0), schedule)


# ------------------------------------------------------------ full solve

def test_fixed_point_baseline_fixture(baseline):
    sol = solve_fixed_point(baseline)
    assert len(sol.clusters) == 1          # converged cost folds the disk into one band
    assert sol.delta == pytest.approx(127802965.9, rel=1e-5)          # [us]
    band = sol.clusters[0]
    assert band.tau == pytest.approx(0.0078191504, rel=1e-5)
    assert band.q_busy == pytest.approx(0.65446966, rel=1e-5)
    assert band.quit == pytest.approx(0.99902376, rel=1e-5)
    assert sol.p_tr == pytest.approx(0.65717141, rel=1e-5)
    assert sol.p_s == pytest.approx(0.36700647, rel=1e-5)
    assert sol.throughput == pytest.approx(0.55311443, rel=1e-5)
    assert sol.residuals["delta"] < 1e-6
    assert sol.iterations[0] >= 2


def test_fixed_point_unconditional_weighting(baseline):
    sol = solve_fixed_point(baseline, SolverOptions(conditional_success=False))
    assert sol.throughput == pytest.approx(0.36363935, rel=1e-5)


def test_fixed_point_quit_disabled(baseline):
    sol = solve_fixed_point(baseline, SolverOptions(quit_mode=QuitMode.DISABLED))
    assert all(band.quit == 0.0 for band in sol.clusters)
    base = solve_fixed_point(baseline)
    assert sol.throughput != pytest.approx(base.throughput, rel=1e-6)


def test_fixed_point_iteration_cap(baseline):
    with pytest.raises(ConvergenceError) as err:
        solve_fixed_point(baseline, SolverOptions(outer_max_iter=1))
    assert err.value.residuals
    assert err.value.iterations[0] == 1


def test_fixed_point_infeasible_chord(timing):
    # freeze-free traversal (~13.8 s) outlives the longest chord (2.1 s)
    s = Scenario(radius=210.0, velocity=200.0, density=50e-6,
                 schedule=BackoffSchedule(cw_min=256, retry_limit=10), timing=timing)
    with pytest.raises(InfeasibleScenarioError):
        solve_fixed_point(s)


def test_fixed_point_near_empty_band_is_infeasible(timing):
    # the tagged silence factor carries the device-existence weight, so a
    # nearly deserted band senses busy almost surely and freezes forever
    s = Scenario(radius=3000.0, velocity=1.0, density=1e-12,
                 schedule=BackoffSchedule(cw_min=2, retry_limit=0), timing=timing)
    with pytest.raises(InfeasibleScenarioError):
        solve_fixed_point(s)


def test_fixed_point_folds_giant_partitions(timing):
    # freeze-free cost of 25 us against a 6000 s chord asks for 2.4e8 bands
    s = Scenario(radius=3000.0, velocity=1.0, density=1e-20,
                 schedule=BackoffSchedule(cw_min=2, retry_limit=0), timing=timing)
    sol = solve_fixed_point(s)
    assert sol.diagnostics.get("folded") is True
    assert len(sol.clusters) == 4096
    assert sol.clusters[0].tau == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert sol.throughput < 1e-9
