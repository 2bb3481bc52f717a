"""Disk partition geometry and the Poisson channel factors.

The closed forms for the silence/single-transmitter expectations are checked
against direct series summation (reference module) both on fixed points and
under hypothesis.
"""

import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from uavcsma import (
    Cluster,
    ClusterSet,
    InfeasibleScenarioError,
    OutOfCoverageError,
    Scenario,
    build_clusters,
    chord_duration,
    disk_band_area,
    expected_silence,
    expected_silence_tagged,
    expected_single_transmitter,
    poisson_weight,
    traversal_count,
)
from uavcsma import reference


def test_chord_duration(baseline):
    assert chord_duration(baseline, 0.0) == 200.0        # diameter at 10 m/s
    assert chord_duration(baseline, 600.0) == pytest.approx(160.0, rel=1e-12)
    assert chord_duration(baseline, -600.0) == chord_duration(baseline, 600.0)
    with pytest.raises(OutOfCoverageError):
        chord_duration(baseline, 1000.0)
    with pytest.raises(OutOfCoverageError):
        chord_duration(baseline, -1200.0)


def test_traversal_count(baseline):
    assert traversal_count(baseline, 0.0, 9.1) == 21     # floor(200 / 9.1)
    assert traversal_count(baseline, 600.0, 9.1) == 17   # floor(160 / 9.1)
    # rim: chord shorter than one traversal
    assert traversal_count(baseline, 999.9, 9.1) == 0


def test_scenario_validation(schedule, timing):
    for bad in (dict(radius=0.0), dict(velocity=-1.0), dict(density=0.0)):
        kw = dict(radius=1000.0, velocity=10.0, density=50e-6,
                  schedule=schedule, timing=timing)
        kw.update(bad)
        with pytest.raises(ValueError):
            Scenario(**kw)


def test_band_partition(baseline):
    cs = build_clusters(baseline, 9.1)
    assert len(cs.clusters) == 21
    assert [c.index for c in cs.clusters] == list(range(1, 22))
    # band 1 reaches out to the offset whose chord lasts exactly one traversal
    half_step = 0.5 * 10.0 * 9.1
    assert cs.clusters[0].lateral_bounds[0] == pytest.approx(
        math.sqrt(1000.0 ** 2 - half_step ** 2), rel=1e-12)
    # innermost band absorbs the core
    assert cs.clusters[-1].lateral_bounds[1] == 0.0
    for c in cs.clusters:
        assert c.area > 0.0
        assert c.mean_count == pytest.approx(50e-6 * c.area, rel=1e-15)


def test_band_tiling(baseline):
    # bands plus the excluded rim tile the disk exactly
    cs = build_clusters(baseline, 9.1)
    total = sum(c.area for c in cs.clusters) + cs.residual_area
    assert total == pytest.approx(math.pi * 1000.0 ** 2, rel=1e-12)


def test_band_area_quadrature_oracle(baseline):
    cs = build_clusters(baseline, 9.1)
    for c in cs.clusters[::5]:
        outer, inner = c.lateral_bounds
        ref = reference.band_area_quadrature(1000.0, inner, outer)
        assert c.area == pytest.approx(ref, rel=1e-9)


def test_band_fold(baseline):
    # capping the band count folds everything inward of the last band into it
    cs = build_clusters(baseline, 9.1, n_clusters=5)
    assert len(cs.clusters) == 5
    assert cs.clusters[-1].index == 5            # lower bound on traversals
    assert cs.clusters[-1].lateral_bounds[1] == 0.0
    total = sum(c.area for c in cs.clusters) + cs.residual_area
    assert total == pytest.approx(math.pi * 1000.0 ** 2, rel=1e-12)


def test_build_clusters_errors(baseline):
    with pytest.raises(ValueError):
        build_clusters(baseline, 0.0)
    with pytest.raises(InfeasibleScenarioError):
        build_clusters(baseline, 201.0)   # longest chord lasts 200 s


def test_disk_band_area():
    assert disk_band_area(1000.0, 0.0, 1000.0) == pytest.approx(math.pi * 1e6, rel=1e-14)
    with pytest.raises(ValueError):
        disk_band_area(1000.0, 500.0, 200.0)
    with pytest.raises(ValueError):
        disk_band_area(1000.0, 0.0, 1500.0)


def test_poisson_weight():
    for mu in (0.1, 2.5, 40.0, 900.0):
        for n in (0, 1, 5, 50):
            assert poisson_weight(mu, n) == pytest.approx(
                scipy.stats.poisson.pmf(n, mu), rel=1e-10, abs=1e-300)
    assert poisson_weight(0.0, 0) == 1.0
    assert poisson_weight(0.0, 3) == 0.0
    with pytest.raises(ValueError):
        poisson_weight(-1.0, 0)
    with pytest.raises(ValueError):
        poisson_weight(1.0, -1)


@settings(max_examples=200)
@given(mu=st.floats(0.0, 60.0), tau=st.floats(0.0, 1.0))
def test_closed_forms_match_series(mu, tau):
    assert expected_silence(mu, tau) == pytest.approx(
        reference.silence_series(mu, tau), abs=1e-10)
    assert expected_silence_tagged(mu, tau) == pytest.approx(
        reference.tagged_silence_series(mu, tau), abs=1e-10)
    assert expected_single_transmitter(mu, tau) == pytest.approx(
        reference.single_transmitter_series(mu, tau), abs=1e-10)


def test_tagged_silence_tau_one_limit():
    # only the n = 1 term survives at tau = 1
    assert expected_silence_tagged(3.0, 1.0) == pytest.approx(3.0 * math.exp(-3.0), rel=1e-12)
    assert expected_silence_tagged(3.0, 1.0 - 1e-12) == pytest.approx(
        3.0 * math.exp(-3.0), rel=1e-9)


def test_tagged_silence_large_mean():
    # past the expm1 overflow point the difference form takes over
    for mu in (719.0, 750.0, 5655.0):
        got = expected_silence_tagged(mu, 0.001)
        assert got == pytest.approx(reference.tagged_silence_series(mu, 0.001), abs=1e-12)
        assert math.isfinite(got)


def test_silence_factors_vectorized():
    mus = np.array([0.5, 3.0, 750.0])
    taus = np.array([0.2, 0.0, 0.001])
    vec = expected_silence_tagged(mus, taus)
    assert vec.shape == (3,)
    for k in range(3):
        assert vec[k] == expected_silence_tagged(float(mus[k]), float(taus[k]))
