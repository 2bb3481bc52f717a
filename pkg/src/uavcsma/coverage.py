"""Coverage geometry under a disk moving along a straight corridor.

Chord residence times, the partition of the disk into bands of equal whole
traversal count, and closed-form Poisson expectations used by the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleScenarioError, OutOfCoverageError
from .timing import BackoffSchedule, MacTiming

# intensity below which a band is treated as holding no devices
NEGLIGIBLE_MEAN_COUNT = 1e-12

# width of the removable point at tau = 1 where the tagged silence expectation
# switches to its limit value
_TAGGED_LIMIT_GAP = 1e-9


@dataclass(frozen=True)
class Scenario:
    """Geometry and traffic description.

    density is devices per square meter; configuration files take devices per
    square kilometer and convert on parse.
    """

    radius: float       # [m]
    velocity: float     # [m/s]
    density: float      # [1/m^2]
    schedule: BackoffSchedule
    timing: MacTiming

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.velocity > 0:
            raise ValueError(f"velocity must be positive, got {self.velocity}")
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density}")


def chord_duration(scenario: Scenario, lateral_offset: float) -> float:
    """Residence time in coverage for a device at the given lateral offset,
    2*sqrt(R^2 - x^2)/v, in seconds."""
    r = scenario.radius
    if abs(lateral_offset) >= r:
        raise OutOfCoverageError(
            f"|offset| = {abs(lateral_offset):g} m does not lie inside radius {r:g} m")
    return 2.0 * math.sqrt(r * r - lateral_offset * lateral_offset) / scenario.velocity


def traversal_count(scenario: Scenario, lateral_offset: float, delta: float) -> int:
    """Number of whole backoff traversals of duration delta (seconds) that fit
    into the coverage chord."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return int(chord_duration(scenario, lateral_offset) / delta)


@dataclass(frozen=True)
class Cluster:
    """Band of lateral offsets whose chord fits exactly `index` traversals."""

    index: int                            # traversal count of the band
    lateral_bounds: tuple[float, float]   # (x_hi, x_lo): band is x_lo < |x| <= x_hi
    area: float                           # [m^2] both half-planes
    mean_count: float                     # expected device count in the band


@dataclass(frozen=True)
class ClusterSet:
    """Partition of the disk by traversal count, outermost band first.

    The rim band whose chord is shorter than one traversal is excluded from
    the partition and reported as residual_area.
    """

    clusters: tuple[Cluster, ...]
    traversal_cost: float    # [s] delta used to build the partition
    radius: float            # [m]
    residual_area: float     # [m^2]

    def mean_counts(self) -> np.ndarray:
        return np.array([c.mean_count for c in self.clusters])

    def traversals(self) -> np.ndarray:
        return np.array([c.index for c in self.clusters])


def disk_band_area(radius: float, x_lo: float, x_hi: float) -> float:
    """Area of the disk slice with x_lo < |x| <= x_hi, both halves."""
    if not 0.0 <= x_lo <= x_hi <= radius:
        raise ValueError(f"need 0 <= x_lo <= x_hi <= radius, got {x_lo}, {x_hi}")

    def antiderivative(x):
        # integral of the chord length 2*sqrt(R^2 - u^2) from 0 to x
        s = min(1.0, x / radius)
        return x * math.sqrt(max(0.0, radius * radius - x * x)) + radius * radius * math.asin(s)

    return 2.0 * (antiderivative(x_hi) - antiderivative(x_lo))


def _offset_at(radius: float, half_chord: float) -> float:
    """Lateral offset whose chord half-length equals half_chord."""
    if half_chord >= radius:
        return 0.0
    return math.sqrt(radius * radius - half_chord * half_chord)


def build_clusters(scenario: Scenario, delta: float,
                   n_clusters: int | None = None) -> ClusterSet:
    """Partition the coverage disk into bands by whole traversal count.

    delta is the traversal duration in seconds. Band i collects lateral
    offsets whose chord fits exactly i traversals; the rim band with count 0
    is excluded. n_clusters caps the band count, folding everything inward of
    band n_clusters into it (used when the outer solver pins an oscillating
    partition size).
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    r, v = scenario.radius, scenario.velocity
    n_max = int((2.0 * r) / (v * delta))
    if n_max < 1:
        raise InfeasibleScenarioError(
            f"longest chord lasts {2 * r / v:.6g} s, shorter than one traversal "
            f"of {delta:.6g} s")
    n = n_max if n_clusters is None else max(1, min(n_clusters, n_max))
    half_step = 0.5 * v * delta    # [m] half-chord consumed per traversal
    clusters = []
    for i in range(1, n + 1):
        x_hi = _offset_at(r, i * half_step)
        inner = (i + 1) * half_step
        x_lo = 0.0 if (i == n or inner >= r) else _offset_at(r, inner)
        area = disk_band_area(r, x_lo, x_hi)
        clusters.append(Cluster(index=i, lateral_bounds=(x_hi, x_lo), area=area,
                                mean_count=scenario.density * area))
    residual = disk_band_area(r, _offset_at(r, half_step), r)
    return ClusterSet(clusters=tuple(clusters), traversal_cost=delta,
                      radius=r, residual_area=residual)


def poisson_weight(mean_count: float, n: int) -> float:
    """Poisson pmf at n, evaluated in log space so large means stay finite."""
    if mean_count < 0:
        raise ValueError(f"mean_count must be nonnegative, got {mean_count}")
    if n < 0:
        raise ValueError(f"count must be nonnegative, got {n}")
    if mean_count == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean_count) - mean_count - math.lgamma(n + 1))


def expected_silence(mean_count, tau):
    """Mean of (1 - tau)^n under n ~ Poisson(mean_count): exp(-mu tau)."""
    out = np.exp(-np.multiply(mean_count, tau))
    return float(out) if np.ndim(out) == 0 else out


def expected_silence_tagged(mean_count, tau):
    """Mean of (1 - tau)^(n-1) over n >= 1 under n ~ Poisson(mean_count).

    Evaluated as exp(-mu) expm1(mu (1-tau)) / (1-tau), which keeps the
    subtraction exact for small mu (1-tau); the removable point tau = 1 takes
    its limit mu exp(-mu) once the gap drops below the branch width. Once
    mu (1-tau) would overflow expm1, the algebraically equal difference
    exp(-mu tau) - exp(-mu) takes over (its terms are far apart there, so
    the cancellation that motivates the expm1 form cannot occur).
    """
    mu = np.asarray(mean_count, dtype=float)
    tau_arr = np.asarray(tau, dtype=float)
    gap = 1.0 - tau_arr
    limit = mu * np.exp(-mu)
    safe_gap = np.where(gap == 0.0, 1.0, gap)
    big = mu * gap > 700.0
    scaled = np.where(big, 0.0, mu * gap)
    with np.errstate(divide="ignore", invalid="ignore"):
        general = np.where(
            big,
            (np.exp(-mu * tau_arr) - np.exp(-mu)) / safe_gap,
            np.exp(-mu) * np.expm1(scaled) / safe_gap)
    out = np.where(gap < _TAGGED_LIMIT_GAP, limit, general)
    return float(out) if np.ndim(out) == 0 else out


def expected_single_transmitter(mean_count, tau):
    """Mean of n tau (1 - tau)^(n-1) under n ~ Poisson(mean_count):
    mu tau exp(-mu tau)."""
    x = np.multiply(mean_count, tau)
    out = x * np.exp(-x)
    return float(out) if np.ndim(out) == 0 else out
