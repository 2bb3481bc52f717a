"""Parameter sweeps comparing the model against the simulation, trend checks
and agreement summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .coverage import Scenario
from .errors import ConvergenceError, InfeasibleScenarioError
from .model import SolverOptions, solve_fixed_point
from .simulator import SimConfig, replicate
from .timing import AccessMode

# devices/km^2 to devices/m^2
_PER_KM2 = 1e-6


class SweepAxis(Enum):
    VELOCITY = "velocity"
    DENSITY = "density"
    RETRY_LIMIT = "retry_limit"
    CW_MIN = "cw_min"
    RADIUS = "radius"


# display units for the swept value (density is configured per km^2)
AXIS_UNITS = {
    SweepAxis.VELOCITY: "m/s",
    SweepAxis.DENSITY: "devices/km^2",
    SweepAxis.RETRY_LIMIT: "stages",
    SweepAxis.CW_MIN: "slots",
    SweepAxis.RADIUS: "m",
}

_INTEGER_AXES = (SweepAxis.RETRY_LIMIT, SweepAxis.CW_MIN)


@dataclass(frozen=True)
class SweepSpec:
    """One axis swept over values, model and simulation side by side.

    values are in display units (density per km^2). flight_length is a floor;
    each point also gets at least ten radii and min_sim_seconds of travel.
    """

    axis: SweepAxis
    values: tuple[float, ...]
    base: Scenario
    modes: tuple[AccessMode, ...] = (AccessMode.BASIC,)
    n_seeds: int = 20
    solver: SolverOptions = field(default_factory=SolverOptions)
    flight_length: float = 10000.0   # [m]
    warmup_time: float = 250.0       # [s]
    max_time: float = 4000.0         # [s]
    min_sim_seconds: float = 900.0   # [s]
    seed: int = 1
    min_events: int = 100_000

    def __post_init__(self):
        if not self.values:
            raise ValueError("values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"values must be strictly increasing, got {self.values}")
        if not self.modes:
            raise ValueError("modes must be nonempty")
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")


def apply_axis(scenario: Scenario, axis: SweepAxis, value: float) -> Scenario:
    """Scenario with the swept parameter replaced by value (display units)."""
    if axis in _INTEGER_AXES:
        if value != int(value):
            raise ValueError(f"{axis.value} takes integer values, got {value}")
        value = int(value)
    if axis is SweepAxis.VELOCITY:
        return replace(scenario, velocity=value)
    if axis is SweepAxis.DENSITY:
        return replace(scenario, density=value * _PER_KM2)
    if axis is SweepAxis.RADIUS:
        return replace(scenario, radius=value)
    if axis is SweepAxis.RETRY_LIMIT:
        return replace(scenario, schedule=replace(scenario.schedule, retry_limit=value))
    return replace(scenario, schedule=replace(scenario.schedule, cw_min=value))


@dataclass(frozen=True)
class SweepRow:
    """One (axis value, access mode) comparison point."""

    axis: SweepAxis
    value: float
    mode: AccessMode
    s_model: float        # nan when the solver failed
    s_sim_mean: float
    s_sim_ci95: float     # half width
    abs_err: float
    rel_err: float
    iters_outer: int
    iters_inner: int
    n_clusters: int
    note: str = ""


def _in_mode(scenario: Scenario, mode: AccessMode) -> Scenario:
    return replace(scenario, timing=replace(scenario.timing, access_mode=mode))


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Model and simulation at every (mode, value) point.

    Solver failures are recorded in the row (nan model columns, diagnostic
    note) and the sweep continues.
    """
    rows = []
    for mode in spec.modes:
        for value in spec.values:
            scenario = apply_axis(_in_mode(spec.base, mode), spec.axis, value)
            s_model = math.nan
            iters_outer = iters_inner = 0
            n_clusters = 0
            note = ""
            try:
                solution = solve_fixed_point(scenario, spec.solver)
                s_model = solution.throughput
                iters_outer, iters_inner = solution.iterations
                n_clusters = len(solution.clusters)
            except (ConvergenceError, InfeasibleScenarioError) as exc:
                note = f"solver: {exc}"
            flight = max(spec.flight_length, 10.0 * scenario.radius,
                         scenario.velocity * spec.min_sim_seconds + scenario.radius)
            sim = replicate(
                SimConfig(scenario=scenario, flight_length=flight,
                          warmup_time=spec.warmup_time, seed=spec.seed,
                          max_time=spec.max_time, min_events=spec.min_events),
                spec.n_seeds)
            abs_err = abs(s_model - sim.mean)
            rel_err = abs_err / sim.mean if sim.mean else math.nan
            rows.append(SweepRow(
                axis=spec.axis, value=value, mode=mode, s_model=s_model,
                s_sim_mean=sim.mean, s_sim_ci95=sim.ci95, abs_err=abs_err,
                rel_err=rel_err, iters_outer=iters_outer,
                iters_inner=iters_inner, n_clusters=n_clusters, note=note))
    return rows


class Trend(Enum):
    DECREASING = "decreasing"
    INCREASING = "increasing"


@dataclass(frozen=True)
class TrendViolation:
    index: int            # position of the second point of the offending pair
    value_a: float
    value_b: float
    s_a: float
    s_b: float
    within_ci: bool       # simulation intervals of the pair overlap


@dataclass(frozen=True)
class TrendVerdict:
    """pass: strictly monotone; warn: violations only where the simulation
    intervals overlap; fail: otherwise."""

    status: str
    violations: tuple[TrendViolation, ...]

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "warn")


def trend_check(rows: list[SweepRow], expected: Trend) -> TrendVerdict:
    """Check strict monotonicity of the model throughput along the rows.

    Rows must already be one (axis, mode) series in increasing value order.
    """
    if len({(r.axis, r.mode) for r in rows}) > 1:
        raise ValueError("trend_check expects a single (axis, mode) series")
    violations = []
    for i in range(1, len(rows)):
        a, b = rows[i - 1], rows[i]
        good = b.s_model < a.s_model if expected is Trend.DECREASING else b.s_model > a.s_model
        if math.isnan(a.s_model) or math.isnan(b.s_model):
            good = False
        if good:
            continue
        overlap = False
        if not (math.isnan(a.s_sim_ci95) or math.isnan(b.s_sim_ci95)):
            overlap = (abs(a.s_sim_mean - b.s_sim_mean)
                       <= a.s_sim_ci95 + b.s_sim_ci95)
        violations.append(TrendViolation(
            index=i, value_a=a.value, value_b=b.value,
            s_a=a.s_model, s_b=b.s_model, within_ci=overlap))
    if not violations:
        return TrendVerdict("pass", ())
    status = "warn" if all(v.within_ci for v in violations) else "fail"
    return TrendVerdict(status, tuple(violations))


@dataclass(frozen=True)
class AgreementSummary:
    n_points: int
    n_failed: int          # rows without a model value
    max_abs_err: float
    mean_abs_err: float
    fraction_in_ci: float  # target >= 0.8


def agreement_report(rows: list[SweepRow]) -> AgreementSummary:
    """Model-versus-simulation errors over the rows; failed rows count
    against the in-interval fraction."""
    if not rows:
        raise ValueError("agreement_report needs at least one row")
    n_failed = sum(1 for r in rows if math.isnan(r.s_model))
    errs = [r.abs_err for r in rows if not math.isnan(r.s_model)]
    in_ci = [r for r in rows
             if not math.isnan(r.s_model) and not math.isnan(r.s_sim_ci95)
             and r.abs_err <= r.s_sim_ci95]
    return AgreementSummary(
        n_points=len(rows), n_failed=n_failed,
        max_abs_err=max(errs) if errs else math.nan,
        mean_abs_err=sum(errs) / len(errs) if errs else math.nan,
        fraction_in_ci=len(in_ci) / len(rows))
