"""Saturation throughput of CSMA/CA data collection under a moving circular
coverage area: per-band fixed-point model, slotted Monte Carlo simulator, and
sweep tooling comparing the two."""

from .acceptance import CheckResult, format_result, run_check, run_checks
from .config import RunConfig, load_config, parse_config, serialize_config
from .coverage import (
    Cluster,
    ClusterSet,
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
from .errors import (
    ConfigError,
    ConvergenceError,
    FreezeDivergenceError,
    InfeasibleScenarioError,
    OutOfCoverageError,
    UndefinedMixtureError,
)
from .experiments import (
    AgreementSummary,
    SweepAxis,
    SweepRow,
    SweepSpec,
    Trend,
    TrendVerdict,
    agreement_report,
    apply_axis,
    run_sweep,
    trend_check,
)
from .model import (
    ClusterState,
    FixedCountSolution,
    ModelSolution,
    QuitMode,
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
from .reporting import (
    SWEEP_CSV_HEADER,
    format_sweep_rows,
    read_sweep_csv,
    render_sweep_chart,
    write_charts,
    write_sweep_csv,
)
from .simulator import (
    ReplicateSummary,
    SimConfig,
    SimDevice,
    SimReport,
    Simulation,
    replicate,
    run,
)
from .timing import (
    AccessMode,
    BackoffSchedule,
    MacTiming,
    busy_collision_time,
    busy_success_time,
    mean_backoff_counter,
    mean_freeze_time,
    post_collision_wait,
    traversal_cost,
)

__version__ = "0.1.0"

__all__ = [
    "AccessMode", "AgreementSummary", "BackoffSchedule", "CheckResult",
    "Cluster",
    "ClusterSet", "ClusterState", "ConfigError", "ConvergenceError",
    "FixedCountSolution", "FreezeDivergenceError", "InfeasibleScenarioError",
    "MacTiming", "ModelSolution", "OutOfCoverageError", "QuitMode",
    "ReplicateSummary", "RunConfig", "SWEEP_CSV_HEADER", "Scenario",
    "SimConfig", "SimDevice", "SimReport", "Simulation", "SolverOptions",
    "SweepAxis", "SweepRow", "SweepSpec", "Trend", "TrendVerdict",
    "UndefinedMixtureError", "agreement_report", "apply_axis",
    "build_clusters", "busy_collision_time", "busy_probability",
    "busy_success_time", "chord_duration", "disk_band_area",
    "expected_silence", "expected_silence_tagged",
    "expected_single_transmitter", "format_result", "format_sweep_rows",
    "load_config",
    "mean_backoff_counter", "mean_freeze_time", "parse_config",
    "poisson_weight", "post_collision_wait", "quitting_probability",
    "read_sweep_csv", "render_sweep_chart", "replicate", "run", "run_check",
    "run_checks", "run_sweep",
    "saturation_throughput", "serialize_config", "solve_fixed_count",
    "solve_fixed_point", "solve_partition", "stationary_b00",
    "stationary_distribution", "success_probabilities", "transmission_probability",
    "traversal_cost", "traversal_count", "trend_check", "write_charts",
    "write_sweep_csv",
]
