"""Fixed-point saturation model on the traversal-count partition.

Each band of the coverage disk carries one class of devices sharing a
transmit probability tau. The inner loop solves the coupled per-band
equations (busy probability, quit probability, backoff chain) on a fixed
partition; the outer loop updates the traversal cost that defines the
partition until both agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .coverage import (
    NEGLIGIBLE_MEAN_COUNT,
    ClusterSet,
    Scenario,
    build_clusters,
    expected_silence_tagged,
)
from .errors import ConvergenceError, FreezeDivergenceError, InfeasibleScenarioError
from .timing import (
    BackoffSchedule,
    MacTiming,
    busy_collision_time,
    busy_success_time,
    traversal_cost,
)


class QuitMode(Enum):
    """Completion signal feeding the quit law.

    STATIONARY reads it as the stationary mass of the final transmission
    state, so the quit probability couples back into the chain; DISABLED
    turns quitting off (the reference behaviour for fixed populations).
    """

    STATIONARY = "stationary"
    DISABLED = "disabled"


@dataclass(frozen=True)
class SolverOptions:
    inner_tol: float = 1e-10
    inner_max_iter: int = 10000
    damping: float = 0.5
    outer_tol: float = 1e-6
    outer_max_iter: int = 100
    outer_damping: float = 0.5
    conditional_success: bool = True
    quit_mode: QuitMode = QuitMode.STATIONARY


@dataclass(frozen=True)
class ClusterState:
    """Converged per-band probabilities."""

    tau: float            # transmit probability in a countdown slot
    q_busy: float         # slot sensed busy during countdown
    quit: float           # leaves coverage before the attempt concludes
    p_eq: float           # effective stage-advance probability
    b00: float            # stationary mass of the first transmission state
    p_reach_last: float   # completion signal feeding the quit law


@dataclass(frozen=True)
class ModelSolution:
    clusters: tuple[ClusterState, ...]
    cluster_set: ClusterSet
    delta: float                  # [us] converged traversal cost
    p_tr: float                   # some transmission in a slot
    p_s: float                    # exactly one transmission in a slot
    throughput: float
    residuals: dict[str, float]
    iterations: tuple[int, int]   # (outer, summed inner)
    diagnostics: dict = field(default_factory=dict)


def quitting_probability(p_reach_last: float, traversals: int) -> float:
    """Probability the device leaves coverage before its attempt concludes:
    (1 - p)^m over m independent traversals."""
    if traversals < 1:
        raise ValueError(f"traversals must be >= 1, got {traversals}")
    if not 0.0 <= p_reach_last <= 1.0:
        raise ValueError(f"p_reach_last must lie in [0, 1], got {p_reach_last}")
    return (1.0 - p_reach_last) ** traversals


def _busy_vector(mus: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Per-band probability that a countdown slot is sensed busy.

    Bands below the negligible intensity are excluded from every product,
    including their own tagged factor, so an empty network senses q = 0.
    """
    kept = mus >= NEGLIGIBLE_MEAN_COUNT
    load = np.where(kept, mus * taus, 0.0)
    others = np.exp(-(load.sum() - load))
    tagged = np.where(kept, expected_silence_tagged(mus, taus), 1.0)
    return np.clip(1.0 - others * tagged, 0.0, 1.0)


def busy_probability(clusters: ClusterSet, taus) -> np.ndarray:
    """Per-band busy probability given each band's transmit probability."""
    mus = clusters.mean_counts()
    taus = np.asarray(taus, dtype=float)
    if taus.shape != mus.shape:
        raise ValueError(f"expected {mus.shape[0]} transmit probabilities, got {taus.shape}")
    return _busy_vector(mus, taus)


def stationary_b00(p_eq: float, q: float, quit: float,
                   schedule: BackoffSchedule) -> float:
    """Stationary mass of the first transmission state of the backoff chain.

    The normalization sum p_eq^j (W_j + 1)/2 over stages is evaluated
    directly: it has no removable singularity at p_eq = 1/2 and it honors
    capped window schedules. q and quit enter the chain only through
    p_eq = q + quit (1 - q), so they are checked for consistency here and
    otherwise unused. p_eq = 1 pins the chain in its final stage and the
    first transmission state carries no mass.
    """
    for name, value in (("p_eq", p_eq), ("q", q), ("quit", quit)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    if abs(p_eq - (q + quit * (1.0 - q))) > 1e-9:
        raise ValueError(
            f"p_eq = {p_eq} is not consistent with q = {q}, quit = {quit}")
    if p_eq >= 1.0:
        return 0.0
    denom = 0.0
    power = 1.0
    for w in schedule.windows():
        denom += power * (w + 1) / 2.0
        power *= p_eq
    return 1.0 / denom


def stationary_distribution(p_eq: float, q: float, quit: float,
                            schedule: BackoffSchedule) -> list[np.ndarray]:
    """Full stationary vector of the chain, one array of counter masses per
    stage; b_{j,k} = b_{j,0} (W_j - k)/W_j with b_{j,0} = p_eq^j b00."""
    b00 = stationary_b00(p_eq, q, quit, schedule)
    stages = []
    for j, w in enumerate(schedule.windows()):
        k = np.arange(w)
        stages.append(b00 * p_eq ** j * (w - k) / w)
    return stages


def _chain_vectors(p_eq: np.ndarray, windows: np.ndarray):
    """b00, tau and the stationary mass of the last transmission state for a
    vector of stage-advance probabilities."""
    stages = np.arange(len(windows))
    powers = np.power(p_eq[:, None], stages[None, :])      # (n, L+1)
    denom = powers @ ((windows + 1) / 2.0)
    degenerate = p_eq >= 1.0
    b00 = np.where(degenerate, 0.0, 1.0 / denom)
    tau = b00 * powers.sum(axis=1)
    p_last_state = b00 * np.where(degenerate, 0.0, p_eq ** (len(windows) - 1))
    return b00, tau, p_last_state


def solve_partition(cluster_set: ClusterSet, schedule: BackoffSchedule,
                    options: SolverOptions | None = None):
    """Damped fixed-point solve of the per-band equations on a fixed
    partition.

    Returns (states, residuals, iterations). Raises ConvergenceError with the
    last residuals when the iteration cap is hit.
    """
    options = options or SolverOptions()
    mus = cluster_set.mean_counts()
    traversals = cluster_set.traversals().astype(float)
    windows = np.array(schedule.windows(), dtype=float)
    n = len(mus)
    if n == 0:
        raise ValueError("partition holds no bands")

    # deserted bands sit on the q = Q = 0 branch: no dynamics, idle chain
    kept = mus >= NEGLIGIBLE_MEAN_COUNT
    w0 = windows[0]
    idle_tau = 2.0 / (w0 + 1.0)
    tau = np.full(n, idle_tau)
    q = np.zeros(n)
    quit_p = np.zeros(n)
    alpha = options.damping
    mode = options.quit_mode

    def updates(tau, q, quit_p):
        p_eq = np.clip(q + quit_p * (1.0 - q), 0.0, 1.0)
        b00, tau_c, p_last = _chain_vectors(p_eq, windows)
        tau_c = np.where(kept, tau_c, idle_tau)
        q_c = np.where(kept, _busy_vector(mus, tau), 0.0)
        if mode is QuitMode.DISABLED:
            quit_c = np.zeros(n)
        else:
            quit_c = np.where(kept, (1.0 - p_last) ** traversals, 0.0)
        return p_eq, b00, p_last, tau_c, q_c, quit_c

    iterations = 0
    residual = math.inf
    for iterations in range(1, options.inner_max_iter + 1):
        _, _, _, tau_new, q_new, quit_new = updates(tau, q, quit_p)
        residual = max(np.abs(tau_new - tau).max(),
                       np.abs(q_new - q).max(),
                       np.abs(quit_new - quit_p).max())
        if residual < options.inner_tol:
            # report the iterate the residuals were measured at
            break
        tau = tau + alpha * (tau_new - tau)
        q = q + alpha * (q_new - q)
        quit_p = quit_p + alpha * (quit_new - quit_p)
    else:
        raise ConvergenceError(
            f"inner loop still moving after {options.inner_max_iter} iterations "
            f"(residual {residual:.3e})",
            residuals={"inner": residual}, iterations=options.inner_max_iter)

    p_eq, b00, p_last_state, tau_c, q_c, quit_c = updates(tau, q, quit_p)
    states = tuple(
        ClusterState(tau=float(tau[i]), q_busy=float(q[i]), quit=float(quit_p[i]),
                     p_eq=float(p_eq[i]), b00=float(b00[i]),
                     p_reach_last=float(p_last_state[i]))
        for i in range(n))
    residuals = {
        "tau": float(np.abs(tau_c - tau).max()),
        "q_busy": float(np.abs(q_c - q).max()),
        "quit": float(np.abs(quit_c - quit_p).max()),
    }
    return states, residuals, iterations


def transmission_probability(clusters: ClusterSet, taus) -> float:
    """Probability at least one device transmits in a slot: 1 - exp(-M) with
    M the summed per-band load mu tau."""
    taus = np.asarray(taus, dtype=float)
    load = float(clusters.mean_counts() @ taus)
    return float(-np.expm1(-load))


def success_probabilities(clusters: ClusterSet, taus) -> np.ndarray:
    """Per-band probability that a slot carries exactly one transmission and
    it originates in that band: mu_i tau_i exp(-M)."""
    mus = clusters.mean_counts()
    taus = np.asarray(taus, dtype=float)
    load = mus * taus
    return load * np.exp(-load.sum())


def saturation_throughput(p_tr: float, p_s: float, timing: MacTiming,
                          conditional: bool = True) -> float:
    """Fraction of channel time carrying payload bits.

    With conditional=True the success weight inside a busy slot is
    p_s / p_tr; otherwise p_s is used as the weight directly.
    """
    if not 0.0 <= p_s <= 1.0 or not 0.0 <= p_tr <= 1.0:
        raise ValueError(f"probabilities must lie in [0, 1], got p_tr={p_tr}, p_s={p_s}")
    if p_s > p_tr:
        raise ValueError(f"p_s = {p_s} cannot exceed p_tr = {p_tr}")
    if p_tr == 0.0:
        return 0.0
    weight = min(1.0, p_s / p_tr) if conditional else p_s
    t_s = busy_success_time(timing)
    t_c = busy_collision_time(timing)
    useful = weight * p_tr * timing.t_payload
    slot = ((1.0 - p_tr) * timing.delta_idle
            + weight * p_tr * t_s
            + p_tr * (1.0 - weight) * t_c)
    return useful / slot


@dataclass(frozen=True)
class FixedCountSolution:
    """Saturation state of a fixed, always-covered population."""

    n: int
    tau: float
    q_busy: float
    p_tr: float
    p_s: float
    throughput: float
    iterations: int
    residual: float


def solve_fixed_count(n: int, schedule: BackoffSchedule, timing: MacTiming,
                      options: SolverOptions | None = None) -> FixedCountSolution:
    """Solve the saturation fixed point for exactly n permanently covered
    devices: quitting off, the busy probability seen by a tagged device being
    1 - (1 - tau)^(n-1)."""
    if n < 1:
        raise ValueError(f"need at least one device, got {n}")
    options = options or SolverOptions()
    windows = np.array(schedule.windows(), dtype=float)
    tau = np.array([2.0 / (windows[0] + 1.0)])
    q = np.array([0.0])
    alpha = options.damping
    residual = math.inf
    for iterations in range(1, options.inner_max_iter + 1):
        _, tau_new, _ = _chain_vectors(q, windows)
        q_new = 1.0 - (1.0 - tau) ** (n - 1)
        residual = max(abs(float(tau_new[0] - tau[0])), abs(float(q_new[0] - q[0])))
        if residual < options.inner_tol:
            break
        tau = tau + alpha * (tau_new - tau)
        q = q + alpha * (q_new - q)
    else:
        raise ConvergenceError(
            f"fixed-count loop still moving after {options.inner_max_iter} iterations",
            residuals={"inner": residual}, iterations=options.inner_max_iter)
    t = float(tau[0])
    p_tr = 1.0 - (1.0 - t) ** n
    p_s = n * t * (1.0 - t) ** (n - 1)
    throughput = saturation_throughput(p_tr, p_s, timing,
                                       conditional=options.conditional_success)
    return FixedCountSolution(n=n, tau=t, q_busy=float(q[0]), p_tr=p_tr, p_s=p_s,
                              throughput=throughput, iterations=iterations,
                              residual=residual)


def _freeze_free_delta(timing: MacTiming, schedule: BackoffSchedule) -> float:
    return traversal_cost(timing, schedule, 0.0, 1.0, 1.0)


def _mean_delta(states, mus: np.ndarray, timing: MacTiming,
                schedule: BackoffSchedule, p_tr: float, p_s: float) -> float:
    """Device-weighted mean traversal cost across bands, in us.

    The busy-type split seen by a frozen device is the network-wide
    conditional success fraction p_s / p_tr.
    """
    total = mus.sum()
    if total < NEGLIGIBLE_MEAN_COUNT or p_tr <= 0.0:
        return _freeze_free_delta(timing, schedule)
    ratio = min(1.0, p_s / p_tr)
    costs = np.array([
        traversal_cost(timing, schedule, s.q_busy, ratio * s.q_busy, s.q_busy)
        for s in states])
    return float(mus @ costs / total)


# Iterates are clamped this fraction short of the longest chord so the
# innermost band keeps measurable area (about 4 R^2 sqrt(2 eps), a few
# devices at typical densities) instead of degenerating to a hairline.
_CAP_MARGIN = 1e-3

# outer iterations of plain damping before a bracketing rescue is considered
_RESCUE_AFTER = 8

# Resolution cap on the lateral partition. Slow, wide scenarios can ask for
# hundreds of millions of bands on the first iterate; past this depth the
# innermost band absorbs the remaining offsets (build_clusters already gives
# band n the whole core, so its traversal count becomes a lower bound).
_MAX_BANDS = 4096


def solve_fixed_point(scenario: Scenario,
                      options: SolverOptions | None = None) -> ModelSolution:
    """Solve the coupled partition / per-band fixed point for a scenario.

    The outer loop updates the traversal cost (which defines the partition)
    with damping until its relative change drops below outer_tol and the band
    count is stable. Two rescues keep the loop on the rails: an oscillating
    band count is pinned at the smaller value, and a traversal-cost update
    map too steep for damping (its slope near the root can pass -1) falls
    back to bisection once a sign change of delta_new - delta is bracketed.
    Damped iterates are clamped just under the longest-chord duration so a
    transient overshoot cannot empty the partition; a scenario that still
    pushes past the chord once pinned there has no covered fixed point and
    is rejected.
    """
    options = options or SolverOptions()
    timing, schedule = scenario.timing, scenario.schedule
    delta_us = _freeze_free_delta(timing, schedule)
    chord_us = 2.0 * scenario.radius / scenario.velocity * 1e6
    cap_us = chord_us * (1.0 - _CAP_MARGIN)
    at_cap = False
    pinned_n = None
    bracket_lo = bracket_hi = None   # g = delta_new - delta: g(lo) > 0 > g(hi)
    bisections = 0
    n_history: list[int] = []
    inner_total = 0
    diagnostics: dict = {}

    outer = 0
    cluster_set = None
    states = residuals = None
    p_tr = p_s = 0.0
    converged = False
    for outer in range(1, options.outer_max_iter + 1):
        request = _MAX_BANDS if pinned_n is None else min(pinned_n, _MAX_BANDS)
        cluster_set = build_clusters(scenario, delta_us * 1e-6, n_clusters=request)
        n_now = len(cluster_set.clusters)
        n_history.append(n_now)
        states, residuals, inner = solve_partition(cluster_set, schedule, options)
        inner_total += inner
        taus = np.array([s.tau for s in states])
        mus = cluster_set.mean_counts()
        p_tr = transmission_probability(cluster_set, taus)
        p_s = float(success_probabilities(cluster_set, taus).sum())
        try:
            delta_new = _mean_delta(states, mus, timing, schedule, p_tr, p_s)
        except FreezeDivergenceError:
            # a fully busy band (q = 1) never completes a counter tick; let
            # the cap logic decide whether shedding rim bands rescues it
            delta_new = math.inf
        rel_change = abs(delta_new - delta_us) / delta_us
        n_stable = len(n_history) >= 2 and n_history[-1] == n_history[-2]
        if rel_change < options.outer_tol and (n_stable or outer == 1):
            converged = True
            break
        if (pinned_n is None and len(n_history) >= 4
                and n_history[-1] == n_history[-3]
                and n_history[-2] == n_history[-4]
                and n_history[-1] != n_history[-2]):
            pinned_n = min(n_history[-1], n_history[-2])
            diagnostics["pinned_n"] = pinned_n
            # folded partitions follow a different update map; stale
            # bracketing points no longer apply to it
            bracket_lo = bracket_hi = None
            at_cap = False
        if delta_new > delta_us:
            if bracket_hi is None or delta_us < bracket_hi:
                bracket_lo = (delta_us if bracket_lo is None
                              else max(bracket_lo, delta_us))
        else:
            bracket_hi = (delta_us if bracket_hi is None
                          else min(bracket_hi, delta_us))
        can_bisect = (bracket_lo is not None and bracket_hi is not None
                      and bracket_lo < bracket_hi)
        if can_bisect and (outer >= _RESCUE_AFTER or bisections):
            delta_us = 0.5 * (bracket_lo + bracket_hi)
            bisections += 1
            continue
        damped = delta_us + options.outer_damping * (delta_new - delta_us)
        if damped >= cap_us:
            if at_cap:
                raise InfeasibleScenarioError(
                    f"traversal cost settles at {delta_new * 1e-6:.3f} s, "
                    f"longer than the longest chord of {chord_us * 1e-6:.3f} s")
            damped = cap_us
            at_cap = True
        else:
            at_cap = False
        delta_us = damped

    residuals = dict(residuals or {})
    residuals["delta"] = rel_change
    if not converged:
        raise ConvergenceError(
            f"outer loop still moving after {options.outer_max_iter} iterations",
            residuals=residuals, iterations=(outer, inner_total))

    diagnostics["n_history"] = tuple(n_history)
    if bisections:
        diagnostics["bisections"] = bisections
    if len(cluster_set.clusters) >= _MAX_BANDS:
        diagnostics["folded"] = True
    throughput = saturation_throughput(p_tr, p_s, timing,
                                       conditional=options.conditional_success)
    return ModelSolution(
        clusters=states, cluster_set=cluster_set, delta=delta_us,
        p_tr=p_tr, p_s=p_s, throughput=throughput, residuals=residuals,
        iterations=(outer, inner_total), diagnostics=diagnostics)
