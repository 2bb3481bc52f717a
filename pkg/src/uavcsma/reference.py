"""Independent reference implementations used for validation.

Everything here recomputes a quantity the main modules obtain in closed or
iterated form, through a different route: truncated series against closed
forms, a dense stationary solve against the chain algebra, numerical
quadrature against the band-area antiderivative, and a bisected two-equation
fixed point against the vector solver. Nothing in this module is called by
the model itself.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .timing import BackoffSchedule, MacTiming, busy_collision_time, busy_success_time


def _poisson_terms(mean_count: float):
    """Yield (n, pmf(n)) up to mean + 20 sqrt(mean), at least 50 terms."""
    cutoff = max(50, int(mean_count + 20.0 * math.sqrt(mean_count)) + 1)
    log_mu = math.log(mean_count) if mean_count > 0 else -math.inf
    for n in range(cutoff + 1):
        if mean_count == 0.0:
            yield n, 1.0 if n == 0 else 0.0
            continue
        yield n, math.exp(n * log_mu - mean_count - math.lgamma(n + 1))


def silence_series(mean_count: float, tau: float) -> float:
    """Sum of pmf(n) (1-tau)^n by direct truncation."""
    return sum(w * (1.0 - tau) ** n for n, w in _poisson_terms(mean_count))


def tagged_silence_series(mean_count: float, tau: float) -> float:
    """Sum of pmf(n) (1-tau)^(n-1) over n >= 1 by direct truncation."""
    return sum(w * (1.0 - tau) ** (n - 1)
               for n, w in _poisson_terms(mean_count) if n >= 1)


def single_transmitter_series(mean_count: float, tau: float) -> float:
    """Sum of pmf(n) n tau (1-tau)^(n-1) by direct truncation."""
    return sum(w * n * tau * (1.0 - tau) ** (n - 1)
               for n, w in _poisson_terms(mean_count) if n >= 1)


def band_area_quadrature(radius: float, x_lo: float, x_hi: float) -> float:
    """Area of the band x_lo < |x| <= x_hi by adaptive quadrature of the
    chord length."""
    value, _ = integrate.quad(
        lambda x: 2.0 * math.sqrt(max(0.0, radius * radius - x * x)),
        x_lo, x_hi, limit=200)
    return 2.0 * value


def chain_states(schedule: BackoffSchedule) -> list[tuple[int, int]]:
    """Enumerate (stage, counter) states of the backoff chain."""
    return [(j, k) for j, w in enumerate(schedule.windows()) for k in range(w)]


def chain_transition_matrix(schedule: BackoffSchedule, p_eq: float) -> np.ndarray:
    """Dense one-step transition matrix of the backoff chain.

    Counters decrement unconditionally; a transmission (counter zero) either
    concludes with probability 1 - p_eq or advances the stage, and the final
    stage always concludes. Conclusions restart at stage zero with a uniform
    counter.
    """
    states = chain_states(schedule)
    index = {s: i for i, s in enumerate(states)}
    windows = schedule.windows()
    last = schedule.retry_limit
    P = np.zeros((len(states), len(states)))
    for (j, k), row in ((s, index[s]) for s in states):
        if k > 0:
            P[row, index[(j, k - 1)]] = 1.0
            continue
        w0 = windows[0]
        if j == last:
            for kk in range(w0):
                P[row, index[(0, kk)]] = 1.0 / w0
            continue
        for kk in range(w0):
            P[row, index[(0, kk)]] = (1.0 - p_eq) / w0
        w_next = windows[j + 1]
        for kk in range(w_next):
            P[row, index[(j + 1, kk)]] += p_eq / w_next
    return P


def chain_stationary_dense(schedule: BackoffSchedule, p_eq: float) -> dict:
    """Stationary distribution of the dense chain via a linear solve.

    Returns the stationary mass of every state plus the marginal of the
    transmission column (counter zero per stage).
    """
    P = chain_transition_matrix(schedule, p_eq)
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    states = chain_states(schedule)
    by_state = {s: pi[i] for i, s in enumerate(states)}
    column = [by_state[(j, 0)] for j in range(schedule.retry_limit + 1)]
    return {"by_state": by_state, "transmission_column": column,
            "b00": by_state[(0, 0)], "total": float(pi.sum())}


def _fixed_count_tau(p: float, schedule: BackoffSchedule) -> float:
    """Transmit probability of the chain at failure probability p, written as
    the ratio of geometric sums rather than a running accumulation."""
    L = schedule.retry_limit
    windows = schedule.windows()
    if p == 1.0:
        return 0.0
    attempts = (1.0 - p ** (L + 1)) / (1.0 - p)
    norm = sum(p ** j * (windows[j] + 1) / 2.0 for j in range(L + 1))
    return attempts / norm


def fixed_count_fixed_point(n: int, schedule: BackoffSchedule,
                            tol: float = 1e-14) -> tuple[float, float]:
    """Classical two-equation saturation fixed point for n devices, solved by
    bisection on the collision probability. Returns (tau, p)."""
    if n < 1:
        raise ValueError(f"need at least one device, got {n}")
    if n == 1:
        return _fixed_count_tau(0.0, schedule), 0.0

    def gap(p):
        tau = _fixed_count_tau(p, schedule)
        return p - (1.0 - (1.0 - tau) ** (n - 1))

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    p = 0.5 * (lo + hi)
    return _fixed_count_tau(p, schedule), p


def fixed_count_throughput(n: int, schedule: BackoffSchedule,
                           timing: MacTiming) -> float:
    """Classical n-device saturation throughput from the bisected fixed point."""
    tau, _ = fixed_count_fixed_point(n, schedule)
    p_tr = 1.0 - (1.0 - tau) ** n
    if p_tr == 0.0:
        return 0.0
    p_s_cond = n * tau * (1.0 - tau) ** (n - 1) / p_tr
    t_s = busy_success_time(timing)
    t_c = busy_collision_time(timing)
    slot = ((1.0 - p_tr) * timing.delta_idle + p_s_cond * p_tr * t_s
            + p_tr * (1.0 - p_s_cond) * t_c)
    return p_s_cond * p_tr * timing.t_payload / slot
