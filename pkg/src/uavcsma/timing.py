"""MAC timing: busy-period durations, backoff schedule, per-traversal cost.

Protocol constants are integer microseconds; derived expectations are floats
in the same unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import FreezeDivergenceError, UndefinedMixtureError


class AccessMode(Enum):
    """Channel access mechanism."""

    BASIC = "basic"
    RTSCTS = "rtscts"


_DURATION_FIELDS = (
    "delta_idle", "sifs", "difs", "t_header", "t_payload", "t_ack",
    "t_rts", "t_cts", "t_ack_timeout", "t_cts_timeout", "prop_delay",
)


@dataclass(frozen=True)
class MacTiming:
    """Channel timing constants.

    prop_delay is the propagation allowance folded into busy periods; the
    idle slot consumed by backoff countdown is delta_idle.
    """

    delta_idle: int = 50        # [us]
    sifs: int = 28              # [us]
    difs: int = 128             # [us]
    t_header: int = 400         # [us] PHY+MAC header at base rate
    t_payload: int = 65536      # [us] 8 kB payload at 1 Mbit/s
    t_ack: int = 112            # [us]
    t_rts: int = 160            # [us]
    t_cts: int = 112            # [us]
    t_ack_timeout: int = 300    # [us]
    t_cts_timeout: int = 300    # [us]
    prop_delay: int = 1         # [us]
    access_mode: AccessMode = AccessMode.BASIC

    def validate(self) -> "MacTiming":
        """Reject degenerate values. Called when loading user configuration,
        not on construction, so tests may build reduced timings freely."""
        for name in _DURATION_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ValueError(
                    f"{name} must be a positive integer microsecond count, got {value!r}")
        if busy_success_time(self) <= busy_collision_time(self):
            raise ValueError(
                "successful exchange must occupy the channel longer than a collision")
        return self


def busy_success_time(timing: MacTiming) -> int:
    """Channel occupancy of one successful exchange, in us."""
    t = timing
    if t.access_mode is AccessMode.BASIC:
        return (t.t_header + t.t_payload + t.sifs + t.t_ack + t.difs
                + 2 * t.prop_delay)
    return (t.t_rts + t.t_cts + t.t_header + t.t_payload + 3 * t.sifs
            + t.t_ack + t.difs)


def busy_collision_time(timing: MacTiming) -> int:
    """Channel occupancy of a collided attempt, in us.

    Under handshake access the cost is the RTS plus the ACK-sized wait the
    listeners observe before the channel is declared free again.
    """
    t = timing
    if t.access_mode is AccessMode.BASIC:
        return t.t_header + t.t_payload + t.difs + t.prop_delay
    return t.t_rts + t.sifs + t.t_ack + t.difs


def post_collision_wait(timing: MacTiming) -> int:
    """Dead time the collided transmitter itself spends waiting on the missing
    reply before resuming backoff, in us."""
    if timing.access_mode is AccessMode.BASIC:
        return timing.sifs + timing.t_ack_timeout
    return timing.sifs + timing.t_cts_timeout


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class BackoffSchedule:
    """Binary exponential backoff; the window doubles per stage up to an
    optional cap and the packet is dropped after retry_limit failed attempts."""

    cw_min: int = 8
    retry_limit: int = 7
    cw_max: int | None = None

    def __post_init__(self):
        if not isinstance(self.cw_min, int) or self.cw_min < 2 or not _is_pow2(self.cw_min):
            raise ValueError(f"cw_min must be a power of two >= 2, got {self.cw_min!r}")
        if not isinstance(self.retry_limit, int) or self.retry_limit < 0:
            raise ValueError(f"retry_limit must be a nonnegative integer, got {self.retry_limit!r}")
        if self.cw_max is not None:
            if (not isinstance(self.cw_max, int) or self.cw_max < self.cw_min
                    or not _is_pow2(self.cw_max)):
                raise ValueError(
                    f"cw_max must be a power of two >= cw_min, got {self.cw_max!r}")

    def window(self, stage: int) -> int:
        """Contention window at the given backoff stage."""
        if not 0 <= stage <= self.retry_limit:
            raise ValueError(f"stage must lie in [0, {self.retry_limit}], got {stage}")
        w = self.cw_min << stage
        if self.cw_max is not None:
            w = min(w, self.cw_max)
        return w

    def windows(self) -> tuple[int, ...]:
        """Window sizes for every stage, first to last."""
        return tuple(self.window(j) for j in range(self.retry_limit + 1))


def mean_backoff_counter(schedule: BackoffSchedule) -> float:
    """Expected number of countdown slots over one pass through all stages,
    (W_j - 1)/2 summed over stages."""
    return sum((w - 1) / 2.0 for w in schedule.windows())


def mean_freeze_time(mean_counter: float, q: float) -> float:
    """Expected number of freezes across mean_counter countdown slots when
    each slot sees the channel busy with probability q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"busy probability must lie in [0, 1], got {q}")
    if q == 1.0:
        raise FreezeDivergenceError(
            "busy probability 1 would freeze the countdown forever")
    return mean_counter * q / (1.0 - q)


def traversal_cost(timing: MacTiming, schedule: BackoffSchedule,
                   q: float, p_s: float, p_b: float) -> float:
    """Expected time for one pass through every backoff stage, in us.

    Countdown slots cost the idle slot each; every freeze costs a busy period
    that is a success with probability p_s/p_b and a collision otherwise; the
    device's own failed attempts (one per stage advance) each cost a collision
    plus the reply timeout.
    """
    if not 0.0 <= p_s <= p_b <= 1.0:
        raise ValueError(f"need 0 <= p_s <= p_b <= 1, got p_s={p_s}, p_b={p_b}")
    eb = mean_backoff_counter(schedule)
    ef = mean_freeze_time(eb, q)
    if p_b == 0.0:
        if ef > 0.0:
            raise UndefinedMixtureError(
                "freezes occur (q > 0) but the busy-type mixture p_s/p_b is undefined")
        frozen = 0.0
    else:
        w = p_s / p_b
        frozen = ef * (w * busy_success_time(timing)
                       + (1.0 - w) * busy_collision_time(timing))
    own = schedule.retry_limit * (busy_collision_time(timing)
                                  + post_collision_wait(timing))
    return eb * timing.delta_idle + frozen + own
