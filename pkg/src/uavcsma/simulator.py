"""Slotted Monte Carlo simulation of saturated CSMA/CA under a disk of
coverage moving along a straight corridor.

The channel alternates idle backoff slots and busy periods shared by every
covered device. Time is integer microseconds throughout, so accounting is
exact and the disk position is a pure function of the clock; coverage
membership is re-evaluated at event boundaries only. Runs of idle slots with
no counter at zero are executed in one jump, which consumes no randomness and
is capped before the next membership boundary, so the jump is equivalent to
stepping the slots one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as _stats

from .coverage import Scenario
from .timing import busy_collision_time, busy_success_time, post_collision_wait, traversal_cost

# substream labels keeping field layout and per-device draws independent
_FIELD_STREAM = 0xF1E1D
_DEVICE_STREAM = 0xDE7


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    static_devices switches the corridor geometry off: that many devices are
    permanently covered and nothing enters or leaves. cluster_delta (seconds)
    sets the traversal bucket used to key per-band success counts; by default
    it is the freeze-free traversal cost of the scenario.
    """

    scenario: Scenario
    flight_length: float = 10000.0    # [m]
    warmup_time: float = 250.0        # [s]
    seed: int = 1
    max_time: float = 4000.0          # [s]
    static_devices: int | None = None
    cluster_delta: float | None = None  # [s]
    min_events: int = 100_000

    def __post_init__(self):
        if self.static_devices is None:
            if self.flight_length < 10.0 * self.scenario.radius:
                raise ValueError(
                    f"flight_length must span at least 10 radii, got "
                    f"{self.flight_length} m for radius {self.scenario.radius} m")
        elif self.static_devices < 1:
            raise ValueError(f"static_devices must be >= 1, got {self.static_devices}")
        if self.warmup_time < 0 or self.max_time <= 0:
            raise ValueError("warmup_time must be >= 0 and max_time > 0")
        if self.cluster_delta is not None and not self.cluster_delta > 0:
            raise ValueError(f"cluster_delta must be positive, got {self.cluster_delta}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class SimDevice:
    """Snapshot of one device."""

    lateral_offset: float   # [m]
    along_position: float   # [m]
    backoff_stage: int
    backoff_counter: int
    active: bool


@dataclass(frozen=True)
class SimReport:
    """Post-warmup tallies of one run. Times are integer microseconds and
    idle, success and collision time sum exactly to total_counted_time."""

    successes: int
    collisions: int
    drops: int
    idle_time: int
    success_time: int
    collision_time: int
    delivered_payload_time: int
    total_counted_time: int
    normalized_throughput: float
    n_events: int
    low_confidence: bool
    per_cluster_successes: dict[int, int]
    seed: int


class Simulation:
    """Mutable engine behind run(); exposed for stepping in tests."""

    def __init__(self, config: SimConfig):
        self.config = config
        scenario = config.scenario
        timing = scenario.timing
        self.schedule = scenario.schedule
        self.windows = np.array(self.schedule.windows())
        self.retry_limit = self.schedule.retry_limit
        self.idle_slot = timing.delta_idle
        self.t_success = busy_success_time(timing)
        self.t_collision = busy_collision_time(timing) + post_collision_wait(timing)
        self.t_payload = timing.t_payload
        self.velocity = scenario.velocity
        self.radius = scenario.radius
        self.static = config.static_devices is not None

        self.warmup_us = round(config.warmup_time * 1e6)
        self.max_time_us = round(config.max_time * 1e6)
        bucket_delta = config.cluster_delta
        if bucket_delta is None:
            bucket_delta = traversal_cost(timing, self.schedule, 0.0, 1.0, 1.0) * 1e-6
        self.bucket_delta = bucket_delta

        self._spawn_field()
        self._device_rngs: dict[int, np.random.Generator] = {}

        self.t = 0                    # [us]
        self.active_idx = np.empty(0, dtype=np.int64)
        self.entry_ptr = 0
        self.successes = 0
        self.collisions = 0
        self.drops = 0
        self.idle_time = 0
        self.success_time = 0
        self.collision_time = 0
        self.delivered = 0
        self.n_events = 0
        self.per_bucket: dict[int, int] = {}
        self._refresh_membership()

    # -- field ------------------------------------------------------------

    def _spawn_field(self):
        cfg = self.config
        n_static = cfg.static_devices
        if n_static is not None:
            n = n_static
            self.lateral = np.zeros(n)
            self.along = np.zeros(n)
            self.u_in = np.full(n, -math.inf)
            self.u_out = np.full(n, math.inf)
            self.u_stop = math.inf
        else:
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence([cfg.seed, _FIELD_STREAM])))
            area = cfg.flight_length * 2.0 * self.radius
            n = int(rng.poisson(cfg.scenario.density * area))
            self.along = rng.uniform(0.0, cfg.flight_length, size=n)
            self.lateral = rng.uniform(-self.radius, self.radius, size=n)
            half = np.sqrt(np.maximum(0.0, self.radius ** 2 - self.lateral ** 2))
            self.u_in = self.along - half
            self.u_out = self.along + half
            self.u_stop = cfg.flight_length - self.radius
        self.n_devices = n
        self.stage = np.zeros(n, dtype=np.int64)
        self.counter = np.zeros(n, dtype=np.int64)
        order = np.argsort(self.u_in, kind="stable")
        self.entry_order = order
        self.entry_pos = self.u_in[order]
        # residence chord in seconds, for success bucketing
        with np.errstate(invalid="ignore"):
            self.chord_s = (self.u_out - self.u_in) / self.velocity

    def _rng(self, i: int) -> np.random.Generator:
        g = self._device_rngs.get(i)
        if g is None:
            g = np.random.Generator(np.random.Philox(
                np.random.SeedSequence([self.config.seed, _DEVICE_STREAM, int(i)])))
            self._device_rngs[i] = g
        return g

    # -- geometry ---------------------------------------------------------

    def _u(self) -> float:
        """Disk position, a pure function of the clock."""
        return self.velocity * self.t * 1e-6

    def _refresh_membership(self):
        if self.static:
            if self.active_idx.size != self.n_devices:
                self.active_idx = np.arange(self.n_devices, dtype=np.int64)
                w0 = self.windows[0]
                for i in range(self.n_devices):
                    self.counter[i] = self._rng(i).integers(0, w0)
            return
        u = self._u()
        if self.active_idx.size:
            alive = self.u_out[self.active_idx] > u
            if not alive.all():
                self.active_idx = self.active_idx[alive]
        entered = []
        while self.entry_ptr < self.n_devices and self.entry_pos[self.entry_ptr] <= u:
            i = int(self.entry_order[self.entry_ptr])
            self.entry_ptr += 1
            if self.u_out[i] > u:
                entered.append(i)
        if entered:
            w0 = self.windows[0]
            for i in entered:
                self.stage[i] = 0
                self.counter[i] = self._rng(i).integers(0, w0)
            self.active_idx = np.sort(np.concatenate(
                [self.active_idx, np.array(entered, dtype=np.int64)]))

    # -- event execution ---------------------------------------------------

    def finished(self) -> bool:
        if self.t >= self.max_time_us:
            return True
        return not self.static and self._u() >= self.u_stop

    def _idle_cap(self, n_slots: int) -> int:
        """Largest batch of idle slots guaranteed free of membership changes,
        warmup straddling and end-of-run overshoot."""
        k = n_slots
        if self.t < self.warmup_us:
            k = min(k, -((self.t - self.warmup_us) // self.idle_slot))
        k = min(k, -((self.t - self.max_time_us) // self.idle_slot))
        if not self.static:
            boundaries = []
            if self.entry_ptr < self.n_devices:
                boundaries.append(self.entry_pos[self.entry_ptr])
            if self.active_idx.size:
                boundaries.append(self.u_out[self.active_idx].min())
            boundaries.append(self.u_stop)
            t_next = min(boundaries) * 1e6 / self.velocity
            # stay one slot short of the float boundary estimate; the
            # membership refresh is the arbiter of the actual crossing
            k = min(k, int((t_next - self.t) / self.idle_slot) - 1)
        return max(1, k)

    def _account(self, kind: str, elapsed: int, events: int, device: int = -1):
        counted = self.t >= self.warmup_us
        if counted:
            self.n_events += events
            if kind == "idle":
                self.idle_time += elapsed
            elif kind == "success":
                self.successes += 1
                self.success_time += elapsed
                self.delivered += self.t_payload
                if self.static:
                    bucket = 0
                else:
                    bucket = int(self.chord_s[device] / self.bucket_delta)
                self.per_bucket[bucket] = self.per_bucket.get(bucket, 0) + 1
            else:
                self.collisions += 1
                self.collision_time += elapsed

    def step(self, batch: bool = False) -> int:
        """Execute one channel event; returns its duration in us (0 when the
        run is over). With batch=True an idle run may execute many slots."""
        if self.finished():
            return 0
        idx = self.active_idx
        transmitters = idx[self.counter[idx] == 0] if idx.size else idx
        if transmitters.size == 0:
            return self._idle(idx, batch)
        if transmitters.size == 1:
            return self._success(int(transmitters[0]))
        return self._collision(transmitters)

    def _idle(self, idx: np.ndarray, batch: bool) -> int:
        if batch:
            if idx.size:
                k = self._idle_cap(int(self.counter[idx].min()))
            else:
                k = self._idle_cap(1 << 30)
        else:
            k = 1
        elapsed = k * self.idle_slot
        self._account("idle", elapsed, events=k)
        if idx.size:
            self.counter[idx] -= k
        self.t += elapsed
        self._refresh_membership()
        return elapsed

    def _success(self, i: int) -> int:
        elapsed = self.t_success
        self._account("success", elapsed, events=1, device=i)
        self.stage[i] = 0
        self.counter[i] = self._rng(i).integers(0, self.windows[0])
        self.t += elapsed
        self._refresh_membership()
        return elapsed

    def _collision(self, transmitters: np.ndarray) -> int:
        elapsed = self.t_collision
        self._account("collision", elapsed, events=1)
        counted = self.t >= self.warmup_us
        for i in transmitters:
            i = int(i)
            if self.stage[i] >= self.retry_limit:
                self.stage[i] = 0          # drop, fresh packet immediately
                if counted:
                    self.drops += 1
            else:
                self.stage[i] += 1
            self.counter[i] = self._rng(i).integers(0, self.windows[self.stage[i]])
        self.t += elapsed
        self._refresh_membership()
        return elapsed

    def devices(self) -> tuple[SimDevice, ...]:
        active = np.zeros(self.n_devices, dtype=bool)
        active[self.active_idx] = True
        return tuple(
            SimDevice(lateral_offset=float(self.lateral[i]),
                      along_position=float(self.along[i]),
                      backoff_stage=int(self.stage[i]),
                      backoff_counter=int(self.counter[i]),
                      active=bool(active[i]))
            for i in range(self.n_devices))

    def report(self) -> SimReport:
        total = self.idle_time + self.success_time + self.collision_time
        throughput = self.delivered / total if total else 0.0
        return SimReport(
            successes=self.successes, collisions=self.collisions,
            drops=self.drops, idle_time=self.idle_time,
            success_time=self.success_time, collision_time=self.collision_time,
            delivered_payload_time=self.delivered,
            total_counted_time=total, normalized_throughput=throughput,
            n_events=self.n_events,
            low_confidence=self.n_events < self.config.min_events,
            per_cluster_successes=dict(sorted(self.per_bucket.items())),
            seed=self.config.seed)


def run(config: SimConfig) -> SimReport:
    """Run one simulation to completion."""
    sim = Simulation(config)
    while not sim.finished():
        sim.step(batch=True)
    return sim.report()


@dataclass(frozen=True)
class ReplicateSummary:
    """Aggregate over independent seeds; ci95 is the Student-t half width."""

    mean: float
    ci95: float
    n_seeds: int
    low_confidence: bool
    reports: tuple[SimReport, ...] = field(repr=False, default=())


def replicate(config: SimConfig, n_seeds: int) -> ReplicateSummary:
    """Run n_seeds independent copies, seeds config.seed + 0..n_seeds-1."""
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    reports = tuple(run(replace(config, seed=config.seed + k))
                    for k in range(n_seeds))
    values = np.array([r.normalized_throughput for r in reports])
    mean = float(values.mean())
    if n_seeds == 1:
        ci = math.nan
    else:
        half = _stats.t.ppf(0.975, n_seeds - 1) * values.std(ddof=1) / math.sqrt(n_seeds)
        ci = float(half)
    low = any(r.low_confidence for r in reports) or n_seeds == 1
    return ReplicateSummary(mean=mean, ci95=ci, n_seeds=n_seeds,
                            low_confidence=low, reports=reports)
