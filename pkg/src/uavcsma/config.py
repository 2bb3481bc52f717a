"""Run configuration: INI parsing with strict key checking, documented
defaults, and a serializer that round-trips.

Geometry is configured in display units (km^2 densities, bytes, bit/s) and
converted here; an empty file yields the defaults below.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .coverage import Scenario
from .errors import ConfigError
from .experiments import SweepAxis, SweepSpec
from .model import QuitMode, SolverOptions
from .simulator import SimConfig
from .timing import AccessMode, BackoffSchedule, MacTiming


def _default_scenario() -> Scenario:
    return Scenario(radius=1000.0, velocity=10.0, density=50.0 * 1e-6,
                    schedule=BackoffSchedule(), timing=MacTiming())


@dataclass(frozen=True)
class RunConfig:
    """Everything a command-line invocation needs."""

    scenario: Scenario = field(default_factory=_default_scenario)
    solver: SolverOptions = field(default_factory=SolverOptions)
    payload_bytes: int = 8192
    data_rate_bps: int = 1_000_000
    flight_length: float = 10000.0    # [m]
    warmup_time: float = 250.0        # [s]
    max_time: float = 4000.0          # [s]
    seed: int = 1
    n_seeds: int = 20
    min_events: int = 100_000
    sweep_axis: SweepAxis = SweepAxis.VELOCITY
    sweep_values: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0)
    sweep_modes: tuple[AccessMode, ...] = (AccessMode.BASIC,)
    min_sim_seconds: float = 900.0    # [s]
    csv_path: str = "sweep.csv"
    plot_dir: str = "plots"

    def sim_config(self) -> SimConfig:
        return SimConfig(scenario=self.scenario, flight_length=self.flight_length,
                         warmup_time=self.warmup_time, seed=self.seed,
                         max_time=self.max_time, min_events=self.min_events)

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec(axis=self.sweep_axis, values=self.sweep_values,
                         base=self.scenario, modes=self.sweep_modes,
                         n_seeds=self.n_seeds, solver=self.solver,
                         flight_length=self.flight_length,
                         warmup_time=self.warmup_time, max_time=self.max_time,
                         min_sim_seconds=self.min_sim_seconds, seed=self.seed,
                         min_events=self.min_events)


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_optional_int(raw: str):
    if raw.strip().lower() in ("none", ""):
        return None
    return int(raw, 10)


def _parse_access_mode(raw: str) -> AccessMode:
    try:
        return AccessMode(raw.strip().lower())
    except ValueError:
        raise ValueError(f"access mode must be one of "
                         f"{[m.value for m in AccessMode]}, got {raw!r}") from None


def _parse_quit_mode(raw: str) -> QuitMode:
    try:
        return QuitMode(raw.strip().lower())
    except ValueError:
        raise ValueError(f"quit mode must be one of "
                         f"{[m.value for m in QuitMode]}, got {raw!r}") from None


def _parse_axis(raw: str) -> SweepAxis:
    try:
        return SweepAxis(raw.strip().lower())
    except ValueError:
        raise ValueError(f"sweep axis must be one of "
                         f"{[a.value for a in SweepAxis]}, got {raw!r}") from None


def _parse_values(raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(p) for p in parts)


def _parse_modes(raw: str) -> tuple[AccessMode, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of access modes")
    return tuple(_parse_access_mode(p) for p in parts)


# section -> key -> parser; leaves are assembled into RunConfig afterwards
_SCHEMA = {
    "scenario": {
        "radius_m": _parse_float,
        "velocity_mps": _parse_float,
        "density_per_km2": _parse_float,
        "cw_min": _parse_int,
        "cw_max": _parse_optional_int,
        "retry_limit": _parse_int,
        "payload_bytes": _parse_int,
        "data_rate_bps": _parse_int,
        "access_mode": _parse_access_mode,
    },
    "timing": {
        "idle_slot_us": _parse_int,
        "sifs_us": _parse_int,
        "difs_us": _parse_int,
        "header_us": _parse_int,
        "ack_us": _parse_int,
        "rts_us": _parse_int,
        "cts_us": _parse_int,
        "ack_timeout_us": _parse_int,
        "cts_timeout_us": _parse_int,
        "prop_delay_us": _parse_int,
    },
    "solver": {
        "inner_tol": _parse_float,
        "inner_max_iter": _parse_int,
        "damping": _parse_float,
        "outer_tol": _parse_float,
        "outer_max_iter": _parse_int,
        "outer_damping": _parse_float,
        "conditional_success": _parse_bool,
        "quit_mode": _parse_quit_mode,
    },
    "sim": {
        "flight_length_m": _parse_float,
        "warmup_s": _parse_float,
        "max_time_s": _parse_float,
        "seed": _parse_int,
        "n_seeds": _parse_int,
        "min_events": _parse_int,
    },
    "sweep": {
        "axis": _parse_axis,
        "values": _parse_values,
        "modes": _parse_modes,
        "min_sim_seconds": _parse_float,
    },
    "output": {
        "csv": str,
        "plot_dir": str,
    },
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """Best-effort line number of a section header or of a key within it."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section:
            body = stripped.split("#", 1)[0].split(";", 1)[0]
            for sep in "=:":
                pos = body.find(sep)
                if pos > 0 and body[:pos].strip() == key:
                    return lineno
    return None


def parse_config(text: str) -> RunConfig:
    """Parse INI text into a RunConfig, rejecting unknown sections and keys
    with the offending line number."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before any [section] header",
                          line=exc.lineno) from None
    except configparser.ParsingError as exc:
        errors = getattr(exc, "errors", None)
        line = errors[0][0] if errors else getattr(exc, "lineno", None)
        raise ConfigError(f"malformed configuration: {exc.message.splitlines()[0]}",
                          line=line) from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}",
                          line=getattr(exc, "lineno", None)) from None

    values: dict[str, dict[str, object]] = {s: {} for s in _SCHEMA}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]",
                              line=_line_of(text, section))
        for key, raw in parser.items(section):
            converter = _SCHEMA[section].get(key)
            if converter is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]",
                                  line=_line_of(text, section, key))
            try:
                values[section][key] = converter(raw)
            except ValueError as err:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {err}",
                                  line=_line_of(text, section, key)) from None
    return _assemble(values, text)


def _assemble(values: dict, text: str) -> RunConfig:
    defaults = RunConfig()
    sc, tm, sv = values["scenario"], values["timing"], values["solver"]
    sm, sw, out = values["sim"], values["sweep"], values["output"]

    payload_bytes = sc.get("payload_bytes", defaults.payload_bytes)
    data_rate = sc.get("data_rate_bps", defaults.data_rate_bps)
    if payload_bytes <= 0 or data_rate <= 0:
        raise ConfigError("payload_bytes and data_rate_bps must be positive",
                          line=_line_of(text, "scenario"))
    t_payload = round(payload_bytes * 8 * 1e6 / data_rate)
    if t_payload < 1:
        raise ConfigError("payload shorter than one microsecond at this data rate",
                          line=_line_of(text, "scenario"))

    base_t = MacTiming()
    try:
        timing = MacTiming(
            delta_idle=tm.get("idle_slot_us", base_t.delta_idle),
            sifs=tm.get("sifs_us", base_t.sifs),
            difs=tm.get("difs_us", base_t.difs),
            t_header=tm.get("header_us", base_t.t_header),
            t_payload=t_payload,
            t_ack=tm.get("ack_us", base_t.t_ack),
            t_rts=tm.get("rts_us", base_t.t_rts),
            t_cts=tm.get("cts_us", base_t.t_cts),
            t_ack_timeout=tm.get("ack_timeout_us", base_t.t_ack_timeout),
            t_cts_timeout=tm.get("cts_timeout_us", base_t.t_cts_timeout),
            prop_delay=tm.get("prop_delay_us", base_t.prop_delay),
            access_mode=sc.get("access_mode", AccessMode.BASIC),
        ).validate()
        schedule = BackoffSchedule(
            cw_min=sc.get("cw_min", 8),
            retry_limit=sc.get("retry_limit", 7),
            cw_max=sc.get("cw_max", None))
        scenario = Scenario(
            radius=sc.get("radius_m", 1000.0),
            velocity=sc.get("velocity_mps", 10.0),
            density=sc.get("density_per_km2", 50.0) * 1e-6,
            schedule=schedule, timing=timing)
    except ValueError as err:
        raise ConfigError(str(err), line=_line_of(text, "scenario")) from None

    base_s = SolverOptions()
    try:
        solver = SolverOptions(
            inner_tol=sv.get("inner_tol", base_s.inner_tol),
            inner_max_iter=sv.get("inner_max_iter", base_s.inner_max_iter),
            damping=sv.get("damping", base_s.damping),
            outer_tol=sv.get("outer_tol", base_s.outer_tol),
            outer_max_iter=sv.get("outer_max_iter", base_s.outer_max_iter),
            outer_damping=sv.get("outer_damping", base_s.outer_damping),
            conditional_success=sv.get("conditional_success",
                                       base_s.conditional_success),
            quit_mode=sv.get("quit_mode", base_s.quit_mode))
        for name in ("inner_tol", "outer_tol"):
            if getattr(solver, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < solver.damping <= 1.0 or not 0.0 < solver.outer_damping <= 1.0:
            raise ValueError("damping factors must lie in (0, 1]")
        if solver.inner_max_iter < 1 or solver.outer_max_iter < 1:
            raise ValueError("iteration caps must be at least 1")
    except ValueError as err:
        raise ConfigError(str(err), line=_line_of(text, "solver")) from None

    config = RunConfig(
        scenario=scenario, solver=solver, payload_bytes=payload_bytes,
        data_rate_bps=data_rate,
        flight_length=sm.get("flight_length_m", defaults.flight_length),
        warmup_time=sm.get("warmup_s", defaults.warmup_time),
        max_time=sm.get("max_time_s", defaults.max_time),
        seed=sm.get("seed", defaults.seed),
        n_seeds=sm.get("n_seeds", defaults.n_seeds),
        min_events=sm.get("min_events", defaults.min_events),
        sweep_axis=sw.get("axis", defaults.sweep_axis),
        sweep_values=sw.get("values", defaults.sweep_values),
        sweep_modes=sw.get("modes", defaults.sweep_modes),
        min_sim_seconds=sw.get("min_sim_seconds", defaults.min_sim_seconds),
        csv_path=out.get("csv", defaults.csv_path),
        plot_dir=out.get("plot_dir", defaults.plot_dir))
    try:
        config.sim_config()
        config.sweep_spec()
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return config


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None


def serialize_config(config: RunConfig) -> str:
    """INI text that parses back to an equal RunConfig."""
    sc = config.scenario
    t = sc.timing
    sv = config.solver

    def f(x: float) -> str:
        return repr(float(x))

    def density_km2(density: float) -> str:
        # the km^2 figure is what parses back; shortest decimal that
        # reproduces the stored per-m^2 value wins (x1e6 alone drifts an ulp)
        for ndigits in range(1, 18):
            s = repr(round(density * 1e6, ndigits))
            if float(s) * 1e-6 == density:
                return s
        return repr(density * 1e6)

    lines = [
        "[scenario]",
        f"radius_m = {f(sc.radius)}",
        f"velocity_mps = {f(sc.velocity)}",
        f"density_per_km2 = {density_km2(sc.density)}",
        f"cw_min = {sc.schedule.cw_min}",
        f"cw_max = {'none' if sc.schedule.cw_max is None else sc.schedule.cw_max}",
        f"retry_limit = {sc.schedule.retry_limit}",
        f"payload_bytes = {config.payload_bytes}",
        f"data_rate_bps = {config.data_rate_bps}",
        f"access_mode = {t.access_mode.value}",
        "",
        "[timing]",
        f"idle_slot_us = {t.delta_idle}",
        f"sifs_us = {t.sifs}",
        f"difs_us = {t.difs}",
        f"header_us = {t.t_header}",
        f"ack_us = {t.t_ack}",
        f"rts_us = {t.t_rts}",
        f"cts_us = {t.t_cts}",
        f"ack_timeout_us = {t.t_ack_timeout}",
        f"cts_timeout_us = {t.t_cts_timeout}",
        f"prop_delay_us = {t.prop_delay}",
        "",
        "[solver]",
        f"inner_tol = {f(sv.inner_tol)}",
        f"inner_max_iter = {sv.inner_max_iter}",
        f"damping = {f(sv.damping)}",
        f"outer_tol = {f(sv.outer_tol)}",
        f"outer_max_iter = {sv.outer_max_iter}",
        f"outer_damping = {f(sv.outer_damping)}",
        f"conditional_success = {'true' if sv.conditional_success else 'false'}",
        f"quit_mode = {sv.quit_mode.value}",
        "",
        "[sim]",
        f"flight_length_m = {f(config.flight_length)}",
        f"warmup_s = {f(config.warmup_time)}",
        f"max_time_s = {f(config.max_time)}",
        f"seed = {config.seed}",
        f"n_seeds = {config.n_seeds}",
        f"min_events = {config.min_events}",
        "",
        "[sweep]",
        f"axis = {config.sweep_axis.value}",
        f"values = {', '.join(f(v) for v in config.sweep_values)}",
        f"modes = {', '.join(m.value for m in config.sweep_modes)}",
        f"min_sim_seconds = {f(config.min_sim_seconds)}",
        "",
        "[output]",
        f"csv = {config.csv_path}",
        f"plot_dir = {config.plot_dir}",
        "",
    ]
    return "\n".join(lines)
