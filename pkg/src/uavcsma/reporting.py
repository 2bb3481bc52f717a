"""Sweep result serialization: the CSV schema and self-contained SVG charts.

Output is deterministic: fixed float formats, no timestamps, '\\n' line
endings, '.' decimal separator.
"""

from __future__ import annotations

import math
from pathlib import Path

from .experiments import AXIS_UNITS, SweepAxis, SweepRow
from .timing import AccessMode

SWEEP_CSV_HEADER = ("axis,value,mode,S_model,S_sim_mean,S_sim_ci95,"
                    "abs_err,rel_err,iters_outer,iters_inner,n_clusters")


def _num(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(x, ".12g")


def format_sweep_rows(rows: list[SweepRow]) -> str:
    """CSV text for the rows, header first."""
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.axis.value, _num(r.value), r.mode.value, _num(r.s_model),
            _num(r.s_sim_mean), _num(r.s_sim_ci95), _num(r.abs_err),
            _num(r.rel_err), str(r.iters_outer), str(r.iters_inner),
            str(r.n_clusters)]))
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    Path(path).write_text(format_sweep_rows(rows), encoding="ascii", newline="")


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    """Rows back from CSV text written by format_sweep_rows."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != SWEEP_CSV_HEADER:
        raise ValueError(f"{path}: not a sweep CSV (unexpected header)")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 11:
            raise ValueError(f"{path}: malformed row {ln!r}")
        rows.append(SweepRow(
            axis=SweepAxis(parts[0]), value=float(parts[1]),
            mode=AccessMode(parts[2]), s_model=float(parts[3]),
            s_sim_mean=float(parts[4]), s_sim_ci95=float(parts[5]),
            abs_err=float(parts[6]), rel_err=float(parts[7]),
            iters_outer=int(parts[8]), iters_inner=int(parts[9]),
            n_clusters=int(parts[10])))
    return rows


# -- SVG ---------------------------------------------------------------------

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 80, 24, 44, 58


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return out


def render_sweep_chart(rows: list[SweepRow]) -> str:
    """Self-contained SVG comparing model curve and simulation error bars for
    one (axis, mode) series."""
    if not rows:
        raise ValueError("no rows to plot")
    axes = {(r.axis, r.mode) for r in rows}
    if len(axes) > 1:
        raise ValueError("chart expects a single (axis, mode) series")
    axis, mode = next(iter(axes))
    xs = [r.value for r in rows]
    ys = [v for r in rows for v in (r.s_model, r.s_sim_mean)
          if not math.isnan(v)]
    cis = [r.s_sim_ci95 for r in rows if not math.isnan(r.s_sim_ci95)]
    x_lo, x_hi = min(xs), max(xs)
    pad = 0.05 * (x_hi - x_lo or 1.0)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_hi = max((ys or [1.0])) + max(cis or [0.0])
    y_hi = max(0.05, y_hi * 1.1)
    y_lo = 0.0

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    e = []
    e.append(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
             f'font-family="sans-serif" font-size="13">')
    e.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    title = f"Saturation throughput vs {axis.value} ({mode.value} access)"
    e.append(f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
             f'font-size="16">{title}</text>')
    # frame and grid
    e.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
             f'height="{_H - _MT - _MB}" fill="none" stroke="#444"/>')
    for t in _ticks(x_lo + pad, x_hi - pad):
        if not x_lo <= t <= x_hi:
            continue
        e.append(f'<line x1="{px(t):.2f}" y1="{_MT}" x2="{px(t):.2f}" '
                 f'y2="{_H - _MB}" stroke="#ddd"/>')
        e.append(f'<text x="{px(t):.2f}" y="{_H - _MB + 18}" '
                 f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        e.append(f'<line x1="{_ML}" y1="{py(t):.2f}" x2="{_W - _MR}" '
                 f'y2="{py(t):.2f}" stroke="#ddd"/>')
        e.append(f'<text x="{_ML - 8}" y="{py(t) + 4:.2f}" '
                 f'text-anchor="end">{t:g}</text>')
    e.append(f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 14}" '
             f'text-anchor="middle">{axis.value} [{AXIS_UNITS[axis]}]</text>')
    e.append(f'<text x="20" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
             f'transform="rotate(-90 20 {(_MT + _H - _MB) / 2:.1f})">'
             f'normalized throughput</text>')
    # model curve
    pts = " ".join(f"{px(r.value):.2f},{py(r.s_model):.2f}"
                   for r in rows if not math.isnan(r.s_model))
    if pts:
        e.append(f'<polyline points="{pts}" fill="none" stroke="#1f6fb4" '
                 f'stroke-width="2"/>')
    # simulation points with 95% intervals
    for r in rows:
        if math.isnan(r.s_sim_mean):
            continue
        x = px(r.value)
        y = py(r.s_sim_mean)
        if not math.isnan(r.s_sim_ci95):
            y1, y2 = py(r.s_sim_mean + r.s_sim_ci95), py(r.s_sim_mean - r.s_sim_ci95)
            e.append(f'<line x1="{x:.2f}" y1="{y1:.2f}" x2="{x:.2f}" '
                     f'y2="{y2:.2f}" stroke="#c4501e" stroke-width="1.5"/>')
            for yy in (y1, y2):
                e.append(f'<line x1="{x - 4:.2f}" y1="{yy:.2f}" x2="{x + 4:.2f}" '
                         f'y2="{yy:.2f}" stroke="#c4501e" stroke-width="1.5"/>')
        e.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="#c4501e"/>')
    # legend
    lx, ly = _W - _MR - 190, _MT + 16
    e.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 28}" y2="{ly}" '
             f'stroke="#1f6fb4" stroke-width="2"/>')
    e.append(f'<text x="{lx + 34}" y="{ly + 4}">model</text>')
    e.append(f'<circle cx="{lx + 14}" cy="{ly + 20}" r="3.5" fill="#c4501e"/>')
    e.append(f'<text x="{lx + 34}" y="{ly + 24}">simulation (95% CI)</text>')
    e.append("</svg>")
    return "\n".join(e) + "\n"


def write_charts(rows: list[SweepRow], out_dir: str | Path) -> list[Path]:
    """One SVG per (axis, mode) series found in the rows; returns the paths."""
    if not rows:
        raise ValueError("no rows to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series: dict[tuple, list[SweepRow]] = {}
    for r in rows:
        series.setdefault((r.axis, r.mode), []).append(r)
    paths = []
    for (axis, mode), group in sorted(series.items(),
                                      key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        path = out / f"throughput_vs_{axis.value}_{mode.value}.svg"
        path.write_text(render_sweep_chart(group), encoding="ascii", newline="")
        paths.append(path)
    return paths
