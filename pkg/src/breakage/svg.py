"""Dependency-free SVG line charts from CSV columns."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ConfigError

WIDTH, HEIGHT = 720, 440
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 170, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def read_columns(csv_path: str | Path, columns) -> tuple[str, list[float], dict[str, list[float]]]:
    """Return the first column (abscissa) name and values plus the requested columns."""
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{csv_path} is empty")
    header = rows[0]
    missing = [c for c in columns if c not in header]
    if missing:
        raise ConfigError(f"column {missing[0]!r} not found in {csv_path}")
    idx = {c: header.index(c) for c in columns}
    body = rows[1:]
    x = [float(r[0]) for r in body]
    return header[0], x, {c: [float(r[idx[c]]) for r in body] for c in columns}


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-12 * step:
        ticks.append(first + k * step)
        k += 1
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(
    csv_path: str | Path,
    columns,
    out_path: str | Path,
    logy: bool = False,
    title: str | None = None,
) -> Path:
    """Write a line chart of ``columns`` against the CSV's first column.

    With ``logy`` the ordinate shows ``log10`` of the values; non-positive
    values are dropped from the polylines.  Output is a pure function of the
    input, so identical CSVs give identical bytes.
    """
    columns = list(columns)
    if not columns:
        raise ConfigError("no columns requested")
    xname, x, ys = read_columns(csv_path, columns)
    if not x:
        raise ConfigError(f"{csv_path} has no data rows")

    def transform(v: float) -> float | None:
        if not math.isfinite(v):
            return None
        if logy:
            return math.log10(v) if v > 0 else None
        return v

    series = {c: [(xi, transform(yi)) for xi, yi in zip(x, ys[c])] for c in columns}
    yvals = [y for pts in series.values() for _, y in pts if y is not None]
    if not yvals:
        raise ConfigError("nothing to plot")
    x_lo, x_hi = min(x), max(x)
    y_lo, y_hi = min(yvals), max(yvals)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        pad = abs(y_lo) * 0.05 or 1.0
        y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(v):
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for tx in _ticks(x_lo, x_hi):
        X = px(tx)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN_TOP + plot_h}" x2="{X:.2f}" y2="{MARGIN_TOP + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN_TOP + plot_h + 18}" text-anchor="middle">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        Y = py(ty)
        label = f"1e{_fmt(ty)}" if logy else _fmt(ty)
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{Y:.2f}" x2="{MARGIN_LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{label}</text>')
    out.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xname)}</text>'
    )

    for n, c in enumerate(columns):
        color = PALETTE[n % len(PALETTE)]
        # split the polyline wherever a point was dropped
        segments, current = [], []
        for xi, yi in series[c]:
            if yi is None:
                if current:
                    segments.append(current)
                current = []
            else:
                current.append(f"{px(xi):.2f},{py(yi):.2f}")
        if current:
            segments.append(current)
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        ly = MARGIN_TOP + 14 + 18 * n
        lx = WIDTH - MARGIN_RIGHT + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(c)}</text>')
    out.append("</svg>")

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(out) + "\n")
    return out_path
