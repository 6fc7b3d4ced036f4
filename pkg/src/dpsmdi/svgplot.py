"""Small self-contained SVG line plotter.

The CSV output is the real deliverable of every command; plots are a
convenience.  To keep the package free of mandatory plotting dependencies
this module emits plain SVG text directly: linear or log10 axes, nice tick
placement, a legend, nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

_WIDTH = 640
_HEIGHT = 440
_MARGIN_L = 70
_MARGIN_R = 20
_MARGIN_T = 40
_MARGIN_B = 55
_PALETTE = ("#1f6fb4", "#d1495b", "#3a7d44", "#8c5aa0", "#c77d2e", "#4f4f4f")


@dataclass(frozen=True)
class Series:
    """One labelled curve; points with non-finite coordinates are skipped."""

    label: str
    xs: Sequence[float]
    ys: Sequence[float]


def _finite_points(series: Series, x_log: bool, y_log: bool) -> List[Tuple[float, float]]:
    points = []
    for x, y in zip(series.xs, series.ys):
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        if x_log and x <= 0.0:
            continue
        if y_log and y <= 0.0:
            continue
        points.append((x, y))
    return points


def _nice_ticks(lo: float, hi: float, target: int = 5) -> List[float]:
    """Round tick positions covering [lo, hi] with a 1/2/5 step."""
    if hi <= lo:
        return [lo]
    raw_step = (hi - lo) / max(target, 1)
    magnitude = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw_step <= mult * magnitude:
            step = mult * magnitude
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 0.5 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> List[float]:
    """Decade ticks inside [lo, hi] (values, not exponents)."""
    first = math.ceil(math.log10(lo) - 1e-9)
    last = math.floor(math.log10(hi) + 1e-9)
    if last < first:
        return [lo, hi]
    return [10.0**k for k in range(first, last + 1)]


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def line_plot(
    series_list: Sequence[Series],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    x_log: bool = False,
    y_log: bool = False,
) -> str:
    """Render the given curves to SVG text; deterministic for fixed input."""
    cleaned = [_finite_points(s, x_log, y_log) for s in series_list]
    all_points = [p for pts in cleaned for p in pts]
    if not all_points:
        raise ValueError("nothing to plot: every point was filtered out")

    xs = [p[0] for p in all_points]
    ys = [p[1] for p in all_points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_log:
        x_lo, x_hi = math.log10(x_lo), math.log10(x_hi)
    if y_log:
        y_lo, y_hi = math.log10(y_lo), math.log10(y_hi)
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo -= pad_y
    y_hi += pad_y

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def to_px(x: float, y: float) -> Tuple[float, float]:
        if x_log:
            x = math.log10(x)
        if y_log:
            y = math.log10(y)
        px = _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w
        py = _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h
        return px, py

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333" stroke-width="1"/>',
    ]

    if x_log:
        x_ticks = _log_ticks(10.0**x_lo, 10.0**x_hi)
    else:
        x_ticks = _nice_ticks(x_lo, x_hi)
    if y_log:
        y_ticks = _log_ticks(10.0**y_lo, 10.0**y_hi)
    else:
        y_ticks = _nice_ticks(y_lo, y_hi)

    for tick in x_ticks:
        px, _ = to_px(tick, 10.0**y_lo if y_log else y_lo)
        if not (_MARGIN_L - 0.5 <= px <= _WIDTH - _MARGIN_R + 0.5):
            continue
        y0 = _HEIGHT - _MARGIN_B
        parts.append(
            f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" '
            'stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(tick)}</text>'
        )
    for tick in y_ticks:
        _, py = to_px(10.0**x_lo if x_log else x_lo, tick)
        if not (_MARGIN_T - 0.5 <= py <= _HEIGHT - _MARGIN_B + 0.5):
            continue
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{py:.1f}" x2="{_MARGIN_L}" '
            f'y2="{py:.1f}" stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{py + 4:.1f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{_fmt(tick)}</text>'
        )

    for index, points in enumerate(cleaned):
        if not points:
            continue
        color = _PALETTE[index % len(_PALETTE)]
        coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in (to_px(x, y) for x, y in points))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            'stroke-width="1.8"/>'
        )

    if title:
        parts.append(
            f'<text x="{_WIDTH / 2:.0f}" y="24" font-size="14" text-anchor="middle" '
            f'font-family="sans-serif">{title}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{_HEIGHT - 14}" '
            'font-size="12" text-anchor="middle" '
            f'font-family="sans-serif">{x_label}</text>'
        )
    if y_label:
        cx, cy = 18, _MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="{cx}" y="{cy:.0f}" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif" transform="rotate(-90 {cx} {cy:.0f})">'
            f"{y_label}</text>"
        )

    legend_y = _MARGIN_T + 14
    for index, series in enumerate(series_list):
        if not cleaned[index]:
            continue
        color = _PALETTE[index % len(_PALETTE)]
        x0 = _WIDTH - _MARGIN_R - 150
        parts.append(
            f'<line x1="{x0}" y1="{legend_y - 4}" x2="{x0 + 22}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{x0 + 28}" y="{legend_y}" font-size="11" '
            f'font-family="sans-serif">{series.label}</text>'
        )
        legend_y += 16

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
