"""Minimal standalone SVG 1.1 line charts (no plotting dependency).

Just enough for a log-log convergence picture: axes, power-of-two or
power-of-ten tick labels, and one polyline per series.
"""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

_WIDTH, _HEIGHT = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 30, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _log_ticks(lo: float, hi: float, base: float) -> List[float]:
    k_lo = math.floor(math.log(lo, base) + 1e-12)
    k_hi = math.ceil(math.log(hi, base) - 1e-12)
    step = max(1, (k_hi - k_lo) // 8)
    return [base**k for k in range(k_lo, k_hi + 1, step)]


def _fmt_tick(v: float, base: float) -> str:
    k = math.log(v, base)
    if abs(k - round(k)) < 1e-9:
        return f"{int(base)}^{round(k)}"
    return f"{v:g}"


def log_log_chart(
    series: Sequence[Tuple[str, Sequence[float], Sequence[float]]],
    x_label: str,
    y_label: str,
    title: str = "",
    base: float = 2.0,
) -> str:
    """Render named (x, y) series on log-log axes; returns the SVG text."""
    points = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)]
    if not points or any(x <= 0 or y <= 0 for x, y in points):
        raise ValueError("log-log chart needs positive data")
    x_lo = min(x for x, _ in points)
    x_hi = max(x for x, _ in points)
    y_lo = min(y for _, y in points)
    y_hi = max(y for _, y in points)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo / base, x_hi * base
    if y_lo == y_hi:
        y_lo, y_hi = y_lo / base, y_hi * base

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def to_px(x: float, y: float) -> Tuple[float, float]:
        fx = (math.log(x) - math.log(x_lo)) / (math.log(x_hi) - math.log(x_lo))
        fy = (math.log(y) - math.log(y_lo)) / (math.log(y_hi) - math.log(y_lo))
        return _MARGIN_L + fx * plot_w, _MARGIN_T + (1.0 - fy) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    # frame
    x0, y0 = _MARGIN_L, _MARGIN_T + plot_h
    x1, y1 = _MARGIN_L + plot_w, _MARGIN_T
    parts.append(
        f'<rect x="{x0}" y="{y1}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>'
    )
    for tick in _log_ticks(x_lo, x_hi, base):
        if not x_lo <= tick <= x_hi:
            continue
        px, _ = to_px(tick, y_lo)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(tick, base)}</text>'
        )
    for tick in _log_ticks(y_lo, y_hi, base):
        if not y_lo <= tick <= y_hi:
            continue
        _, py = to_px(x_lo, tick)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(tick, base)}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{_MARGIN_T + plot_h / 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_MARGIN_T + plot_h / 2})">{y_label}</text>'
    )
    for i, (name, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in (to_px(x, y) for x, y in zip(xs, ys)))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for x, y in zip(xs, ys):
            px, py = to_px(x, y)
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{x1 - 8}" y="{y1 + 16 + 14 * i}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
