"""Tiny deterministic SVG renderer for the report charts.

Hand-rolled on purpose: output bytes must be identical across runs, which
rules out plotting libraries that embed hashes or version metadata.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

WIDTH, HEIGHT = 640, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 16, 34, 44
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _tick_values(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


class _Svg:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def write(self, path: str | Path) -> None:
        self.parts.append("</svg>")
        Path(path).write_text("\n".join(self.parts) + "\n")


def _axes(svg: _Svg, x_ticks: Sequence[float], y_ticks: Sequence[float],
          x_map, y_map, x_label: str, y_label: str) -> None:
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    svg.add(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    svg.add(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for t in x_ticks:
        px = x_map(t)
        svg.add(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 4}" stroke="black"/>')
        svg.add(f'<text x="{_fmt(px)}" y="{y0 + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in y_ticks:
        py = y_map(t)
        svg.add(f'<line x1="{x0 - 4}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" stroke="black"/>')
        svg.add(f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end">{_fmt(t)}</text>')
    svg.add(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 8}" text-anchor="middle">{x_label}</text>')
    svg.add(f'<text x="14" y="{(y0 + y1) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 14 {(y0 + y1) / 2})">{y_label}</text>')


def line_chart(path: str | Path, xs: Sequence[float], series: dict[str, Sequence[float]],
               title: str = "", x_label: str = "", y_label: str = "") -> None:
    svg = _Svg(title)
    all_y = [v for vals in series.values() for v in vals] or [0.0]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = min(all_y), max(all_y)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def x_map(v: float) -> float:
        span = (x_hi - x_lo) or 1.0
        return MARGIN_L + (v - x_lo) / span * (WIDTH - MARGIN_L - MARGIN_R)

    def y_map(v: float) -> float:
        return HEIGHT - MARGIN_B - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)

    _axes(svg, _tick_values(x_lo, x_hi), _tick_values(y_lo, y_hi), x_map, y_map,
          x_label, y_label)
    for k, (name, vals) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        points = " ".join(f"{_fmt(x_map(x))},{_fmt(y_map(v))}" for x, v in zip(xs, vals))
        svg.add(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        ly = MARGIN_T + 14 * k
        svg.add(f'<line x1="{WIDTH - 150}" y1="{ly}" x2="{WIDTH - 130}" y2="{ly}" '
                f'stroke="{color}" stroke-width="2"/>')
        svg.add(f'<text x="{WIDTH - 125}" y="{ly + 4}">{name}</text>')
    svg.write(path)


def grouped_bar_chart(path: str | Path, group_labels: Sequence[str],
                      series: dict[str, Sequence[float]], title: str = "",
                      y_label: str = "") -> None:
    svg = _Svg(title)
    all_y = [v for vals in series.values() for v in vals] or [0.0]
    y_hi = max(max(all_y), 1.0) * 1.05
    n_groups = len(group_labels)
    n_series = max(len(series), 1)
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    group_w = plot_w / max(n_groups, 1)
    bar_w = group_w * 0.8 / n_series

    def y_map(v: float) -> float:
        return HEIGHT - MARGIN_B - v / y_hi * (HEIGHT - MARGIN_T - MARGIN_B)

    y0 = HEIGHT - MARGIN_B
    svg.add(f'<line x1="{MARGIN_L}" y1="{y0}" x2="{WIDTH - MARGIN_R}" y2="{y0}" stroke="black"/>')
    svg.add(f'<line x1="{MARGIN_L}" y1="{y0}" x2="{MARGIN_L}" y2="{MARGIN_T}" stroke="black"/>')
    for t in _tick_values(0.0, y_hi):
        py = y_map(t)
        svg.add(f'<line x1="{MARGIN_L - 4}" y1="{_fmt(py)}" x2="{MARGIN_L}" y2="{_fmt(py)}" stroke="black"/>')
        svg.add(f'<text x="{MARGIN_L - 8}" y="{_fmt(py + 4)}" text-anchor="end">{_fmt(t)}</text>')
    for g, label in enumerate(group_labels):
        gx = MARGIN_L + g * group_w
        svg.add(f'<text x="{_fmt(gx + group_w / 2)}" y="{y0 + 18}" text-anchor="middle">{label}</text>')
        for k, (name, vals) in enumerate(series.items()):
            v = vals[g] if g < len(vals) else 0.0
            bx = gx + group_w * 0.1 + k * bar_w
            by = y_map(v)
            color = PALETTE[k % len(PALETTE)]
            svg.add(f'<rect x="{_fmt(bx)}" y="{_fmt(by)}" width="{_fmt(bar_w)}" '
                    f'height="{_fmt(y0 - by)}" fill="{color}"/>')
    for k, name in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        ly = MARGIN_T + 14 * k
        svg.add(f'<rect x="{WIDTH - 150}" y="{ly - 8}" width="12" height="12" fill="{color}"/>')
        svg.add(f'<text x="{WIDTH - 133}" y="{ly + 3}">{name}</text>')
    svg.add(f'<text x="14" y="{(MARGIN_T + y0) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 14 {(MARGIN_T + y0) / 2})">{y_label}</text>')
    svg.write(path)
