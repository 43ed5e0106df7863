"""Deterministic SVG figures written as plain text (900 x 600 canvas).

Coordinates are printed with two decimals so identical inputs give identical
bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from rmtsync.clustering import Dendrogram
from rmtsync.rolling import RollingPoint

WIDTH, HEIGHT = 900, 600


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _nice_ticks(hi: float, count: int = 5) -> list[float]:
    if hi <= 0:
        return [0.0]
    raw = hi / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if raw <= m * mag)
    ticks = [0.0]
    while ticks[-1] < hi - 1e-12:
        ticks.append(round(ticks[-1] + step, 10))
    return ticks


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]


def dendrogram_svg(dendro: Dendrogram, title: str = "Average-linkage clustering") -> str:
    left, right, top, bottom = 80.0, 30.0, 50.0, 130.0
    plot_w = WIDTH - left - right
    plot_h = HEIGHT - top - bottom
    n = dendro.n
    order = dendro.leaf_order()
    top_h = max((m.height for m in dendro.merges), default=0.0)
    ticks = _nice_ticks(top_h)
    y_max = max(ticks[-1], top_h) or 1.0

    def ypos(h: float) -> float:
        return top + plot_h * (1.0 - h / y_max)

    slot = plot_w / n
    xs = {leaf: left + slot * (i + 0.5) for i, leaf in enumerate(order)}
    ys = {leaf: ypos(0.0) for leaf in order}

    out = _header(title)
    base = ypos(0.0)
    out.append(f'<line x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(base)}" stroke="black"/>')
    for tv in ticks:
        y = ypos(tv)
        out.append(f'<line x1="{_f(left - 5)}" y1="{_f(y)}" x2="{_f(left)}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{_f(left - 8)}" y="{_f(y + 4)}" text-anchor="end">{tv:g}</text>')
    out.append(
        f'<text x="20" y="{_f(top + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_f(top + plot_h / 2)})">Height</text>'
    )
    out.append('<g stroke="black" fill="none">')
    for k, m in enumerate(dendro.merges):
        node = n + k
        y = ypos(m.height)
        xl, xr = xs[m.left], xs[m.right]
        out.append(
            f'<path d="M{_f(xl)},{_f(ys[m.left])} V{_f(y)} H{_f(xr)} V{_f(ys[m.right])}"/>'
        )
        xs[node] = 0.5 * (xl + xr)
        ys[node] = y
    out.append("</g>")
    for leaf in order:
        x = xs[leaf]
        y = base + 10
        out.append(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="end" '
            f'transform="rotate(-90 {_f(x)} {_f(y)})">{escape(dendro.labels[leaf])}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def rolling_svg(points: list[RollingPoint], n_series: int, title: str = "Largest eigenvalue share") -> str:
    left, right, top, bottom = 80.0, 30.0, 50.0, 70.0
    plot_w = WIDTH - left - right
    plot_h = HEIGHT - top - bottom
    x0 = points[0].window_end
    x1 = points[-1].window_end
    span = max(x1 - x0, 1)

    def xpos(year: float) -> float:
        return left + plot_w * (year - x0) / span

    def ypos(v: float) -> float:
        return top + plot_h * (1.0 - v)

    out = _header(title)
    out.append(
        f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(plot_w)}" height="{_f(plot_h)}" '
        'fill="none" stroke="black"/>'
    )
    for i in range(6):
        v = i / 5
        y = ypos(v)
        out.append(f'<line x1="{_f(left - 5)}" y1="{_f(y)}" x2="{_f(left)}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{_f(left - 8)}" y="{_f(y + 4)}" text-anchor="end">{v:.1f}</text>')
    first_tick = x0 + (-x0) % 5
    for year in range(first_tick, x1 + 1, 5):
        x = xpos(year)
        out.append(f'<line x1="{_f(x)}" y1="{_f(top + plot_h)}" x2="{_f(x)}" y2="{_f(top + plot_h + 5)}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(top + plot_h + 20)}" text-anchor="middle">{year}</text>')
    out.append(
        f'<text x="{_f(left + plot_w / 2)}" y="{HEIGHT - 15}" text-anchor="middle">Window end year</text>'
    )
    out.append(
        f'<text x="20" y="{_f(top + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_f(top + plot_h / 2)})">lambda_max / N</text>'
    )
    null_share = points[0].theoretical_lambda_max / n_series
    yn = ypos(min(null_share, 1.0))
    out.append(
        f'<line x1="{_f(left)}" y1="{_f(yn)}" x2="{_f(left + plot_w)}" y2="{_f(yn)}" '
        'stroke="gray" stroke-dasharray="6,4"/>'
    )
    out.append(
        f'<text x="{_f(left + plot_w - 4)}" y="{_f(yn - 6)}" text-anchor="end" fill="gray">'
        f"noise ceiling {null_share:.3f}</text>"
    )
    coords = " ".join(f"{_f(xpos(p.window_end))},{_f(ypos(p.info_fraction))}" for p in points)
    out.append(f'<polyline points="{coords}" fill="none" stroke="navy" stroke-width="2"/>')
    for p in points:
        out.append(
            f'<circle cx="{_f(xpos(p.window_end))}" cy="{_f(ypos(p.info_fraction))}" r="2.5" fill="navy"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
