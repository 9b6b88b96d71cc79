"""Minimal deterministic SVG line charts.

Plain-text output with no timestamps or randomness, so identical data
always yields identical bytes.  Only what the experiment reports need:
axes, ticks, legend and one polyline per series.
"""

from __future__ import annotations

from typing import Sequence, Tuple

WIDTH, HEIGHT = 800.0, 500.0
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80.0, 30.0, 46.0, 64.0

PALETTE = ("#c03030", "#2060c0", "#208040", "#b07800", "#7040a0", "#008080")


def _span(values) -> Tuple[float, float]:
    lo = min(values)
    hi = max(values)
    if hi == lo:
        pad = abs(hi) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def line_chart(series: Sequence[Tuple[str, Sequence[float], Sequence[float]]],
               xlabel: str, ylabel: str, title: str) -> str:
    """Render named (x, y) series as one SVG document string."""
    if not series or any(len(xs) == 0 for _, xs, _ in series):
        raise ValueError("every series needs at least one point")
    x_lo, x_hi = _span([x for _, xs, _ in series for x in xs])
    y_lo, y_hi = _span([y for _, _, ys in series for y in ys])

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0f}" '
           f'height="{HEIGHT:.0f}" viewBox="0 0 {WIDTH:.0f} {HEIGHT:.0f}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="26" text-anchor="middle" '
           f'font-family="sans-serif" font-size="17">{title}</text>']

    axis = 'stroke="black" stroke-width="1"'
    out.append(f'<line x1="{MARGIN_L:.1f}" y1="{HEIGHT - MARGIN_B:.1f}" '
               f'x2="{WIDTH - MARGIN_R:.1f}" y2="{HEIGHT - MARGIN_B:.1f}" {axis}/>')
    out.append(f'<line x1="{MARGIN_L:.1f}" y1="{MARGIN_T:.1f}" '
               f'x2="{MARGIN_L:.1f}" y2="{HEIGHT - MARGIN_B:.1f}" {axis}/>')

    n_ticks = 6
    for i in range(n_ticks):
        xv = x_lo + (x_hi - x_lo) * i / (n_ticks - 1)
        xp = px(xv)
        out.append(f'<line x1="{xp:.1f}" y1="{HEIGHT - MARGIN_B:.1f}" '
                   f'x2="{xp:.1f}" y2="{HEIGHT - MARGIN_B + 6:.1f}" {axis}/>')
        out.append(f'<text x="{xp:.1f}" y="{HEIGHT - MARGIN_B + 22:.1f}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12">{_fmt(xv)}</text>')
        yv = y_lo + (y_hi - y_lo) * i / (n_ticks - 1)
        yp = py(yv)
        out.append(f'<line x1="{MARGIN_L - 6:.1f}" y1="{yp:.1f}" '
                   f'x2="{MARGIN_L:.1f}" y2="{yp:.1f}" {axis}/>')
        out.append(f'<text x="{MARGIN_L - 10:.1f}" y="{yp + 4:.1f}" '
                   f'text-anchor="end" font-family="sans-serif" '
                   f'font-size="12">{_fmt(yv)}</text>')

    out.append(f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 16:.1f}" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'font-size="14">{xlabel}</text>')
    out.append(f'<text x="22" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="14" '
               f'transform="rotate(-90 22 {MARGIN_T + plot_h / 2:.1f})">{ylabel}</text>')

    for i, (name, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}"
                          for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{points}"/>')
        ly = MARGIN_T + 16 + 18 * i
        lx = WIDTH - MARGIN_R - 150
        out.append(f'<line x1="{lx:.1f}" y1="{ly - 4:.1f}" x2="{lx + 26:.1f}" '
                   f'y2="{ly - 4:.1f}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 32:.1f}" y="{ly:.1f}" font-family="sans-serif" '
                   f'font-size="12">{name}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
