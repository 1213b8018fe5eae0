"""Minimal deterministic SVG line charts for learning curves."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .metrics import moving_average

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

WIDTH, HEIGHT = 840, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 180, 30, 55


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _polyline(xs, ys, color: str, width: float, opacity: float) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
        f'stroke-opacity="{opacity}" points="{pts}"/>'
    )


def emit_chart(series: dict, path, window: int = 50, ylabel: str = "Mbps", xlabel: str = "Episode", title: str = ""):
    """Write one SVG: a moving-average polyline per named series, the raw
    per-episode values behind it at reduced opacity, axes, and a legend."""
    if not series:
        raise ValueError("need at least one series to chart")
    smoothed = {name: moving_average(vals, window) for name, vals in series.items()}

    all_vals = [v for vals in series.values() for v in vals]
    all_vals += [v for vals in smoothed.values() for v in vals]
    y_lo, y_hi = min(all_vals), max(all_vals)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_hi = max(len(vals) for vals in series.values()) - 1 or 1

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + plot_w * x / x_hi

    def sy(y):
        return MARGIN_TOP + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{MARGIN_LEFT}" y="{MARGIN_TOP - 10}" font-size="14">{escape(title)}</text>')

    for y in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{sy(y):.2f}" x2="{WIDTH - MARGIN_RIGHT}" y2="{sy(y):.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(f'<text x="{MARGIN_LEFT - 8}" y="{sy(y) + 4:.2f}" text-anchor="end">{y:.0f}</text>')
    for x in _ticks(0, x_hi):
        parts.append(f'<text x="{sx(x):.2f}" y="{HEIGHT - MARGIN_BOTTOM + 18}" text-anchor="middle">{x:.0f}</text>')

    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" x2="{WIDTH - MARGIN_RIGHT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>'
    )
    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="18" y="{MARGIN_TOP + plot_h / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN_TOP + plot_h / 2:.0f})">{escape(ylabel)}</text>'
    )

    legend_y = MARGIN_TOP + 10
    for idx, name in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        raw = series[name]
        xs = [sx(i) for i in range(len(raw))]
        parts.append(_polyline(xs, [sy(v) for v in raw], color, 1.0, 0.25))
        parts.append(_polyline(xs, [sy(v) for v in smoothed[name]], color, 2.0, 1.0))
        parts.append(
            f'<rect x="{WIDTH - MARGIN_RIGHT + 12}" y="{legend_y - 9}" width="12" height="12" fill="{color}"/>'
        )
        parts.append(f'<text x="{WIDTH - MARGIN_RIGHT + 30}" y="{legend_y + 2}">{escape(str(name))}</text>')
        legend_y += 20

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
