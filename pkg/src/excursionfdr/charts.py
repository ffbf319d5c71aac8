"""Minimal SVG line chart for simulated error-rate curves.

One fixed-size chart style: empirical FDR against the level c, one
polyline per method, with a dashed horizontal guide at the nominal
level.  Assembled as plain strings so there is no plotting dependency
and output is byte-deterministic.
"""

from __future__ import annotations

from .simulate import SimulationResult

_WIDTH = 800
_HEIGHT = 600
_MARGIN_LEFT = 70
_MARGIN_RIGHT = 170
_MARGIN_TOP = 40
_MARGIN_BOTTOM = 60
_Y_MAX = 0.2

_METHOD_COLORS = {
    "upper-bh": "#1f77b4",
    "lower-bh": "#e0a800",
    "lower-adaptive": "#2ca02c",
    "joint": "#d62728",
}
_FALLBACK_COLOR = "#7f7f7f"


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_fdr_chart(result: SimulationResult, nominal_alpha: float) -> str:
    """Render the FDR curves of a simulation result as an SVG document."""
    c_grid = result.c_grid
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM
    c_min, c_max = c_grid[0], c_grid[-1]
    c_span = (c_max - c_min) or 1.0

    def to_x(c: float) -> float:
        return _MARGIN_LEFT + (c - c_min) / c_span * plot_w

    def to_y(rate: float) -> float:
        clamped = min(max(rate, 0.0), _Y_MAX)
        return _MARGIN_TOP + (1.0 - clamped / _Y_MAX) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]

    axis_bottom = _MARGIN_TOP + plot_h
    axis_right = _MARGIN_LEFT + plot_w
    parts.append(
        f'<line x1="{_MARGIN_LEFT}" y1="{axis_bottom}" x2="{axis_right}" y2="{axis_bottom}" '
        'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_MARGIN_LEFT}" y1="{_MARGIN_TOP}" x2="{_MARGIN_LEFT}" y2="{axis_bottom}" '
        'stroke="black" stroke-width="1"/>'
    )

    n_x_ticks = 5
    for i in range(n_x_ticks):
        c = c_min + (c_max - c_min) * i / (n_x_ticks - 1)
        x = to_x(c)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{axis_bottom}" x2="{_fmt(x)}" y2="{axis_bottom + 6}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{axis_bottom + 22}" font-size="13" '
            f'text-anchor="middle" font-family="sans-serif">{c:g}</text>'
        )
    for i in range(5):
        rate = _Y_MAX * i / 4
        y = to_y(rate)
        parts.append(
            f'<line x1="{_MARGIN_LEFT - 6}" y1="{_fmt(y)}" x2="{_MARGIN_LEFT}" y2="{_fmt(y)}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 10}" y="{_fmt(y + 4)}" font-size="13" '
            f'text-anchor="end" font-family="sans-serif">{rate:g}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.0f}" y="{_HEIGHT - 16}" font-size="15" '
        'text-anchor="middle" font-family="sans-serif">c</text>'
    )
    parts.append(
        f'<text x="20" y="{_MARGIN_TOP + plot_h / 2:.0f}" font-size="15" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 20 {_MARGIN_TOP + plot_h / 2:.0f})">empirical FDR</text>'
    )

    # nominal-level guide
    y_alpha = to_y(nominal_alpha)
    parts.append(
        f'<line x1="{_MARGIN_LEFT}" y1="{_fmt(y_alpha)}" x2="{axis_right}" y2="{_fmt(y_alpha)}" '
        'stroke="#d62728" stroke-width="1" stroke-dasharray="6 4"/>'
    )

    for mi, method in enumerate(result.methods):
        color = _METHOD_COLORS.get(method.value, _FALLBACK_COLOR)
        points = " ".join(
            f"{_fmt(to_x(c))},{_fmt(to_y(result.fdr[ci, mi]))}"
            for ci, c in enumerate(c_grid)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>'
        )

    legend_x = axis_right + 14
    legend_y = _MARGIN_TOP + 10
    for mi, method in enumerate(result.methods):
        color = _METHOD_COLORS.get(method.value, _FALLBACK_COLOR)
        y = legend_y + mi * 22
        parts.append(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 24}" y2="{y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{legend_x + 30}" y="{y + 4}" font-size="13" '
            f'font-family="sans-serif">{method.value}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
