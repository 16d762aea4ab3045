"""Minimal deterministic SVG charts for the experiment tables.

Hand-rolled on purpose: the output contains nothing but the data-driven
geometry, so two runs with the same inputs produce byte-identical files.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 640, 420
_MARGIN = 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(values, lo_pix, hi_pix):
    finite = [v for v in values if not math.isnan(v)]
    lo, hi = min(finite), max(finite)
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo

    def to_pix(v):
        return lo_pix + (v - lo) / span * (hi_pix - lo_pix)

    return to_pix, lo, hi


def line_chart(series: dict[str, list[tuple[float, float]]],
               x_label: str, y_label: str, title: str) -> str:
    """Polyline chart; ``series`` maps label -> [(x, y), ...]."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts if not math.isnan(y)]
    x_pix, x_lo, x_hi = _scale(xs, _MARGIN, _WIDTH - _MARGIN)
    y_pix, y_lo, y_hi = _scale(ys, _HEIGHT - _MARGIN, _MARGIN)
    parts = [_header(title, x_label, y_label, x_lo, x_hi, y_lo, y_hi)]
    for i, (label, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        clean = [(x, y) for x, y in pts if not math.isnan(y)]
        coords = " ".join(f"{x_pix(x):.1f},{y_pix(y):.1f}" for x, y in clean)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                     f'points="{coords}"/>')
        for x, y in clean:
            parts.append(f'<circle cx="{x_pix(x):.1f}" cy="{y_pix(y):.1f}" r="3" '
                         f'fill="{color}"/>')
        parts.append(f'<text x="{_WIDTH - _MARGIN + 4}" y="{_MARGIN + 16 * i}" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def bubble_chart(points: list[tuple[float, float, float]],
                 x_label: str, y_label: str, title: str) -> str:
    """Bubble chart; ``points`` are (x, y, size) with size mapped to radius."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    sizes = [p[2] for p in points if not math.isnan(p[2])]
    x_pix, x_lo, x_hi = _scale(xs, _MARGIN, _WIDTH - _MARGIN)
    y_pix, y_lo, y_hi = _scale(ys, _HEIGHT - _MARGIN, _MARGIN)
    biggest = max(sizes) if sizes else 1.0
    parts = [_header(title, x_label, y_label, x_lo, x_hi, y_lo, y_hi)]
    for x, y, size in points:
        if math.isnan(size):
            continue
        radius = 4 + 26 * math.sqrt(size / biggest)
        parts.append(f'<circle cx="{x_pix(x):.1f}" cy="{y_pix(y):.1f}" '
                     f'r="{radius:.1f}" fill="#1f77b4" fill-opacity="0.45"/>')
        parts.append(f'<text x="{x_pix(x):.1f}" y="{y_pix(y):.1f}" font-size="9" '
                     f'text-anchor="middle">{size:.1f}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def _header(title, x_label, y_label, x_lo, x_hi, y_lo, y_hi) -> str:
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_HEIGHT - _MARGIN}" '
        f'stroke="black"/>',
        f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="14" y="{_HEIGHT // 2}" font-size="12" '
        f'transform="rotate(-90 14 {_HEIGHT // 2})" text-anchor="middle">{y_label}</text>',
        f'<text x="{_MARGIN}" y="{_HEIGHT - _MARGIN + 14}" font-size="10">{x_lo:g}</text>',
        f'<text x="{_WIDTH - _MARGIN}" y="{_HEIGHT - _MARGIN + 14}" font-size="10" '
        f'text-anchor="end">{x_hi:g}</text>',
        f'<text x="{_MARGIN - 4}" y="{_HEIGHT - _MARGIN}" font-size="10" '
        f'text-anchor="end">{y_lo:g}</text>',
        f'<text x="{_MARGIN - 4}" y="{_MARGIN + 4}" font-size="10" '
        f'text-anchor="end">{y_hi:g}</text>',
    ])
