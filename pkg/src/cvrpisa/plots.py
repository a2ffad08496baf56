"""Static SVG scatter plots of instance-space coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .io_utils import atomic_write_text

COLOR_BY = ("source", "performance", "membership")

# Categorical palette (colour-blind friendly, Okabe-Ito order) for set tags.
PALETTE = ("#0072B2", "#D55E00", "#009E73", "#CC79A7", "#E69F00", "#56B4E9", "#F0E442", "#000000")
BLUE = (0x21, 0x66, 0xAC)
RED = (0xB2, 0x18, 0x2B)


class UnjoinedInstances(KeyError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__(f"no colour value for {len(self.names)} instance(s): {', '.join(self.names)}")


@dataclass(frozen=True)
class PlotSpec:
    """What to draw. ``values`` maps instance name to the colour key.

    For ``source`` and ``membership`` the values are category labels; for
    ``membership`` they are typically "member"/"other" and members are drawn
    as stars. For ``performance`` they are PIs (lower is better, drawn blue);
    any other [0, 1] quantity works with matching ``legend_labels``.
    """

    color_by: str = "source"
    values: dict | None = None
    title: str = ""
    size: int = 600
    legend_labels: tuple[str, str, str] = ("PI 0 (better)", "PI 0.5", "PI 1 (worse)")

    def __post_init__(self):
        if self.color_by not in COLOR_BY:
            raise ValueError(f"color_by must be one of {COLOR_BY}")
        if self.color_by == "performance" and self.values is None:
            raise ValueError("performance colouring needs a performance column")


def performance_color(t: float) -> str:
    """Blue at t=0 (best) to red at t=1, linear in RGB."""
    t = min(max(float(t), 0.0), 1.0)
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(BLUE, RED))
    return f"#{r:02x}{g:02x}{b:02x}"


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if math.isfinite(v) else "0"


def _star(cx, cy, r):
    pts = []
    for i in range(10):
        ang = -math.pi / 2 + i * math.pi / 5
        rad = r if i % 2 == 0 else r * 0.45
        pts.append(f"{_num(cx + rad * math.cos(ang))},{_num(cy + rad * math.sin(ang))}")
    return " ".join(pts)


def _marker(cx, cy, color, star, title):
    t = f"<title>{escape(title)}</title>"
    if star:
        return f'<polygon class="marker" points="{_star(cx, cy, 7)}" fill="{color}">{t}</polygon>'
    return f'<circle class="marker" cx="{_num(cx)}" cy="{_num(cy)}" r="4" fill="{color}" fill-opacity="0.85">{t}</circle>'


def scatter_svg(instances, Z, spec: PlotSpec = PlotSpec()) -> str:
    """Render coordinates as an SVG document with equal-aspect axes and a legend."""
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    instances = list(instances)
    if spec.values is not None:
        missing = [n for n in instances if n not in spec.values]
        if missing:
            raise UnjoinedInstances(missing)
    if spec.color_by == "source" and spec.values is None:
        keys = [n.split("-", 1)[0] for n in instances]
    elif spec.values is not None:
        keys = [spec.values[n] for n in instances]
    else:
        keys = ["all"] * len(instances)

    size, pad, legend_w = spec.size, 50, 170
    if len(Z):
        lo, hi = Z.min(axis=0), Z.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    span = float(max(hi - lo)) or 1.0
    centre = (lo + hi) / 2
    lo = centre - span / 2 * 1.05
    scale = (size - 2 * pad) / (span * 1.05)

    def to_px(z):
        return pad + (z[0] - lo[0]) * scale, size - pad - (z[1] - lo[1]) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + legend_w}" height="{size}" '
        f'viewBox="0 0 {size + legend_w} {size}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{size + legend_w}" height="{size}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" fill="none" stroke="#444"/>',
        f'<text x="{size / 2}" y="{size - 12}" text-anchor="middle">Z1</text>',
        f'<text x="14" y="{size / 2}" text-anchor="middle" transform="rotate(-90 14 {size / 2})">Z2</text>',
    ]
    if spec.title:
        out.append(f'<text x="{size / 2}" y="24" text-anchor="middle" font-size="14">{escape(spec.title)}</text>')
    # tick labels at the corners of the data window
    for frac in (0.0, 0.5, 1.0):
        x = pad + frac * (size - 2 * pad)
        out.append(f'<text x="{_num(x)}" y="{size - pad + 16}" text-anchor="middle" fill="#444">{_num(lo[0] + frac * span * 1.05)}</text>')
        y = size - pad - frac * (size - 2 * pad)
        out.append(f'<text x="{pad - 6}" y="{_num(y + 4)}" text-anchor="end" fill="#444">{_num(lo[1] + frac * span * 1.05)}</text>')

    legend = []
    if spec.color_by == "performance":
        vals = np.array([float(k) for k in keys])
        colors = [performance_color(v) for v in vals]
        order = range(len(instances))
        stars = [False] * len(instances)
        legend = [(label, performance_color(t), False) for label, t in zip(spec.legend_labels, (0.0, 0.5, 1.0))]
    else:
        cats = sorted(set(map(str, keys)))
        cmap = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(cats)}
        member = spec.color_by == "membership"
        if member and set(cats) <= {"member", "other"}:
            cmap = {"member": "#D62728", "other": "#000000"}
        colors = [cmap[str(k)] for k in keys]
        stars = [member and str(k) == "member" for k in keys]
        # draw members last so they sit on top
        order = sorted(range(len(instances)), key=lambda i: (stars[i], i))
        legend = [(c, cmap[c], member and c == "member") for c in cats]

    out.append('<g class="points">')
    for i in order:
        x, y = to_px(Z[i])
        out.append(_marker(x, y, colors[i], stars[i], instances[i]))
    out.append("</g>")

    out.append('<g class="legend">')
    for j, (label, color, star) in enumerate(legend):
        y = pad + 10 + 20 * j
        x = size + 10
        shape = (
            f'<polygon points="{_star(x + 6, y, 7)}" fill="{color}"/>' if star
            else f'<circle cx="{x + 6}" cy="{y}" r="5" fill="{color}"/>'
        )
        out.append(f'<g class="legend-entry">{shape}<text x="{x + 18}" y="{y + 4}">{escape(str(label))}</text></g>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_scatter(path: str | Path, instances, Z, spec: PlotSpec = PlotSpec()) -> None:
    atomic_write_text(path, scatter_svg(instances, Z, spec))
