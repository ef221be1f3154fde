"""Minimal SVG scatter plots of 2-D projections."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import NOISE

# tab20-style palette; cycles when there are more clusters
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
]


def scatter_svg(
    xy: np.ndarray,
    labels: Sequence[int],
    path: str | Path | None = None,
    *,
    size: int = 600,
    margin: int = 30,
    title: str | None = None,
) -> str:
    """Render points coloured by label; ``NOISE`` points are drawn as crosses."""
    xy = np.asarray(xy, dtype=float)[:, :2]
    labels = np.asarray(labels)
    lo = xy.min(axis=0) if len(xy) else np.zeros(2)
    span = np.ptp(xy, axis=0) if len(xy) else np.ones(2)
    span[span == 0] = 1.0
    inner = size - 2 * margin
    px = margin + (xy - lo) / span * inner
    px[:, 1] = size - px[:, 1]  # y grows upwards

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{margin}" y="{margin - 10}" font-family="sans-serif" font-size="14">{title}</text>')
    for (x, y), lab in zip(px, labels):
        if lab == NOISE:
            r = 3.5
            parts.append(
                f'<path d="M{x - r:.2f},{y - r:.2f}L{x + r:.2f},{y + r:.2f}'
                f'M{x - r:.2f},{y + r:.2f}L{x + r:.2f},{y - r:.2f}" stroke="black" stroke-width="1.2"/>'
            )
        else:
            color = PALETTE[int(lab) % len(PALETTE)]
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}" fill-opacity="0.85"/>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(svg)
    return svg
