"""Scanpath SVG overlays and attention heatmap grids.

SVG output is plain text with fixed attribute order and 2-decimal
coordinates, so identical inputs give byte-identical files. Heatmaps are
plain-text PGM (P2): bit-exact, diffable, no image library needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .registry import AoiRegistry
from .scanpath import Scanpath

# Displayed fixation radius: base + scale * duration, clamped to this range.
MIN_DISPLAY_RADIUS_PX = 4.0
MAX_DISPLAY_RADIUS_PX = 60.0

# Heatmap cell values are kept on a 2^-32 grid. Sums of such values stay
# exact in float64 up to 2^21 seconds of total mass, which makes group
# accumulation associative: order never changes a single bit.
_QUANTUM_BITS = 32


@dataclass(frozen=True)
class ScanpathStyle:
    base_radius_px: float = 6.0
    radius_per_second_px: float = 30.0
    background: str | None = None


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_scanpath_svg(path: Scanpath, registry: AoiRegistry, style: ScanpathStyle = ScanpathStyle()) -> str:
    """One duration-scaled circle per fixation, numbered arrows between them.

    Registry circles are drawn dashed underneath for orientation. The
    picture itself is not embedded; pass style.background to reference one.
    """
    w, h = registry.canvas_w, registry.canvas_h
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" '
        'markerHeight="7" orient="auto-start-reverse">'
        '<path d="M 0 0 L 10 5 L 0 10 z" fill="#555555"/></marker></defs>',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
    ]
    if style.background:
        out.append(
            f'<image href="{_esc(style.background)}" x="0" y="0" width="{w}" height="{h}" '
            'preserveAspectRatio="none"/>'
        )
    for aoi in registry.aois:
        out.append(
            f'<circle class="aoi" cx="{aoi.x:.2f}" cy="{aoi.y:.2f}" r="{aoi.radius:.2f}" '
            'fill="none" stroke="#c8c8c8" stroke-dasharray="4 3"/>'
        )
        out.append(
            f'<text class="aoi-label" x="{aoi.x:.2f}" y="{aoi.y - aoi.radius - 3:.2f}" '
            f'font-size="10" text-anchor="middle" fill="#aaaaaa">{_esc(aoi.name)}</text>'
        )

    fixes = path.fixations
    for i, (a, b) in enumerate(zip(fixes, fixes[1:]), start=1):
        out.append(
            f'<line class="saccade" x1="{a.x:.2f}" y1="{a.y:.2f}" x2="{b.x:.2f}" y2="{b.y:.2f}" '
            'stroke="#555555" stroke-width="1.5" marker-end="url(#arrow)"/>'
        )
        mx, my = (a.x + b.x) / 2.0, (a.y + b.y) / 2.0
        out.append(
            f'<text class="saccade-label" x="{mx:.2f}" y="{my - 4:.2f}" font-size="11" '
            f'text-anchor="middle" fill="#333333">{i}</text>'
        )
    for fix in fixes:
        r = style.base_radius_px + style.radius_per_second_px * fix.time_spent_s
        r = min(max(r, MIN_DISPLAY_RADIUS_PX), MAX_DISPLAY_RADIUS_PX)
        out.append(
            f'<circle class="fixation" cx="{fix.x:.2f}" cy="{fix.y:.2f}" r="{r:.2f}" '
            'fill="#1f77b4" fill-opacity="0.35" stroke="#1f77b4"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class HeatGrid:
    """2-D accumulation grid; values[row, col], row 0 at the canvas top."""

    width: int
    height: int
    cell_size: float
    values: np.ndarray

    def total_mass(self) -> float:
        return float(self.values.sum())


def _quantize_bump(bump: np.ndarray, mass: float) -> np.ndarray:
    """Snap a bump to the 2^-32 grid with its total forced to quantize(mass).

    Largest-remainder apportionment: floor every cell, then hand the
    leftover quanta to the cells with the largest fractional parts (ties by
    flat index). Keeps every cell non-negative and the total exact.
    """
    scaled = np.ldexp(bump, _QUANTUM_BITS)
    floors = np.floor(scaled)
    target = int(round(mass * (1 << _QUANTUM_BITS)))
    leftover = target - int(floors.sum())
    if leftover > 0:
        residue = (scaled - floors).ravel()
        order = np.argsort(-residue, kind="stable")
        take = min(leftover, order.size)
        flat = floors.ravel()
        flat[order[:take]] += 1.0
        leftover -= take
        if leftover > 0:  # pathological: park the rest on the heaviest cell
            flat[order[0]] += leftover
        floors = flat.reshape(bump.shape)
    elif leftover < 0:
        flat = floors.ravel()
        peak = int(np.argmax(flat))
        flat[peak] += leftover  # cannot undershoot: peak >= |leftover| quanta
        floors = flat.reshape(bump.shape)
    return np.ldexp(floors, -_QUANTUM_BITS)


def accumulate_heatmap(
    paths: list[Scanpath],
    registry: AoiRegistry,
    cell_size: float = 5.0,
    sigma_scale: float = 0.5,
) -> HeatGrid:
    """Sum one Gaussian bump per fixation over a canvas-aligned grid.

    Bump center is the fixation center, sigma = sigma_scale * AOI radius,
    and total bump mass equals the fixation duration (normalized over the
    grid, so mass never leaks off-canvas). Grid total therefore equals the
    summed durations to within one quantum per fixation.
    """
    if cell_size <= 0:
        raise ValidationError(f"cell_size must be > 0, got {cell_size}")
    width = max(1, math.ceil(registry.canvas_w / cell_size))
    height = max(1, math.ceil(registry.canvas_h / cell_size))
    grid = np.zeros((height, width))
    cx = (np.arange(width) + 0.5) * cell_size
    cy = (np.arange(height) + 0.5) * cell_size

    for path in paths:
        for fix in path.fixations:
            sigma = sigma_scale * fix.radius
            if sigma > 0:
                wx = np.exp(-((cx - fix.x) ** 2) / (2.0 * sigma * sigma))
                wy = np.exp(-((cy - fix.y) ** 2) / (2.0 * sigma * sigma))
                weights = np.outer(wy, wx)
                total = weights.sum()
            else:
                total = 0.0
            if total <= 0.0:  # sigma 0 or everything underflowed: nearest cell
                weights = np.zeros((height, width))
                row = min(max(int(fix.y // cell_size), 0), height - 1)
                col = min(max(int(fix.x // cell_size), 0), width - 1)
                weights[row, col] = 1.0
                total = 1.0
            grid += _quantize_bump(weights * (fix.time_spent_s / total), fix.time_spent_s)

    return HeatGrid(width, height, cell_size, grid)


def add_heatmaps(a: HeatGrid, b: HeatGrid) -> HeatGrid:
    _require_same_shape(a, b)
    return HeatGrid(a.width, a.height, a.cell_size, a.values + b.values)


def diff_heatmap(a: HeatGrid, b: HeatGrid) -> HeatGrid:
    """Cellwise difference after normalizing each side to unit total mass."""
    _require_same_shape(a, b)

    def unit(grid: HeatGrid) -> np.ndarray:
        total = grid.total_mass()
        return grid.values / total if total > 0 else np.zeros_like(grid.values)

    return HeatGrid(a.width, a.height, a.cell_size, unit(a) - unit(b))


def _require_same_shape(a: HeatGrid, b: HeatGrid) -> None:
    if (a.width, a.height) != (b.width, b.height) or a.cell_size != b.cell_size:
        raise ValidationError(
            f"grid mismatch: {a.width}x{a.height}@{a.cell_size} vs {b.width}x{b.height}@{b.cell_size}"
        )


def heatgrid_to_pgm(grid: HeatGrid, comment: str = "") -> str:
    """P2 text image, cells scaled linearly so the grid maximum maps to 255."""
    peak = float(grid.values.max(initial=0.0))
    if peak > 0:
        levels = np.floor(grid.values * (255.0 / peak) + 0.5).astype(int)
    else:
        levels = np.zeros_like(grid.values, dtype=int)
    lines = ["P2"]
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"{grid.width} {grid.height}")
    lines.append("255")
    for row in levels:
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def signed_heatgrid_to_pgms(grid: HeatGrid, comment: str = "") -> tuple[str, str]:
    """Encode a signed grid as (positive, negative) PGMs on a shared scale.

    Both parts divide by the same max(|value|) so their intensities stay
    comparable.
    """
    peak = float(np.abs(grid.values).max(initial=0.0))
    pos = np.maximum(grid.values, 0.0)
    neg = np.maximum(-grid.values, 0.0)

    def render(values: np.ndarray, suffix: str) -> str:
        if peak > 0:
            levels = np.floor(values * (255.0 / peak) + 0.5).astype(int)
        else:
            levels = np.zeros_like(values, dtype=int)
        lines = ["P2"]
        if comment:
            lines.append(f"# {comment} [{suffix}]")
        lines.append(f"{grid.width} {grid.height}")
        lines.append("255")
        for row in levels:
            lines.append(" ".join(str(v) for v in row))
        return "\n".join(lines) + "\n"

    return render(pos, "positive part"), render(neg, "negative part")
