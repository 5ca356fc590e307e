"""Minimal rectilinear heat maps written directly as SVG."""

from __future__ import annotations

from typing import Optional

import numpy as np

# dark blue -> teal -> yellow, interpolated to 256 levels
_ANCHORS = np.array([
    [0.050, 0.030, 0.330],
    [0.130, 0.400, 0.560],
    [0.120, 0.680, 0.480],
    [0.990, 0.900, 0.150],
])
_LEVELS = 256
MASK_COLOR = "#9a9a9a"


def _palette():
    pos = np.linspace(0.0, 1.0, len(_ANCHORS))
    s = np.linspace(0.0, 1.0, _LEVELS)
    rgb = np.stack([np.interp(s, pos, _ANCHORS[:, c]) for c in range(3)], axis=1)
    return ["#%02x%02x%02x" % tuple(int(round(255 * v)) for v in row) for row in rgb]


PALETTE = _palette()


def heatmap_svg(values, x, t, title: str = "", mask: Optional[np.ndarray] = None,
                cell_w: float = 1.0, cell_h: float = 6.0) -> str:
    """Render ``values`` (shape (nt, nx)) with time increasing downward.

    The colour scale is normalised to the panel maximum over unmasked cells;
    masked columns are drawn grey.  Runs of equal colour along a row are
    merged into one rectangle.
    """
    values = np.asarray(values, dtype=float)
    nt, nx = values.shape
    mask = np.zeros(nx, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    vmax = values[:, ~mask].max() if (~mask).any() else 0.0
    scale = (_LEVELS - 1) / vmax if vmax > 0 else 0.0
    levels = np.clip(np.rint(values * scale), 0, _LEVELS - 1).astype(int)

    left, top, bottom = 60.0, 30.0, 40.0
    width = left + nx * cell_w + 20.0
    height = top + nt * cell_h + bottom
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<text x="{left:.0f}" y="18" font-family="sans-serif" font-size="12">{_escape(title)}</text>',
    ]
    for i in range(nt):
        y = top + i * cell_h
        row = [MASK_COLOR if mask[j] else PALETTE[levels[i, j]] for j in range(nx)]
        j = 0
        while j < nx:
            k = j
            while k + 1 < nx and row[k + 1] == row[j]:
                k += 1
            out.append(
                f'<rect x="{left + j * cell_w:.2f}" y="{y:.2f}" width="{(k - j + 1) * cell_w:.2f}" '
                f'height="{cell_h:.2f}" fill="{row[j]}"/>'
            )
            j = k + 1
    ybase = top + nt * cell_h
    out.append(
        f'<text x="{left:.0f}" y="{ybase + 16:.0f}" font-family="sans-serif" font-size="10">x = {x[0]:g}</text>'
    )
    out.append(
        f'<text x="{left + nx * cell_w:.0f}" y="{ybase + 16:.0f}" font-family="sans-serif" font-size="10" '
        f'text-anchor="end">x = {x[-1]:g}</text>'
    )
    out.append(f'<text x="4" y="{top + 8:.0f}" font-family="sans-serif" font-size="10">t = {t[0]:g}</text>')
    out.append(f'<text x="4" y="{ybase:.0f}" font-family="sans-serif" font-size="10">t = {t[-1]:g}</text>')
    out.append(
        f'<text x="{left:.0f}" y="{ybase + 32:.0f}" font-family="sans-serif" font-size="10">'
        f'colour scale: 0 .. {vmax:.6g} (panel maximum)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_heatmap(path: str, values, x, t, title: str = "", mask=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(heatmap_svg(values, x, t, title=title, mask=mask))
