"""Render density maps to heatmap PNGs for eyeballing.

The palette is a fixed 256-entry table interpolated from nine anchors,
dark violet through orange to pale yellow, starting at exact black so an
empty map renders as a black image. Values are min-max normalized per
map; previews are for inspection only and carry no count information.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

_ANCHORS = (
    (0, (0, 0, 0)),
    (32, (40, 11, 84)),
    (64, (101, 21, 110)),
    (96, (159, 42, 99)),
    (128, (212, 72, 66)),
    (160, (245, 125, 21)),
    (192, (250, 193, 39)),
    (224, (252, 233, 100)),
    (255, (252, 255, 164)),
)


def _build_palette():
    table = np.zeros((256, 3), dtype=np.float64)
    positions = np.array([p for p, _ in _ANCHORS], dtype=np.float64)
    colors = np.array([c for _, c in _ANCHORS], dtype=np.float64)
    idx = np.arange(256, dtype=np.float64)
    for ch in range(3):
        table[:, ch] = np.interp(idx, positions, colors[:, ch])
    return np.clip(np.rint(table), 0, 255).astype(np.uint8)


PALETTE = _build_palette()


def render_preview(dmap, path=None) -> Image.Image:
    """Colorize a density map; saves as PNG when a path is given."""
    values = np.asarray(getattr(dmap, "values", dmap), dtype=np.float64)
    lo = values.min()
    span = values.max() - lo
    if span > 0:
        idx = np.clip(np.rint((values - lo) / span * 255.0), 0, 255).astype(np.uint8)
    else:
        idx = np.zeros(values.shape, dtype=np.uint8)
    img = Image.fromarray(PALETTE[idx], mode="RGB")
    if path is not None:
        img.save(path, format="PNG")
    return img
