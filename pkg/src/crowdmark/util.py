"""Small shared helpers."""

import math


def round_half_down(value):
    """Round to the nearest integer, ties toward the smaller integer.

    This is the single pixel-rounding rule used everywhere sub-pixel
    coordinates meet the pixel grid, so outputs stay deterministic.
    """
    return math.ceil(value - 0.5)


def pixel_of(x, y, width, height):
    """Round a sub-pixel point to a pixel and clamp it into the grid."""
    px = min(max(round_half_down(x), 0), width - 1)
    py = min(max(round_half_down(y), 0), height - 1)
    return px, py
