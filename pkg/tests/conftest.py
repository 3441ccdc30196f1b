"""Shared test oracles and helpers.

The oracles here are written independently of the package internals
(plain loops and sorts) so route-vs-route comparisons actually test
something.
"""

import math

import numpy as np
import pytest

from crowdmark import HeadAnnotationSet, IntensityGrid, Scene

ACCEPTANCE_VERDICTS = []


def record_verdict(line):
    """Collect acceptance pass/fail lines for the terminal summary."""
    ACCEPTANCE_VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.ensure_newline()
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def rasterize_disk_oracle(center, radius, size):
    """Boolean disk mask by direct per-pixel test. (width, height) size."""
    w, h = size
    cx, cy = center
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if (x - cx) ** 2 + (y - cy) ** 2 <= radius ** 2:
                out[y, x] = True
    return out


def iou(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def knn_oracle(points, query_index, k):
    """Neighbors by full sort of (squared distance, index) tuples."""
    qx, qy = points[query_index]
    scored = []
    for i, (x, y) in enumerate(points):
        if i == query_index:
            continue
        d2 = (x - qx) ** 2 + (y - qy) ** 2
        scored.append((d2, i))
    scored.sort()
    top = scored[:k]
    return tuple(i for _, i in top), tuple(math.sqrt(d2) for d2, _ in top)


def nearest_head_oracle(px, py, centers):
    """Index of the nearest head to a pixel, ties to the smaller index."""
    best = None
    for i, (cx, cy) in enumerate(centers):
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        if best is None or d2 < best[0]:
            best = (d2, i)
    return best[1]


def point_scene(points, size, seed=0, noise=0.05, background=0.5):
    """Scene with arbitrary head points over a noisy flat background."""
    w, h = size
    rng = np.random.default_rng(seed)
    values = np.clip(
        background + rng.uniform(-noise, noise, size=(h, w)), 0.0, 1.0
    )
    return Scene(
        grid=IntensityGrid(values),
        annotations=HeadAnnotationSet(np.asarray(points, dtype=np.float64).reshape(-1, 2)),
        source_id=f"points-{seed}",
    )


@pytest.fixture
def flat_grid():
    return IntensityGrid(np.full((64, 64), 0.5))
