"""Per-head sigma estimation and discrete unit-mass Gaussian kernels.

Three sigma routes share one kernel shape:

* static: one fixed sigma for every head.
* knn: sigma = f * mean distance to the k nearest annotated heads.
* content_aware: sigma from the segmented head region, mean boundary
  distance divided by an extent factor, floored at 1 pixel.

Kernels are sampled on the pixel grid around the head, truncated at
``truncation * sigma``, clipped to the image, and divided by their
sampled sum, so each head contributes exactly unit mass regardless of
truncation or clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chanvese import SegmentationResult, boundary_pixels
from .errors import ParameterError
from .util import pixel_of

SIGMA_FLOOR = 1.0


@dataclass(frozen=True)
class SigmaSpec:
    """A chosen kernel width plus how it was arrived at."""

    method: str
    sigma: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"sigma must be positive and finite, got {self.sigma}")


def sigma_static(sigma=15.0) -> SigmaSpec:
    return SigmaSpec(method="static", sigma=float(sigma))


def sigma_knn(distances, f=0.3) -> SigmaSpec:
    """Sigma proportional to the mean of up to 3 neighbor distances."""
    distances = tuple(float(d) for d in distances)
    if not 1 <= len(distances) <= 3:
        raise ParameterError(f"expected 1 to 3 neighbor distances, got {len(distances)}")
    if any(not (math.isfinite(d) and d > 0) for d in distances):
        raise ParameterError(f"neighbor distances must be positive, got {distances}")
    if not (math.isfinite(f) and f > 0):
        raise ParameterError(f"scale factor must be positive, got {f}")
    sigma = f * (sum(distances) / len(distances))
    return SigmaSpec(
        method="knn",
        sigma=sigma,
        provenance={"distances": distances, "f": float(f)},
    )


def sigma_content_aware(
    segmentation: SegmentationResult, head_point, extent_factor=2.0
) -> SigmaSpec:
    """Sigma from the segmented head extent.

    r_bar is the mean Euclidean distance from the (sub-pixel) head point
    to the mask's boundary pixels; sigma = r_bar / extent_factor, floored
    at 1 pixel. A mask collapsed to a single pixel carries no usable
    extent, so it pins sigma to the floor and is flagged in provenance.
    """
    if not (math.isfinite(extent_factor) and extent_factor > 0):
        raise ParameterError(f"extent_factor must be positive, got {extent_factor}")
    boundary = boundary_pixels(segmentation.mask)
    hx, hy = float(head_point[0]), float(head_point[1])
    d = np.sqrt((boundary[:, 0] - hx) ** 2 + (boundary[:, 1] - hy) ** 2)
    r_bar = float(d.mean())
    degenerate = segmentation.mask.pixel_count() == 1
    sigma = SIGMA_FLOOR if degenerate else max(SIGMA_FLOOR, r_bar / extent_factor)
    return SigmaSpec(
        method="content_aware",
        sigma=float(sigma),
        provenance={
            "r_bar": r_bar,
            "extent_factor": float(extent_factor),
            "boundary_pixel_count": int(len(boundary)),
            "degenerate_mask": degenerate,
            "converged": segmentation.converged,
        },
    )


@dataclass(frozen=True, eq=False)
class KernelPatch:
    """A normalized Gaussian sampled over a clipped support rectangle.

    ``weights[r, c]`` is the mass at grid pixel (x0 + c, y0 + r); the
    weights sum to 1 exactly as sampled (up to float rounding).
    """

    center: tuple[float, float]
    center_pixel: tuple[int, int]
    sigma: float
    x0: int
    y0: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def x1(self):
        return self.x0 + self.weights.shape[1] - 1

    @property
    def y1(self):
        return self.y0 + self.weights.shape[0] - 1


def support_radius(sigma, truncation):
    return int(math.ceil(truncation * sigma))


def make_kernel(center, sigma, truncation=3.0, grid_bounds=None) -> KernelPatch:
    """Build the unit-mass kernel for one head.

    ``grid_bounds`` is (width, height); the support is clipped against it
    so edge heads keep their full mass inside the image.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise ParameterError(f"sigma must be positive and finite, got {sigma}")
    if not (math.isfinite(truncation) and truncation > 0):
        raise ParameterError(f"truncation must be positive, got {truncation}")
    if grid_bounds is None:
        raise ParameterError("grid_bounds (width, height) is required")
    width, height = int(grid_bounds[0]), int(grid_bounds[1])
    if width < 1 or height < 1:
        raise ParameterError(f"grid bounds must be positive, got {width}x{height}")
    cx, cy = float(center[0]), float(center[1])
    if not (math.isfinite(cx) and math.isfinite(cy)):
        raise ParameterError(f"kernel center must be finite, got ({cx}, {cy})")

    px, py = pixel_of(cx, cy, width, height)
    r = support_radius(sigma, truncation)
    x0, x1 = max(px - r, 0), min(px + r, width - 1)
    y0, y1 = max(py - r, 0), min(py + r, height - 1)
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    inv = 1.0 / (2.0 * sigma * sigma)
    gx = np.exp(-((xs - cx) ** 2) * inv)
    gy = np.exp(-((ys - cy) ** 2) * inv)
    weights = np.outer(gy, gx)
    total = weights.sum()
    if total <= 0.0:
        # All samples underflowed (possible only at sub-hundredth sigma);
        # degrade to a point mass at the head pixel.
        weights[:] = 0.0
        weights[py - y0, px - x0] = 1.0
    else:
        weights /= total
    return KernelPatch(
        center=(cx, cy),
        center_pixel=(px, py),
        sigma=float(sigma),
        x0=x0,
        y0=y0,
        weights=weights,
    )
