"""Two-phase piecewise-constant segmentation of head regions.

Minimizes, over a binary mask on a square working window,

    E = mu * Len(boundary) + nu * Area(inside)
        + lambda1 * sum_inside (u - c1)^2
        + lambda2 * sum_outside (u - c2)^2

where c1 and c2 are the mean intensities of the two regions. With the
default mu = 0 the minimization alternates exact steps: reassign every
pixel to whichever region scores it lower (holding c1, c2 fixed), then
recompute the means. Each sweep therefore never increases the energy.
Boundary length is discrete: 4-neighbor edges between inside and outside,
with the window border counting as outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRegionError, ParameterError
from .ingest import IntensityGrid
from .util import round_half_down


@dataclass(frozen=True)
class ChanVeseParams:
    lambda1: float = 1.0
    lambda2: float = 1.0
    mu: float = 0.0
    nu: float = 0.0
    max_iterations: int = 500
    convergence_patience: int = 3

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ParameterError("lambda1 and lambda2 must be positive")
        if self.mu < 0:
            raise ParameterError("mu must be non-negative")
        if not math.isfinite(self.nu):
            raise ParameterError("nu must be finite")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be at least 1")
        if self.convergence_patience < 1:
            raise ParameterError("convergence_patience must be at least 1")


@dataclass(frozen=True)
class RoiWindow:
    """Square working window, clipped to the grid. Bounds are inclusive."""

    center: tuple[int, int]  # pixel (x, y)
    half_width: int
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self):
        return self.x1 - self.x0 + 1

    @property
    def height(self):
        return self.y1 - self.y0 + 1

    def crop(self, values):
        return values[self.y0:self.y1 + 1, self.x0:self.x1 + 1]


def roi_window(head_point, nn_distance, grid: IntensityGrid) -> RoiWindow:
    """Window around a head sized by its nearest-neighbor distance.

    Half-width is the rounded distance, floored at 3 so tightly packed
    heads still get a workable window.
    """
    if not nn_distance > 0:
        raise ParameterError(f"nn_distance must be positive, got {nn_distance}")
    w, h = grid.width, grid.height
    px = min(max(round_half_down(head_point[0]), 0), w - 1)
    py = min(max(round_half_down(head_point[1]), 0), h - 1)
    hw = max(3, round_half_down(nn_distance))
    return RoiWindow(
        center=(px, py),
        half_width=hw,
        x0=max(px - hw, 0),
        y0=max(py - hw, 0),
        x1=min(px + hw, w - 1),
        y1=min(py + hw, h - 1),
    )


def full_window(grid: IntensityGrid) -> RoiWindow:
    w, h = grid.width, grid.height
    return RoiWindow(
        center=((w - 1) // 2, (h - 1) // 2),
        half_width=max(w, h),
        x0=0, y0=0, x1=w - 1, y1=h - 1,
    )


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Boolean inside-mask over a window. Must have at least one pixel set."""

    window: RoiWindow
    inside: np.ndarray

    def __post_init__(self):
        m = np.array(self.inside, dtype=bool)
        if m.shape != (self.window.height, self.window.width):
            raise ParameterError(
                f"mask shape {m.shape} does not match window "
                f"{self.window.height}x{self.window.width}"
            )
        if not m.any():
            raise DegenerateRegionError("region mask has no inside pixels")
        m.setflags(write=False)
        object.__setattr__(self, "inside", m)

    def pixel_count(self):
        return int(self.inside.sum())


def init_region(head_point, grid: IntensityGrid, window: RoiWindow | None = None) -> RegionMask:
    """5x5 seed box centered on the rounded head point, clipped to the window."""
    if window is None:
        window = full_window(grid)
    px = min(max(round_half_down(head_point[0]), 0), grid.width - 1)
    py = min(max(round_half_down(head_point[1]), 0), grid.height - 1)
    if not (window.x0 <= px <= window.x1 and window.y0 <= py <= window.y1):
        raise ParameterError(
            f"head pixel ({px}, {py}) falls outside window "
            f"[{window.x0}..{window.x1}] x [{window.y0}..{window.y1}]"
        )
    inside = np.zeros((window.height, window.width), dtype=bool)
    cx0 = max(px - 2, window.x0) - window.x0
    cx1 = min(px + 2, window.x1) - window.x0
    cy0 = max(py - 2, window.y0) - window.y0
    cy1 = min(py + 2, window.y1) - window.y0
    inside[cy0:cy1 + 1, cx0:cx1 + 1] = True
    return RegionMask(window=window, inside=inside)


def _inside_neighbor_counts(inside):
    """Per-pixel count of inside 4-neighbors; off-window counts as outside."""
    counts = np.zeros(inside.shape, dtype=np.int64)
    counts[1:, :] += inside[:-1, :]
    counts[:-1, :] += inside[1:, :]
    counts[:, 1:] += inside[:, :-1]
    counts[:, :-1] += inside[:, 1:]
    return counts


def boundary_length(inside):
    """Count of 4-neighbor edges from inside pixels to outside or border."""
    counts = _inside_neighbor_counts(inside)
    return int((inside * (4 - counts)).sum())


def _region_terms(u, inside, params):
    n_in = int(inside.sum())
    if n_in == 0:
        raise DegenerateRegionError("energy undefined for an empty inside region")
    c1 = float(u[inside].mean())
    outside = ~inside
    if outside.any():
        c2 = float(u[outside].mean())
        e_out = params.lambda2 * float(((u[outside] - c2) ** 2).sum())
    else:
        c2 = float("nan")
        e_out = 0.0
    e_in = params.lambda1 * float(((u[inside] - c1) ** 2).sum())
    return c1, c2, e_in, e_out, n_in


def energy(grid_or_values, mask: RegionMask, params: ChanVeseParams) -> float:
    """Segmentation energy of a mask over its window."""
    values = grid_or_values.values if isinstance(grid_or_values, IntensityGrid) else np.asarray(grid_or_values, dtype=np.float64)
    if values.shape == (mask.window.height, mask.window.width):
        u = values
    else:
        u = mask.window.crop(values)
    c1, c2, e_in, e_out, n_in = _region_terms(u, mask.inside, params)
    e = e_in + e_out + params.nu * n_in
    if params.mu != 0.0:
        e += params.mu * boundary_length(mask.inside)
    return float(e)


@dataclass(frozen=True)
class SegmentationResult:
    mask: RegionMask
    c1: float
    c2: float
    final_energy: float
    iterations_run: int
    converged: bool
    energy_trace: tuple[float, ...] | None = None


def chan_vese_segment(
    grid: IntensityGrid,
    window: RoiWindow,
    init: RegionMask,
    params: ChanVeseParams = ChanVeseParams(),
    trace_energy: bool = False,
) -> SegmentationResult:
    """Run pixelwise alternating minimization from a seed mask.

    Each sweep recomputes c1/c2 from the current mask, then reassigns every
    pixel to the region with the lower pointwise score. Pixels whose two
    scores tie exactly keep their current side, so a window of constant
    intensity converges to the seed unchanged. Convergence is declared
    after ``convergence_patience`` consecutive sweeps without a change.
    """
    if (init.window.x0, init.window.y0, init.window.x1, init.window.y1) != (
        window.x0, window.y0, window.x1, window.y1
    ):
        raise ParameterError("seed mask window does not match the working window")
    u = window.crop(grid.values)
    inside = np.array(init.inside, dtype=bool)
    trace = [] if trace_energy else None
    iterations = 0
    stable = 0
    converged = False

    for _ in range(params.max_iterations):
        iterations += 1
        c1 = u[inside].mean()
        outside = ~inside
        score_in = params.lambda1 * (u - c1) ** 2 + params.nu
        if params.mu != 0.0:
            score_in = score_in + params.mu * (4 - 2 * _inside_neighbor_counts(inside))
        if outside.any():
            c2 = u[outside].mean()
            score_out = params.lambda2 * (u - c2) ** 2
        else:
            score_out = np.full(u.shape, np.inf)
        new_inside = np.where(
            score_in < score_out, True, np.where(score_in > score_out, False, inside)
        )
        if not new_inside.any():
            # Nothing survives; keep the window center so downstream sigma
            # estimation still has a region to measure.
            new_inside = np.zeros(u.shape, dtype=bool)
            new_inside[window.center[1] - window.y0, window.center[0] - window.x0] = True
            inside = new_inside
            break
        changed = bool((new_inside != inside).any())
        inside = new_inside
        if trace is not None:
            _, _, e_in, e_out, n_in = _region_terms(u, inside, params)
            e = e_in + e_out + params.nu * n_in
            if params.mu != 0.0:
                e += params.mu * boundary_length(inside)
            trace.append(float(e))
        if changed:
            stable = 0
        else:
            stable += 1
            if stable >= params.convergence_patience:
                converged = True
                break

    mask = RegionMask(window=window, inside=inside)
    c1, c2, e_in, e_out, n_in = _region_terms(u, inside, params)
    final = e_in + e_out + params.nu * n_in
    if params.mu != 0.0:
        final += params.mu * boundary_length(inside)
    return SegmentationResult(
        mask=mask,
        c1=c1,
        c2=c2,
        final_energy=float(final),
        iterations_run=iterations,
        converged=converged,
        energy_trace=tuple(trace) if trace is not None else None,
    )


def boundary_pixels(mask: RegionMask):
    """Absolute (x, y) pixel coordinates of the mask's inner boundary.

    A boundary pixel is inside and has at least one 4-neighbor that is
    outside the mask or off the window edge.
    """
    inside = mask.inside
    counts = _inside_neighbor_counts(inside)
    on_boundary = inside & (counts < 4)
    ys, xs = np.nonzero(on_boundary)
    out = np.stack([xs + mask.window.x0, ys + mask.window.y0], axis=1)
    return out.astype(np.int64)
