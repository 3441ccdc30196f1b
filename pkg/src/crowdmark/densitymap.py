"""Density map generation, accumulation, and the on-disk format.

A density map distributes one unit of mass per annotated head over the
pixel grid, so the array total equals the head count. Baseline methods
(static, knn) simply add their kernels. The content_aware method instead
accumulates exclusively: every pixel belongs to its nearest head, each
kernel is masked to the pixels it owns and renormalized back to unit
mass, so overlapping heads never double-count a pixel.
"""

from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .chanvese import ChanVeseParams, chan_vese_segment, init_region, roi_window
from .errors import CrowdmarkError, FormatError, GenerationError, ParameterError
from .ingest import Scene
from .kernels import (
    KernelPatch,
    SigmaSpec,
    make_kernel,
    sigma_content_aware,
    sigma_knn,
    sigma_static,
)
from .neighbors import KdTree, brute_force_all_nn

MAGIC = b"CADM"
FORMAT_VERSION = 1
METHODS = ("static", "knn", "content_aware")
METHOD_CODES = {"static": 0, "knn": 1, "content_aware": 2}
CODE_METHODS = {v: k for k, v in METHOD_CODES.items()}
_HEADER = struct.Struct("<BBIII")  # version, method, width, height, head_count


@dataclass(frozen=True)
class GenerationConfig:
    method: str = "content_aware"
    static_sigma: float = 15.0
    f: float = 0.3
    extent_factor: float = 2.0
    truncation: float = 3.0
    roi_scale: float = 1.0
    chan_vese: ChanVeseParams = field(default_factory=ChanVeseParams)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(
                f"unknown method {self.method!r}, expected one of {METHODS}"
            )
        for name in ("static_sigma", "f", "extent_factor", "truncation", "roi_scale"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v}")


@dataclass(eq=False)
class DensityMap:
    values: np.ndarray
    method: str
    head_count: int
    sigmas: tuple[SigmaSpec, ...] = ()
    warnings: tuple[str, ...] = ()
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ParameterError("density values must be a non-empty 2-D array")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ParameterError("density values must be finite and non-negative")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        if self.head_count < 0:
            raise ParameterError("head_count must be non-negative")
        v.setflags(write=False)
        self.values = v

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def total_count(self):
        return total_count(self.values)


def total_count(values):
    """Array total via compensated summation of per-row sums.

    Rounding error stays far below the count-integrity tolerance even for
    multi-megapixel maps.
    """
    values = np.asarray(values)
    return math.fsum(float(s) for s in values.sum(axis=1, dtype=np.float64))


def accumulate_additive(shape, kernels):
    """Plain sum of kernels; overlapping heads stack."""
    out = np.zeros(shape, dtype=np.float64)
    for k in kernels:
        out[k.y0:k.y1 + 1, k.x0:k.x1 + 1] += k.weights
    return out


def exclusive_patches(shape, kernels):
    """Yield (index, kernel, owned_weights, warning) per head.

    ``owned_weights`` is the kernel masked to the pixels whose nearest
    head (squared-distance ties going to the smaller head index) is this
    one, renormalized to unit mass. A head whose nearest-pixel cell covers
    none of its own support degrades to a point mass at the closest pixel
    it does own, or at its center pixel if it owns none at all; those
    cases come back with a warning string, otherwise warning is None.
    """
    height, width = shape
    centers = np.array([k.center for k in kernels], dtype=np.float64).reshape(-1, 2)
    for i, k in enumerate(kernels):
        ys = np.arange(k.y0, k.y1 + 1, dtype=np.float64)
        xs = np.arange(k.x0, k.x1 + 1, dtype=np.float64)
        # Any head that could own a support pixel lies within twice the
        # support's max distance from this center (triangle inequality).
        corner_d2 = max(
            (k.x0 - k.center[0]) ** 2 + (k.y0 - k.center[1]) ** 2,
            (k.x1 - k.center[0]) ** 2 + (k.y0 - k.center[1]) ** 2,
            (k.x0 - k.center[0]) ** 2 + (k.y1 - k.center[1]) ** 2,
            (k.x1 - k.center[0]) ** 2 + (k.y1 - k.center[1]) ** 2,
        )
        reach = 2.0 * math.sqrt(corner_d2)
        cd2 = (centers[:, 0] - k.center[0]) ** 2 + (centers[:, 1] - k.center[1]) ** 2
        cand = np.nonzero(cd2 <= reach * reach + 1e-9)[0]
        # cand is ascending, so argmin's first-occurrence rule breaks
        # distance ties toward the smaller head index.
        d2 = (
            (xs[None, None, :] - centers[cand, 0, None, None]) ** 2
            + (ys[None, :, None] - centers[cand, 1, None, None]) ** 2
        )
        owner = cand[np.argmin(d2, axis=0)]
        owned = k.weights * (owner == i)
        mass = owned.sum()
        if mass > 0.0:
            yield i, k, owned / mass, None
        else:
            px, py = _nearest_owned_pixel(i, centers, k.center_pixel, width, height)
            point = np.zeros((1, 1), dtype=np.float64)
            point[0, 0] = 1.0
            fallback = KernelPatch(
                center=k.center,
                center_pixel=(px, py),
                sigma=k.sigma,
                x0=px,
                y0=py,
                weights=point,
            )
            yield i, fallback, point, (
                f"head {i}: no owned pixel in kernel support, "
                f"placed unit mass at ({px}, {py})"
            )


def _ring(sx, sy, radius, width, height):
    """Grid pixels at Chebyshev distance exactly ``radius`` from (sx, sy)."""
    if radius == 0:
        yield sx, sy
        return
    for dx in range(-radius, radius + 1):
        for dy in (-radius, radius):
            px, py = sx + dx, sy + dy
            if 0 <= px < width and 0 <= py < height:
                yield px, py
    for dy in range(-radius + 1, radius):
        for dx in (-radius, radius):
            px, py = sx + dx, sy + dy
            if 0 <= px < width and 0 <= py < height:
                yield px, py


def _nearest_owned_pixel(i, centers, start, width, height):
    """Nearest grid pixel whose nearest head is i, by expanding ring search.

    Falls back to the start pixel when the head's cell contains no pixel
    center at all (e.g. several heads inside one pixel).
    """
    sx, sy = start
    best = None
    for radius in range(max(width, height) + 1):
        for px, py in _ring(sx, sy, radius, width, height):
            if _owner_of(px, py, centers) == i:
                d2 = (px - centers[i, 0]) ** 2 + (py - centers[i, 1]) ** 2
                if best is None or (d2, px, py) < best:
                    best = (d2, px, py)
        # A later ring can undercut the current best by at most the
        # sub-pixel offset of the center, so one extra ring suffices.
        if best is not None and radius > math.sqrt(best[0]) + 1.0:
            break
    if best is None:
        return sx, sy
    return int(best[1]), int(best[2])


def _owner_of(px, py, centers):
    d2 = (centers[:, 0] - px) ** 2 + (centers[:, 1] - py) ** 2
    return int(np.argmin(d2))


def accumulate_exclusive(shape, kernels):
    """Nearest-head exclusive accumulation. Returns (values, warnings)."""
    out = np.zeros(shape, dtype=np.float64)
    warnings = []
    for _, k, owned, warning in exclusive_patches(shape, kernels):
        out[k.y0:k.y0 + owned.shape[0], k.x0:k.x0 + owned.shape[1]] += owned
        if warning:
            warnings.append(warning)
    return out, warnings


def generate(scene: Scene, config: GenerationConfig = GenerationConfig()) -> DensityMap:
    """Generate the density map for a scene with the configured method."""
    grid = scene.grid
    points = scene.annotations.points
    n = len(points)
    shape = (grid.height, grid.width)
    timings = {}
    warnings = []
    t_start = time.perf_counter()

    if n == 0:
        timings["total"] = time.perf_counter() - t_start
        return DensityMap(
            values=np.zeros(shape), method=config.method, head_count=0,
            sigmas=(), warnings=(), timings=timings,
        )

    t0 = time.perf_counter()
    sigmas = _estimate_sigmas(scene, config, warnings)
    timings["sigma"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    kernels = [
        make_kernel(tuple(points[i]), sigmas[i].sigma, config.truncation,
                    grid_bounds=(grid.width, grid.height))
        for i in range(n)
    ]
    timings["kernels"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if config.method == "content_aware":
        values, acc_warnings = accumulate_exclusive(shape, kernels)
        warnings.extend(acc_warnings)
    else:
        values = accumulate_additive(shape, kernels)
    timings["accumulate"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    return DensityMap(
        values=values,
        method=config.method,
        head_count=n,
        sigmas=tuple(sigmas),
        warnings=tuple(warnings),
        timings=timings,
    )


def _estimate_sigmas(scene, config, warnings):
    grid = scene.grid
    points = scene.annotations.points
    n = len(points)

    if config.method == "static":
        return [sigma_static(config.static_sigma) for _ in range(n)]

    if config.method == "knn":
        if n == 1:
            warnings.append(
                "single head: neighbor-based sigma unavailable, using static sigma"
            )
            return [sigma_static(config.static_sigma)]
        tree = KdTree(points)
        k = min(3, n - 1)
        return [sigma_knn(tree.query(i, k).distances, config.f) for i in range(n)]

    # content_aware
    if n == 1:
        nn = np.full(n, min(grid.width, grid.height) / 8.0)
        warnings.append(
            "single head: window sized from the grid instead of a neighbor distance"
        )
    else:
        _, d = brute_force_all_nn(points, k=1)
        nn = d[:, 0]

    sigmas = []
    for i in range(n):
        head = (float(points[i, 0]), float(points[i, 1]))
        try:
            window = roi_window(head, config.roi_scale * float(nn[i]), grid)
            seed = init_region(head, grid, window)
            seg = chan_vese_segment(grid, window, seed, config.chan_vese)
            sigmas.append(sigma_content_aware(seg, head, config.extent_factor))
        except CrowdmarkError as exc:
            spec = _fallback_sigma(points, i, n, config)
            warnings.append(
                f"head {i}: segmentation failed ({exc}); "
                f"fell back to {spec.method} sigma"
            )
            sigmas.append(spec)
    return sigmas


def _fallback_sigma(points, i, n, config):
    if n == 1:
        return sigma_static(config.static_sigma)
    k = min(3, n - 1)
    idx, d = brute_force_all_nn(points, k=k)
    return sigma_knn(tuple(d[i]), config.f)


def write_density(dmap: DensityMap, path):
    """Write the binary density format (little-endian float32 payload)."""
    header = MAGIC + _HEADER.pack(
        FORMAT_VERSION,
        METHOD_CODES[dmap.method],
        dmap.width,
        dmap.height,
        dmap.head_count,
    )
    payload = dmap.values.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_density(path) -> DensityMap:
    """Read a density file back; inverse of write_density."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise FormatError(
            f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}"
        )
    if len(data) < 4 + _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    version, method_code, width, height, head_count = _HEADER.unpack_from(data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported format version {version}, expected {FORMAT_VERSION}"
        )
    if method_code not in CODE_METHODS:
        raise FormatError(f"{path}: unknown method code {method_code}")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    expected = width * height * 4
    payload = data[4 + _HEADER.size:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return DensityMap(
        values=values.astype(np.float64),
        method=CODE_METHODS[method_code],
        head_count=int(head_count),
    )


def write_sidecar(dmap: DensityMap, config: GenerationConfig, path, source_id=""):
    """JSON companion: config echo, per-head sigmas, warnings."""
    doc = {
        "schema_version": 1,
        "source_id": source_id,
        "method": dmap.method,
        "width": dmap.width,
        "height": dmap.height,
        "head_count": dmap.head_count,
        "total_count": dmap.total_count(),
        "config": asdict(config),
        "sigmas": [s.sigma for s in dmap.sigmas],
        "warnings": list(dmap.warnings),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
