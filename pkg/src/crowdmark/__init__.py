"""Crowd density maps from head-point annotations.

Generates per-image ground-truth density maps whose total equals the
number of annotated heads. Three kernel-width strategies: a fixed sigma,
a k-nearest-neighbor adaptive sigma, and a content-aware sigma estimated
by segmenting each head region from the image itself.
"""

from .chanvese import (
    ChanVeseParams,
    RegionMask,
    RoiWindow,
    SegmentationResult,
    boundary_pixels,
    chan_vese_segment,
    energy,
    init_region,
    roi_window,
)
from .densitymap import (
    DensityMap,
    GenerationConfig,
    METHODS,
    accumulate_additive,
    accumulate_exclusive,
    generate,
    read_density,
    total_count,
    write_density,
    write_sidecar,
)
from .errors import (
    CrowdmarkError,
    DegenerateRegionError,
    FormatError,
    GenerationError,
    InsufficientPointsError,
    ParameterError,
    ParseError,
    ValidationError,
)
from .ingest import (
    HeadAnnotationSet,
    IntensityGrid,
    Scene,
    load_annotations,
    load_image,
    make_synthetic_scene,
    write_annotations,
    write_image,
)
from .kernels import (
    KernelPatch,
    SigmaSpec,
    make_kernel,
    sigma_content_aware,
    sigma_knn,
    sigma_static,
)
from .metrics import count_error, map_mae, map_mse, spearman
from .neighbors import (
    KdTree,
    NeighborResult,
    PointIndex,
    brute_force_all_nn,
    brute_force_knn,
)
from .preview import render_preview
from .report import ComparisonReport, compare_methods

__version__ = "0.1.0"

__all__ = [
    "ChanVeseParams",
    "ComparisonReport",
    "CrowdmarkError",
    "DegenerateRegionError",
    "DensityMap",
    "FormatError",
    "GenerationConfig",
    "GenerationError",
    "HeadAnnotationSet",
    "InsufficientPointsError",
    "IntensityGrid",
    "KdTree",
    "KernelPatch",
    "METHODS",
    "NeighborResult",
    "ParameterError",
    "ParseError",
    "PointIndex",
    "RegionMask",
    "RoiWindow",
    "Scene",
    "SegmentationResult",
    "SigmaSpec",
    "ValidationError",
    "accumulate_additive",
    "accumulate_exclusive",
    "boundary_pixels",
    "brute_force_all_nn",
    "brute_force_knn",
    "chan_vese_segment",
    "compare_methods",
    "count_error",
    "energy",
    "generate",
    "init_region",
    "load_annotations",
    "load_image",
    "make_kernel",
    "make_synthetic_scene",
    "map_mae",
    "map_mse",
    "read_density",
    "render_preview",
    "roi_window",
    "sigma_content_aware",
    "sigma_knn",
    "sigma_static",
    "spearman",
    "total_count",
    "write_annotations",
    "write_density",
    "write_image",
    "write_sidecar",
]
