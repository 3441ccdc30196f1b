"""Side-by-side comparison of the three density methods on one scene."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .densitymap import (
    METHODS,
    DensityMap,
    GenerationConfig,
    generate,
    write_density,
    write_sidecar,
)
from .ingest import Scene
from .metrics import count_error, map_mae, map_mse, spearman
from .preview import render_preview

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ComparisonReport:
    scene_id: str
    width: int
    height: int
    head_count: int
    methods: dict
    pairwise: dict
    diagnostics: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "scene_id": self.scene_id,
            "width": self.width,
            "height": self.height,
            "head_count": self.head_count,
            "methods": self.methods,
            "pairwise": self.pairwise,
            "diagnostics": self.diagnostics,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def compare_methods(
    scene: Scene,
    config: GenerationConfig = GenerationConfig(),
    out_dir=None,
    previews=False,
) -> ComparisonReport:
    """Generate all three maps for a scene and cross-compare them.

    With ``out_dir`` set, each map is written as ``<scene>_<method>.density``
    with its JSON sidecar (and a PNG preview when requested), plus the
    report itself as ``report.json``.
    """
    maps: dict[str, DensityMap] = {}
    methods = {}
    n = len(scene.annotations)
    for method in METHODS:
        dmap = generate(scene, replace(config, method=method))
        maps[method] = dmap
        methods[method] = {
            "total_count": dmap.total_count(),
            "count_error": count_error(dmap, n),
            "sigmas": [s.sigma for s in dmap.sigmas],
            "warnings": list(dmap.warnings),
            "timings": {k: float(v) for k, v in dmap.timings.items()},
        }

    pairwise = {}
    for a, b in itertools.combinations(METHODS, 2):
        pairwise[f"{a}_vs_{b}"] = {
            "mse": map_mse(maps[a], maps[b]),
            "mae": map_mae(maps[a], maps[b]),
        }

    diagnostics = {}
    if scene.true_radii is not None and n >= 2:
        radii = np.asarray(scene.true_radii, dtype=np.float64)
        # Sigma fidelity: how well each adaptive method's widths track the
        # true head radii. Static sigma is constant, so it is skipped, as
        # are degenerate cases where the correlation is undefined.
        for method in ("knn", "content_aware"):
            sig = np.array([s.sigma for s in maps[method].sigmas])
            if len(sig) == len(radii) and np.ptp(sig) > 0 and np.ptp(radii) > 0:
                rho = spearman(sig, radii)
                if math.isfinite(rho):
                    diagnostics[f"sigma_radius_spearman_{method}"] = rho

    report = ComparisonReport(
        scene_id=scene.source_id,
        width=scene.grid.width,
        height=scene.grid.height,
        head_count=n,
        methods=methods,
        pairwise=pairwise,
        diagnostics=diagnostics,
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = scene.source_id or "scene"
        for method, dmap in maps.items():
            write_density(dmap, out / f"{stem}_{method}.density")
            write_sidecar(
                dmap, replace(config, method=method),
                out / f"{stem}_{method}.json", source_id=scene.source_id,
            )
            if previews:
                render_preview(dmap, out / f"{stem}_{method}.png")
        (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")

    return report
