"""Command line front end.

Subcommands: generate (one scene to a density file), compare (all three
methods side by side), segment-debug (dump one head's segmentation mask),
synth (build a synthetic test scene), batch (a manifest of scenes with a
thread pool).

Exit codes: 0 success, 1 usage error, 2 bad input or failed generation,
3 internal error. Log verbosity comes from the CROWDMARK_LOG environment
variable (error, warn, info, debug; default warn).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from .chanvese import chan_vese_segment, init_region, roi_window
from .densitymap import (
    METHODS,
    GenerationConfig,
    generate,
    write_density,
    write_sidecar,
)
from .errors import CrowdmarkError, ParseError, ValidationError
from .ingest import (
    IntensityGrid,
    Scene,
    load_annotations,
    load_image,
    make_synthetic_scene,
    write_annotations,
    write_image,
)
from .neighbors import brute_force_all_nn
from .preview import render_preview
from .report import compare_methods

log = logging.getLogger("crowdmark")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

# CLI/config-file key -> GenerationConfig field
_CONFIG_KEYS = {
    "method": "method",
    "sigma": "static_sigma",
    "f": "f",
    "extent": "extent_factor",
    "truncation": "truncation",
    "roi_scale": "roi_scale",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _configure_logging():
    name = os.environ.get("CROWDMARK_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(name, logging.WARNING)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    log.setLevel(level)


def _add_config_flags(p):
    p.add_argument("--config", help="key=value file; explicit flags override it")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--sigma", type=float, default=None,
                   help="kernel sigma for the static method (pixels)")
    p.add_argument("--f", type=float, default=None,
                   help="neighbor-distance scale for the knn method")
    p.add_argument("--extent", type=float, default=None,
                   help="head-extent divisor for the content_aware method")
    p.add_argument("--truncation", type=float, default=None,
                   help="kernel support radius in sigmas")
    p.add_argument("--roi-scale", type=float, default=None,
                   help="multiplier on the neighbor distance when sizing windows")


def _read_config_file(path):
    settings = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ParseError(
                f"unknown config key {key!r}, expected one of {sorted(_CONFIG_KEYS)}",
                line=lineno,
            )
        settings[key] = value
    return settings


def _build_config(args) -> GenerationConfig:
    settings = {}
    if getattr(args, "config", None):
        settings.update(_read_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    kwargs = {}
    for key, value in settings.items():
        field = _CONFIG_KEYS[key]
        if field == "method":
            if value not in METHODS:
                raise ValidationError(
                    f"unknown method {value!r}, expected one of {METHODS}"
                )
            kwargs[field] = value
        else:
            try:
                kwargs[field] = float(value)
            except (TypeError, ValueError):
                raise ValidationError(
                    f"config key {key!r} needs a number, got {value!r}"
                ) from None
    return GenerationConfig(**kwargs)


def _load_scene(image_path, points_path) -> Scene:
    grid = load_image(image_path)
    annotations = load_annotations(points_path)
    return Scene(grid=grid, annotations=annotations, source_id=Path(image_path).stem)


def _cmd_generate(args):
    config = _build_config(args)
    scene = _load_scene(args.image, args.points)
    dmap = generate(scene, config)
    out = Path(args.out)
    write_density(dmap, out)
    write_sidecar(dmap, config, out.with_suffix(".json"), source_id=scene.source_id)
    if args.preview:
        render_preview(dmap, args.preview)
    for w in dmap.warnings:
        log.warning("%s", w)
    print(json.dumps({
        "out": str(out),
        "method": dmap.method,
        "head_count": dmap.head_count,
        "total_count": dmap.total_count(),
        "warnings": list(dmap.warnings),
    }))
    return 0


def _cmd_compare(args):
    config = _build_config(args)
    scene = _load_scene(args.image, args.points)
    report = compare_methods(
        scene, config, out_dir=args.out_dir, previews=args.previews
    )
    print(report.to_json())
    return 0


def _cmd_segment_debug(args):
    config = _build_config(args)
    scene = _load_scene(args.image, args.points)
    points = scene.annotations.points
    n = len(points)
    if n == 0:
        raise ValidationError("scene has no annotated heads")
    if not 0 <= args.index < n:
        raise ValidationError(f"head index {args.index} out of range for {n} heads")
    if n >= 2:
        _, d = brute_force_all_nn(points, k=1)
        nn = float(d[args.index, 0])
    else:
        nn = min(scene.grid.width, scene.grid.height) / 8.0
    head = (float(points[args.index, 0]), float(points[args.index, 1]))
    window = roi_window(head, config.roi_scale * nn, scene.grid)
    seed = init_region(head, scene.grid, window)
    seg = chan_vese_segment(scene.grid, window, seed, config.chan_vese)
    write_image(IntensityGrid(seg.mask.inside.astype(np.float64)), args.out)
    print(json.dumps({
        "head_index": args.index,
        "window": [window.x0, window.y0, window.x1, window.y1],
        "inside_pixels": seg.mask.pixel_count(),
        "c1": seg.c1,
        "c2": None if np.isnan(seg.c2) else seg.c2,
        "final_energy": seg.final_energy,
        "iterations_run": seg.iterations_run,
        "converged": seg.converged,
        "mask_out": str(args.out),
    }))
    return 0


def _cmd_synth(args):
    doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    for key in ("size", "background", "disks"):
        if key not in doc:
            raise ValidationError(f"synth spec is missing {key!r}")
    disks = []
    for i, entry in enumerate(doc["disks"]):
        for key in ("center", "radius", "intensity"):
            if key not in entry:
                raise ValidationError(f"disks[{i}] is missing {key!r}")
        disks.append((tuple(entry["center"]), entry["radius"], entry["intensity"]))
    scene = make_synthetic_scene(
        disks,
        background_intensity=doc["background"],
        size=tuple(doc["size"]),
        noise_amplitude=doc.get("noise", 0.0),
        seed=doc.get("seed", 0),
        source_id=Path(args.out_image).stem,
    )
    write_image(scene.grid, args.out_image)
    write_annotations(scene.annotations, args.out_points)
    print(json.dumps({
        "image": str(args.out_image),
        "points": str(args.out_points),
        "head_count": len(scene.annotations),
    }))
    return 0


def _read_manifest(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["image", "annotation"]:
            raise ParseError("manifest header must be exactly 'image,annotation'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            rows.append((row[0], row[1]))
    return rows


def _atomic(path, write_fn):
    """Write via a temp file in the same directory, then rename over."""
    path = Path(path)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}-{threading.get_ident()}")
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _cmd_batch(args):
    config = _build_config(args)
    rows = _read_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(row):
        image_path, ann_path = row
        scene = _load_scene(image_path, ann_path)
        dmap = generate(scene, config)
        out = out_dir / (Path(image_path).stem + ".density")
        _atomic(out, lambda p: write_density(dmap, p))
        _atomic(
            out.with_suffix(".json"),
            lambda p: write_sidecar(dmap, config, p, source_id=scene.source_id),
        )
        return str(out)

    failures = []
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futures = {pool.submit(work, row): row for row in rows}
        for fut in as_completed(futures):
            image_path = futures[fut][0]
            try:
                log.info("wrote %s", fut.result())
            except (CrowdmarkError, OSError) as exc:
                failures.append({"image": image_path, "error": str(exc)})
                log.error("%s: %s", image_path, exc)
    print(json.dumps({
        "processed": len(rows) - len(failures),
        "failed": len(failures),
        "failures": failures,
    }))
    return 2 if failures else 0


def _build_parser():
    parser = _Parser(
        prog="crowdmark",
        description="Crowd density maps from head-point annotations.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="density map for one scene")
    p.add_argument("--image", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out", required=True, help="output .density path")
    p.add_argument("--preview", help="also write a heatmap PNG here")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("compare", help="run all three methods side by side")
    p.add_argument("--image", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--previews", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("segment-debug", help="dump one head's segmentation mask")
    p.add_argument("--image", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--index", type=int, default=0, help="head index to segment")
    p.add_argument("--out", required=True, help="mask output (PGM or PNG)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_segment_debug)

    p = sub.add_parser("synth", help="build a synthetic disk scene")
    p.add_argument("--spec", required=True, help="JSON scene description")
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-points", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("batch", help="process a CSV manifest of scenes")
    p.add_argument("--manifest", required=True, help="CSV with header image,annotation")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=4)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_batch)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CrowdmarkError, OSError) as exc:
        log.error("%s", exc)
        return 2
    except Exception as exc:  # pragma: no cover - safety net
        log.error("internal error: %s", exc)
        log.debug("traceback follows", exc_info=True)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
