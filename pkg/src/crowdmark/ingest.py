"""Scene ingestion: images, head-point annotations, synthetic test scenes.

Images are 8-bit PNG (grayscale or RGB) or binary PGM (P5, maxval 255).
Annotations are CSV with an exact ``x,y`` header or JSON of the form
``{"points": [[x, y], ...]}``. Coordinates are sub-pixel, origin at the
top-left corner, x growing rightward and y growing downward.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, ParseError, ValidationError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class IntensityGrid:
    """Grayscale image held as a read-only (height, width) array in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ValidationError("intensity grid must be a non-empty 2-D array")
        if not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0:
            raise ValidationError("intensity values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class HeadAnnotationSet:
    """Ordered head centroids with exact duplicates removed (first kept)."""

    points: np.ndarray  # (n, 2) float64 columns x, y

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        if pts.size and not np.isfinite(pts).all():
            raise ValidationError("head coordinates must be finite")
        if pts.size and pts.min() < 0.0:
            raise ValidationError("head coordinates must be non-negative")
        pts = _dedupe(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return iter(map(tuple, self.points))


def _dedupe(pts):
    seen = set()
    keep = []
    for i, (x, y) in enumerate(pts):
        key = (float(x), float(y))
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return pts[keep] if len(keep) < len(pts) else pts


@dataclass(frozen=True, eq=False)
class Scene:
    """An image plus its validated head annotations.

    ``true_radii`` is populated by the synthetic generator only and feeds
    the sigma-fidelity diagnostics; it is None for loaded scenes.
    """

    grid: IntensityGrid
    annotations: HeadAnnotationSet
    source_id: str = ""
    true_radii: tuple[float, ...] | None = None

    def __post_init__(self):
        w, h = self.grid.width, self.grid.height
        for x, y in self.annotations:
            if not (0.0 <= x < w and 0.0 <= y < h):
                raise ValidationError(
                    f"annotation ({x}, {y}) outside grid {w}x{h}"
                )
        if self.true_radii is not None and len(self.true_radii) != len(self.annotations):
            raise ValidationError("true_radii length must match annotation count")


def load_image(path) -> IntensityGrid:
    """Load a PNG or binary PGM image as an IntensityGrid.

    RGB is converted to luma (0.299 R + 0.587 G + 0.114 B); everything is
    scaled by 1/255 into [0, 1].
    """
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        return _parse_pgm(data, path)
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a PNG or binary PGM (P5) image") from exc
    if img.format != "PNG":
        raise FormatError(
            f"{path}: unsupported container {img.format!r}, expected PNG or PGM"
        )
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.float64) / 255.0
    elif img.mode == "RGB":
        rgb = np.asarray(img, dtype=np.float64)
        arr = (rgb @ np.array(LUMA_WEIGHTS)) / 255.0
    else:
        raise FormatError(
            f"{path}: unsupported PNG mode {img.mode!r}, expected 8-bit L or RGB"
        )
    return IntensityGrid(np.clip(arr, 0.0, 1.0))


def _parse_pgm(data, path):
    # P5 header: magic, width, height, maxval as ASCII tokens separated by
    # whitespace ('#' starts a comment), then one whitespace byte and the
    # raw 8-bit payload.
    tokens = []
    pos = 2
    while len(tokens) < 3 and pos < len(data):
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 3:
        raise FormatError(f"{path}: truncated PGM header")
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header fields") from None
    if width < 1 or height < 1:
        raise FormatError(f"{path}: invalid PGM dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: PGM maxval {maxval}, expected 255 (8-bit)")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:pos + width * height]
    if len(payload) != width * height:
        raise FormatError(
            f"{path}: PGM payload holds {len(payload)} bytes, "
            f"expected {width * height}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return IntensityGrid(arr.astype(np.float64) / 255.0)


def write_image(grid: IntensityGrid, path):
    """Write a grid as 8-bit grayscale; PGM or PNG chosen by extension."""
    arr = np.clip(np.rint(grid.values * 255.0), 0, 255).astype(np.uint8)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
        path.write_bytes(header + arr.tobytes())
    else:
        Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_annotations(path, fmt=None) -> HeadAnnotationSet:
    """Load head points from CSV (header ``x,y``) or JSON ``{"points": ...}``.

    ``fmt`` is "csv" or "json"; inferred from the extension when omitted.
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ValidationError(f"unknown annotation format {fmt!r}, expected csv or json")
    text = path.read_text(encoding="utf-8")
    pts = _parse_csv(text) if fmt == "csv" else _parse_json(text)
    return HeadAnnotationSet(np.array(pts, dtype=np.float64).reshape(-1, 2))


def _parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["x", "y"]:
        raise ParseError("CSV header must be exactly 'x,y'", line=1)
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise ParseError(f"non-numeric coordinate {row!r}", line=lineno) from None
        _check_coordinate(x, y)
        pts.append((x, y))
    return pts


def _parse_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), line=exc.lineno) from None
    if not isinstance(doc, dict) or "points" not in doc:
        raise ParseError("JSON annotations need a top-level 'points' key")
    pts = []
    for i, entry in enumerate(doc["points"]):
        ok = (
            isinstance(entry, (list, tuple))
            and len(entry) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
        )
        if not ok:
            raise ParseError(f"points[{i}] is not an [x, y] number pair")
        x, y = float(entry[0]), float(entry[1])
        _check_coordinate(x, y)
        pts.append((x, y))
    return pts


def _check_coordinate(x, y):
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError(f"non-finite coordinate ({x}, {y})")
    if x < 0 or y < 0:
        raise ValidationError(f"negative coordinate ({x}, {y})")


def write_annotations(annotations: HeadAnnotationSet, path, fmt=None):
    """Write annotations as CSV or JSON (chosen like load_annotations)."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in annotations:
            # repr of a Python float round-trips exactly
            writer.writerow([repr(float(x)), repr(float(y))])
        path.write_text(buf.getvalue(), encoding="utf-8")
    elif fmt == "json":
        doc = {"points": [[float(x), float(y)] for x, y in annotations]}
        path.write_text(json.dumps(doc), encoding="utf-8")
    else:
        raise ValidationError(f"unknown annotation format {fmt!r}, expected csv or json")


def make_synthetic_scene(
    disks,
    background_intensity,
    size,
    noise_amplitude=0.0,
    seed=0,
    source_id="synthetic",
) -> Scene:
    """Build a test scene of filled disks on a flat background.

    ``disks`` is a sequence of ``((cx, cy), radius, head_intensity)``.
    Disks are rasterized center-in-disk (pixel centers within ``radius`` of
    the disk center) and painted in order, so later disks overwrite earlier
    ones where they overlap. Uniform noise in +/- ``noise_amplitude`` is
    added afterwards and the result clamped to [0, 1]; a fixed ``seed``
    makes the scene bit-identical across runs. Disk centers become the
    annotations and the true radii are recorded on the scene.
    """
    w, h = int(size[0]), int(size[1])
    if w < 1 or h < 1:
        raise ValidationError(f"scene size must be positive, got {w}x{h}")
    if not 0.0 <= background_intensity <= 1.0:
        raise ValidationError("background intensity must lie in [0, 1]")
    if noise_amplitude < 0:
        raise ValidationError("noise amplitude must be non-negative")

    values = np.full((h, w), float(background_intensity))
    centers = []
    radii = []
    for (cx, cy), radius, intensity in disks:
        if radius <= 0:
            raise ValidationError(f"disk radius must be positive, got {radius}")
        if not 0.0 <= intensity <= 1.0:
            raise ValidationError("disk intensity must lie in [0, 1]")
        if cx - radius < 0 or cx + radius > w - 1 or cy - radius < 0 or cy + radius > h - 1:
            raise ValidationError(
                f"disk at ({cx}, {cy}) r={radius} extends outside {w}x{h} grid"
            )
        if (float(cx), float(cy)) in {(float(a), float(b)) for a, b in centers}:
            raise ValidationError(f"duplicate disk center ({cx}, {cy})")
        x0, x1 = int(math.floor(cx - radius)), int(math.ceil(cx + radius))
        y0, y1 = int(math.floor(cy - radius)), int(math.ceil(cy + radius))
        xs = np.arange(x0, x1 + 1)
        ys = np.arange(y0, y1 + 1)
        inside = ((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2) <= radius ** 2
        patch = values[y0:y1 + 1, x0:x1 + 1]
        patch[inside] = float(intensity)
        centers.append((float(cx), float(cy)))
        radii.append(float(radius))

    if noise_amplitude > 0:
        rng = np.random.default_rng(seed)
        values += rng.uniform(-noise_amplitude, noise_amplitude, size=values.shape)
        np.clip(values, 0.0, 1.0, out=values)

    return Scene(
        grid=IntensityGrid(values),
        annotations=HeadAnnotationSet(np.array(centers, dtype=np.float64).reshape(-1, 2)),
        source_id=source_id,
        true_radii=tuple(radii),
    )
