"""Rendering spines to grayscale images and extracting gradient-histogram features.

Rendering draws each vertebra as a filled bright convex quadrilateral with
a one-pixel anti-aliased rim over a darker background, then adds seeded
Gaussian pixel noise and clamps to [0, 1].  The descriptor is a dense
histogram-of-oriented-gradients: central
differences, unsigned orientations binned over [0, 180) with linear vote
interpolation between adjacent bin centers, square cells, sliding blocks at
one-cell stride, and per-block L2 normalization with clipping at 0.2
followed by renormalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, RenderError, ShapeError
from .geometry import SpineAnnotation

BACKGROUND_LEVEL = 0.1
VERTEBRA_LEVEL = 0.9
BLOCK_CLIP = 0.2
NORM_EPS = 1e-12

FEATURE_MAGIC = "s2vr-features v1"


@dataclass
class GrayImage:
    """A grayscale image with float pixel values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise ShapeError(f"image must be 2-d, got shape {self.pixels.shape}")
        if not np.all(np.isfinite(self.pixels)):
            raise ShapeError("image contains non-finite pixels")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ShapeError("pixel values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class HogDescriptor:
    """Flattened block-normalized orientation histograms plus layout metadata."""

    vector: np.ndarray
    cells: tuple[int, int]  # (cells_y, cells_x)
    block: int
    bins: int


def _fill_convex_quad(img: np.ndarray, quad: np.ndarray, level: float) -> None:
    """Paint a convex polygon (CCW or CW) with a one-pixel feathered edge.

    Pixel coverage follows the signed distance from the pixel center to the
    polygon boundary, so a sub-pixel shift of an edge changes the image
    continuously instead of flipping whole pixels.
    """
    h, w = img.shape
    lo = np.floor(quad.min(axis=0)).astype(int)
    hi = np.ceil(quad.max(axis=0)).astype(int)
    c0, c1 = max(lo[0] - 1, 0), min(hi[0] + 2, w)
    r0, r1 = max(lo[1] - 1, 0), min(hi[1] + 2, h)
    if c0 >= c1 or r0 >= r1:
        return
    cols, rows = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
    npts = quad.shape[0]
    # consistent cross-product sign against every directed edge
    area2 = 0.0
    for i in range(npts):
        a, b = quad[i], quad[(i + 1) % npts]
        area2 += a[0] * b[1] - b[0] * a[1]
    orient = 1.0 if area2 >= 0 else -1.0
    dist = np.full(cols.shape, np.inf)
    for i in range(npts):
        a, b = quad[i], quad[(i + 1) % npts]
        ex, ey = b[0] - a[0], b[1] - a[1]
        elen = float(np.hypot(ex, ey))
        if elen == 0.0:
            continue
        cross = ex * (rows - a[1]) - ey * (cols - a[0])
        np.minimum(dist, orient * cross / elen, out=dist)
    coverage = np.clip(dist + 0.5, 0.0, 1.0)
    patch = img[r0:r1, c0:c1]
    np.maximum(patch, BACKGROUND_LEVEL + (level - BACKGROUND_LEVEL) * coverage, out=patch)


def render(
    annotation: SpineAnnotation,
    width: int = 64,
    height: int = 256,
    noise_level: float = 0.0,
    seed: int = 0,
) -> GrayImage:
    """Rasterize a spine annotation into a width x height grayscale image.

    Landmark coordinates are interpreted as pixel coordinates in the target
    frame; any corner outside [0, width] x [0, height] raises a render error.
    Identical inputs and seed give an identical image.
    """
    if width <= 0 or height <= 0:
        raise RenderError(f"frame must be positive, got {width}x{height}")
    pts = annotation.landmarks
    if (
        pts[..., 0].min() < 0.0
        or pts[..., 0].max() > width
        or pts[..., 1].min() < 0.0
        or pts[..., 1].max() > height
    ):
        raise RenderError("landmarks fall outside the render frame")
    img = np.full((height, width), BACKGROUND_LEVEL)
    for i in range(pts.shape[0]):
        tl, tr, bl, br = pts[i]
        _fill_convex_quad(img, np.array([tl, tr, br, bl]), VERTEBRA_LEVEL)
    if noise_level > 0.0:
        rng = np.random.default_rng(seed)
        img = img + rng.normal(0.0, noise_level, img.shape)
    np.clip(img, 0.0, 1.0, out=img)
    return GrayImage(img)


def hog_length(width: int, height: int, cell: int = 8, block: int = 2, bins: int = 9) -> int:
    """Descriptor length for the given image and layout parameters."""
    if width % cell or height % cell:
        raise ShapeError(f"image {width}x{height} not divisible by cell size {cell}")
    bx = width // cell - block + 1
    by = height // cell - block + 1
    if bx < 1 or by < 1:
        raise ShapeError("image too small for the requested block size")
    return bx * by * block * block * bins


def hog(image: GrayImage | np.ndarray, cell: int = 8, block: int = 2, bins: int = 9) -> HogDescriptor:
    """Histogram-of-oriented-gradients descriptor of a grayscale image."""
    pix = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=float)
    h, w = pix.shape
    if h % cell or w % cell:
        raise ShapeError(f"image {w}x{h} not divisible by cell size {cell}")
    cy, cx = h // cell, w // cell
    if cy < block or cx < block:
        raise ShapeError("image too small for the requested block size")
    gy, gx = np.gradient(pix)
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    # linear interpolation between adjacent bin centers at k * (180 / bins)
    binw = 180.0 / bins
    pos = ang / binw
    b0 = np.floor(pos).astype(int) % bins
    frac = pos - np.floor(pos)
    b1 = (b0 + 1) % bins
    rows = np.repeat(np.arange(h) // cell, w)
    cols = np.tile(np.arange(w) // cell, h)
    hist = np.zeros((cy, cx, bins))
    np.add.at(hist, (rows, cols, b0.ravel()), (mag * (1.0 - frac)).ravel())
    np.add.at(hist, (rows, cols, b1.ravel()), (mag * frac).ravel())
    win = np.lib.stride_tricks.sliding_window_view(hist, (block, block), axis=(0, 1))
    # -> (by, bx, bins, block, block) -> (by, bx, block, block, bins)
    blocks = np.ascontiguousarray(np.moveaxis(win, 2, -1)).reshape(
        cy - block + 1, cx - block + 1, -1
    )
    norms = np.sqrt(np.sum(blocks * blocks, axis=-1, keepdims=True) + NORM_EPS)
    blocks = blocks / norms
    np.minimum(blocks, BLOCK_CLIP, out=blocks)
    norms = np.sqrt(np.sum(blocks * blocks, axis=-1, keepdims=True) + NORM_EPS)
    blocks = blocks / norms
    return HogDescriptor(
        vector=blocks.ravel().copy(), cells=(cy, cx), block=block, bins=bins
    )


# ----------------------------------------------------------------------
# feature file format: '#' header lines with layout metadata, then one
# comma-separated descriptor per sample
# ----------------------------------------------------------------------


def write_features(path, F: np.ndarray, meta: dict | None = None, pipeline: str = "") -> None:
    """Write a feature matrix (d x N, one sample per column) with layout metadata."""
    from .geometry import format_float

    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-d, got {F.shape}")
    lines = [f"# {FEATURE_MAGIC}", f"# pipeline={pipeline}"]
    for k, v in (meta or {}).items():
        lines.append(f"# {k}={v}")
    lines.append(f"# length={F.shape[0]}")
    lines.append(f"# count={F.shape[1]}")
    for i in range(F.shape[1]):
        lines.append(",".join(format_float(x) for x in F[:, i]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_features(path) -> tuple[np.ndarray, dict]:
    """Read a feature file back into a (d x N) matrix plus header metadata."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    header: dict[str, str] = {}
    rows: list[np.ndarray] = []
    tagged = False
    for line in raw:
        if line.startswith("#"):
            body = line[1:].strip()
            if body == FEATURE_MAGIC:
                tagged = True
            elif "=" in body:
                k, v = body.split("=", 1)
                header[k.strip()] = v.strip()
            continue
        if not line.strip():
            continue
        rows.append(np.array([float(tok) for tok in line.split(",")], dtype=float))
    if not tagged:
        raise FormatError(f"missing '{FEATURE_MAGIC}' header")
    if "count" in header and int(header["count"]) != len(rows):
        raise FormatError(f"header count={header['count']} but file has {len(rows)} records")
    if rows:
        d = rows[0].size
        if any(r.size != d for r in rows):
            raise FormatError("inconsistent descriptor lengths across records")
        if "length" in header and int(header["length"]) != d:
            raise FormatError(f"header length={header['length']} but records have {d} fields")
        F = np.stack(rows, axis=1)
    else:
        d = int(header.get("length", 0))
        F = np.empty((d, 0))
    return F, header
