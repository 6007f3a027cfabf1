"""Georeferenced binary/probability rasters and the pixel operations on them.

Masks are stored as 2-D numpy arrays indexed ``[row, col]``. Row 0 is the
northern edge, so world ``y`` decreases as the row index grows.

Border policy for every morphological operation: pixels outside the raster
count as 0. Dilation never reaches in from outside, and erosion eats the
outermost ring of any region touching the border.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from .exceptions import DimensionMismatch, NoSignal

if TYPE_CHECKING:
    from .graph import RoadGraph


@dataclass(frozen=True)
class GeoTransform:
    """Axis-aligned mapping between pixel indices and planar world coordinates.

    ``(origin_x, origin_y)`` is the world position of the top-left corner of
    pixel ``(0, 0)``.
    """

    origin_x: float = 0.0
    origin_y: float = 0.0
    pixel_size_x: float = 1.0
    pixel_size_y: float = 1.0

    def __post_init__(self):
        if not (self.pixel_size_x > 0 and self.pixel_size_y > 0):
            raise ValueError(
                f"pixel sizes must be positive, got "
                f"({self.pixel_size_x}, {self.pixel_size_y})"
            )

    def pixel_to_world(self, row, col):
        """World coordinates of the center of pixel ``(row, col)``.

        Accepts scalars or arrays; fractional indices are allowed.
        """
        x = self.origin_x + (np.asarray(col, dtype=float) + 0.5) * self.pixel_size_x
        y = self.origin_y - (np.asarray(row, dtype=float) + 0.5) * self.pixel_size_y
        if np.ndim(x) == 0:
            return float(x), float(y)
        return x, y

    def world_to_pixel(self, x, y):
        """Continuous ``(row, col)`` such that pixel centers map to integers."""
        col = (np.asarray(x, dtype=float) - self.origin_x) / self.pixel_size_x - 0.5
        row = (self.origin_y - np.asarray(y, dtype=float)) / self.pixel_size_y - 0.5
        if np.ndim(col) == 0:
            return float(row), float(col)
        return row, col

    def pixel_index(self, x, y):
        """Integer ``(row, col)`` of the pixel containing world point ``(x, y)``."""
        row, col = self.world_to_pixel(x, y)
        return int(math.floor(row + 0.5)), int(math.floor(col + 0.5))

    def to_dict(self):
        return {
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "pixel_size_x": self.pixel_size_x,
            "pixel_size_y": self.pixel_size_y,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["origin_x"]),
            float(d["origin_y"]),
            float(d["pixel_size_x"]),
            float(d["pixel_size_y"]),
        )


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ProbabilityMask:
    values: np.ndarray
    geo: GeoTransform = field(default_factory=GeoTransform)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"probability mask must be 2-D, got shape {v.shape}")
        if v.size and (np.nanmin(v) < 0.0 or np.nanmax(v) > 1.0 or np.isnan(v).any()):
            raise ValueError("probability values must lie in [0, 1]")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray
    geo: GeoTransform = field(default_factory=GeoTransform)

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError(f"binary mask must be 2-D, got shape {b.shape}")
        object.__setattr__(self, "bits", _readonly(b.astype(bool)))

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def shape(self):
        return self.bits.shape

    def count(self):
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (
            self.geo == other.geo
            and self.bits.shape == other.bits.shape
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __hash__(self):
        return hash((self.geo, self.bits.shape, self.bits.tobytes()))

    def with_bits(self, bits):
        return BinaryMask(bits, self.geo)


@dataclass(frozen=True)
class PixelOffset:
    """Displacement of the post mask relative to the pre mask, in pixels.

    ``dx`` runs along columns, ``dy`` along rows. ``score`` is the number of
    coinciding set pixels at this displacement.
    """

    dx: int
    dy: int
    score: int


@dataclass(frozen=True, eq=False)
class HeatmapGrid:
    cell_size: int
    sums: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sums", _readonly(np.asarray(self.sums, dtype=np.int64)))

    @property
    def rows(self):
        return self.sums.shape[0]

    @property
    def cols(self):
        return self.sums.shape[1]

    def argmax(self):
        """``(row, col)`` of the most affected cell (first in row-major order)."""
        idx = int(np.argmax(self.sums))
        return divmod(idx, self.cols)


def _square(radius):
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def _check_radius(radius):
    if int(radius) != radius or radius < 0:
        raise ValueError(f"radius must be a non-negative integer, got {radius!r}")
    return int(radius)


def threshold(mask, theta=0.5):
    """Binary mask of pixels whose probability is strictly greater than ``theta``."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    return BinaryMask(mask.values > theta, mask.geo)


def dilate(mask, radius):
    radius = _check_radius(radius)
    if radius == 0 or not mask.bits.any():
        return mask.with_bits(mask.bits)
    out = ndimage.binary_dilation(mask.bits, structure=_square(radius), border_value=0)
    return mask.with_bits(out)


def erode(mask, radius):
    radius = _check_radius(radius)
    if radius == 0:
        return mask.with_bits(mask.bits)
    out = ndimage.binary_erosion(mask.bits, structure=_square(radius), border_value=0)
    return mask.with_bits(out)


def open_mask(mask, radius):
    """Morphological opening: erosion followed by dilation with the same square."""
    return dilate(erode(mask, radius), radius)


def translate(mask, dx, dy):
    """Shift mask content by ``dx`` columns and ``dy`` rows, filling with 0."""
    src = mask.bits
    out = np.zeros_like(src)
    h, w = src.shape
    if abs(dx) < w and abs(dy) < h:
        out[max(dy, 0):h + min(dy, 0), max(dx, 0):w + min(dx, 0)] = \
            src[max(-dy, 0):h + min(-dy, 0), max(-dx, 0):w + min(-dx, 0)]
    return mask.with_bits(out)


def _check_same_grid(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"raster shapes differ: {a.shape} vs {b.shape}")


def overlap_score(pre, post, dx, dy):
    """Count pixels ``p`` with ``post[p]`` set and ``pre[p - (dy, dx)]`` set."""
    a, b = pre.bits, post.bits
    h, w = a.shape
    if abs(dx) >= w or abs(dy) >= h:
        return 0
    post_win = b[max(dy, 0):h + min(dy, 0), max(dx, 0):w + min(dx, 0)]
    pre_win = a[max(-dy, 0):h + min(-dy, 0), max(-dx, 0):w + min(-dx, 0)]
    return int(np.count_nonzero(post_win & pre_win))


def register(pre, post, search_radius=10):
    """Find the displacement of ``post`` relative to ``pre`` by exhaustive overlap search.

    Every ``(dx, dy)`` in ``[-r, r]^2`` is scored with :func:`overlap_score`.
    Ties go to the smallest ``|dx| + |dy|``, then to the smallest ``(dy, dx)``.
    Align ``post`` onto ``pre`` with ``translate(post, -dx, -dy)``.
    """
    _check_same_grid(pre, post)
    r = _check_radius(search_radius)
    if not post.bits.any():
        raise NoSignal("post mask has no set pixels")
    if not pre.bits.any():
        raise NoSignal("pre mask has no set pixels")

    # Crop both masks to the union bounding box of set pixels (padded by r):
    # shifts of empty border rows cannot change any score.
    rows = np.flatnonzero(pre.bits.any(axis=1) | post.bits.any(axis=1))
    cols = np.flatnonzero(pre.bits.any(axis=0) | post.bits.any(axis=0))
    r0, r1 = rows[0], rows[-1] + 1
    c0, c1 = cols[0], cols[-1] + 1
    pad = np.zeros((r1 - r0 + 2 * r, c1 - c0 + 2 * r), dtype=bool)
    pre_p = pad.copy()
    pre_p[r:r + r1 - r0, r:r + c1 - c0] = pre.bits[r0:r1, c0:c1]
    post_c = post.bits[r0:r1, c0:c1]
    hh, ww = post_c.shape

    best = None
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            win = pre_p[r - dy:r - dy + hh, r - dx:r - dx + ww]
            score = int(np.count_nonzero(win & post_c))
            key = (-score, abs(dx) + abs(dy), dy, dx)
            if best is None or key < best:
                best = key
    return PixelOffset(dx=best[3], dy=best[2], score=-best[0])


def diff_masks(pre, post):
    """Pixels set in ``pre`` and clear in ``post``."""
    _check_same_grid(pre, post)
    if pre.geo != post.geo:
        raise DimensionMismatch("masks have different geotransforms")
    return pre.with_bits(pre.bits & ~post.bits)


def clean_diff(diff, min_width=3):
    """Drop difference structures thinner than ``min_width`` and speckle noise."""
    if min_width < 1:
        raise ValueError(f"min_width must be >= 1, got {min_width}")
    return open_mask(erode(diff, int(min_width) // 2), 1)


def heatmap(diff, cell_size=100):
    """Sum set pixels over a grid of ``cell_size`` x ``cell_size`` cells.

    Cells on the right and bottom edges may be partial.
    """
    cell_size = int(cell_size)
    if cell_size < 1:
        raise ValueError(f"cell_size must be >= 1, got {cell_size}")
    h, w = diff.shape
    rows, cols = -(-h // cell_size), -(-w // cell_size)
    padded = np.zeros((rows * cell_size, cols * cell_size), dtype=np.int64)
    padded[:h, :w] = diff.bits
    sums = padded.reshape(rows, cell_size, cols, cell_size).sum(axis=(1, 3))
    return HeatmapGrid(cell_size=cell_size, sums=sums)


def _segment_distance_grid(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return np.hypot(px - ax, py - ay)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def rasterize_graph(graph: RoadGraph, geo, width, height, buffer=2.0):
    """Burn graph edges into a mask: a pixel is set when its center lies within
    ``buffer`` world units of any edge polyline."""
    if buffer < 0:
        raise ValueError(f"buffer must be >= 0, got {buffer}")
    bits = np.zeros((height, width), dtype=bool)
    # Tiny slack so that centers exactly on the buffer boundary survive rounding.
    tol = buffer + 1e-9 * max(1.0, buffer)
    for edge in graph.edges:
        pts = edge.coords
        for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
            r_a, c_a = geo.world_to_pixel(ax, ay)
            r_b, c_b = geo.world_to_pixel(bx, by)
            pr = tol / geo.pixel_size_y + 1
            pc = tol / geo.pixel_size_x + 1
            r0 = max(int(math.floor(min(r_a, r_b) - pr)), 0)
            r1 = min(int(math.ceil(max(r_a, r_b) + pr)) + 1, height)
            c0 = max(int(math.floor(min(c_a, c_b) - pc)), 0)
            c1 = min(int(math.ceil(max(c_a, c_b) + pc)) + 1, width)
            if r0 >= r1 or c0 >= c1:
                continue
            rr, cc = np.mgrid[r0:r1, c0:c1]
            wx, wy = geo.pixel_to_world(rr, cc)
            dist = _segment_distance_grid(wx, wy, ax, ay, bx, by)
            bits[r0:r1, c0:c1] |= dist <= tol
    return BinaryMask(bits, geo)
