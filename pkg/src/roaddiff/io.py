"""Raster and report file formats.

Rasters are 8-bit grayscale PGM (P5) or PNG. Each raster ``<name>.<ext>``
has a sidecar ``<name>.geo.json`` holding the geotransform; a missing
sidecar means the identity transform.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .graph import dumps
from .raster import BinaryMask, GeoTransform, ProbabilityMask


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".geo.json")


def read_geo(path):
    side = sidecar_path(path)
    if not side.exists():
        return GeoTransform()
    with open(side, encoding="utf-8") as fh:
        return GeoTransform.from_dict(json.load(fh))


def _read_gray(path):
    with Image.open(path) as im:
        if im.mode not in ("L", "1", "P", "I", "I;16"):
            im = im.convert("L")
        arr = np.asarray(im)
    if arr.dtype != np.uint8:
        if arr.dtype == bool:
            arr = arr.astype(np.uint8) * 255
        else:
            arr = np.clip(arr, 0, 255).astype(np.uint8)
    return arr


def read_probability_mask(path):
    return ProbabilityMask(_read_gray(path) / 255.0, read_geo(path))


def read_binary_mask(path):
    return BinaryMask(_read_gray(path) > 0, read_geo(path))


def _format_for(path):
    suffix = Path(path).suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return "PPM"
    if suffix == ".png":
        return "PNG"
    raise ValueError(f"unsupported raster extension {suffix!r} (use .pgm or .png)")


def encode_gray(arr, fmt):
    buf = io.BytesIO()
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(buf, format=fmt)
    return buf.getvalue()


def write_geo(path, geo):
    Path(sidecar_path(path)).write_text(dumps(geo.to_dict()), encoding="utf-8")


def write_gray(path, arr, geo=None):
    Path(path).write_bytes(encode_gray(arr, _format_for(path)))
    if geo is not None:
        write_geo(path, geo)


def write_binary_mask(path, mask):
    write_gray(path, mask.bits.astype(np.uint8) * 255, mask.geo)


def write_probability_mask(path, mask):
    write_gray(path, np.rint(mask.values * 255.0).astype(np.uint8), mask.geo)


def heatmap_csv(grid):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "col", "sum"])
    for r in range(grid.rows):
        for c in range(grid.cols):
            w.writerow([r, c, int(grid.sums[r, c])])
    return buf.getvalue()


def heatmap_image(grid):
    """Cell sums scaled so the largest cell is 255 (all zeros stays 0)."""
    peak = int(grid.sums.max()) if grid.sums.size else 0
    if peak == 0:
        return np.zeros(grid.sums.shape, dtype=np.uint8)
    return np.rint(grid.sums * (255.0 / peak)).astype(np.uint8)


def write_heatmap(csv_path, image_path, grid):
    Path(csv_path).write_text(heatmap_csv(grid), encoding="utf-8")
    write_gray(image_path, heatmap_image(grid))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")
