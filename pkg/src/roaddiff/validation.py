"""Input coercion for the estimator layer."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch
from .graph import RoadGraph
from .raster import BinaryMask, GeoTransform, ProbabilityMask


def check_probability_mask(X, geo=None):
    """Return ``X`` as a ProbabilityMask.

    Accepts a ProbabilityMask or a 2-D array of values in [0, 1]; uint8
    arrays are scaled by 1/255.
    """
    if isinstance(X, ProbabilityMask):
        return X
    if isinstance(X, BinaryMask):
        return ProbabilityMask(X.bits.astype(float), X.geo)
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got array of shape {arr.shape}")
    if arr.dtype == np.uint8:
        arr = arr / 255.0
    elif arr.dtype == bool:
        arr = arr.astype(float)
    return ProbabilityMask(arr.astype(float), geo or GeoTransform())


def check_binary_mask(X, geo=None):
    if isinstance(X, BinaryMask):
        return X
    if isinstance(X, ProbabilityMask):
        raise TypeError("got a probability mask where a binary mask is required; threshold it first")
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got array of shape {arr.shape}")
    if arr.dtype != bool and not np.isin(arr, (0, 1)).all():
        raise ValueError("binary mask values must be 0 or 1")
    return BinaryMask(arr.astype(bool), geo or GeoTransform())


def check_road_graph(G):
    if not isinstance(G, RoadGraph):
        raise TypeError(f"expected a RoadGraph, got {type(G).__name__}")
    return G


def check_same_grid(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"raster shapes differ: {a.shape} vs {b.shape}")
    if a.geo != b.geo:
        raise DimensionMismatch("rasters have different geotransforms")
