"""scikit-learn style estimators over the functional core.

Each estimator keeps its hyperparameters as constructor arguments (so
``get_params``/``set_params``/``clone`` work) and learns nothing but the
reference data handed to ``fit``.
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import compare, fusion, raster, skeleton
from .validation import (
    check_probability_mask,
    check_road_graph,
    check_same_grid,
)


class RoadGraphExtractor(TransformerMixin, BaseEstimator):
    """Probability mask -> road graph (threshold, dilate, thin, trace).

    Parameters
    ----------
    threshold : float
        Pixels strictly above this probability are road.
    dilation_radius : int
        Square dilation radius in pixels applied before thinning.
    min_spur : int
        Dead-end edges shorter than this many pixels are pruned.
    """

    def __init__(self, threshold=0.5, dilation_radius=2, min_spur=5):
        self.threshold = threshold
        self.dilation_radius = dilation_radius
        self.min_spur = min_spur

    def fit(self, X=None, y=None):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.dilation_radius < 0 or self.min_spur < 0:
            raise ValueError("dilation_radius and min_spur must be >= 0")
        self.fitted_ = True
        return self

    def _one(self, X):
        if isinstance(X, raster.BinaryMask):
            binary = X
        else:
            binary = raster.threshold(check_probability_mask(X), self.threshold)
        binary = raster.dilate(binary, self.dilation_radius)
        return skeleton.extract_graph(skeleton.skeletonize(binary), min_spur=self.min_spur)

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        if isinstance(X, (list, tuple)):
            return [self._one(x) for x in X]
        return self._one(X)


class ChangeDetector(BaseEstimator):
    """Learns a pre-event mask; ``transform`` returns the cleaned loss mask of a
    post-event mask against it.

    Attributes
    ----------
    pre_ : BinaryMask
        Thresholded pre-event mask.
    offset_ : PixelOffset
        Registration result of the last ``transform`` call.
    """

    def __init__(self, threshold=0.5, dilation_radius=2, min_width=3, search_radius=10):
        self.threshold = threshold
        self.dilation_radius = dilation_radius
        self.min_width = min_width
        self.search_radius = search_radius

    def _binary(self, X):
        if isinstance(X, raster.BinaryMask):
            return X
        return raster.threshold(check_probability_mask(X), self.threshold)

    def fit(self, X, y=None):
        self.pre_ = self._binary(X)
        return self

    def register(self, X):
        check_is_fitted(self, "pre_")
        post = self._binary(X)
        check_same_grid(self.pre_, post)
        return raster.register(self.pre_, post, self.search_radius)

    def transform(self, X):
        check_is_fitted(self, "pre_")
        post = self._binary(X)
        check_same_grid(self.pre_, post)
        self.offset_ = raster.register(self.pre_, post, self.search_radius)
        aligned = raster.translate(post, -self.offset_.dx, -self.offset_.dy)
        pre_d = raster.dilate(self.pre_, self.dilation_radius)
        post_d = raster.dilate(aligned, self.dilation_radius)
        self.raw_diff_ = raster.diff_masks(pre_d, post_d)
        return raster.clean_diff(self.raw_diff_, self.min_width)


class DamageCostModel(BaseEstimator):
    """Learns a prior road network; ``transform`` maps a damage graph onto it.

    Parameters
    ----------
    alpha : float
        Impact factor, ``>= 1``; ``math.inf`` removes every damaged edge.
    slice_length, rdp_epsilon : float
        Sub-segment length and simplification tolerance, world units.
    max_assign_dist, d_min : float
        Assignment radius and the floor on damage-to-edge distance.
    """

    def __init__(self, alpha=math.inf, slice_length=20.0, rdp_epsilon=2.0,
                 max_assign_dist=30.0, d_min=1.0):
        self.alpha = alpha
        self.slice_length = slice_length
        self.rdp_epsilon = rdp_epsilon
        self.max_assign_dist = max_assign_dist
        self.d_min = d_min

    def fit(self, X, y=None):
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1 or inf, got {self.alpha}")
        self.network_ = check_road_graph(X)
        return self

    def transform(self, X):
        """Damage RoadGraph -> CostedGraph."""
        check_is_fitted(self, "network_")
        diff = check_road_graph(X)
        self.diff_segments_ = compare.segments_of(diff, self.slice_length, self.rdp_epsilon)
        self.assignments_ = fusion.assign_damage(
            self.diff_segments_, self.network_, self.max_assign_dist, self.d_min
        )
        return fusion.apply_damage_costs(self.network_, self.assignments_, self.alpha)

    def predict(self, X):
        """Damage RoadGraph -> weighted routing graph."""
        return fusion.routing_view(self.transform(X))


class SegmentMatcher(BaseEstimator):
    """Sub-segment correspondence scorer against a reference graph."""

    def __init__(self, slice_length=20.0, rdp_epsilon=2.0):
        self.slice_length = slice_length
        self.rdp_epsilon = rdp_epsilon

    def fit(self, X, y=None):
        self.reference_ = compare.segments_of(check_road_graph(X), self.slice_length,
                                              self.rdp_epsilon)
        return self

    def predict(self, X):
        """MatchMetrics of graph ``X`` (predicted) against the reference (truth)."""
        check_is_fitted(self, "reference_")
        segs = compare.segments_of(check_road_graph(X), self.slice_length, self.rdp_epsilon)
        return compare.segment_metrics(segs, self.reference_)

    def score(self, X, y=None):
        return self.predict(X).f_score
