"""Graph correspondence through fixed-length linear sub-segments.

Graphs are simplified with Ramer-Douglas-Peucker, cut into pieces no longer
than ``l`` and compared piecewise: two sub-segments correspond when both of
their endpoints lie strictly closer than ``l / 2`` to the endpoints of the
other, in either orientation.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .exceptions import SliceLengthMismatch
from .graph import SCHEMA_VERSION, Edge


@dataclass(frozen=True)
class SubSegment:
    id: int
    v1: tuple
    v2: tuple
    parent_edge: int
    index: int

    @property
    def length(self):
        return math.dist(self.v1, self.v2)

    @property
    def midpoint(self):
        return ((self.v1[0] + self.v2[0]) / 2.0, (self.v1[1] + self.v2[1]) / 2.0)


@dataclass(frozen=True)
class SubSegmentSet:
    segments: tuple
    slice_length: float

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.slice_length > 0:
            raise ValueError(f"slice_length must be positive, got {self.slice_length}")

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def ids(self):
        return [s.id for s in self.segments]

    def subset(self, ids):
        keep = set(ids)
        return SubSegmentSet(tuple(s for s in self.segments if s.id in keep), self.slice_length)

    def total_length(self):
        return float(sum(s.length for s in self.segments))

    def to_geojson(self):
        return {
            "type": "FeatureCollection",
            "schema_version": SCHEMA_VERSION,
            "slice_length": self.slice_length,
            "features": [
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[round(s.v1[0], 9), round(s.v1[1], 9)],
                                        [round(s.v2[0], 9), round(s.v2[1], 9)]],
                    },
                    "properties": {
                        "segment_id": s.id,
                        "parent_edge": s.parent_edge,
                        "index": s.index,
                        "length": round(s.length, 9),
                    },
                }
                for s in self.segments
            ],
        }

    @classmethod
    def from_geojson(cls, doc):
        segs = []
        for f in doc["features"]:
            (x1, y1), (x2, y2) = [tuple(c[:2]) for c in f["geometry"]["coordinates"]]
            p = f["properties"]
            segs.append(SubSegment(int(p["segment_id"]), (x1, y1), (x2, y2),
                                   int(p["parent_edge"]), int(p["index"])))
        return cls(tuple(segs), float(doc["slice_length"]))


@dataclass(frozen=True)
class MatchMetrics:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 0.0

    @property
    def recall(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 0.0

    @property
    def f_score(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
        }


# -- simplification ----------------------------------------------------------

def _point_segment_distance(p, a, b):
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg2))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def rdp(points, epsilon):
    """Ramer-Douglas-Peucker simplification of one polyline.

    A vertex is kept when its distance to the current chord exceeds
    ``epsilon`` (strictly), so ``epsilon=0`` keeps every non-collinear vertex.
    Endpoints are always kept.
    """
    pts = list(points)
    n = len(pts)
    if n < 3:
        return pts
    keep = [False] * n
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        dmax, idx = -1.0, -1
        for k in range(i + 1, j):
            d = _point_segment_distance(pts[k], pts[i], pts[j])
            if d > dmax:
                dmax, idx = d, k
        if idx > 0 and dmax > epsilon:
            keep[idx] = True
            stack.append((i, idx))
            stack.append((idx, j))
    return [p for p, k in zip(pts, keep) if k]


def rdp_simplify(graph, epsilon=2.0):
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    return graph.with_edges(
        Edge(e.id, e.u, e.v, rdp(e.coords, epsilon), weight=e.weight) for e in graph.edges
    )


# -- slicing -----------------------------------------------------------------

def slice_segments(graph, l=20.0):
    """Cut every linear piece of every edge into sub-segments of length ``l``.

    A piece of length ``L`` yields ``floor(L / l)`` full sub-segments followed
    by one shorter remainder when ``L`` is not a multiple of ``l``.
    Zero-length pieces are skipped.
    """
    if not l > 0:
        raise ValueError(f"slice length must be positive, got {l}")
    segs = []
    for e in graph.edges:
        index = 0
        for a, b in zip(e.coords[:-1], e.coords[1:]):
            length = math.dist(a, b)
            if length == 0.0:
                continue
            n_full = int(length // l)
            rem = length - n_full * l
            if rem <= 1e-9 * l:
                rem = 0.0
            elif l - rem <= 1e-9 * l:
                n_full, rem = n_full + 1, 0.0
            cuts = [k * l for k in range(n_full + 1)]
            if rem > 0:
                cuts.append(length)
            ux, uy = (b[0] - a[0]) / length, (b[1] - a[1]) / length
            for t0, t1 in zip(cuts[:-1], cuts[1:]):
                p = (a[0] + ux * t0, a[1] + uy * t0)
                q = b if t1 == cuts[-1] else (a[0] + ux * t1, a[1] + uy * t1)
                segs.append(SubSegment(len(segs), p, q, e.id, index))
                index += 1
    return SubSegmentSet(tuple(segs), float(l))


# -- correspondence ----------------------------------------------------------

def pair_distance(sa, sb):
    """``(max endpoint distance, summed endpoint distance)`` for the better
    orientation of ``sb`` against ``sa``."""
    d11 = math.dist(sa.v1, sb.v1)
    d22 = math.dist(sa.v2, sb.v2)
    d12 = math.dist(sa.v1, sb.v2)
    d21 = math.dist(sa.v2, sb.v1)
    return min((max(d11, d22), d11 + d22), (max(d12, d21), d12 + d21))


def _check_lengths(a, b):
    if not math.isclose(a.slice_length, b.slice_length, rel_tol=1e-12):
        raise SliceLengthMismatch(
            f"slice lengths differ: {a.slice_length} vs {b.slice_length}"
        )


class _GridIndex:
    """Buckets segments by the cells of both endpoints."""

    def __init__(self, segments, cell):
        self.cell = cell
        self.buckets = defaultdict(list)
        for s in segments:
            for x, y in (s.v1, s.v2):
                key = (math.floor(x / cell), math.floor(y / cell))
                bucket = self.buckets[key]
                if not bucket or bucket[-1] is not s:
                    bucket.append(s)

    def near(self, x, y):
        cx, cy = math.floor(x / self.cell), math.floor(y / self.cell)
        seen = {}
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                for s in self.buckets.get((cx + i, cy + j), ()):
                    seen[s.id] = s
        return seen.values()


def candidate_pairs(a, b):
    """All ``(cost, a_id, b_id)`` pairs satisfying the correspondence predicate."""
    _check_lengths(a, b)
    half = a.slice_length / 2.0
    index = _GridIndex(b.segments, a.slice_length)
    out = []
    for sa in a.segments:
        for sb in index.near(*sa.v1):
            dmax, dsum = pair_distance(sa, sb)
            if dmax < half:
                out.append((dsum, sa.id, sb.id))
    return out


def greedy_one_to_one(candidates):
    """Accept candidate pairs in ``(cost, a_id, b_id)`` order while both sides are free."""
    used_a, used_b, pairs = set(), set(), []
    for _, ia, ib in sorted(candidates):
        if ia in used_a or ib in used_b:
            continue
        used_a.add(ia)
        used_b.add(ib)
        pairs.append((ia, ib))
    return sorted(pairs)


def match_segments(a, b, one_to_one=True):
    """Corresponding ``(a_id, b_id)`` pairs, sorted by ``a_id``.

    With ``one_to_one`` (default), each segment on either side is used at
    most once, nearest pairs first. Otherwise every pair satisfying the
    predicate is returned.
    """
    cands = candidate_pairs(a, b)
    if one_to_one:
        return greedy_one_to_one(cands)
    return sorted((ia, ib) for _, ia, ib in cands)


def graph_intersection(a, b):
    matched = {ia for ia, _ in match_segments(a, b)}
    return a.subset(matched)


def graph_difference(a, b):
    matched = {ia for ia, _ in match_segments(a, b)}
    return a.subset(set(a.ids()) - matched)


def segment_metrics(predicted, truth):
    tp = len(match_segments(predicted, truth))
    return MatchMetrics(tp=tp, fp=len(predicted) - tp, fn=len(truth) - tp)


def segments_of(graph, slice_length=20.0, epsilon=2.0):
    """Simplify then slice: the standard path from a graph to sub-segments."""
    return slice_segments(rdp_simplify(graph, epsilon), slice_length)


def segments_array(segset):
    """``(n, 4)`` array of ``x1, y1, x2, y2``."""
    return np.array([[*s.v1, *s.v2] for s in segset.segments], dtype=float).reshape(-1, 4)
