"""Fuse the damage graph with a prior vector road network into routing costs."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyNetwork, MalformedDocument
from .graph import SCHEMA_VERSION, Edge, Node, RoadGraph, polyline_length

logger = logging.getLogger(__name__)


# -- loading -------------------------------------------------------------------

class _Snapper:
    """Assigns node ids to coordinates, merging points within ``tol``."""

    def __init__(self, tol):
        self.tol = tol
        self.cell = max(tol, 1e-9)
        self.grid = {}
        self.nodes = []

    def _key(self, x, y):
        return math.floor(x / self.cell), math.floor(y / self.cell)

    def find(self, x, y):
        kx, ky = self._key(x, y)
        best = None
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                for nid in self.grid.get((kx + i, ky + j), ()):
                    n = self.nodes[nid]
                    d = math.hypot(n.x - x, n.y - y)
                    if d <= self.tol and (best is None or (d, nid) < best):
                        best = (d, nid)
        return None if best is None else best[1]

    def get(self, x, y):
        nid = self.find(x, y)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(Node(nid, x, y))
            self.grid.setdefault(self._key(x, y), []).append(nid)
        return nid


def _iter_lines(doc):
    """Yield coordinate lists of every line part; count skipped features."""
    skipped = 0
    lines = []
    for f in doc["features"]:
        if not isinstance(f, dict):
            raise MalformedDocument("feature is not an object")
        geom = f.get("geometry")
        if not isinstance(geom, dict):
            skipped += 1
            continue
        kind = geom.get("type")
        try:
            if kind == "LineString":
                parts = [geom["coordinates"]]
            elif kind == "MultiLineString":
                parts = list(geom["coordinates"])
            else:
                skipped += 1
                continue
            for part in parts:
                coords = [(float(c[0]), float(c[1])) for c in part]
                if len(coords) >= 2:
                    lines.append(coords)
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise MalformedDocument(f"bad {kind} coordinates: {exc}") from exc
    return lines, skipped


def load_osm_roads(doc, snap_tolerance=1.0):
    """Build a RoadGraph from a GeoJSON FeatureCollection of road lines.

    ``doc`` may be a parsed dict, JSON text, or a path. Line vertices within
    ``snap_tolerance`` of each other merge into one node. Lines are split at
    their endpoints and at every vertex shared with another line (or visited
    twice by the same line), so crossings that share a vertex become
    junctions. Non-line features are skipped and counted in a warning.
    """
    if isinstance(doc, os.PathLike) or (
        isinstance(doc, str) and not doc.lstrip().startswith("{")
    ):
        with open(doc, encoding="utf-8") as fh:
            doc = fh.read()
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise MalformedDocument("document is not a FeatureCollection")
    if not isinstance(doc.get("features"), list):
        raise MalformedDocument("FeatureCollection has no features list")

    lines, skipped = _iter_lines(doc)
    if skipped:
        logger.warning("skipped %d non-line feature(s)", skipped)
    if not lines:
        raise EmptyNetwork("no LineString or MultiLineString features")

    snap = _Snapper(snap_tolerance)
    vertex_ids = [[snap.get(x, y) for x, y in line] for line in lines]
    uses = {}
    for ids in vertex_ids:
        for k, nid in enumerate(ids):
            weight = 2 if k in (0, len(ids) - 1) else 1
            uses[nid] = uses.get(nid, 0) + weight

    edges = []
    used_nodes = set()
    for ids in vertex_ids:
        # Collapse consecutive duplicates produced by snapping.
        run = [ids[0]]
        for nid in ids[1:]:
            if nid != run[-1]:
                run.append(nid)
        if len(run) < 2:
            continue
        start = 0
        for k in range(1, len(run)):
            if k == len(run) - 1 or uses[run[k]] >= 2:
                piece = run[start:k + 1]
                coords = [snap.nodes[n].position for n in piece]
                edges.append(Edge(len(edges), piece[0], piece[-1], coords))
                used_nodes.update((piece[0], piece[-1]))
                start = k
    if not edges:
        raise EmptyNetwork("all line features collapsed under snapping")
    # Keep only nodes that terminate an edge, renumbered in first-seen order.
    order = sorted(used_nodes)
    remap = {old: new for new, old in enumerate(order)}
    nodes = tuple(Node(remap[o], snap.nodes[o].x, snap.nodes[o].y) for o in order)
    edges = tuple(Edge(e.id, remap[e.u], remap[e.v], e.coords) for e in edges)
    return RoadGraph(nodes, edges)


# -- damage assignment -----------------------------------------------------------

@dataclass(frozen=True)
class DamageAssignment:
    """One damage sub-segment attached to its nearest prior-network edge.

    ``osm_edge`` is ``None`` when no edge lies within the assignment radius;
    ``distance`` is then the raw nearest distance (or ``inf`` for an empty
    network) and the assignment carries no cost.
    """

    diff_segment: int
    osm_edge: int | None
    s_e_diff: float
    d: float
    distance: float
    alpha: float | None = None

    @property
    def assigned(self):
        return self.osm_edge is not None


class _EdgeIndex:
    """Flattened polyline pieces of all edges for vectorized distance queries."""

    def __init__(self, graph):
        a, b, owner = [], [], []
        for e in graph.edges:
            pts = np.asarray(e.coords, dtype=float)
            a.append(pts[:-1])
            b.append(pts[1:])
            owner.extend([e.id] * (len(pts) - 1))
        self.edge_ids = np.array([e.id for e in graph.edges], dtype=np.int64)
        if owner:
            self.a = np.concatenate(a)
            self.d = np.concatenate(b) - self.a
            self.owner = np.array(owner, dtype=np.int64)
        else:
            self.a = self.d = np.zeros((0, 2))
            self.owner = np.zeros(0, dtype=np.int64)
        self.seg2 = np.einsum("ij,ij->i", self.d, self.d)

    def edge_distances(self, x, y):
        """``(edge_ids, distances)`` from point to every edge, edge ids ascending."""
        p = np.array([x, y])
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.einsum("ij,ij->i", p - self.a, self.d) / self.seg2
        t = np.clip(np.nan_to_num(t, nan=0.0), 0.0, 1.0)
        dist = np.hypot(*(self.a + t[:, None] * self.d - p).T)
        order = np.argsort(self.owner, kind="stable")
        owners = self.owner[order]
        dist = dist[order]
        ids, starts = np.unique(owners, return_index=True)
        return ids, np.minimum.reduceat(dist, starts)


def assign_damage(diff, osm, max_assign_dist=30.0, d_min=1.0):
    """Attach each damage sub-segment to the prior edge nearest its midpoint.

    Ties go to the lower edge id. Segments farther than ``max_assign_dist``
    are returned unassigned.
    """
    if not max_assign_dist > 0:
        raise ValueError(f"max_assign_dist must be positive, got {max_assign_dist}")
    if not d_min > 0:
        raise ValueError(f"d_min must be positive, got {d_min}")
    index = _EdgeIndex(osm)
    out = []
    for seg in diff.segments:
        mx, my = seg.midpoint
        if len(index.owner) == 0:
            out.append(DamageAssignment(seg.id, None, seg.length, math.inf, math.inf))
            continue
        ids, dist = index.edge_distances(mx, my)
        k = int(np.argmin(dist))  # first minimum: lowest edge id
        best = float(dist[k])
        if best > max_assign_dist:
            out.append(DamageAssignment(seg.id, None, seg.length, best, best))
        else:
            out.append(DamageAssignment(seg.id, int(ids[k]), seg.length, max(best, d_min), best))
    return out


# -- cost update -------------------------------------------------------------------

def damage_contribution(alpha, s, d):
    """Raw damage cost ``alpha * s / d**2`` of one assignment."""
    return alpha * s / (d * d)


@dataclass(frozen=True)
class CostedGraph:
    """Prior network with per-edge damage multipliers.

    ``edge_costs`` holds the multiplier of every retained edge (>= 1);
    ``removed`` the ids dropped from routing; ``contributions`` the raw,
    unfloored damage terms per edge.
    """

    base: RoadGraph
    edge_costs: dict
    alpha: float
    removed: frozenset = frozenset()
    contributions: dict = field(default_factory=dict)

    def routing_view(self):
        return routing_view(self)

    def damaged_edges(self):
        """Edges that are removed or carry a multiplier above 1."""
        return sorted(self.removed | {k for k, c in self.edge_costs.items() if c > 1.0})

    def to_geojson(self):
        features = []
        for e in self.base.edges:
            removed = e.id in self.removed
            features.append({
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[round(x, 9), round(y, 9)] for x, y in e.coords],
                },
                "properties": {
                    "edge_id": e.id,
                    "node_a": e.u,
                    "node_b": e.v,
                    "length": round(e.length, 9),
                    "cost": None if removed else round(self.edge_costs[e.id], 9),
                    "removed": removed,
                },
            })
        alpha = "inf" if math.isinf(self.alpha) else self.alpha
        return {
            "type": "FeatureCollection",
            "schema_version": SCHEMA_VERSION,
            "alpha": alpha,
            "features": features,
        }


def apply_damage_costs(osm, assignments, alpha=math.inf):
    """Per-edge cost multipliers from the damage assignments.

    Each assigned edge gets ``C_e = max(1, sum(alpha * s / d**2))`` over its
    assignments; edges without damage keep 1. With an infinite ``alpha``
    every assigned edge is removed instead. An assignment may carry its own
    ``alpha`` which overrides the global one.
    """
    if not (alpha >= 1):
        raise ValueError(f"alpha must be >= 1 or inf, got {alpha}")
    edge_ids = {e.id for e in osm.edges}
    contributions = {}
    removed = set()
    for a in assignments:
        if not a.assigned:
            continue
        if a.osm_edge not in edge_ids:
            raise KeyError(f"assignment references unknown edge {a.osm_edge}")
        k = alpha if a.alpha is None else a.alpha
        if math.isinf(k):
            removed.add(a.osm_edge)
            continue
        contributions.setdefault(a.osm_edge, []).append(damage_contribution(k, a.s_e_diff, a.d))
    costs = {}
    for e in osm.edges:
        if e.id in removed:
            continue
        costs[e.id] = max(1.0, float(sum(contributions.get(e.id, ()))))
    return CostedGraph(
        base=osm,
        edge_costs=costs,
        alpha=float(alpha),
        removed=frozenset(removed),
        contributions={k: tuple(v) for k, v in contributions.items()},
    )


def routing_view(costed):
    """RoadGraph of retained edges weighted by ``length * C_e``."""
    edges = [
        Edge(e.id, e.u, e.v, e.coords, e.length, e.length * costed.edge_costs[e.id])
        for e in costed.base.edges
        if e.id not in costed.removed
    ]
    return RoadGraph(costed.base.nodes, tuple(edges))


def costed_from_geojson(doc):
    """Inverse of :meth:`CostedGraph.to_geojson`."""
    nodes, edges, costs, removed = {}, [], {}, set()
    for f in doc["features"]:
        p = f["properties"]
        coords = [tuple(c[:2]) for c in f["geometry"]["coordinates"]]
        u, v = int(p["node_a"]), int(p["node_b"])
        nodes.setdefault(u, Node(u, *coords[0]))
        nodes.setdefault(v, Node(v, *coords[-1]))
        edges.append(Edge(int(p["edge_id"]), u, v, coords, polyline_length(coords)))
        if p.get("removed"):
            removed.add(int(p["edge_id"]))
        else:
            costs[int(p["edge_id"])] = float(p["cost"])
    alpha = doc.get("alpha", "inf")
    alpha = math.inf if alpha == "inf" else float(alpha)
    base = RoadGraph(tuple(nodes[k] for k in sorted(nodes)), tuple(edges))
    return CostedGraph(base, costs, alpha, frozenset(removed))
