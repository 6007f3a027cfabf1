"""Spatial road graph: nodes with planar positions, edges carrying polylines."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float

    @property
    def position(self):
        return (self.x, self.y)


def polyline_length(coords):
    return float(sum(math.dist(p, q) for p, q in zip(coords[:-1], coords[1:])))


@dataclass(frozen=True)
class Edge:
    """Polyline edge between nodes ``u`` and ``v``.

    ``weight`` is the routing weight; ``None`` means "use the length".
    """

    id: int
    u: int
    v: int
    coords: tuple
    length: float = None
    weight: float = None

    def __post_init__(self):
        coords = tuple((float(x), float(y)) for x, y in self.coords)
        if len(coords) < 2:
            raise ValueError(f"edge {self.id} needs at least two points")
        object.__setattr__(self, "coords", coords)
        if self.length is None:
            object.__setattr__(self, "length", polyline_length(coords))

    @property
    def cost(self):
        return self.length if self.weight is None else self.weight


@dataclass(frozen=True)
class RoadGraph:
    nodes: tuple = ()
    edges: tuple = ()
    _node_index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple(self.edges)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        index = {}
        for n in nodes:
            if n.id in index:
                raise ValueError(f"duplicate node id {n.id}")
            index[n.id] = n
        edge_ids = set()
        for e in edges:
            if e.id in edge_ids:
                raise ValueError(f"duplicate edge id {e.id}")
            edge_ids.add(e.id)
            if e.u not in index or e.v not in index:
                raise ValueError(f"edge {e.id} references a missing node")
        object.__setattr__(self, "_node_index", index)

    def node(self, node_id):
        return self._node_index[node_id]

    def has_node(self, node_id):
        return node_id in self._node_index

    def edge(self, edge_id):
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def total_length(self):
        return float(sum(e.length for e in self.edges))

    def degree(self):
        deg = {n.id: 0 for n in self.nodes}
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return deg

    def adjacency(self):
        """``{node: [(neighbor, weight, edge_id), ...]}`` for routing."""
        adj = {n.id: [] for n in self.nodes}
        for e in self.edges:
            adj[e.u].append((e.v, e.cost, e.id))
            if e.v != e.u:
                adj[e.v].append((e.u, e.cost, e.id))
        return adj

    def node_positions(self):
        ids = np.array([n.id for n in self.nodes], dtype=np.int64)
        xy = np.array([[n.x, n.y] for n in self.nodes], dtype=float).reshape(-1, 2)
        return ids, xy

    def with_edges(self, edges):
        return RoadGraph(self.nodes, tuple(edges))

    def component_count(self):
        """Number of connected components (isolated nodes count as components)."""
        parent = {n.id: n.id for n in self.nodes}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            ra, rb = find(e.u), find(e.v)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        return len({find(n) for n in parent})


def reweighted(graph, weights):
    """Copy of ``graph`` with ``weights[edge_id]`` set as routing weights."""
    return graph.with_edges(
        replace(e, weight=weights[e.id]) if e.id in weights else e for e in graph.edges
    )


def point_polyline_distance(px, py, coords):
    """Shortest distance from a point to a polyline."""
    pts = np.asarray(coords, dtype=float)
    a, b = pts[:-1], pts[1:]
    d = b - a
    seg2 = np.einsum("ij,ij->i", d, d)
    p = np.array([px, py])
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(seg2 > 0, np.einsum("ij,ij->i", p - a, d) / seg2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * d
    return float(np.min(np.hypot(*(proj - p).T)))


# -- GeoJSON -----------------------------------------------------------------

def _round(v):
    # Fixed precision keeps serialized output stable across platforms.
    return round(float(v), 9)


def graph_to_geojson(graph, extra_properties=None):
    """FeatureCollection with one LineString per edge.

    Nodes without incident edges are written as Point features so the graph
    round-trips; readers that only want roads can ignore them.
    """
    extra_properties = extra_properties or {}
    features = []
    for e in graph.edges:
        props = {"edge_id": e.id, "node_a": e.u, "node_b": e.v, "length": _round(e.length)}
        props.update(extra_properties.get(e.id, {}))
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[_round(x), _round(y)] for x, y in e.coords],
            },
            "properties": props,
        })
    deg = graph.degree()
    for n in graph.nodes:
        if deg[n.id] == 0:
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [_round(n.x), _round(n.y)]},
                "properties": {"node_id": n.id},
            })
    return {"type": "FeatureCollection", "schema_version": SCHEMA_VERSION, "features": features}


def is_native_geojson(doc):
    """True when every LineString carries the edge/node properties we write."""
    lines = [f for f in doc.get("features", [])
             if (f.get("geometry") or {}).get("type") == "LineString"]
    return bool(lines) and all(
        {"edge_id", "node_a", "node_b"} <= set(f.get("properties") or {}) for f in lines
    )


def graph_from_geojson(doc):
    """Rebuild a graph written by :func:`graph_to_geojson`.

    Node positions come from polyline endpoints; routing ``cost`` properties
    become edge weights and edges flagged ``removed`` are dropped.
    """
    nodes = {}
    edges = []
    for f in doc.get("features", []):
        geom = f.get("geometry") or {}
        props = f.get("properties") or {}
        if geom.get("type") == "Point" and "node_id" in props:
            x, y = geom["coordinates"][:2]
            nodes.setdefault(int(props["node_id"]), Node(int(props["node_id"]), x, y))
        elif geom.get("type") == "LineString":
            coords = [tuple(c[:2]) for c in geom["coordinates"]]
            u, v = int(props["node_a"]), int(props["node_b"])
            nodes.setdefault(u, Node(u, *coords[0]))
            nodes.setdefault(v, Node(v, *coords[-1]))
            if props.get("removed"):
                continue
            weight = None
            if "cost" in props and props.get("cost") is not None:
                weight = float(props["cost"]) * polyline_length(coords)
            edges.append(Edge(int(props["edge_id"]), u, v, coords, weight=weight))
    return RoadGraph(tuple(nodes[k] for k in sorted(nodes)), tuple(edges))


def dumps(obj):
    """Deterministic JSON text used for every artifact we write."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"
