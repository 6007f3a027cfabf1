import numpy as np
import pytest

from roaddiff.graph import Edge, Node, RoadGraph
from roaddiff.raster import BinaryMask, GeoTransform


def make_graph(nodes, edges):
    """nodes: {id: (x, y)}; edges: [(u, v)] or [(u, v, [interior points])]."""
    ns = tuple(Node(i, *xy) for i, xy in sorted(nodes.items()))
    es = []
    for k, e in enumerate(edges):
        u, v = e[0], e[1]
        mid = list(e[2]) if len(e) > 2 else []
        es.append(Edge(k, u, v, [nodes[u], *mid, nodes[v]]))
    return RoadGraph(ns, tuple(es))


def mask(bits, geo=None):
    return BinaryMask(np.asarray(bits, dtype=bool), geo or GeoTransform())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
