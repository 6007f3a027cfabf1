"""Seeded synthetic before/after road scenes with known damage."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .graph import Edge, Node, RoadGraph
from .raster import GeoTransform, ProbabilityMask, rasterize_graph, translate


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    truth_pre: RoadGraph
    truth_post: RoadGraph
    damaged_edges: frozenset
    pre_mask: ProbabilityMask
    post_mask: ProbabilityMask
    shift: tuple = (0, 0)

    @property
    def geo(self):
        return self.pre_mask.geo


def grid_graph(rows, cols, spacing=40.0, margin=20.0, jitter=0.0, rng=None):
    """Lattice road network with ``rows x cols`` junctions."""
    nodes = []
    for i in range(rows):
        for j in range(cols):
            x, y = margin + j * spacing, margin + i * spacing
            if jitter and rng is not None:
                x += rng.uniform(-jitter, jitter)
                y += rng.uniform(-jitter, jitter)
            nodes.append(Node(i * cols + j, x, y))
    edges = []
    for i in range(rows):
        for j in range(cols):
            k = i * cols + j
            if j + 1 < cols:
                edges.append((k, k + 1))
            if i + 1 < rows:
                edges.append((k, k + cols))
    return RoadGraph(
        tuple(nodes),
        tuple(Edge(n, u, v, [nodes[u].position, nodes[v].position])
              for n, (u, v) in enumerate(edges)),
    )


def _point_at(coords, t):
    """Point at arc-length fraction ``t`` along a polyline, and its piece index."""
    lengths = [math.dist(p, q) for p, q in zip(coords[:-1], coords[1:])]
    target = t * sum(lengths)
    run = 0.0
    for k, seg in enumerate(lengths):
        if run + seg >= target or k == len(lengths) - 1:
            f = 0.0 if seg == 0 else (target - run) / seg
            (ax, ay), (bx, by) = coords[k], coords[k + 1]
            return (ax + f * (bx - ax), ay + f * (by - ay)), k
        run += seg


def cut_edges(graph, edge_ids, gap=(0.3, 0.7)):
    """Remove the ``gap`` fraction span from each listed edge.

    The remaining stubs keep their original end nodes and gain new end
    nodes at the cut points. A gap of ``(0, 1)`` deletes the edge entirely.
    """
    lo, hi = gap
    nodes = list(graph.nodes)
    next_node = max((n.id for n in nodes), default=-1) + 1
    next_edge = max((e.id for e in graph.edges), default=-1) + 1
    edges = []
    for e in graph.edges:
        if e.id not in edge_ids:
            edges.append(e)
            continue
        coords = list(e.coords)
        if lo > 0:
            p, k = _point_at(coords, lo)
            nodes.append(Node(next_node, *p))
            edges.append(Edge(next_edge, e.u, next_node, coords[:k + 1] + [p]))
            next_node += 1
            next_edge += 1
        if hi < 1:
            p, k = _point_at(coords, hi)
            nodes.append(Node(next_node, *p))
            edges.append(Edge(next_edge, next_node, e.v, [p] + coords[k + 1:]))
            next_node += 1
            next_edge += 1
    return RoadGraph(tuple(nodes), tuple(edges))


def scene_geo(graph, pixel_size=0.5, margin=20.0):
    """Raster frame covering ``graph`` plus ``margin`` world units on each side."""
    _, xy = graph.node_positions()
    for e in graph.edges:
        xy = np.vstack([xy, np.asarray(e.coords)])
    x_max, y_max = xy.max(axis=0) + margin
    width = int(math.ceil(x_max / pixel_size))
    height = int(math.ceil(y_max / pixel_size))
    return GeoTransform(0.0, height * pixel_size, pixel_size, pixel_size), width, height


def _to_probability(bits, rng, blur, noise):
    values = bits.astype(float)
    if blur > 0:
        values = ndimage.gaussian_filter(values, sigma=blur, mode="constant")
    if noise > 0:
        flip = rng.random(values.shape) < noise
        values = np.where(flip, 1.0 - values, values)
    return np.clip(values, 0.0, 1.0)


def generate_scene(rows=8, cols=8, damage_fraction=0.1, noise=0.0, seed=0, *,
                   spacing=40.0, margin=20.0, pixel_size=0.5, buffer=2.0,
                   blur=0.0, shift=(0, 0), gap=(0.3, 0.7), jitter=0.0):
    """Grid scene whose post-event mask lacks the middle of damaged edges.

    ``noise`` is the per-pixel probability of flipping a mask value, drawn
    independently for both masks; ``blur`` is a Gaussian sigma in pixels
    applied before the noise. ``shift`` translates the post mask content by
    ``(dx, dy)`` pixels to imitate misregistration.
    """
    if not 0.0 <= damage_fraction <= 1.0:
        raise ValueError(f"damage_fraction must be in [0, 1], got {damage_fraction}")
    rng = np.random.default_rng(seed)
    pre = grid_graph(rows, cols, spacing, margin, jitter, rng)
    n_damaged = int(round(damage_fraction * len(pre.edges)))
    picked = rng.choice(len(pre.edges), size=n_damaged, replace=False) if n_damaged else []
    damaged = frozenset(pre.edges[int(k)].id for k in picked)
    post = cut_edges(pre, damaged, gap)

    geo, width, height = scene_geo(pre, pixel_size, margin)
    pre_bits = rasterize_graph(pre, geo, width, height, buffer)
    post_bits = translate(rasterize_graph(post, geo, width, height, buffer), *shift)
    return SyntheticScene(
        truth_pre=pre,
        truth_post=post,
        damaged_edges=damaged,
        pre_mask=ProbabilityMask(_to_probability(pre_bits.bits, rng, blur, noise), geo),
        post_mask=ProbabilityMask(_to_probability(post_bits.bits, rng, blur, noise), geo),
        shift=tuple(shift),
    )
