"""Shortest paths and the four-way connectivity comparison of two road graphs."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import Infeasible, UnknownNode
from .graph import SCHEMA_VERSION

FOUND = "Found"
NO_PATH = "NoPath"


@dataclass(frozen=True)
class PathResult:
    status: str
    total_weight: float
    node_sequence: tuple

    @property
    def found(self):
        return self.status == FOUND


def _check_weights(adj):
    for nbrs in adj.values():
        for _, w, _ in nbrs:
            if w < 0:
                raise ValueError("edge weights must be non-negative")


def shortest_path(graph, src, dst):
    """Dijkstra from ``src`` to ``dst`` over edge routing weights.

    Among equal-weight paths the lexicographically smaller node sequence
    wins at every relaxation, which makes the result deterministic.
    """
    for n in (src, dst):
        if not graph.has_node(n):
            raise UnknownNode(n)
    adj = graph.adjacency()
    _check_weights(adj)
    heap = [(0.0, (src,))]
    settled = set()
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return PathResult(FOUND, dist, path)
        for nbr, w, _ in adj[node]:
            if nbr not in settled:
                heapq.heappush(heap, (dist + w, path + (nbr,)))
    return PathResult(NO_PATH, math.inf, ())


def distances_from(adj, src):
    """Single-source shortest distances; unreachable nodes are absent."""
    dist = {src: 0.0}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        for nbr, w, _ in adj[node]:
            nd = d + w
            if nd < dist.get(nbr, math.inf):
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return dist


def sample_pairs(graph, n, seed=0, min_separation=0.0, max_tries=None):
    """``n`` random ``(src, dst)`` node pairs at least ``min_separation`` apart.

    Pairs are drawn uniformly over ordered pairs of distinct nodes and
    rejected when too close; the same seed gives the same list.
    """
    ids, xy = graph.node_positions()
    if len(ids) < 2:
        raise Infeasible("graph needs at least two nodes")
    if n <= 0:
        return []
    span = np.ptp(xy, axis=0)
    if min_separation > 0 and float(np.hypot(*span)) < min_separation:
        raise Infeasible(f"no node pair is {min_separation} apart")
    rng = np.random.default_rng(seed)
    max_tries = max_tries or 200 * n
    pairs = []
    tries = 0
    while len(pairs) < n:
        batch = max(2 * (n - len(pairs)), 64)
        i = rng.integers(0, len(ids), size=batch)
        j = rng.integers(0, len(ids) - 1, size=batch)
        j = j + (j >= i)  # uniform over nodes other than i
        sep = np.hypot(*(xy[i] - xy[j]).T)
        for a, b, s in zip(i, j, sep):
            tries += 1
            if s >= min_separation:
                pairs.append((int(ids[a]), int(ids[b])))
                if len(pairs) == n:
                    break
        if tries >= max_tries and len(pairs) < n:
            raise Infeasible(
                f"only {len(pairs)} of {n} pairs found in {tries} draws"
            )
    return pairs


@dataclass(frozen=True)
class ConnectivityReport:
    correct: float
    no_connections: float
    too_short: float
    too_long: float
    pair_count: int
    mapping_failures: int = 0
    excluded: int = 0

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "correct": self.correct,
            "no_connections": self.no_connections,
            "too_short": self.too_short,
            "too_long": self.too_long,
            "pair_count": self.pair_count,
            "mapping_failures": self.mapping_failures,
            "excluded": self.excluded,
        }


CORRECT, NO_CONNECTION, TOO_SHORT, TOO_LONG = "correct", "no_connection", "too_short", "too_long"


def classify(w_pred, w_truth, ratio_low=0.9, ratio_high=1.1):
    if not math.isfinite(w_pred):
        return NO_CONNECTION
    if w_pred < ratio_low * w_truth:
        return TOO_SHORT
    if w_pred > ratio_high * w_truth:
        return TOO_LONG
    return CORRECT


def map_nodes(source, target, node_ids, tolerance):
    """Nearest ``target`` node for each ``source`` node id (``None`` if none
    within ``tolerance``). Ties go to the lower target id."""
    t_ids, t_xy = target.node_positions()
    out = {}
    if not len(t_ids):
        return {n: None for n in node_ids}
    order = np.lexsort((t_ids,))
    t_ids, t_xy = t_ids[order], t_xy[order]
    tree = cKDTree(t_xy)
    for n in node_ids:
        node = source.node(n)
        hits = tree.query_ball_point([node.x, node.y], r=tolerance)
        if not hits:
            out[n] = None
            continue
        d = np.hypot(*(t_xy[hits] - [node.x, node.y]).T)
        best = min(zip(d.tolist(), hits))[1]
        out[n] = int(t_ids[best])
    return out


def connectivity_metrics(predicted, truth, pairs, ratio_low=0.9, ratio_high=1.1,
                         map_tolerance=30.0):
    """Compare shortest-path weights of ``pairs`` (truth node ids) in both graphs.

    Pair endpoints are mapped onto ``predicted`` by nearest node within
    ``map_tolerance``; an unmapped endpoint counts as no connection.
    Pairs without a path in ``truth`` are excluded from the percentages.
    """
    if not (0 < ratio_low <= 1 <= ratio_high):
        raise ValueError("need 0 < ratio_low <= 1 <= ratio_high")
    endpoints = sorted({n for p in pairs for n in p})
    for n in endpoints:
        if not truth.has_node(n):
            raise UnknownNode(n)
    mapping = map_nodes(truth, predicted, endpoints, map_tolerance)
    truth_adj, pred_adj = truth.adjacency(), predicted.adjacency()
    _check_weights(truth_adj)
    _check_weights(pred_adj)
    truth_cache, pred_cache = {}, {}

    counts = {CORRECT: 0, NO_CONNECTION: 0, TOO_SHORT: 0, TOO_LONG: 0}
    failures = excluded = 0
    for src, dst in pairs:
        if src not in truth_cache:
            truth_cache[src] = distances_from(truth_adj, src)
        w_t = truth_cache[src].get(dst, math.inf)
        if not math.isfinite(w_t):
            excluded += 1
            continue
        ps, pd = mapping[src], mapping[dst]
        if ps is None or pd is None:
            failures += 1
            counts[NO_CONNECTION] += 1
            continue
        if ps not in pred_cache:
            pred_cache[ps] = distances_from(pred_adj, ps)
        w_p = pred_cache[ps].get(pd, math.inf)
        counts[classify(w_p, w_t, ratio_low, ratio_high)] += 1

    total = sum(counts.values())

    def pct(k):
        return 100.0 * counts[k] / total if total else 0.0

    return ConnectivityReport(
        correct=pct(CORRECT),
        no_connections=pct(NO_CONNECTION),
        too_short=pct(TOO_SHORT),
        too_long=pct(TOO_LONG),
        pair_count=total,
        mapping_failures=failures,
        excluded=excluded,
    )
