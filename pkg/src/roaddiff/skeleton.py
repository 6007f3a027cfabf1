"""Thinning of binary road masks and tracing of the skeleton into a RoadGraph."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .graph import Edge, Node, RoadGraph
from .raster import BinaryMask

# Neighbor offsets in Zhang-Suen order P2..P9: N, NE, E, SE, S, SW, W, NW.
OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_EIGHT = np.ones((3, 3), dtype=bool)


def _build_simple_lut():
    """For each 8-neighborhood code, is the center an 8-simple point?

    A pixel is simple when its foreground neighbors form exactly one
    8-connected component and the background neighbors that touch it
    4-adjacently form exactly one 4-connected component.
    """
    lut = np.zeros(256, dtype=bool)
    pos = OFFSETS
    for code in range(256):
        on = [(code >> k) & 1 for k in range(8)]
        fg = [k for k in range(8) if on[k]]
        bg = [k for k in range(8) if not on[k]]

        def components(members, adjacent):
            seen, count = set(), 0
            for start in members:
                if start in seen:
                    continue
                count += 1
                stack = [start]
                seen.add(start)
                while stack:
                    a = stack.pop()
                    for b in members:
                        if b not in seen and adjacent(pos[a], pos[b]):
                            seen.add(b)
                            stack.append(b)
            return seen, count

        def adj8(p, q):
            return max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1

        def adj4(p, q):
            return abs(p[0] - q[0]) + abs(p[1] - q[1]) == 1

        _, n_fg = components(fg, adj8)
        # Count only background components containing a 4-neighbor of the center.
        n_bg = 0
        seen = set()
        for k in (0, 2, 4, 6):
            if on[k] or k in seen:
                continue
            n_bg += 1
            stack = [k]
            seen.add(k)
            while stack:
                a = stack.pop()
                for b in bg:
                    if b not in seen and adj4(pos[a], pos[b]):
                        seen.add(b)
                        stack.append(b)
        lut[code] = n_fg == 1 and n_bg == 1
    return lut


SIMPLE = _build_simple_lut()


def _neighbor_stack(img):
    """Array of shape (8, H, W) holding P2..P9 for every pixel (zero padded)."""
    p = np.pad(img, 1)
    h, w = img.shape
    return np.stack([p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w] for dr, dc in OFFSETS])


def neighbor_count(bits):
    """8-neighbor count of every set pixel (0 for unset pixels)."""
    b = np.asarray(bits, dtype=np.uint8)
    counts = ndimage.convolve(b, np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], np.uint8),
                              mode="constant", cval=0)
    return np.where(b > 0, counts, 0)


def _code_at(img, r, c):
    h, w = img.shape
    code = 0
    for k, (dr, dc) in enumerate(OFFSETS):
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and img[rr, cc]:
            code |= 1 << k
    return code


def _delete_if_simple(img, candidates):
    """Delete candidates one at a time, re-checking simplicity and non-endpointness."""
    changed = False
    for r, c in candidates:
        code = _code_at(img, r, c)
        if SIMPLE[code] and bin(code).count("1") >= 2:
            img[r, c] = False
            changed = True
    return changed


def zhang_suen(bits):
    """Two-subiteration Zhang-Suen thinning with topology-safe deletion."""
    img = np.array(bits, dtype=bool)
    while True:
        changed = False
        for step in (0, 1):
            n = _neighbor_stack(img).astype(np.uint8)
            p2, p3, p4, p5, p6, p7, p8, p9 = n
            b = n.sum(axis=0)
            seq = np.concatenate([n, n[:1]])
            a = ((seq[:-1] == 0) & (seq[1:] == 1)).sum(axis=0)
            cond = img & (b >= 2) & (b <= 6) & (a == 1)
            if step == 0:
                cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            cand = np.argwhere(cond)
            if len(cand):
                changed |= _delete_if_simple(img, map(tuple, cand))
        if not changed:
            return img


def _remove_staircases(img):
    """Delete simple corner pixels left by thinning, so no 2x2 block survives."""
    while True:
        n = _neighbor_stack(img)
        north, east, south, west = n[0], n[2], n[4], n[6]
        corner = img & ((north & east) | (east & south) | (south & west) | (west & north))
        cand = np.argwhere(corner)
        if not len(cand) or not _delete_if_simple(img, map(tuple, cand)):
            return img


def skeletonize(mask):
    """Reduce a binary mask to a one-pixel-wide skeleton with the same 8-connected
    components."""
    img = zhang_suen(mask.bits)
    img = _remove_staircases(img)
    return BinaryMask(img, mask.geo)


def has_2x2_block(bits):
    b = np.asarray(bits, dtype=bool)
    return bool((b[:-1, :-1] & b[1:, :-1] & b[:-1, 1:] & b[1:, 1:]).any())


def component_count(bits):
    return int(ndimage.label(np.asarray(bits, dtype=bool), structure=_EIGHT)[1])


def _neighbors(skel, r, c):
    h, w = skel.shape
    out = []
    for dr, dc in OFFSETS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and skel[rr, cc]:
            out.append((rr, cc))
    return out


def extract_graph(skel, geo=None, min_spur=5):
    """Trace a one-pixel skeleton into a RoadGraph.

    Pixels with an 8-neighbor count other than 2 are nodes; 8-adjacent
    junction pixels (count >= 3) merge into a single node at their centroid.
    Every maximal chain of count-2 pixels between nodes becomes one edge.
    A closed ring with no node gets an anchor node at its smallest
    ``(row, col)`` pixel and a self-loop edge.

    Edges shorter than ``min_spur`` pixels that end in a degree-1 node are
    dropped afterwards (``min_spur=0`` disables pruning).
    """
    geo = geo if geo is not None else skel.geo
    img = np.asarray(skel.bits, dtype=bool)
    counts = neighbor_count(img)

    # Cluster id per node pixel; -1 for chain pixels.
    cluster = np.full(img.shape, -1, dtype=np.int64)
    junction = img & (counts >= 3)
    labels, n_junction = ndimage.label(junction, structure=_EIGHT)
    cluster[junction] = labels[junction] - 1
    next_id = n_junction
    for r, c in np.argwhere(img & (counts <= 1)):
        cluster[r, c] = next_id
        next_id += 1

    # A count-2 pixel whose two neighbors sit in the same cluster is a notch in
    # that cluster, not an edge.
    changed = True
    while changed:
        changed = False
        for r, c in np.argwhere(img & (cluster < 0)):
            nb = _neighbors(img, r, c)
            ids = {cluster[p] for p in nb}
            if len(ids) == 1 and -1 not in ids:
                cluster[r, c] = ids.pop()
                changed = True

    members = {}
    for r, c in np.argwhere(cluster >= 0):
        members.setdefault(int(cluster[r, c]), []).append((int(r), int(c)))

    visited = np.zeros(img.shape, dtype=bool)
    nodes = []
    edges = []
    pix_edges = []  # (u, v, chain pixels) before pruning
    node_of_cluster = {}

    def add_node(pixels):
        rows = np.array([p[0] for p in pixels], dtype=float)
        cols = np.array([p[1] for p in pixels], dtype=float)
        x, y = geo.pixel_to_world(rows.mean(), cols.mean())
        nid = len(nodes)
        nodes.append(Node(nid, x, y))
        return nid

    # Deterministic node order: by the smallest pixel of each cluster.
    for cid in sorted(members, key=lambda k: min(members[k])):
        node_of_cluster[cid] = add_node(members[cid])

    def walk(start_cluster, first):
        chain = [first]
        visited[first] = True
        prev = None
        cur = first
        while True:
            nb = _neighbors(img, *cur)
            if prev is None:
                nxt = [p for p in nb if cluster[p] != start_cluster]
            else:
                nxt = [p for p in nb if p != prev]
            # Prefer an unvisited chain pixel; otherwise the first node pixel.
            step = None
            for p in nxt:
                if cluster[p] >= 0:
                    return chain, int(cluster[p])
                if not visited[p]:
                    step = p
                    break
            if step is None:
                # Ring closed back onto our own chain (only for anchored rings).
                return chain, start_cluster
            visited[step] = True
            chain.append(step)
            prev, cur = cur, step

    direct_seen = set()

    def trace_from(cid):
        for pix in sorted(members[cid]):
            for nb in _neighbors(img, *pix):
                k = int(cluster[nb])
                if k >= 0:
                    if k != cid:
                        key = (min(cid, k), max(cid, k))
                        if key not in direct_seen:
                            direct_seen.add(key)
                            pix_edges.append((cid, k, []))
                    continue
                if visited[nb]:
                    continue
                chain, end = walk(cid, nb)
                pix_edges.append((cid, end, chain))

    for cid in sorted(members, key=lambda k: min(members[k])):
        trace_from(cid)

    # Rings without any node pixel.
    while True:
        rest = np.argwhere(img & ~visited & (cluster < 0))
        if not len(rest):
            break
        anchor = (int(rest[0][0]), int(rest[0][1]))
        cid = next_id
        next_id += 1
        cluster[anchor] = cid
        members[cid] = [anchor]
        node_of_cluster[cid] = add_node([anchor])
        trace_from(cid)

    for u_c, v_c, chain in pix_edges:
        u, v = node_of_cluster[u_c], node_of_cluster[v_c]
        pts = [nodes[u].position]
        if chain:
            rows = np.array([p[0] for p in chain], dtype=float)
            cols = np.array([p[1] for p in chain], dtype=float)
            xs, ys = geo.pixel_to_world(rows, cols)
            pts.extend(zip(xs.tolist(), ys.tolist()))
        pts.append(nodes[v].position)
        edges.append(Edge(len(edges), u, v, pts))

    graph = RoadGraph(tuple(nodes), tuple(edges))
    if min_spur > 0:
        graph = prune_spurs(graph, min_spur * min(geo.pixel_size_x, geo.pixel_size_y))
    return graph


def prune_spurs(graph, min_length):
    """Drop edges shorter than ``min_length`` that end in a degree-1 node.

    Nodes left without edges by the pruning are removed; nodes that had no
    edges to begin with are kept.
    """
    deg = graph.degree()
    drop = {
        e.id for e in graph.edges
        if e.length < min_length and e.u != e.v and (deg[e.u] == 1 or deg[e.v] == 1)
    }
    if not drop:
        return graph
    kept = [e for e in graph.edges if e.id not in drop]
    used = {e.u for e in kept} | {e.v for e in kept}
    nodes = [n for n in graph.nodes if n.id in used or deg[n.id] == 0]
    return renumber(RoadGraph(tuple(nodes), tuple(kept)))


def renumber(graph):
    """Relabel nodes and edges with consecutive ids, preserving order."""
    nmap = {n.id: i for i, n in enumerate(graph.nodes)}
    nodes = tuple(Node(nmap[n.id], n.x, n.y) for n in graph.nodes)
    edges = tuple(
        Edge(i, nmap[e.u], nmap[e.v], e.coords, e.length, e.weight)
        for i, e in enumerate(graph.edges)
    )
    return RoadGraph(nodes, edges)
