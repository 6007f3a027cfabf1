"""Acceptance criteria. Each test prints one PASS/FAIL line with its measurements."""

import math
import time

import numpy as np
import pytest

from roaddiff.compare import MatchMetrics, SubSegment, SubSegmentSet, match_segments, segment_metrics
from roaddiff.config import PipelineConfig
from roaddiff.graph import Edge, Node, RoadGraph
from roaddiff.fusion import apply_damage_costs, assign_damage, routing_view
from roaddiff.pipeline import OUTPUT_NAMES, process, run_pipeline
from roaddiff.raster import BinaryMask, diff_masks, overlap_score, rasterize_graph, register, translate
from roaddiff.routing import connectivity_metrics, distances_from, sample_pairs, shortest_path
from roaddiff.scene import generate_scene, grid_graph, scene_geo
from roaddiff.skeleton import component_count, has_2x2_block, skeletonize

from conftest import make_graph
from test_pipeline_cli import write_scene

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(name, ok, detail, elapsed, limit):
        within = elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\n[{status}] {name}: {detail} ({elapsed:.2f}s / limit {limit:g}s)")
        assert ok, detail
        assert within, f"runtime {elapsed:.2f}s exceeds {limit}s"
    return _report


def test_metric_formula_replay(report):
    t0 = time.perf_counter()
    m = MatchMetrics(tp=6453, fp=395, fn=43)
    p, r, f = m.precision, m.recall, m.f_score
    ok = abs(p - 0.94) <= 0.005 and abs(r - 0.99) <= 0.005 and abs(f - 0.96) <= 0.01
    report("metric-formula replay", ok, f"p={p:.4f} r={r:.4f} F={f:.4f}",
           time.perf_counter() - t0, 1)


def test_diff_truth_table(report):
    rng = np.random.default_rng(2024)
    table = np.array([[False, False], [True, False]])  # rows: pre, cols: post
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        pre = rng.random((256, 256)) < rng.uniform(0.05, 0.95)
        post = rng.random((256, 256)) < rng.uniform(0.05, 0.95)
        got = diff_masks(BinaryMask(pre), BinaryMask(post)).bits
        oracle = table[pre.astype(np.intp), post.astype(np.intp)]
        mismatches += int(np.count_nonzero(got != oracle))
    report("diff truth table", mismatches == 0, f"{mismatches} mismatching pixels over 100 pairs",
           time.perf_counter() - t0, 5)


def _brute_pairs(a, b, half):
    """Dense O(n*m) evaluation of the matching predicate followed by greedy one-to-one."""
    if not len(a.segments) or not len(b.segments):
        return []
    A1 = np.array([s.v1 for s in a.segments])
    A2 = np.array([s.v2 for s in a.segments])
    B1 = np.array([s.v1 for s in b.segments])
    B2 = np.array([s.v2 for s in b.segments])

    def d(P, Q):
        return np.hypot(P[:, None, 0] - Q[None, :, 0], P[:, None, 1] - Q[None, :, 1])

    d11, d22, d12, d21 = d(A1, B1), d(A2, B2), d(A1, B2), d(A2, B1)
    fwd_max, rev_max = np.maximum(d11, d22), np.maximum(d12, d21)
    fwd_sum, rev_sum = d11 + d22, d12 + d21
    use_fwd = (fwd_max < rev_max) | ((fwd_max == rev_max) & (fwd_sum <= rev_sum))
    best_max = np.where(use_fwd, fwd_max, rev_max)
    best_sum = np.where(use_fwd, fwd_sum, rev_sum)
    ii, jj = np.nonzero(best_max < half)
    a_ids = [a.segments[i].id for i in ii]
    b_ids = [b.segments[j].id for j in jj]
    cands = sorted(zip(best_sum[ii, jj].tolist(), a_ids, b_ids))
    ua, ub, out = set(), set(), []
    for _, i, j in cands:
        if i not in ua and j not in ub:
            ua.add(i)
            ub.add(j)
            out.append((i, j))
    return sorted(out)


def _random_scene_segments(rng, n, l):
    extent = math.sqrt(n) * l * 1.5
    segs = []
    for i in range(n):
        p = rng.uniform(0, extent, 2)
        ang = rng.uniform(0, 2 * math.pi)
        q = p + rng.uniform(0.1 * l, l) * np.array([math.cos(ang), math.sin(ang)])
        segs.append(SubSegment(i, tuple(p.tolist()), tuple(q.tolist()), i, 0))
    a = SubSegmentSet(tuple(segs), l)
    keep = rng.random(n) < 0.7
    near = [SubSegment(k, tuple((np.add(s.v1, rng.normal(0, l / 6, 2))).tolist()),
                       tuple((np.add(s.v2, rng.normal(0, l / 6, 2))).tolist()), k, 0)
            for k, s in enumerate(segs) if keep[k]]
    extra = _random_scene_segments_raw(rng, n - len(near), l, extent, start=n)
    return a, SubSegmentSet(tuple(near) + tuple(extra), l)


def _random_scene_segments_raw(rng, n, l, extent, start):
    out = []
    for i in range(n):
        p = rng.uniform(0, extent, 2)
        q = p + rng.normal(0, l / 2, 2)
        out.append(SubSegment(start + i, tuple(p.tolist()), tuple(q.tolist()), start + i, 0))
    return out


def test_matching_oracle_equivalence(report):
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    differing = 0
    sizes = []
    for _ in range(50):
        n = int(rng.integers(10, 501))
        l = float(rng.choice([10.0, 20.0, 30.0]))
        a, b = _random_scene_segments(rng, n, l)
        sizes.append(n)
        if match_segments(a, b) != _brute_pairs(a, b, l / 2):
            differing += 1
    report("matching oracle equivalence", differing == 0,
           f"{differing}/50 scenes differ (sizes {min(sizes)}..{max(sizes)})",
           time.perf_counter() - t0, 30)


def _registration_mask(rng, k):
    if k % 2 == 0:
        return rng.random((96, 96)) < rng.uniform(0.02, 0.3)
    g = grid_graph(3, 3, spacing=30, margin=15, jitter=8, rng=rng)
    g = g.with_edges([e for e in g.edges if rng.random() > 0.3] or g.edges[:1])
    geo, w, h = scene_geo(g, 0.5, 15.0)
    return rasterize_graph(g, geo, w, h, 2.0).bits


def test_registration_recovery(report):
    rng = np.random.default_rng(99)
    t0 = time.perf_counter()
    exact = ties = other = 0
    for k in range(100):
        bits = _registration_mask(rng, k)
        dx, dy = (int(v) for v in rng.integers(-10, 11, 2))
        pre = BinaryMask(bits)
        post = translate(pre, dx, dy)
        if not post.bits.any():
            post = translate(pre, 0, 0)
            dx = dy = 0
        off = register(pre, post, 10)
        if (off.dx, off.dy) == (dx, dy):
            exact += 1
        elif off.score == overlap_score(pre, post, dx, dy):
            ties += 1
        else:
            other += 1
    ok = exact >= 99 and other == 0
    report("registration recovery", ok,
           f"{exact}/100 exact, {ties} genuine ties, {other} non-tie failures",
           time.perf_counter() - t0, 60)


def test_skeleton_invariants(report):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    blocks = comp_errors = 0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        g = grid_graph(n, n, spacing=float(rng.uniform(20, 40)), margin=12, jitter=5, rng=rng)
        g = g.with_edges([e for e in g.edges if rng.random() > 0.25] or g.edges[:1])
        geo, w, h = scene_geo(g, 0.5, 12.0)
        m = rasterize_graph(g, geo, w, h, float(rng.uniform(1.0, 3.0)))
        s = skeletonize(m).bits
        blocks += has_2x2_block(s)
        comp_errors += component_count(s) != component_count(m.bits)
    ok = blocks == 0 and comp_errors == 0
    report("skeleton invariants", ok,
           f"{blocks} outputs with 2x2 blocks, {comp_errors} component-count changes over 100",
           time.perf_counter() - t0, 60)


def _bellman_ford_all(n, us, vs, ws):
    """All-sources Bellman-Ford on an undirected edge list (vectorized over sources)."""
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    su = np.concatenate([us, vs])
    sv = np.concatenate([vs, us])
    sw = np.concatenate([ws, ws])
    for _ in range(n - 1):
        cand = D[:, su] + sw
        new = D.copy()
        for k in range(len(sv)):
            np.minimum(new[:, sv[k]], cand[:, k], out=new[:, sv[k]])
        if np.array_equal(new, D):
            break
        D = new
    return D


def test_routing_oracle(report):
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    bad = checked = 0
    for _ in range(200):
        n = int(rng.integers(2, 101))
        m = int(rng.integers(n, 3 * n + 1))
        us = rng.integers(0, n, m)
        vs = rng.integers(0, n, m)
        ws = rng.integers(0, 20, m).astype(float) if rng.random() < 0.5 else rng.uniform(0, 50, m)
        xy = rng.uniform(0, 1000, (n, 2))
        nodes = tuple(Node(i, *xy[i]) for i in range(n))
        edges = tuple(
            Edge(k, int(u), int(v),
                 [tuple(xy[u]), tuple(xy[v])] if u != v else [tuple(xy[u]), tuple(xy[u] + 1), tuple(xy[u])],
                 weight=float(w))
            for k, (u, v, w) in enumerate(zip(us, vs, ws)))
        g = RoadGraph(nodes, edges)
        oracle = _bellman_ford_all(n, us, vs, ws)
        adj = g.adjacency()
        for src in range(n):  # every ordered pair via the single-source search
            dist = distances_from(adj, src)
            got = np.array([dist.get(t, np.inf) for t in range(n)])
            checked += n
            bad += int(np.count_nonzero(~np.isclose(got, oracle[src], rtol=0, atol=1e-9)
                                        & ~(np.isinf(got) & np.isinf(oracle[src]))))
        for _ in range(20):  # point-to-point queries on sampled pairs
            s, t = (int(v) for v in rng.integers(0, n, 2))
            r = shortest_path(g, s, t)
            checked += 1
            w = r.total_weight
            if not (w == oracle[s, t] or abs(w - oracle[s, t]) <= 1e-9):
                bad += 1
    report("routing oracle", bad == 0, f"{bad} mismatches over {checked} pair checks on 200 graphs",
           time.perf_counter() - t0, 60)


def _mild_scene(seed):
    rng = np.random.default_rng(10_000 + seed)
    shift = tuple(int(v) for v in rng.integers(-2, 3, 2))
    return generate_scene(8, 8, damage_fraction=0.1, noise=0.001, blur=1.0, seed=seed, shift=shift)


def test_end_to_end_damage_recovery(report):
    t0 = time.perf_counter()
    hits = damaged = false_flags = undamaged = 0
    worst_recall, worst_fp, max_nc = 1.0, 0.0, 0.0
    inf_cfg, weighted_cfg = PipelineConfig(), PipelineConfig(alpha=5)
    for seed in range(20):
        scene = _mild_scene(seed)
        res = process(inf_cfg, scene.pre_mask, scene.post_mask, scene.truth_pre)
        flagged = set(res.costed.damaged_edges())
        truth = set(scene.damaged_edges)
        clean = {e.id for e in scene.truth_pre.edges} - truth
        hits += len(flagged & truth)
        damaged += len(truth)
        false_flags += len(flagged & clean)
        undamaged += len(clean)
        worst_recall = min(worst_recall, len(flagged & truth) / len(truth))
        worst_fp = max(worst_fp, len(flagged & clean) / len(clean))

        # finite alpha reuses the same damage assignments
        costed = apply_damage_costs(scene.truth_pre, res.assignments, weighted_cfg.alpha)
        pairs = sample_pairs(scene.truth_post, weighted_cfg.pair_count, seed=seed)
        conn = connectivity_metrics(routing_view(costed), scene.truth_post, pairs,
                                    weighted_cfg.ratio_low, weighted_cfg.ratio_high,
                                    weighted_cfg.map_tolerance)
        max_nc = max(max_nc, conn.no_connections)
    recall = hits / damaged
    fp_rate = false_flags / undamaged
    ok = recall >= 0.8 and fp_rate <= 0.2 and max_nc == 0
    report("end-to-end damage recovery", ok,
           f"alpha=inf recall {recall:.3f} (worst scene {worst_recall:.3f}), "
           f"FP rate {fp_rate:.3f} (worst scene {worst_fp:.3f}); "
           f"alpha=5 max no_connections {max_nc:.2f}%",
           time.perf_counter() - t0, 300)


def _bridge():
    nodes = {0: (0, 0), 1: (30, 20), 2: (30, -20), 3: (100, 0), 4: (130, 20), 5: (130, -20)}
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (1, 4)]
    return make_graph(nodes, edges)


def test_alpha_semantics(report):
    t0 = time.perf_counter()
    g = _bridge()
    segs = SubSegmentSet((
        SubSegment(0, (70.0, 20.0), (85.0, 20.0), 0, 0),   # on the bridge
        SubSegment(1, (132.0, 5.0), (132.0, -5.0), 0, 1),  # near edge 4-5, d = 2
    ), 20.0)
    assigns = assign_damage(segs, g)
    assigned = {a.osm_edge for a in assigns if a.assigned}
    costed = apply_damage_costs(g, assigns, math.inf)
    view = routing_view(costed)
    removed_exact = set(costed.removed) == assigned == {6, 4}
    split = view.component_count() == g.component_count() + 1

    # alpha = 1 with s/d^2 <= 1: floor keeps every weight at its length
    small = SubSegmentSet((SubSegment(0, (70.0, 23.0), (73.0, 23.0), 0, 0),), 20.0)
    a1 = assign_damage(small, g)
    ratio_ok = all(a.s_e_diff / a.d ** 2 <= 1 for a in a1)
    unchanged = routing_view(apply_damage_costs(g, a1, 1.0))
    same = all(e.weight == e.length for e in unchanged.edges) and len(unchanged.edges) == len(g.edges)
    ok = removed_exact and split and ratio_ok and same
    report("alpha semantics", ok,
           f"removed {sorted(costed.removed)} (assigned {sorted(assigned)}), components "
           f"{g.component_count()}->{view.component_count()}; alpha=1 weights unchanged: {same}",
           time.perf_counter() - t0, 1)


def test_determinism(report, tmp_path):
    t0 = time.perf_counter()
    scene = _mild_scene(3)
    pre, post, osm = write_scene(scene, tmp_path / "in")
    config = PipelineConfig(alpha=5, seed=3)
    codes = [run_pipeline(config, pre, post, osm, tmp_path / f"run{k}") for k in (1, 2)]
    names = OUTPUT_NAMES + ("manifest.json",)
    differing = [n for n in names
                 if (tmp_path / "run1" / n).read_bytes() != (tmp_path / "run2" / n).read_bytes()]
    ok = codes == [0, 0] and not differing
    report("determinism", ok, f"exit codes {codes}, {len(names)} artifacts, differing: {differing}",
           time.perf_counter() - t0, 60)


def test_table_one_via_segment_metrics(report):
    """The same replay routed through segment_metrics on constructed segment sets."""
    t0 = time.perf_counter()
    tp, fp, fn = 6453, 395, 43
    l = 20.0
    pred, truth = [], []
    for k in range(tp):
        y = 40.0 * k
        pred.append(SubSegment(k, (0.0, y), (15.0, y), 0, k))
        truth.append(SubSegment(k, (1.0, y), (16.0, y), 0, k))
    for k in range(fp):
        y = 40.0 * k
        pred.append(SubSegment(tp + k, (1000.0, y), (1015.0, y), 1, k))
    for k in range(fn):
        y = 40.0 * k
        truth.append(SubSegment(tp + k, (2000.0, y), (2015.0, y), 2, k))
    m = segment_metrics(SubSegmentSet(tuple(pred), l), SubSegmentSet(tuple(truth), l))
    ok = ((m.tp, m.fp, m.fn) == (tp, fp, fn) and abs(m.precision - 0.94) <= 0.005
          and abs(m.recall - 0.99) <= 0.005 and abs(m.f_score - 0.96) <= 0.01)
    report("metric replay through matching", ok,
           f"tp={m.tp} fp={m.fp} fn={m.fn} p={m.precision:.4f} r={m.recall:.4f} F={m.f_score:.4f}",
           time.perf_counter() - t0, 1)
