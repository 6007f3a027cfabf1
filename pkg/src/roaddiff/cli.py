"""Command-line interface.

Coordinates in every GeoJSON input are planar meters. Lat/long data must be
projected first; at city scale an equirectangular projection about the
scene center is adequate::

    x = R * radians(lon - lon0) * cos(radians(lat0))
    y = R * radians(lat - lat0)          # R = 6371008.8 m
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

from . import compare, pipeline, raster, routing, skeleton
from . import io as rio
from .config import PipelineConfig, parse_alpha
from .estimators import ChangeDetector, DamageCostModel, RoadGraphExtractor
from .exceptions import RoadDiffError, UnknownNode
from .fusion import load_osm_roads
from .graph import SCHEMA_VERSION, dumps, graph_from_geojson, graph_to_geojson, is_native_geojson
from .scene import generate_scene

logger = logging.getLogger("roaddiff")


def _add_config_flags(p):
    p.add_argument("--config", type=Path, help="JSON config file")
    for f in dataclasses.fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "alpha":
            p.add_argument(flag, type=parse_alpha, default=None, help='number or "inf"')
        elif f.type in ("int", int):
            p.add_argument(flag, type=int, default=None)
        else:
            p.add_argument(flag, type=float, default=None)


def _config_from(args):
    base = PipelineConfig()
    if getattr(args, "config", None):
        base = PipelineConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    overrides = {f.name: getattr(args, f.name, None) for f in dataclasses.fields(PipelineConfig)}
    return base.replace(**overrides)


def read_graph(path, snap_tolerance=1.0):
    """Load our own graph GeoJSON, or any road FeatureCollection."""
    doc = rio.read_json(path)
    if is_native_geojson(doc):
        return graph_from_geojson(doc)
    return load_osm_roads(doc, snap_tolerance=snap_tolerance)


def _emit(obj, out):
    text = dumps(obj)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_run(args):
    config = _config_from(args)
    return pipeline.run_pipeline(config, args.pre, args.post, args.osm, args.out)


def cmd_extract(args):
    config = _config_from(args)
    mask = rio.read_probability_mask(args.mask)
    graph = RoadGraphExtractor(config.threshold, config.dilation_radius,
                               config.min_spur).fit().transform(mask)
    _emit(graph_to_geojson(graph), args.out)
    return 0


def cmd_diff(args):
    config = _config_from(args)
    pre = rio.read_probability_mask(args.pre)
    post = rio.read_probability_mask(args.post)
    det = ChangeDetector(config.threshold, config.dilation_radius, config.min_width,
                         config.search_radius).fit(pre)
    diff = det.transform(post)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rio.write_binary_mask(out / "diff_mask.pgm", diff)
    graph = skeleton.extract_graph(skeleton.skeletonize(diff), min_spur=config.min_spur)
    rio.write_json(out / "g_diff.geojson", graph_to_geojson(graph))
    rio.write_json(out / "registration.json", {
        "schema_version": SCHEMA_VERSION,
        "dx": det.offset_.dx, "dy": det.offset_.dy, "score": det.offset_.score,
    })
    return 0


def cmd_fuse(args):
    config = _config_from(args)
    diff_graph = read_graph(args.diff_graph)
    osm = load_osm_roads(rio.read_json(args.osm), snap_tolerance=config.snap_tolerance)
    model = DamageCostModel(config.alpha, config.slice_length, config.rdp_epsilon,
                            config.max_assign_dist, config.d_min).fit(osm)
    _emit(model.transform(diff_graph).to_geojson(), args.out)
    return 0


def cmd_route(args):
    graph = read_graph(args.graph)
    try:
        res = routing.shortest_path(graph, args.src, args.dst)
    except UnknownNode as exc:
        logger.error("unknown node %s", exc)
        return pipeline.EXIT_PARSE
    _emit({
        "schema_version": SCHEMA_VERSION,
        "status": res.status,
        "total_weight": res.total_weight if math.isfinite(res.total_weight) else None,
        "node_sequence": list(res.node_sequence),
    }, args.out)
    return 0


def _counts_fixture(path):
    d = rio.read_json(path)
    try:
        return compare.MatchMetrics(int(d["tp"]), int(d["fp"]), int(d["fn"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"counts fixture needs integer tp, fp, fn: {exc}") from exc


def cmd_eval_segments(args):
    config = _config_from(args)
    if args.counts:
        metrics = _counts_fixture(args.counts)
    else:
        if not (args.predicted and args.truth):
            raise ValueError("need --predicted and --truth, or --counts")
        pred = compare.segments_of(read_graph(args.predicted), config.slice_length,
                                   config.rdp_epsilon)
        truth = compare.segments_of(read_graph(args.truth), config.slice_length,
                                    config.rdp_epsilon)
        metrics = compare.segment_metrics(pred, truth)
    _emit(metrics.to_dict(), args.out)
    return 0


def cmd_eval_connectivity(args):
    config = _config_from(args)
    pred = read_graph(args.predicted)
    truth = read_graph(args.truth)
    pairs = routing.sample_pairs(truth, config.pair_count, config.seed, args.min_separation)
    report = routing.connectivity_metrics(pred, truth, pairs, config.ratio_low,
                                          config.ratio_high, config.map_tolerance)
    _emit(report.to_dict(), args.out)
    return 0


def cmd_heatmap(args):
    config = _config_from(args)
    mask = rio.read_binary_mask(args.mask)
    grid = raster.heatmap(mask, config.heatmap_cell)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rio.write_heatmap(out / "heatmap.csv", out / "heatmap.pgm", grid)
    return 0


def cmd_gen_scene(args):
    scene = generate_scene(
        args.rows, args.cols, args.damage, args.noise, args.seed,
        spacing=args.spacing, pixel_size=args.pixel_size, blur=args.blur,
        shift=(args.shift_x, args.shift_y),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rio.write_probability_mask(out / "pre.pgm", scene.pre_mask)
    rio.write_probability_mask(out / "post.pgm", scene.post_mask)
    rio.write_json(out / "osm.geojson", graph_to_geojson(scene.truth_pre))
    rio.write_json(out / "truth_post.geojson", graph_to_geojson(scene.truth_post))
    rio.write_json(out / "scene.json", {
        "schema_version": SCHEMA_VERSION,
        "damaged_edges": sorted(scene.damaged_edges),
        "shift": list(scene.shift),
        "params": {k: getattr(args, k) for k in
                   ("rows", "cols", "damage", "noise", "blur", "seed", "spacing", "pixel_size")},
    })
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="roaddiff", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full chain: masks + OSM -> costed graph")
    _add_config_flags(p)
    p.add_argument("--pre", required=True)
    p.add_argument("--post", required=True)
    p.add_argument("--osm", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("extract", help="probability mask -> road graph GeoJSON")
    _add_config_flags(p)
    p.add_argument("--mask", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("diff", help="pre/post masks -> cleaned loss mask and graph")
    _add_config_flags(p)
    p.add_argument("--pre", required=True)
    p.add_argument("--post", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("fuse", help="damage graph + OSM -> costed graph GeoJSON")
    _add_config_flags(p)
    p.add_argument("--diff-graph", required=True)
    p.add_argument("--osm", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("route", help="shortest path between two node ids")
    p.add_argument("--graph", required=True)
    p.add_argument("--src", type=int, required=True)
    p.add_argument("--dst", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("eval-segments", help="sub-segment precision/recall/F")
    _add_config_flags(p)
    p.add_argument("--predicted")
    p.add_argument("--truth")
    p.add_argument("--counts", help="JSON fixture with tp, fp, fn")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_segments)

    p = sub.add_parser("eval-connectivity", help="shortest-path connectivity report")
    _add_config_flags(p)
    p.add_argument("--predicted", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--min-separation", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_connectivity)

    p = sub.add_parser("heatmap", help="grid-summed damage heatmap (CSV + PGM)")
    _add_config_flags(p)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("gen-scene", help="write a seeded synthetic scene")
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--damage", type=float, default=0.1)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--blur", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", type=float, default=40.0)
    p.add_argument("--pixel-size", type=float, default=0.5)
    p.add_argument("--shift-x", type=int, default=0)
    p.add_argument("--shift-y", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_scene)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RoadDiffError, OSError, ValueError, KeyError, TypeError,
            json.JSONDecodeError) as exc:
        code = pipeline.exit_code_for(exc)
        logger.error("%s failed (exit %d): %s", args.command, code, exc)
        return code


if __name__ == "__main__":
    sys.exit(main())
