"""End-to-end change-detection run: masks + prior network -> costed graph."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from PIL import UnidentifiedImageError

from . import io as rio
from . import raster, skeleton
from .config import PipelineConfig
from .estimators import ChangeDetector, DamageCostModel
from .exceptions import (
    DimensionMismatch,
    EmptyNetwork,
    MalformedDocument,
    NoSignal,
)
from .fusion import load_osm_roads
from .graph import SCHEMA_VERSION, dumps, graph_to_geojson

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARSE = 3
EXIT_NO_SIGNAL = 4
EXIT_EMPTY_NETWORK = 5

STAGES = (
    "threshold", "register", "dilate", "diff", "clean", "skeletonize",
    "extract", "simplify_slice", "assign", "cost", "emit",
)

OUTPUT_NAMES = (
    "diff_mask.pgm",
    "diff_mask.geo.json",
    "g_diff.geojson",
    "diff_segments.geojson",
    "costed_graph.geojson",
    "assignments.json",
    "heatmap.csv",
    "heatmap.pgm",
)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    offset: raster.PixelOffset
    diff_mask: raster.BinaryMask
    diff_graph: object
    diff_segments: object
    assignments: list
    costed: object
    heatmap: raster.HeatmapGrid


def process(config, pre_mask, post_mask, osm_graph):
    """Run every stage in memory."""
    detector = ChangeDetector(
        threshold=config.threshold,
        dilation_radius=config.dilation_radius,
        min_width=config.min_width,
        search_radius=config.search_radius,
    ).fit(pre_mask)
    diff = detector.transform(post_mask)
    diff_graph = skeleton.extract_graph(skeleton.skeletonize(diff), min_spur=config.min_spur)
    model = DamageCostModel(
        alpha=config.alpha,
        slice_length=config.slice_length,
        rdp_epsilon=config.rdp_epsilon,
        max_assign_dist=config.max_assign_dist,
        d_min=config.d_min,
    ).fit(osm_graph)
    costed = model.transform(diff_graph)
    return PipelineResult(
        offset=detector.offset_,
        diff_mask=diff,
        diff_graph=diff_graph,
        diff_segments=model.diff_segments_,
        assignments=model.assignments_,
        costed=costed,
        heatmap=raster.heatmap(diff, config.heatmap_cell),
    )


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


def render_outputs(result):
    """Artifact name -> bytes."""
    diff_bits = result.diff_mask.bits.astype("uint8") * 255
    assignments = [
        {
            "diff_segment": a.diff_segment,
            "osm_edge": a.osm_edge,
            "s_e_diff": round(a.s_e_diff, 9),
            "d": round(a.d, 9) if a.assigned else None,
            "distance": round(a.distance, 9) if a.distance != float("inf") else None,
        }
        for a in result.assignments
    ]
    return {
        "diff_mask.pgm": rio.encode_gray(diff_bits, "PPM"),
        "diff_mask.geo.json": dumps(result.diff_mask.geo.to_dict()).encode(),
        "g_diff.geojson": dumps(graph_to_geojson(result.diff_graph)).encode(),
        "diff_segments.geojson": dumps(result.diff_segments.to_geojson()).encode(),
        "costed_graph.geojson": dumps(result.costed.to_geojson()).encode(),
        "assignments.json": dumps({"schema_version": SCHEMA_VERSION,
                                   "assignments": assignments}).encode(),
        "heatmap.csv": rio.heatmap_csv(result.heatmap).encode(),
        "heatmap.pgm": rio.encode_gray(rio.heatmap_image(result.heatmap), "PPM"),
    }


def build_manifest(config, inputs, result, outputs):
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "stages": list(STAGES),
        "inputs": inputs,
        "registration": {"dx": result.offset.dx, "dy": result.offset.dy,
                         "score": result.offset.score},
        "summary": {
            "diff_pixels": result.diff_mask.count(),
            "diff_edges": len(result.diff_graph.edges),
            "diff_segments": len(result.diff_segments),
            "assigned_segments": sum(a.assigned for a in result.assignments),
            "damaged_edges": result.costed.damaged_edges(),
            "removed_edges": sorted(result.costed.removed),
        },
        "outputs": {name: _sha256(data) for name, data in sorted(outputs.items())},
    }


def _load_inputs(pre_path, post_path, osm_path, config):
    blobs = {}
    for role, path in (("pre", pre_path), ("post", post_path), ("osm", osm_path)):
        blobs[role] = Path(path).read_bytes()
    pre = rio.read_probability_mask(pre_path)
    post = rio.read_probability_mask(post_path)
    try:
        osm_doc = json.loads(blobs["osm"])
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"{osm_path}: {exc}") from exc
    osm = load_osm_roads(osm_doc, snap_tolerance=config.snap_tolerance)
    inputs = {
        role: {"name": Path(path).name, "sha256": _sha256(blobs[role])}
        for role, path in (("pre", pre_path), ("post", post_path), ("osm", osm_path))
    }
    return pre, post, osm, inputs


def execute(config, pre_path, post_path, osm_path, out_dir):
    """Run the full chain and write artifacts; raises on failure.

    Nothing is written unless every stage succeeded.
    """
    pre, post, osm, inputs = _load_inputs(pre_path, post_path, osm_path, config)
    result = process(config, pre, post, osm)
    outputs = render_outputs(result)
    manifest = build_manifest(config, inputs, result, outputs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in outputs.items():
        (out / name).write_bytes(data)
    (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return manifest


def exit_code_for(exc):
    if isinstance(exc, NoSignal):
        return EXIT_NO_SIGNAL
    if isinstance(exc, EmptyNetwork):
        return EXIT_EMPTY_NETWORK
    if isinstance(exc, (MalformedDocument, DimensionMismatch, UnidentifiedImageError,
                        json.JSONDecodeError, KeyError, ValueError, TypeError)):
        return EXIT_PARSE
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def run_pipeline(config, pre_path, post_path, osm_path, out_dir):
    """CLI-facing wrapper around :func:`execute` returning an exit status."""
    if not isinstance(config, PipelineConfig):
        config = PipelineConfig.from_dict(dict(config))
    try:
        execute(config, pre_path, post_path, osm_path, out_dir)
    except Exception as exc:  # mapped to documented exit codes
        code = exit_code_for(exc)
        logger.error("pipeline failed (exit %d): %s", code, exc)
        return code
    return EXIT_OK
