"""Post-disaster road change detection against a prior road network."""

from .compare import (
    MatchMetrics,
    SubSegment,
    SubSegmentSet,
    graph_difference,
    graph_intersection,
    match_segments,
    rdp_simplify,
    segment_metrics,
    slice_segments,
)
from .config import PipelineConfig
from .estimators import ChangeDetector, DamageCostModel, RoadGraphExtractor, SegmentMatcher
from .fusion import (
    CostedGraph,
    DamageAssignment,
    apply_damage_costs,
    assign_damage,
    load_osm_roads,
    routing_view,
)
from .graph import Edge, Node, RoadGraph
from .raster import (
    BinaryMask,
    GeoTransform,
    HeatmapGrid,
    PixelOffset,
    ProbabilityMask,
    clean_diff,
    diff_masks,
    dilate,
    erode,
    heatmap,
    open_mask,
    rasterize_graph,
    register,
    threshold,
)
from .routing import ConnectivityReport, PathResult, connectivity_metrics, sample_pairs, shortest_path
from .skeleton import extract_graph, skeletonize

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "ChangeDetector",
    "ConnectivityReport",
    "CostedGraph",
    "DamageAssignment",
    "DamageCostModel",
    "Edge",
    "GeoTransform",
    "HeatmapGrid",
    "MatchMetrics",
    "Node",
    "PathResult",
    "PipelineConfig",
    "PixelOffset",
    "ProbabilityMask",
    "RoadGraph",
    "RoadGraphExtractor",
    "SegmentMatcher",
    "SubSegment",
    "SubSegmentSet",
    "apply_damage_costs",
    "assign_damage",
    "clean_diff",
    "connectivity_metrics",
    "diff_masks",
    "dilate",
    "erode",
    "extract_graph",
    "graph_difference",
    "graph_intersection",
    "heatmap",
    "load_osm_roads",
    "match_segments",
    "open_mask",
    "rasterize_graph",
    "rdp_simplify",
    "register",
    "routing_view",
    "sample_pairs",
    "segment_metrics",
    "shortest_path",
    "skeletonize",
    "slice_segments",
    "threshold",
]

