import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roaddiff import io as rio
from roaddiff.config import PipelineConfig, parse_alpha
from roaddiff.graph import graph_from_geojson, graph_to_geojson
from roaddiff.raster import BinaryMask, GeoTransform, ProbabilityMask, heatmap
from roaddiff.scene import grid_graph


GEO = GeoTransform(500.0, 900.0, 0.5, 0.5)


@pytest.mark.parametrize("ext", [".pgm", ".png"])
def test_probability_mask_round_trip(tmp_path, ext):
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 256, (17, 23)).astype(np.uint8) / 255.0
    p = tmp_path / f"m{ext}"
    rio.write_probability_mask(p, ProbabilityMask(vals, GEO))
    back = rio.read_probability_mask(p)
    assert np.array_equal(back.values, vals)
    assert back.geo == GEO
    assert rio.sidecar_path(p).name == "m.geo.json"


@pytest.mark.parametrize("ext", [".pgm", ".png"])
def test_binary_mask_round_trip(tmp_path, ext):
    bits = np.random.default_rng(1).random((9, 31)) < 0.3
    p = tmp_path / f"b{ext}"
    rio.write_binary_mask(p, BinaryMask(bits, GEO))
    back = rio.read_binary_mask(p)
    assert np.array_equal(back.bits, bits) and back.geo == GEO


def test_missing_sidecar_is_identity(tmp_path):
    p = tmp_path / "x.pgm"
    rio.write_gray(p, np.zeros((3, 3), np.uint8))
    assert rio.read_geo(p) == GeoTransform()


def test_pgm_header_is_binary_p5(tmp_path):
    p = tmp_path / "h.pgm"
    rio.write_gray(p, np.full((2, 3), 7, np.uint8))
    assert p.read_bytes().startswith(b"P5")


def test_unsupported_extension(tmp_path):
    with pytest.raises(ValueError):
        rio.write_gray(tmp_path / "x.tif", np.zeros((2, 2), np.uint8))


def test_heatmap_outputs(tmp_path):
    bits = np.zeros((20, 30), bool)
    bits[0:3, 0:3] = True
    bits[15:20, 25:30] = True
    grid = heatmap(BinaryMask(bits), 10)
    text = rio.heatmap_csv(grid)
    lines = text.splitlines()
    assert lines[0] == "row,col,sum" and len(lines) == 1 + grid.rows * grid.cols
    assert "0,0,9" in lines and "1,2,25" in lines
    img = rio.heatmap_image(grid)
    assert img.max() == 255 and img[0, 0] == round(9 * 255 / 25)
    rio.write_heatmap(tmp_path / "h.csv", tmp_path / "h.pgm", grid)
    assert (tmp_path / "h.csv").read_text() == text
    zero = heatmap(BinaryMask(np.zeros((5, 5), bool)), 2)
    assert not rio.heatmap_image(zero).any()


def test_graph_geojson_round_trip(tmp_path):
    g = grid_graph(3, 4, spacing=25, jitter=3, rng=np.random.default_rng(2))
    p = tmp_path / "g.geojson"
    rio.write_json(p, graph_to_geojson(g))
    back = graph_from_geojson(rio.read_json(p))
    assert [(e.id, e.u, e.v) for e in back.edges] == [(e.id, e.u, e.v) for e in g.edges]
    assert back.total_length() == pytest.approx(g.total_length(), abs=1e-6)
    assert rio.read_json(p)["schema_version"] == 1


# -- config -------------------------------------------------------------------------------

def test_defaults():
    c = PipelineConfig()
    assert (c.threshold, c.dilation_radius, c.min_width, c.search_radius) == (0.5, 2, 3, 10)
    assert (c.rdp_epsilon, c.slice_length, c.max_assign_dist, c.d_min) == (2.0, 20.0, 30.0, 1.0)
    assert math.isinf(c.alpha)
    assert (c.heatmap_cell, c.ratio_low, c.ratio_high, c.pair_count, c.seed) == (
        100, 0.9, 1.1, 1000, 0)


def test_json_round_trip_lossless():
    c = PipelineConfig(alpha=5, seed=9, slice_length=12.5)
    text = c.to_json()
    assert json.loads(text)["schema_version"] == 1
    assert PipelineConfig.from_json(text) == c
    assert PipelineConfig.from_json(PipelineConfig().to_json()) == PipelineConfig()
    assert json.loads(PipelineConfig().to_json())["alpha"] == "inf"


@given(st.floats(0, 1), st.one_of(st.just(math.inf), st.floats(1, 1e6)),
       st.integers(0, 50), st.floats(0.01, 1000))
def test_round_trip_property(theta, alpha, radius, l):
    c = PipelineConfig(threshold=theta, alpha=alpha, search_radius=radius, slice_length=l)
    assert PipelineConfig.from_json(c.to_json()) == c


@pytest.mark.parametrize("bad", [
    {"threshold": 1.5}, {"alpha": 0.5}, {"slice_length": 0}, {"ratio_low": 1.2},
    {"ratio_high": 0.8}, {"dilation_radius": -1}, {"search_radius": 2.5}, {"d_min": 0},
])
def test_range_validation(bad):
    with pytest.raises(ValueError):
        PipelineConfig(**bad)


def test_unknown_field_rejected():
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"thresh": 0.5})


def test_replace_ignores_none():
    c = PipelineConfig().replace(alpha=None, seed=4)
    assert c.seed == 4 and math.isinf(c.alpha)


@pytest.mark.parametrize("text,value", [("inf", math.inf), ("Infinity", math.inf),
                                        ("5", 5.0), (2, 2.0)])
def test_parse_alpha(text, value):
    assert parse_alpha(text) == value
