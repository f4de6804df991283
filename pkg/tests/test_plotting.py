"""Tests for GeoJSON and SVG rendering."""

import json

import numpy as np
import pytest

from wildgen.plotting import (
    color_for,
    geojson_dumps,
    latent_scatter_svg,
    render_svg,
    trajectories_to_geojson,
)


def test_color_convention():
    assert color_for("real") == "#2e8b57"
    assert color_for("wildgen") == "#1f77b4"
    assert color_for("generated") == "#1f77b4"
    assert color_for("levy") == "#d62728"
    assert color_for("hgpr") == "#d62728"
    assert color_for("REAL") == "#2e8b57"


class TestGeojson:
    def test_feature_collection_structure(self, small_corpus):
        obj = trajectories_to_geojson([("real", small_corpus)])
        assert obj["type"] == "FeatureCollection"
        assert len(obj["features"]) == len(small_corpus)
        feature = obj["features"][0]
        assert feature["type"] == "Feature"
        assert feature["properties"] == {"set": "real", "index": 0}
        geometry = feature["geometry"]
        assert geometry["type"] == "LineString"
        assert len(geometry["coordinates"]) == small_corpus.horizon
        assert geometry["coordinates"][0] == list(small_corpus.coords[0, 0])

    def test_multiple_sets_concatenate(self, small_corpus):
        obj = trajectories_to_geojson(
            [("real", small_corpus), ("levy", small_corpus.coords[:3])]
        )
        names = {f["properties"]["set"] for f in obj["features"]}
        assert names == {"real", "levy"}
        assert len(obj["features"]) == len(small_corpus) + 3

    def test_dumps_is_deterministic_valid_json(self, small_corpus):
        obj = trajectories_to_geojson([("real", small_corpus)])
        a = geojson_dumps(obj)
        b = geojson_dumps(trajectories_to_geojson([("real", small_corpus)]))
        assert a == b
        assert a.endswith("\n")
        assert json.loads(a) == obj


class TestSvg:
    def test_polyline_count_and_colors(self, small_corpus):
        svg = render_svg([("real", small_corpus), ("levy", small_corpus.coords[:2])])
        assert svg.count("<polyline") == len(small_corpus) + 2
        assert "#2e8b57" in svg
        assert "#d62728" in svg
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")

    def test_byte_deterministic(self, small_corpus):
        sets = [("real", small_corpus)]
        assert render_svg(sets) == render_svg(sets)

    def test_legend_names_present(self, small_corpus):
        svg = render_svg([("real", small_corpus), ("wildgen", small_corpus.coords)])
        assert ">real</text>" in svg
        assert ">wildgen</text>" in svg


class TestLatentScatter:
    def test_codes_only(self, rng):
        codes = rng.standard_normal((20, 3))
        svg = latent_scatter_svg(codes)
        assert svg.count("<circle") == 20
        assert ">codes</text>" in svg
        assert ">samples</text>" not in svg

    def test_codes_and_samples(self, rng):
        codes = rng.standard_normal((20, 3))
        samples = rng.standard_normal((15, 3))
        svg = latent_scatter_svg(codes, samples)
        assert svg.count("<circle") == 35
        assert ">samples</text>" in svg

    def test_deterministic(self, rng):
        codes = rng.standard_normal((10, 2))
        assert latent_scatter_svg(codes) == latent_scatter_svg(codes)

    def test_needs_two_dimensions(self):
        with pytest.raises(ValueError, match="codes"):
            latent_scatter_svg(np.zeros((5, 1)))
