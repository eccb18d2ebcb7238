"""
Unit tests for the shared JSON helpers.
"""

import json
import math

import numpy as np
import pytest

from src.models import pipeline, ratings, swarm, trainer
from src.models.reporting import json_float, write_json


class TestJsonFloat:
    """Tests for non-finite float encoding."""

    @pytest.mark.parametrize("value, expected", [
        (0.5, 0.5),
        (math.inf, "inf"),
        (-math.inf, "-inf"),
        (math.nan, "nan"),
    ])
    def test_encoding(self, value, expected):
        assert json_float(value) == expected

    def test_numpy_scalar(self):
        assert json_float(np.float64(2.0)) == 2.0
        assert isinstance(json_float(np.float64(2.0)), float)

    def test_single_definition(self):
        """Test that every writer uses the helper from this module."""
        assert trainer.json_float is json_float
        assert swarm.json_float is json_float
        assert pipeline.json_float is json_float
        assert not hasattr(trainer, "run_swarm")


class TestWriteJson:
    """Tests for write_json."""

    def test_round_trip(self, tmp_path):
        document = {"rmse": json_float(math.inf), "name": "λ sweep", "values": [1, 2]}
        path = write_json(tmp_path / "doc.json", document)
        assert json.loads(path.read_text(encoding="utf-8")) == document
        assert "λ" in path.read_text(encoding="utf-8")

    def test_used_by_manifest(self, tmp_path):
        ds = ratings.parse_ratings(["a::x::1", "b::y::2", "c::z::3"])
        split = ratings.split_dataset(ds, seed=0)
        path = split.write_manifest(tmp_path / "m.json", extra={"note": "ok"})
        assert json.loads(path.read_text(encoding="utf-8"))["note"] == "ok"
