"""
Unit tests for configuration classes, defaults and the flat config loader.
"""

import pytest

from src.assumptions import get_all_assumptions, get_swarm_config
from src.config import (
    CgConfig,
    DataConfig,
    ExperimentConfig,
    ModelConfig,
    SwarmConfig,
    SyntheticConfig,
    TrainConfig,
    load_config_file,
    parse_assignment,
    resolve_config,
)
from src.config.loader import parse_value
from src.errors import ConfigError


class TestAssumptions:
    """Tests for the default settings."""

    def test_getters_return_copies(self):
        config = get_swarm_config()
        config["num_particles"] = 999
        assert get_swarm_config()["num_particles"] == 8

    def test_all_sections(self):
        assert set(get_all_assumptions()) == {
            "data", "model", "training", "swarm", "experiment", "synthetic"
        }


class TestSectionConfigs:
    """Tests for validation of the individual sections."""

    def test_defaults(self):
        assert CgConfig().max_iters == 10
        assert TrainConfig().patience == 3
        assert SwarmConfig().bounds == ((0.0, 0.1), (0.0, 300.0))
        assert DataConfig().ratios == (0.6, 0.2, 0.2)
        assert ModelConfig().dim == 20

    @pytest.mark.parametrize("kwargs, match", [
        ({"max_iters": 0}, "max_iters"),
        ({"rel_tol": 1.5}, "rel_tol"),
        ({"curvature_floor": -1.0}, "curvature_floor"),
    ])
    def test_cg_validation(self, kwargs, match):
        with pytest.raises(ConfigError, match=match):
            CgConfig(**kwargs)

    def test_train_validation(self):
        with pytest.raises(ConfigError, match="patience"):
            TrainConfig(patience=0)
        with pytest.raises(ConfigError, match="max_outer_iters"):
            TrainConfig(max_outer_iters=0)

    @pytest.mark.parametrize("kwargs, match", [
        ({"num_particles": 0}, "num_particles"),
        ({"bounds": ((0.1, 0.1), (0.0, 300.0))}, "degenerate"),
        ({"v_max_fraction": 0.0}, "v_max_fraction"),
        ({"num_workers": 0}, "num_workers"),
        ({"backend": "dask"}, "backend"),
        ({"c1": -1.0}, "c1"),
    ])
    def test_swarm_validation(self, kwargs, match):
        with pytest.raises(ConfigError, match=match):
            SwarmConfig(**kwargs)

    def test_delimiter_aliases(self):
        assert DataConfig(delimiter="tab").delimiter == "\t"
        assert DataConfig(delimiter="comma").delimiter == ","
        assert DataConfig(delimiter="::").delimiter == "::"

    def test_delimiter_must_be_text(self):
        with pytest.raises(ConfigError, match="must be a string"):
            DataConfig(delimiter={":": None})

    def test_ratios_must_sum_to_one(self):
        with pytest.raises(ConfigError, match="sum to 1"):
            DataConfig(ratios=(0.5, 0.2, 0.2))

    def test_synthetic_validation(self):
        with pytest.raises(ConfigError, match="density"):
            SyntheticConfig(density=0.0)
        with pytest.raises(ConfigError, match="rank"):
            SyntheticConfig(rank=0)

    def test_model_validation(self):
        with pytest.raises(ConfigError, match="init_low"):
            ModelConfig(init_low=1.0, init_high=0.5)

    def test_config_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            ModelConfig(dim=0)


class TestExperimentConfig:
    """Tests for the experiment configuration."""

    def test_default_hp_is_box_center(self):
        cfg = ExperimentConfig()
        assert cfg.hp.lambda_ == pytest.approx(0.05)
        assert cfg.hp.gamma == pytest.approx(150.0)
        assert cfg.box_center() == cfg.hp

    def test_published_preset(self):
        cfg = ExperimentConfig.published("ratings.dat")
        assert cfg.data.path == "ratings.dat"
        assert cfg.data.ratios == (0.6, 0.2, 0.2)
        assert cfg.repetitions == 5
        assert cfg.model.dim == 20
        assert (cfg.swarm.num_particles, cfg.swarm.generations) == (8, 20)

    def test_desk_preset(self):
        cfg = ExperimentConfig.desk()
        assert cfg.data.path is None
        assert cfg.swarm.num_particles < 8

    def test_flat_round_trip(self):
        cfg = ExperimentConfig.desk()
        assert ExperimentConfig.from_flat(cfg.to_flat()).to_flat() == cfg.to_flat()

    def test_flat_keys(self):
        flat = ExperimentConfig().to_flat()
        assert flat["swarm.num_particles"] == 8
        assert flat["cg.rel_tol"] == 0.01
        assert flat["hp.lambda"] == pytest.approx(0.05)
        assert flat["swarm.bounds"] == [[0.0, 0.1], [0.0, 300.0]]
        assert "train.cg" not in flat

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Unknown configuration key"):
            ExperimentConfig.from_flat({"swarm.particles": 3})

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_flat({"swarm.num_particles": 0})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_flat({"experiment.tuner": "random"})

    def test_three_dimensional_box_rejected(self):
        with pytest.raises(ConfigError, match="two dimensions"):
            ExperimentConfig(swarm=SwarmConfig(bounds=((0, 1), (0, 1), (0, 1))))

    def test_summary(self):
        text = ExperimentConfig.desk().summary()
        assert "DPSO" in text
        assert "synthetic" in text


class TestLoader:
    """Tests for the flat key = value format."""

    @pytest.mark.parametrize("text, expected", [
        ("8", 8),
        ("0.03", 0.03),
        ("true", True),
        ("null", None),
        ("[0.6, 0.2, 0.2]", [0.6, 0.2, 0.2]),
        ("ratings.dat", "ratings.dat"),
        ("::", "::"),
    ])
    def test_parse_value(self, text, expected):
        assert parse_value(text) == expected

    def test_parse_assignment(self):
        assert parse_assignment("swarm.seed=42") == ("swarm.seed", 42)
        with pytest.raises(ConfigError, match="section.key"):
            parse_assignment("seed=42")
        with pytest.raises(ConfigError, match="expected"):
            parse_assignment("swarm.seed")

    def test_load_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# experiment\n"
            "swarm.num_particles = 4\n"
            "\n"
            "data.ratios = [0.8, 0.1, 0.1]\n"
            "swarm.bounds = [[0, 0.2], [0, 100]]\n"
        )
        values = load_config_file(path)
        assert values["swarm.num_particles"] == 4
        cfg = resolve_config(path)
        assert cfg.data.ratios == (0.8, 0.1, 0.1)
        assert cfg.swarm.v_max == pytest.approx([0.04, 20.0])

    def test_overrides_win(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("swarm.seed = 1\n")
        cfg = resolve_config(path, ["swarm.seed=42", "experiment.repetitions=2"])
        assert cfg.swarm.seed == 42
        assert cfg.repetitions == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            resolve_config(tmp_path / "missing.cfg")

    def test_delimiter_in_file_kept_verbatim(self, tmp_path):
        """Test that "::" survives a config file and an override as text."""
        path = tmp_path / "exp.cfg"
        path.write_text("data.delimiter = ::\ndata.path = ~/ml-1m/ratings.dat\n")
        cfg = resolve_config(path)
        assert cfg.data.delimiter == "::"
        assert cfg.data.path == "~/ml-1m/ratings.dat"
        assert resolve_config(None, ["data.delimiter=::"]).data.delimiter == "::"
        assert resolve_config(None, ["data.delimiter=','"]).data.delimiter == ","
        assert resolve_config(None, ["data.delimiter=tab"]).data.delimiter == "\t"

    def test_raw_string_keys(self):
        assert parse_assignment("data.path = null") == ("data.path", None)
        assert parse_assignment("data.delimiter = 1") == ("data.delimiter", "1")

    def test_malformed_line_reports_location(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("swarm.seed = 1\nnot an assignment\n")
        with pytest.raises(ConfigError, match="exp.cfg:2"):
            load_config_file(path)
