"""
Unit tests for the synthetic low-rank rating generator.
"""

import numpy as np
import pytest

from src.config.experiment_config import SyntheticConfig
from src.errors import ConfigError
from src.models.ratings import density
from src.models.synthetic import (
    ground_truth_factors,
    make_synthetic_ratings,
    parse_synthetic_spec,
)


class TestGenerator:
    """Tests for make_synthetic_ratings."""

    def test_shape_and_density(self):
        cfg = SyntheticConfig(users=40, items=30, rank=2, density=0.25, noise=0.0, seed=1)
        ds = make_synthetic_ratings(cfg)
        assert (ds.num_users, ds.num_items) == (40, 30)
        assert ds.num_entries == 300
        assert density(ds) == pytest.approx(0.25)

    def test_every_row_and_column_rated(self):
        ds = make_synthetic_ratings(SyntheticConfig(users=50, items=50, density=0.05, seed=3))
        assert np.all(ds.user_counts >= 1)
        assert np.all(ds.item_counts >= 1)

    def test_noiseless_scores_are_low_rank(self):
        cfg = SyntheticConfig(users=10, items=8, rank=2, density=0.5, noise=0.0, seed=4)
        ds = make_synthetic_ratings(cfg)
        P, Q = ground_truth_factors(cfg)
        assert np.allclose(ds.scores, np.einsum("nd,nd->n", P[ds.users], Q[ds.items]))

    def test_noise_added(self):
        base = dict(users=10, items=8, rank=2, density=0.5, seed=4)
        clean = make_synthetic_ratings(SyntheticConfig(noise=0.0, **base))
        noisy = make_synthetic_ratings(SyntheticConfig(noise=0.1, **base))
        assert np.array_equal(clean.pair_keys, noisy.pair_keys)
        assert not np.allclose(clean.scores, noisy.scores)

    def test_deterministic(self):
        a = make_synthetic_ratings(SyntheticConfig(seed=9))
        b = make_synthetic_ratings(SyntheticConfig(seed=9))
        assert a.to_lines() == b.to_lines()

    def test_external_ids(self):
        ds = make_synthetic_ratings(SyntheticConfig(users=3, items=2, density=1.0))
        assert ds.user_ids == ("u0", "u1", "u2")
        assert ds.item_ids == ("i0", "i1")
        assert ds.num_entries == 6


class TestSpecParsing:
    """Tests for the users=U items=I ... flag text."""

    def test_full_spec(self):
        cfg = parse_synthetic_spec("users=100 items=80 rank=3 density=0.3 noise=0.1 seed=7")
        assert (cfg.users, cfg.items, cfg.rank) == (100, 80, 3)
        assert cfg.density == 0.3
        assert cfg.noise == 0.1
        assert cfg.seed == 7

    def test_partial_spec_keeps_base(self):
        base = SyntheticConfig(users=11, items=12)
        cfg = parse_synthetic_spec("rank=2,noise=0", base)
        assert (cfg.users, cfg.items, cfg.rank, cfg.noise) == (11, 12, 2, 0.0)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Unknown synthetic key"):
            parse_synthetic_spec("rows=4")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="users"):
            parse_synthetic_spec("users=many")

    def test_token_without_value(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_synthetic_spec("users")

    def test_invalid_combination(self):
        with pytest.raises(ConfigError, match="density"):
            parse_synthetic_spec("density=2")
