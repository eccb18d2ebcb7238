"""
Synthetic low-rank rating data.

Ratings are S = P Q' on a random mask (plus optional Gaussian noise), with
ground-truth factors drawn uniformly from [factor_low, factor_high). Every
user and every item receives at least one rating before the remaining
cells are filled up to the requested density.
"""

from typing import Dict, Tuple

import numpy as np

from src.config.experiment_config import SyntheticConfig
from src.errors import ConfigError
from src.models.ratings import RatingDataset

_SPEC_KEYS = {
    "users": int,
    "items": int,
    "rank": int,
    "density": float,
    "noise": float,
    "seed": int,
}


def parse_synthetic_spec(text: str, base: SyntheticConfig = None) -> SyntheticConfig:
    """
    Parse "users=U items=I rank=R density=p noise=s seed=k" (any subset, any order).

    Raises:
        ConfigError: Unknown key or malformed value
    """
    values: Dict[str, object] = {}
    for token in text.replace(",", " ").split():
        if "=" not in token:
            raise ConfigError(f"Synthetic spec token {token!r} is not key=value")
        key, raw = token.split("=", 1)
        if key not in _SPEC_KEYS:
            raise ConfigError(f"Unknown synthetic key {key!r}; expected one of {sorted(_SPEC_KEYS)}")
        try:
            values[key] = _SPEC_KEYS[key](raw)
        except ValueError:
            raise ConfigError(f"Synthetic {key}={raw!r} is not a valid {_SPEC_KEYS[key].__name__}")
    base = base or SyntheticConfig()
    merged = {**{k: getattr(base, k) for k in ("users", "items", "rank", "density", "noise", "seed",
                                              "factor_low", "factor_high")}, **values}
    return SyntheticConfig(**merged)


def _mask(cfg: SyntheticConfig, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    n_cells = cfg.users * cfg.items
    target = max(int(round(cfg.density * n_cells)), max(cfg.users, cfg.items))
    target = min(target, n_cells)

    chosen = np.zeros(n_cells, dtype=bool)
    # Coverage pass
    chosen[np.arange(cfg.users) * cfg.items + rng.integers(0, cfg.items, size=cfg.users)] = True
    chosen[rng.integers(0, cfg.users, size=cfg.items) * cfg.items + np.arange(cfg.items)] = True

    remaining = target - int(chosen.sum())
    if remaining > 0:
        free = np.flatnonzero(~chosen)
        chosen[rng.choice(free, size=remaining, replace=False)] = True

    cells = rng.permutation(np.flatnonzero(chosen))
    return cells // cfg.items, cells % cfg.items


def make_synthetic_ratings(cfg: SyntheticConfig = None) -> RatingDataset:
    """Draw a low-rank rating dataset; the same config always yields the same data."""
    cfg = cfg or SyntheticConfig()
    rng = np.random.default_rng(cfg.seed)
    P = rng.uniform(cfg.factor_low, cfg.factor_high, size=(cfg.users, cfg.rank))
    Q = rng.uniform(cfg.factor_low, cfg.factor_high, size=(cfg.items, cfg.rank))
    users, items = _mask(cfg, rng)
    scores = np.einsum("nd,nd->n", P[users], Q[items])
    if cfg.noise > 0:
        scores = scores + rng.normal(0.0, cfg.noise, size=scores.shape)
    return RatingDataset.from_arrays(
        users, items, scores, cfg.users, cfg.items,
        user_ids=tuple(f"u{u}" for u in range(cfg.users)),
        item_ids=tuple(f"i{i}" for i in range(cfg.items)),
    )


def ground_truth_factors(cfg: SyntheticConfig = None) -> Tuple[np.ndarray, np.ndarray]:
    """The (P, Q) pair `make_synthetic_ratings` builds its scores from."""
    cfg = cfg or SyntheticConfig()
    rng = np.random.default_rng(cfg.seed)
    P = rng.uniform(cfg.factor_low, cfg.factor_high, size=(cfg.users, cfg.rank))
    Q = rng.uniform(cfg.factor_low, cfg.factor_high, size=(cfg.items, cfg.rank))
    return P, Q
