"""
Second-Order Latent Factor Kernels

The user factors P (|U| x D) and item factors Q (|I| x D) are stacked into
one matrix X of shape (|U| + |I|) x D: row u is user u, row |U| + i is item i.
Every kernel below works on X and a training RatingDataset and is pure; the
scatter steps go through scipy CSR products so the reduction order is fixed.

Objective (regularizer inside the per-rating sum):

    L(X) = 1/2 * sum_{(u,i) in K} [ (s_ui - <x_u, x_i>)^2
                                    + lambda * (|x_u|^2 + |x_i|^2) ]

Curvature product (damped Gauss-Newton):

    omega(v) = J'J v + lambda * C v + gamma * v

with C the diagonal of per-row rating counts.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import NDArray

from src.assumptions import get_model_config
from src.errors import DivergenceError, SnapshotError
from src.models.ratings import RatingDataset

_MODEL_CONFIG = get_model_config()
DEFAULT_INIT_LOW = _MODEL_CONFIG["init_low"]
DEFAULT_INIT_HIGH = _MODEL_CONFIG["init_high"]

# Flat float64 array indexed like FactorState.values.ravel()
FlatVector = NDArray[np.float64]

SNAPSHOT_MAGIC = b"PSLFX\x00\x00\x00"
SNAPSHOT_VERSION = 1
# magic, version, |U|, |I|, D, seed
_SNAPSHOT_HEADER = struct.Struct("<8sIQQQq")


@dataclass(frozen=True)
class Hyperparams:
    """
    The searched point (lambda, gamma).

    Attributes:
        lambda_: Tikhonov regularization weight
        gamma: Damping added to the Gauss-Newton operator
    """
    lambda_: float
    gamma: float

    def __post_init__(self):
        if not self.lambda_ >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @classmethod
    def from_position(cls, position) -> "Hyperparams":
        """Interpret a swarm position (lambda, gamma) as hyperparameters."""
        return cls(lambda_=float(position[0]), gamma=float(position[1]))

    def as_position(self) -> NDArray[np.float64]:
        return np.array([self.lambda_, self.gamma], dtype=np.float64)

    def to_dict(self):
        return {"lambda": self.lambda_, "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class FactorState:
    """
    Stacked latent factor matrix X.

    Attributes:
        num_users: |U|
        num_items: |I|
        dim: latent dimension D
        values: read-only array of shape (|U| + |I|, D)
        seed: generator seed the state was drawn from (-1 if not seeded)
    """
    num_users: int
    num_items: int
    dim: int
    values: NDArray[np.float64]
    seed: int = -1

    def __post_init__(self):
        expected = (self.num_users + self.num_items, self.dim)
        if self.values.shape != expected:
            raise ValueError(f"Factor values must have shape {expected}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Factor values must be finite")
        if self.values.flags.writeable:
            values = self.values.copy()
            values.setflags(write=False)
            object.__setattr__(self, "values", values)

    @classmethod
    def from_flat(cls, flat: FlatVector, num_users: int, num_items: int, dim: int,
                  seed: int = -1) -> "FactorState":
        return cls(num_users, num_items, dim,
                   np.asarray(flat, dtype=np.float64).reshape(num_users + num_items, dim), seed)

    @property
    def size(self) -> int:
        """Length of the flat vector, (|U| + |I|) * D."""
        return self.values.size

    @property
    def user_factors(self) -> NDArray[np.float64]:
        return self.values[:self.num_users]

    @property
    def item_factors(self) -> NDArray[np.float64]:
        return self.values[self.num_users:]

    def flat(self) -> FlatVector:
        """Read-only flat view."""
        return self.values.reshape(-1)

    def with_values(self, values: NDArray) -> "FactorState":
        """New state of the same shape and seed."""
        return FactorState(self.num_users, self.num_items, self.dim,
                           np.asarray(values, dtype=np.float64).reshape(self.values.shape), self.seed)

    def matches(self, ds: RatingDataset) -> bool:
        return self.num_users == ds.num_users and self.num_items == ds.num_items

    def save(self, path: Union[str, Path]) -> Path:
        """
        Write a binary snapshot: header followed by row-major little-endian float64.

        Header: magic, version, |U|, |I|, D, seed.
        """
        path = Path(path)
        header = _SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, self.num_users,
                                       self.num_items, self.dim, self.seed)
        with open(path, "wb") as handle:
            handle.write(header)
            handle.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FactorState":
        """Read a snapshot written by `save`."""
        data = Path(path).read_bytes()
        if len(data) < _SNAPSHOT_HEADER.size:
            raise SnapshotError(f"{path}: file too short for a snapshot header")
        magic, version, num_users, num_items, dim, seed = _SNAPSHOT_HEADER.unpack_from(data)
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotError(f"{path}: not a factor snapshot")
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(f"{path}: unsupported snapshot version {version}")
        payload = data[_SNAPSHOT_HEADER.size:]
        expected = (num_users + num_items) * dim * 8
        if len(payload) != expected:
            raise SnapshotError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
        values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        try:
            return cls.from_flat(values, num_users, num_items, dim, seed)
        except ValueError as e:
            raise SnapshotError(f"{path}: {e}")

    def __repr__(self) -> str:
        return (f"FactorState(users={self.num_users}, items={self.num_items}, "
                f"dim={self.dim}, seed={self.seed})")


def init_factors(
    num_users: int,
    num_items: int,
    dim: int,
    seed: int,
    init_low: float = DEFAULT_INIT_LOW,
    init_high: float = DEFAULT_INIT_HIGH,
) -> FactorState:
    """
    Draw every factor entry uniformly from [init_low, init_high).

    Raises:
        ValueError: If dim < 1, counts are negative or the range is empty
    """
    if dim < 1:
        raise ValueError(f"Latent dimension must be >= 1, got {dim}")
    if num_users < 0 or num_items < 0:
        raise ValueError("User and item counts must be non-negative")
    if not init_low < init_high:
        raise ValueError(f"init_low must be < init_high, got [{init_low}, {init_high})")
    rng = np.random.default_rng(seed)
    values = rng.uniform(init_low, init_high, size=(num_users + num_items, dim))
    return FactorState(num_users, num_items, dim, values, int(seed))


# =============================================================================
# KERNELS
# =============================================================================

def _check_shapes(X: FactorState, ds: RatingDataset) -> None:
    if not X.matches(ds):
        raise ValueError(
            f"Factor state is {X.num_users}x{X.num_items} but ratings are "
            f"{ds.num_users}x{ds.num_items}"
        )


def _as_rows(X: FactorState, v: FlatVector) -> NDArray[np.float64]:
    v = np.asarray(v, dtype=np.float64)
    if v.size != X.size:
        raise ValueError(f"Vector length {v.size} does not match factor size {X.size}")
    return v.reshape(X.values.shape)


def _ensure_finite(array: NDArray, what: str) -> NDArray:
    if not np.all(np.isfinite(array)):
        raise DivergenceError(f"diverged: non-finite {what}")
    return array


def _residuals(X: FactorState, ds: RatingDataset) -> NDArray[np.float64]:
    P = X.user_factors[ds.users]
    Q = X.item_factors[ds.items]
    return ds.scores - np.einsum("nd,nd->n", P, Q)


def predict(X: FactorState, u: int, i: int) -> float:
    """Inner product of user row u and item row |U| + i."""
    if not 0 <= u < X.num_users:
        raise IndexError(f"User index {u} out of range [0, {X.num_users})")
    if not 0 <= i < X.num_items:
        raise IndexError(f"Item index {i} out of range [0, {X.num_items})")
    return float(np.dot(X.values[u], X.values[X.num_users + i]))


def predict_entries(X: FactorState, ds: RatingDataset) -> NDArray[np.float64]:
    """Predictions for every entry of `ds`, in storage order."""
    _check_shapes(X, ds)
    return np.einsum("nd,nd->n", X.user_factors[ds.users], X.item_factors[ds.items])


def loss(X: FactorState, train: RatingDataset, lambda_: float) -> float:
    """
    Regularized objective; each factor row is penalized once per rating it takes part in.

    Raises:
        DivergenceError: If the value is not finite
    """
    _check_shapes(X, train)
    if train.is_empty:
        return 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        r = _residuals(X, train)
        data_term = float(np.dot(r, r))
        reg = 0.0
        if lambda_:
            row_sq = np.einsum("nd,nd->n", X.values, X.values)
            reg = lambda_ * (float(np.dot(train.user_counts, row_sq[:X.num_users]))
                             + float(np.dot(train.item_counts, row_sq[X.num_users:])))
        value = 0.5 * (data_term + reg)
    if not np.isfinite(value):
        raise DivergenceError("diverged: non-finite loss")
    return value


def gradient(X: FactorState, train: RatingDataset, lambda_: float) -> FlatVector:
    """
    Analytic gradient of `loss`.

    User row u: sum over K_u of -(s_ui - y_ui) * x_i + lambda * x_u; items symmetric.
    Rows without ratings get zero.
    """
    _check_shapes(X, train)
    grad = np.zeros_like(X.values)
    if train.is_empty:
        return grad.reshape(-1)
    with np.errstate(over="ignore", invalid="ignore"):
        R = train.user_matrix(_residuals(X, train))
        P, Q = X.user_factors, X.item_factors
        grad[:X.num_users] = -(R @ Q) + lambda_ * train.user_counts[:, None] * P
        grad[X.num_users:] = -(R.T @ P) + lambda_ * train.item_counts[:, None] * Q
    return _ensure_finite(grad, "gradient").reshape(-1)


def gn_vector_product(
    X: FactorState,
    train: RatingDataset,
    v: FlatVector,
    lambda_: float,
    gamma: float,
) -> FlatVector:
    """
    Matrix-free damped Gauss-Newton product J'J v + lambda * C v + gamma * v.

    For each known (u, i) the Jacobian row gives
    inner = <v_u, x_i> + <x_u, v_i>, which is scattered back as
    inner * x_i into row u and inner * x_u into row |U| + i.

    Raises:
        ValueError: If v has the wrong length
        DivergenceError: If the product is not finite
    """
    _check_shapes(X, train)
    V = _as_rows(X, v)
    nu = X.num_users
    P, Q = X.user_factors, X.item_factors
    Vu, Vi = V[:nu], V[nu:]
    with np.errstate(over="ignore", invalid="ignore"):
        out = gamma * V
        if not train.is_empty:
            inner = (np.einsum("nd,nd->n", Vu[train.users], Q[train.items])
                     + np.einsum("nd,nd->n", P[train.users], Vi[train.items]))
            M = train.user_matrix(inner)
            out[:nu] += M @ Q
            out[nu:] += M.T @ P
            if lambda_:
                out[:nu] += lambda_ * train.user_counts[:, None] * Vu
                out[nu:] += lambda_ * train.item_counts[:, None] * Vi
    return _ensure_finite(out, "curvature product").reshape(-1)


def hvp_fd_oracle(
    X: FactorState,
    train: RatingDataset,
    v: FlatVector,
    lambda_: float,
    epsilon: float = 1e-5,
) -> FlatVector:
    """
    Central-difference Hessian-vector product of the full objective.

    (grad(X + eps * v) - grad(X - eps * v)) / (2 * eps). Used as a test oracle.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    V = _as_rows(X, v)
    with np.errstate(over="ignore", invalid="ignore"):
        plus, minus = X.values + epsilon * V, X.values - epsilon * V
    if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
        raise DivergenceError("diverged: perturbed factors are not finite")
    g_plus = gradient(X.with_values(plus), train, lambda_)
    g_minus = gradient(X.with_values(minus), train, lambda_)
    with np.errstate(over="ignore", invalid="ignore"):
        hv = (g_plus - g_minus) / (2.0 * epsilon)
    return _ensure_finite(hv, "Hessian-vector product")


def rmse(X: FactorState, eval_set: RatingDataset) -> float:
    """
    Root mean squared error over `eval_set`.

    Returns +inf when any prediction is not finite.

    Raises:
        ValueError: If `eval_set` is empty
    """
    if eval_set.is_empty:
        raise ValueError("RMSE needs a nonempty evaluation set")
    _check_shapes(X, eval_set)
    with np.errstate(over="ignore", invalid="ignore"):
        r = _residuals(X, eval_set)
        value = float(np.sqrt(np.dot(r, r) / len(r)))
    if not np.isfinite(value):
        return float("inf")
    return value
