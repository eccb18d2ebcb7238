"""
Sparse Rating Data

Parses user-item rating files into a compact store, reindexes external ids
densely and splits the known entries into train / test / validation parts.

Every RatingDataset keeps three views of the same entry multiset K:
- entries: parallel arrays (users, items, scores) in storage order
- by_user: CSR matrix, row u holds the set K_u
- by_item: CSC matrix, column i holds the set K_i

Splits are views: the parts are RatingDatasets sharing the parent's id
tables and dimensions, so a user seen only in the test part still owns a
factor row (it simply receives no gradient during training).
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from src.assumptions import get_data_config
from src.errors import RatingsFormatError
from src.models.reporting import write_json

_DATA_CONFIG = get_data_config()
DEFAULT_DELIMITER = _DATA_CONFIG["delimiter"]
DEFAULT_RATIOS = tuple(_DATA_CONFIG["ratios"])
RATIO_TOLERANCE = _DATA_CONFIG["ratio_tolerance"]


@dataclass(frozen=True)
class RatingTriple:
    """A single known rating keyed by opaque external ids."""
    user: str
    item: str
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"Rating score must be finite, got {self.score}")


def _readonly(array: NDArray) -> NDArray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RatingDataset:
    """
    Immutable sparse store of known ratings.

    Attributes:
        num_users: |U|, number of user rows (shared with the parent for split parts)
        num_items: |I|, number of item columns
        users: dense user index per entry
        items: dense item index per entry
        scores: rating value per entry
        user_ids: external id of each dense user index
        item_ids: external id of each dense item index
    """
    num_users: int
    num_items: int
    users: NDArray[np.int64]
    items: NDArray[np.int64]
    scores: NDArray[np.float64]
    user_ids: Tuple[str, ...] = field(repr=False)
    item_ids: Tuple[str, ...] = field(repr=False)

    def __post_init__(self):
        if not (len(self.users) == len(self.items) == len(self.scores)):
            raise ValueError("users, items and scores must have equal length")
        if len(self.user_ids) != self.num_users or len(self.item_ids) != self.num_items:
            raise ValueError("id tables must match the dataset dimensions")
        if len(self.users) and (self.users.min() < 0 or self.users.max() >= self.num_users):
            raise IndexError("user index out of range")
        if len(self.items) and (self.items.min() < 0 or self.items.max() >= self.num_items):
            raise IndexError("item index out of range")

    @classmethod
    def from_arrays(
        cls,
        users,
        items,
        scores,
        num_users: int,
        num_items: int,
        user_ids: Optional[Tuple[str, ...]] = None,
        item_ids: Optional[Tuple[str, ...]] = None,
    ) -> "RatingDataset":
        """
        Build a dataset from dense index arrays.

        Id tables default to the decimal string of each dense index.

        Raises:
            ValueError: If a score is non-finite or a (user, item) pair repeats
        """
        users = np.ascontiguousarray(users, dtype=np.int64)
        items = np.ascontiguousarray(items, dtype=np.int64)
        scores = np.ascontiguousarray(scores, dtype=np.float64)
        if not np.all(np.isfinite(scores)):
            raise ValueError("All rating scores must be finite")
        keys = users * num_items + items
        if len(np.unique(keys)) != len(keys):
            raise ValueError("Duplicate (user, item) pair in ratings")
        if user_ids is None:
            user_ids = tuple(str(u) for u in range(num_users))
        if item_ids is None:
            item_ids = tuple(str(i) for i in range(num_items))
        return cls(
            num_users=int(num_users),
            num_items=int(num_items),
            users=_readonly(users.copy()),
            items=_readonly(items.copy()),
            scores=_readonly(scores.copy()),
            user_ids=tuple(user_ids),
            item_ids=tuple(item_ids),
        )

    @classmethod
    def from_triples(cls, triples: Iterable[RatingTriple]) -> "RatingDataset":
        """
        Build a dataset from external-id triples.

        Dense indices follow first appearance of each user and item id.

        Raises:
            ValueError: If a (user, item) pair repeats
        """
        user_index: Dict[str, int] = {}
        item_index: Dict[str, int] = {}
        users: List[int] = []
        items: List[int] = []
        scores: List[float] = []
        for triple in triples:
            users.append(user_index.setdefault(triple.user, len(user_index)))
            items.append(item_index.setdefault(triple.item, len(item_index)))
            scores.append(triple.score)
        return cls.from_arrays(users, items, scores, len(user_index), len(item_index),
                               tuple(user_index), tuple(item_index))

    # ------------------------------------------------------------------ views

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def num_entries(self) -> int:
        """|K|, number of known ratings."""
        return len(self.scores)

    @property
    def is_empty(self) -> bool:
        return len(self.scores) == 0

    @cached_property
    def user_map(self) -> Dict[str, int]:
        """External user id -> dense index."""
        return {uid: idx for idx, uid in enumerate(self.user_ids)}

    @cached_property
    def item_map(self) -> Dict[str, int]:
        """External item id -> dense index."""
        return {iid: idx for idx, iid in enumerate(self.item_ids)}

    @cached_property
    def _user_order(self) -> Tuple[NDArray, NDArray]:
        # Entry permutation into row-major (user, item) order plus CSR row pointers
        order = np.lexsort((self.items, self.users))
        indptr = np.zeros(self.num_users + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.users, minlength=self.num_users), out=indptr[1:])
        return order, indptr

    def user_matrix(self, values: NDArray) -> sparse.csr_matrix:
        """
        CSR matrix of shape (|U|, |I|) carrying one value per entry.

        Args:
            values: Per-entry values in storage order (e.g. scores or residuals)
        """
        order, indptr = self._user_order
        return sparse.csr_matrix(
            (np.asarray(values, dtype=np.float64)[order], self.items[order], indptr),
            shape=(self.num_users, self.num_items),
        )

    @cached_property
    def by_user(self) -> sparse.csr_matrix:
        """Rating matrix in CSR form; row u is K_u."""
        return self.user_matrix(self.scores)

    @cached_property
    def by_item(self) -> sparse.csc_matrix:
        """Rating matrix in CSC form; column i is K_i."""
        return self.by_user.tocsc()

    def user_ratings(self, user: int) -> List[Tuple[int, float]]:
        """List of (item, score) pairs for dense user index `user`."""
        if not 0 <= user < self.num_users:
            raise IndexError(f"User index {user} out of range [0, {self.num_users})")
        row = self.by_user
        start, stop = row.indptr[user], row.indptr[user + 1]
        return [(int(i), float(s)) for i, s in zip(row.indices[start:stop], row.data[start:stop])]

    def item_ratings(self, item: int) -> List[Tuple[int, float]]:
        """List of (user, score) pairs for dense item index `item`."""
        if not 0 <= item < self.num_items:
            raise IndexError(f"Item index {item} out of range [0, {self.num_items})")
        col = self.by_item
        start, stop = col.indptr[item], col.indptr[item + 1]
        return [(int(u), float(s)) for u, s in zip(col.indices[start:stop], col.data[start:stop])]

    @cached_property
    def user_counts(self) -> NDArray[np.float64]:
        """|K_u| for every user row."""
        return _readonly(np.bincount(self.users, minlength=self.num_users).astype(np.float64))

    @cached_property
    def item_counts(self) -> NDArray[np.float64]:
        """|K_i| for every item row."""
        return _readonly(np.bincount(self.items, minlength=self.num_items).astype(np.float64))

    @cached_property
    def pair_keys(self) -> NDArray[np.int64]:
        """Flat key u * |I| + i per entry, used for disjointness checks."""
        return _readonly(self.users * self.num_items + self.items)

    def entries(self) -> Iterable[Tuple[int, int, float]]:
        """Iterate (user, item, score) in storage order."""
        for u, i, s in zip(self.users, self.items, self.scores):
            yield int(u), int(i), float(s)

    def triples(self) -> Iterable[RatingTriple]:
        """Iterate entries as RatingTriple keyed by external ids."""
        for u, i, s in self.entries():
            yield RatingTriple(self.user_ids[u], self.item_ids[i], s)

    def subset(self, indices: NDArray) -> "RatingDataset":
        """View over selected entries sharing dimensions and id tables."""
        indices = np.asarray(indices, dtype=np.int64)
        return RatingDataset(
            num_users=self.num_users,
            num_items=self.num_items,
            users=_readonly(self.users[indices]),
            items=_readonly(self.items[indices]),
            scores=_readonly(self.scores[indices]),
            user_ids=self.user_ids,
            item_ids=self.item_ids,
        )

    def reindex(self, user_ids: Sequence[str], item_ids: Sequence[str]) -> "RatingDataset":
        """
        Map the entries onto another id space (e.g. the one a snapshot was trained on).

        Raises:
            RatingsFormatError: An external id is unknown to the target space
        """
        user_map = {uid: k for k, uid in enumerate(user_ids)}
        item_map = {iid: k for k, iid in enumerate(item_ids)}
        missing_users = sorted({self.user_ids[u] for u in np.unique(self.users)} - set(user_map))
        missing_items = sorted({self.item_ids[i] for i in np.unique(self.items)} - set(item_map))
        if missing_users or missing_items:
            raise RatingsFormatError(
                f"unknown ids: users {missing_users[:5]}, items {missing_items[:5]}"
            )
        users = np.array([user_map[self.user_ids[u]] for u in self.users], dtype=np.int64)
        items = np.array([item_map[self.item_ids[i]] for i in self.items], dtype=np.int64)
        return RatingDataset.from_arrays(users, items, self.scores, len(user_ids), len(item_ids),
                                         user_ids=tuple(user_ids), item_ids=tuple(item_ids))

    def to_lines(self, delimiter: str = DEFAULT_DELIMITER) -> List[str]:
        """Render entries as ratings text lines using external ids."""
        return [
            f"{self.user_ids[u]}{delimiter}{self.item_ids[i]}{delimiter}{s!r}"
            for u, i, s in self.entries()
        ]

    def write(self, path: Union[str, Path], delimiter: str = DEFAULT_DELIMITER,
              header: Iterable[str] = ()) -> Path:
        """
        Write entries as a UTF-8 ratings file; scores keep full precision.

        Header strings become leading "#" comment lines, which the parser skips.
        """
        path = Path(path)
        lines = [f"# {text}" for text in header] + self.to_lines(delimiter)
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return path

    def summary(self) -> str:
        """Human-readable description of the dataset."""
        lines = [
            "Rating Dataset",
            "=" * 40,
            f"Users: {self.num_users}",
            f"Items: {self.num_items}",
            f"Ratings: {self.num_entries}",
        ]
        if self.num_users and self.num_items:
            lines.append(f"Density: {density(self) * 100:.4f}%")
        if not self.is_empty:
            lines.append(f"Score range: [{self.scores.min():g}, {self.scores.max():g}]")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return (f"RatingDataset(users={self.num_users}, items={self.num_items}, "
                f"ratings={self.num_entries})")


@dataclass(frozen=True)
class DataSplit:
    """
    Train / test / validation partition of one parent dataset.

    Attributes:
        train: Entries used to fit the factors
        test: Entries used only for fitness (tuning and early stopping)
        validation: Entries read once after tuning
        seed: Shuffle seed
        ratios: (r_train, r_test, r_validation)
    """
    train: RatingDataset
    test: RatingDataset
    validation: RatingDataset
    seed: int
    ratios: Tuple[float, float, float]

    @property
    def num_users(self) -> int:
        return self.train.num_users

    @property
    def num_items(self) -> int:
        return self.train.num_items

    def tuning_view(self) -> "TuningSplit":
        """Train and test parts only; tuning never sees the validation part."""
        return TuningSplit(train=self.train, test=self.test, seed=self.seed)

    def manifest(self) -> Dict:
        """JSON-ready description of the split."""
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "counts": {
                "train": self.train.num_entries,
                "test": self.test.num_entries,
                "validation": self.validation.num_entries,
            },
            "num_users": self.num_users,
            "num_items": self.num_items,
        }

    def write_manifest(self, path: Union[str, Path], extra: Optional[Dict] = None) -> Path:
        """Write the split manifest as a JSON document."""
        document = self.manifest()
        if extra:
            document.update(extra)
        return write_json(path, document)


@dataclass(frozen=True)
class TuningSplit:
    """Train/test pair handed to the tuner."""
    train: RatingDataset
    test: RatingDataset
    seed: int

    @property
    def num_users(self) -> int:
        return self.train.num_users

    @property
    def num_items(self) -> int:
        return self.train.num_items

    def tuning_view(self) -> "TuningSplit":
        return self


def parse_ratings(source: Iterable[str], delimiter: str = DEFAULT_DELIMITER) -> RatingDataset:
    """
    Parse line-oriented rating text.

    Each non-empty line is "user<delim>item<delim>score[<delim>extra...]";
    lines starting with "#" are ignored. Dense indices are assigned in
    first-appearance order.

    Args:
        source: Iterable of text lines (an open file works)
        delimiter: Field separator, e.g. "::", "\\t" or ","

    Returns:
        RatingDataset with all views available

    Raises:
        RatingsFormatError: Malformed line, non-finite score, duplicate pair
            or an input without any rating
    """
    if not delimiter:
        raise ValueError("Delimiter must be a non-empty string")

    triples: List[RatingTriple] = []
    seen = set()

    for line_number, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        triple = parse_line(line, delimiter, line_number)
        if (triple.user, triple.item) in seen:
            raise RatingsFormatError(
                f"duplicate rating for user {triple.user!r}, item {triple.item!r}", line_number
            )
        seen.add((triple.user, triple.item))
        triples.append(triple)

    if not triples:
        raise RatingsFormatError("no ratings")
    return RatingDataset.from_triples(triples)


def parse_line(line: str, delimiter: str = DEFAULT_DELIMITER, line_number: Optional[int] = None
               ) -> RatingTriple:
    """
    Parse one "user<delim>item<delim>score[<delim>extra...]" line.

    Raises:
        RatingsFormatError: Missing fields, empty id or a non-finite score
    """
    line = line.strip()
    parts = line.split(delimiter)
    if len(parts) < 3:
        raise RatingsFormatError(
            f"expected user{delimiter}item{delimiter}score, got {line!r}", line_number
        )
    user, item = parts[0].strip(), parts[1].strip()
    if not user or not item:
        raise RatingsFormatError(f"empty user or item id in {line!r}", line_number)
    try:
        score = float(parts[2])
    except ValueError:
        raise RatingsFormatError(f"score {parts[2].strip()!r} is not a number", line_number)
    if not math.isfinite(score):
        raise RatingsFormatError(f"score {parts[2].strip()!r} is not finite", line_number)
    return RatingTriple(user, item, score)


def load_ratings(path: Union[str, Path], delimiter: str = DEFAULT_DELIMITER) -> RatingDataset:
    """Read and parse a UTF-8 ratings file."""
    with open(path, encoding="utf-8") as handle:
        return parse_ratings(handle, delimiter)


def _validate_ratios(ratios) -> Tuple[float, float, float]:
    if len(ratios) != 3:
        raise ValueError(f"Expected three split ratios, got {len(ratios)}")
    ratios = tuple(float(r) for r in ratios)
    if any(not math.isfinite(r) or r < 0 for r in ratios):
        raise ValueError(f"Split ratios must be finite and non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > RATIO_TOLERANCE:
        raise ValueError(f"Split ratios must sum to 1, got {sum(ratios)}")
    return ratios


def split_dataset(
    ds: RatingDataset,
    ratios: Tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> DataSplit:
    """
    Shuffle entries with a seeded generator and cut them into three parts.

    The shuffled order is cut at floor(r_train * n) and
    floor((r_train + r_test) * n); validation takes the rest. Entries keep
    parent storage order inside each part.

    Raises:
        ValueError: Invalid ratios or fewer than three entries
    """
    ratios = _validate_ratios(ratios)
    n = ds.num_entries
    if n < 3:
        raise ValueError(f"Dataset too small to split: {n} entries (need at least 3)")

    first_cut = min(n, int(math.floor(ratios[0] * n + RATIO_TOLERANCE)))
    second_cut = min(n, int(math.floor((ratios[0] + ratios[1]) * n + RATIO_TOLERANCE)))

    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:first_cut])
    test_idx = np.sort(perm[first_cut:second_cut])
    val_idx = np.sort(perm[second_cut:])

    return DataSplit(
        train=ds.subset(train_idx),
        test=ds.subset(test_idx),
        validation=ds.subset(val_idx),
        seed=int(seed),
        ratios=ratios,
    )


def density(ds: RatingDataset) -> float:
    """Fraction of the |U| x |I| matrix that is known."""
    if ds.num_users <= 0 or ds.num_items <= 0:
        raise ValueError("Density requires at least one user and one item")
    return ds.num_entries / (ds.num_users * ds.num_items)
