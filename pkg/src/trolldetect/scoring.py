"""Distance-based anomaly scores: DKNN, SKNN and single-prototype k-means."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .profiles import sample_features

METHODS = ("dknn", "sknn", "kmeans")
TROLL, NORMAL = "troll", "normal"
N_BUCKETS = 100

# cap on query_rows * reference_rows held in memory at once
_BLOCK_CELLS = 4_000_000


class PopulationTooSmall(ValueError):
    pass


class EmptyPopulation(ValueError):
    pass


@dataclass(frozen=True)
class ScorerConfig:
    method: str = "dknn"
    k: int = 5
    threshold: float = 40.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method != "kmeans" and self.k < 1:
            raise ValueError("k must be a positive integer")


@dataclass(frozen=True)
class ScoredUser:
    username: str
    raw_distance: float
    anomaly_score: float
    label: str


def _distance_block(query: np.ndarray, reference: np.ndarray) -> np.ndarray:
    # columns are accumulated left to right so every pair sums in the same order
    acc = np.zeros((query.shape[0], reference.shape[0]))
    for j in range(query.shape[1]):
        diff = query[:, j, None] - reference[None, :, j]
        acc += diff * diff
    return np.sqrt(acc, out=acc)


def nearest_distances(
    query: np.ndarray,
    reference: np.ndarray,
    k: int,
    self_index: np.ndarray | None = None,
) -> np.ndarray:
    """Sorted distances from each query row to its ``k`` nearest reference rows.

    ``self_index[i]`` names the reference row that *is* query row ``i`` (or -1);
    that row is never counted as its own neighbour.
    """
    query = np.asarray(query, dtype=float)
    reference = np.asarray(reference, dtype=float)
    n_q, n_ref = query.shape[0], reference.shape[0]
    has_self = self_index is not None and np.any(self_index >= 0)
    available = n_ref - 1 if has_self else n_ref
    if available < k:
        raise PopulationTooSmall(f"need more than {k} rows, got {n_ref}")
    out = np.empty((n_q, k))
    block = max(1, _BLOCK_CELLS // max(n_ref, 1))
    for start in range(0, n_q, block):
        stop = min(start + block, n_q)
        d = _distance_block(query[start:stop], reference)
        if self_index is not None:
            rows = np.arange(stop - start)
            own = self_index[start:stop]
            mask = own >= 0
            d[rows[mask], own[mask]] = np.inf
        part = np.partition(d, k - 1, axis=1)[:, :k]
        part.sort(axis=1)
        out[start:stop] = part
    return out


def dknn_distances(matrix: np.ndarray, k: int) -> np.ndarray:
    """Distance from every row to its k-th nearest other row."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n <= k:
        raise PopulationTooSmall(f"DKNN with k={k} needs more than {k} rows, got {n}")
    return nearest_distances(matrix, matrix, k, np.arange(n))[:, k - 1]


def sknn_distances(matrix: np.ndarray, k: int) -> np.ndarray:
    """Sum of the distances to the 1st..k-th nearest other rows."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n <= k:
        raise PopulationTooSmall(f"SKNN with k={k} needs more than {k} rows, got {n}")
    near = nearest_distances(matrix, matrix, k, np.arange(n))
    # cumsum adds strictly left to right
    return np.cumsum(near, axis=1)[:, -1]


def centroid_distances(matrix: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    return _distance_block(np.asarray(matrix, dtype=float), np.asarray(centroid, dtype=float)[None, :])[:, 0]


def kmeans_distances(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """k-means with a single cluster: the prototype is the column mean.

    Lloyd's iteration with one centroid converges to the mean after its first
    update, so no iteration is run.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] == 0:
        raise EmptyPopulation("k-means needs at least one row")
    centroid = matrix.mean(axis=0)
    return centroid, centroid_distances(matrix, centroid)


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max map raw distances onto [0, 100]; all-equal input maps to 0."""
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        return raw.copy()
    lo, hi = raw.min(), raw.max()
    if not hi > lo:
        return np.zeros_like(raw)
    scores = 100.0 * (raw - lo) / (hi - lo)
    return np.clip(scores, 0.0, 100.0, out=scores)


def normalize_and_label(
    raw: Sequence[float], threshold: float = 40.0, usernames: Sequence[str] | None = None
) -> list[ScoredUser]:
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise EmptyPopulation("nothing to normalize")
    scores = normalize_scores(raw)
    if usernames is None:
        usernames = [str(i) for i in range(raw.size)]
    return [
        ScoredUser(name, float(r), float(s), TROLL if s > threshold else NORMAL)
        for name, r, s in zip(usernames, raw, scores)
    ]


def score_histogram(scores: np.ndarray, bucket_width: float = 1.0) -> np.ndarray:
    """Counts per ``[b, b + width)`` bucket over [0, 100]; 100 lands in the last bucket."""
    n_buckets = int(round(100 / bucket_width))
    idx = np.floor(np.asarray(scores, dtype=float) / bucket_width).astype(np.int64)
    idx = np.clip(idx, 0, n_buckets - 1)
    return np.bincount(idx, minlength=n_buckets)


def troll_feature_distances(
    matrix: np.ndarray, is_troll: np.ndarray, centroid: np.ndarray
) -> tuple[np.ndarray, bool]:
    """Mean absolute per-feature offset of troll rows from the prototype.

    Returns ``(averages, empty)``; ``empty`` is True (and a warning issued)
    when no row is labelled a troll, in which case the averages are zero.
    """
    matrix = np.asarray(matrix, dtype=float)
    is_troll = np.asarray(is_troll, dtype=bool)
    if not is_troll.any():
        warnings.warn("no trolls labelled; per-feature distances are all zero", stacklevel=2)
        return np.zeros(matrix.shape[1]), True
    return np.abs(matrix[is_troll] - centroid).mean(axis=0), False


def single_feature_label_rate(matrix: np.ndarray, feature: int, threshold: float) -> float:
    """Percent of rows whose value in column ``feature`` exceeds ``threshold``."""
    col = np.asarray(matrix, dtype=float)[:, feature]
    if col.size == 0:
        return 0.0
    return 100.0 * np.count_nonzero(col > threshold) / col.size


@dataclass(frozen=True)
class ScoreResult:
    usernames: tuple[str, ...]
    raw: np.ndarray
    scores: np.ndarray
    is_troll: np.ndarray
    config: ScorerConfig
    sample_rows: np.ndarray
    centroid: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.raw)

    @property
    def trolls(self) -> int:
        return int(np.count_nonzero(self.is_troll))

    @property
    def troll_percent(self) -> float:
        return 100.0 * self.trolls / self.n if self.n else 0.0

    def labels(self) -> dict[str, str]:
        return {u: (TROLL if t else NORMAL) for u, t in zip(self.usernames, self.is_troll)}

    def scored_users(self) -> list[ScoredUser]:
        return [
            ScoredUser(u, float(r), float(s), TROLL if t else NORMAL)
            for u, r, s, t in zip(self.usernames, self.raw, self.scores, self.is_troll)
        ]

    def summary(self) -> dict:
        return {
            "method": self.config.method,
            "k": None if self.config.method == "kmeans" else self.config.k,
            "n": self.n,
            "trolls": self.trolls,
            "troll_percent": self.troll_percent,
            "histogram": score_histogram(self.scores).tolist(),
        }


def raw_distances(
    matrix: np.ndarray, config: ScorerConfig, sample_rows: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Raw distances for every row, measured against the rows in ``sample_rows``.

    With no sample every row is its own reference population. Sampled rows
    get exactly the distances they would get from scoring the sample alone.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n == 0:
        raise EmptyPopulation("no rows to score")
    if sample_rows is None or len(sample_rows) == n:
        if config.method == "dknn":
            return dknn_distances(matrix, config.k), None
        if config.method == "sknn":
            return sknn_distances(matrix, config.k), None
        centroid, raw = kmeans_distances(matrix)
        return raw, centroid
    sample_rows = np.asarray(sample_rows, dtype=np.intp)
    reference = matrix[sample_rows]
    if config.method == "kmeans":
        centroid = reference.mean(axis=0)
        return centroid_distances(matrix, centroid), centroid
    if len(sample_rows) <= config.k:
        raise PopulationTooSmall(f"sample of {len(sample_rows)} rows is too small for k={config.k}")
    self_index = np.full(n, -1, dtype=np.intp)
    self_index[sample_rows] = np.arange(len(sample_rows))
    near = nearest_distances(matrix, reference, config.k, self_index)
    if config.method == "dknn":
        return near[:, -1], None
    return np.cumsum(near, axis=1)[:, -1], None


def score_matrix(
    matrix: np.ndarray,
    config: ScorerConfig,
    usernames: Sequence[str] | None = None,
    sample_size: int | None = None,
    seed: int | None = 0,
) -> ScoreResult:
    """Score every row; with ``sample_size`` the reference set is a seeded subsample."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n == 0:
        raise EmptyPopulation("no rows to score")
    if usernames is None:
        usernames = tuple(str(i) for i in range(n))
    sample = sample_features(n, sample_size if sample_size is not None else n, seed)
    raw, centroid = raw_distances(matrix, config, sample)
    scores = normalize_scores(raw)
    return ScoreResult(
        tuple(usernames), raw, scores, scores > config.threshold, config, sample, centroid
    )
