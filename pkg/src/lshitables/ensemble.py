"""LSH iTables: an ensemble of RF-LSH bucket-count histograms.

Each base model hashes a random subsample into ``2**l`` buckets with a
composite RF-LSH function ``g``. A query scores ``log2(max(count, 1))`` of its
bucket, and the ensemble averages over base models. Large buckets mean dense
regions, so LOWER ensemble scores are MORE outlying; every score is paired
with an :class:`Orientation` so downstream ranking cannot invert it silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .hashing import (
    BaseModelParams,
    CompositeHash,
    FeatureStats,
    compute_feature_stats,
    sample_base_params,
    sample_rf_composite,
)
from .histogram import NON_PRIVATE, Histogram, decode_epsilon, encode_epsilon
from .seeding import child_seeds, data_rng, hash_rng

MAX_SUBSAMPLE = 1000


class Orientation(str, Enum):
    LOWER_IS_OUTLIER = "lower-is-outlier"
    HIGHER_IS_OUTLIER = "higher-is-outlier"


class DetectorKind(str, Enum):
    LSH_ITABLES = "lsh-itables"
    RSH = "rs-h"
    IFOREST = "iforest"


def default_subsample_size(n: int) -> int:
    return min(MAX_SUBSAMPLE, n)


def subsample(points: np.ndarray, s: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform subsample without replacement; the whole set when ``s >= n``."""
    n = len(points)
    if s >= n:
        return points
    return points[rng.choice(n, size=s, replace=False)]


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty local data" if X.size == 0 else f"expected n x d points, got {X.shape}")
    return X


def train_base(
    points,
    g: CompositeHash,
    s: int,
    epsilon: float = NON_PRIVATE,
    rng: np.random.Generator | None = None,
) -> Histogram:
    """Histogram one subsample of ``points`` under ``g`` and release it."""
    X = _as_points(points)
    if rng is None:
        rng = np.random.default_rng()
    S = subsample(X, min(s, len(X)), rng)
    return Histogram(g.l).insert_codes(g.codes(S)).release(epsilon, rng)


def bucket_scores(counts: np.ndarray) -> np.ndarray:
    return np.log2(np.maximum(counts, 1.0))


def score_base(hist: Histogram, g: CompositeHash, q):
    """``log2(max(Counter[g(q)], 1))`` for one point or each row of a matrix."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        return float(bucket_scores(hist.counts[g.codes(q[None, :])])[0])
    return bucket_scores(hist.counts[g.codes(q)])


@dataclass
class BaseModel:
    params: BaseModelParams
    g: CompositeHash
    histogram: Histogram

    def score(self, X: np.ndarray) -> np.ndarray:
        return bucket_scores(self.histogram.counts[self.g.codes(X)])

    def to_dict(self) -> dict:
        h = self.histogram
        return {
            "params": self.params.to_dict(),
            "g": self.g.to_dict(),
            "histogram": {
                "l": h.l,
                "counts": h.counts.tolist(),
                "epsilons": [encode_epsilon(e) for e in h.epsilons],
                "sources": h.sources,
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> BaseModel:
        h = obj["histogram"]
        hist = Histogram(
            h["l"], np.array(h["counts"], dtype=float),
            [decode_epsilon(e) for e in h["epsilons"]], sources=h["sources"], released=True,
        )
        return cls(BaseModelParams.from_dict(obj["params"]), CompositeHash.from_dict(obj["g"]), hist)


@dataclass
class EnsembleModel:
    kind: DetectorKind
    stats: FeatureStats
    models: list = field(default_factory=list)
    master_seed: int = 0

    @property
    def m(self) -> int:
        return len(self.models)

    @property
    def orientation(self) -> Orientation:
        return Orientation.LOWER_IS_OUTLIER

    def score(self, X) -> np.ndarray:
        """Average base-model score of every row of ``X``."""
        X = np.asfortranarray(np.asarray(X, dtype=float))
        total = np.zeros(X.shape[0])
        for model in self.models:
            total += model.score(X)
        return total / len(self.models)

    def to_dict(self) -> dict:
        return {
            "kind": DetectorKind(self.kind).value,
            "master_seed": self.master_seed,
            "stats": self.stats.to_dict(),
            "models": [b.to_dict() for b in self.models],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> EnsembleModel:
        kind = DetectorKind(obj["kind"])
        if kind is DetectorKind.LSH_ITABLES:
            models = [BaseModel.from_dict(b) for b in obj["models"]]
        elif kind is DetectorKind.RSH:
            from .rsh import RshBaseModel

            models = [RshBaseModel.from_dict(b) for b in obj["models"]]
        else:
            raise ValueError(f"{kind.value} models are not serialisable as ensembles")
        return cls(kind, FeatureStats.from_dict(obj["stats"]), models, obj["master_seed"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> EnsembleModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


def ensemble_score(model, q):
    """Return ``(scores, orientation)`` for a point or a matrix of points."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        return float(model.score(q[None, :])[0]), model.orientation
    return model.score(q), model.orientation


def draw_shared_hashes(
    stats: FeatureStats, s: int, m: int, master_seed: int
) -> list[tuple[BaseModelParams, CompositeHash]]:
    """Per-model parameters and composite hashes, one deterministic stream each."""
    out = []
    for seed in child_seeds(master_seed, m):
        rng = hash_rng(seed)
        params = sample_base_params(s, rng, seed=seed)
        out.append((params, sample_rf_composite(stats, params.l, rng)))
    return out


def lsh_itables_train(
    points,
    m: int = 100,
    epsilon: float = NON_PRIVATE,
    seed: int = 0,
    s: int | None = None,
) -> EnsembleModel:
    """Train ``m`` base models on subsamples of size ``s = min(1000, n)``."""
    X = _as_points(points)
    if m < 1:
        raise ValueError("m must be at least 1")
    if s is None:
        s = default_subsample_size(len(X))
    stats = compute_feature_stats(X)
    models = []
    for params, g in draw_shared_hashes(stats, s, m, seed):
        hist = train_base(X, g, s, epsilon, data_rng(params.seed, 0))
        models.append(BaseModel(params, g, hist))
    return EnsembleModel(DetectorKind.LSH_ITABLES, stats, models, seed)


