"""Randomized subspace hashing (RS-H) baseline.

A base model picks ``l`` distinct dimensions, a grid scale ``f`` and shifts
``alpha_i ~ U[0, f]``, quantizes each subsampled point on that subspace with
:func:`~lshitables.hashing.rsh_quantize`, and counts the resulting cells in a
4 x 1000 CountMin sketch. Scores are ``log2(max(estimate, 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ensemble import (
    DetectorKind,
    EnsembleModel,
    _as_points,
    bucket_scores,
    default_subsample_size,
    subsample,
)
from .hashing import BaseModelParams, FeatureStats, compute_feature_stats, rsh_quantize, sample_base_params
from .histogram import NON_PRIVATE, CountMinSketch, decode_epsilon, encode_epsilon, fold_keys
from .seeding import child_seeds, data_rng, hash_rng

CM_DEPTH = 4
CM_WIDTH = 1000


@dataclass(eq=False)
class RshHashSpec:
    """Everything a participant needs to hash points the same way as its peers."""

    params: BaseModelParams
    dims: np.ndarray
    alphas: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    sketch_seed: int

    def keys(self, X: np.ndarray) -> np.ndarray:
        cells = rsh_quantize(X[:, self.dims], self.lo, self.hi, self.alphas, self.params.f)
        return fold_keys(cells)

    def new_sketch(self) -> CountMinSketch:
        return CountMinSketch(CM_DEPTH, CM_WIDTH, self.sketch_seed)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "dims": self.dims.tolist(),
            "alphas": self.alphas.tolist(),
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "sketch_seed": self.sketch_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> RshHashSpec:
        return cls(
            BaseModelParams.from_dict(obj["params"]),
            np.array(obj["dims"], dtype=np.int64),
            np.array(obj["alphas"], dtype=float),
            np.array(obj["lo"], dtype=float),
            np.array(obj["hi"], dtype=float),
            int(obj["sketch_seed"]),
        )


def draw_rsh_spec(
    stats: FeatureStats, s: int, rng: np.random.Generator, seed: int | None = None
) -> RshHashSpec:
    """Sample one base model's subspace against the ranges in ``stats``.

    ``l`` is capped at the number of non-constant dimensions since the
    subspace dimensions are distinct.
    """
    params = sample_base_params(s, rng, seed=seed)
    active = stats.active
    if len(active) == 0:
        raise ValueError("constant dataset")
    l = min(params.l, len(active))
    params = replace(params, l=l)
    dims = np.sort(rng.choice(active, size=l, replace=False))
    alphas = rng.uniform(0.0, params.f, size=l)
    return RshHashSpec(
        params, dims, alphas, stats.mins[dims], stats.maxs[dims], int(rng.integers(0, 2**63))
    )


def build_sketch(spec: RshHashSpec, S: np.ndarray, epsilon: float, rng: np.random.Generator) -> CountMinSketch:
    return spec.new_sketch().insert(spec.keys(S)).add_noise(epsilon, rng)


@dataclass(eq=False)
class RshBaseModel:
    spec: RshHashSpec
    sketch: CountMinSketch

    def score(self, X: np.ndarray) -> np.ndarray:
        return bucket_scores(self.sketch.query(self.spec.keys(X)))

    def to_dict(self) -> dict:
        sk = self.sketch
        return {
            "spec": self.spec.to_dict(),
            "counts": sk.counters.tolist(),
            "epsilons": [encode_epsilon(e) for e in sk.epsilons],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> RshBaseModel:
        spec = RshHashSpec.from_dict(obj["spec"])
        sk = CountMinSketch(
            CM_DEPTH, CM_WIDTH, spec.sketch_seed, np.array(obj["counts"], dtype=float),
            [decode_epsilon(e) for e in obj["epsilons"]], released=True,
        )
        return cls(spec, sk)


def rsh_train(points, m: int = 100, epsilon: float = NON_PRIVATE, seed: int = 0, s: int | None = None) -> EnsembleModel:
    """Train RS-H; each base model takes its grid ranges from its own subsample."""
    X = _as_points(points)
    if m < 1:
        raise ValueError("m must be at least 1")
    if s is None:
        s = default_subsample_size(len(X))
    models = []
    for model_seed in child_seeds(seed, m):
        drng = data_rng(model_seed, 0)
        S = subsample(X, s, drng)
        spec = draw_rsh_spec(compute_feature_stats(S), s, hash_rng(model_seed), seed=model_seed)
        models.append(RshBaseModel(spec, build_sketch(spec, S, epsilon, drng)))
    return EnsembleModel(DetectorKind.RSH, compute_feature_stats(X), models, seed)


def rsh_score(model: EnsembleModel, q) -> np.ndarray:
    return model.score(np.atleast_2d(np.asarray(q, dtype=float)))
