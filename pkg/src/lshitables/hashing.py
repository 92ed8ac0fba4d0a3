"""Random-feature and random-projection LSH families.

RF-LSH draws a random non-constant dimension ``i`` and a cut value
``c ~ U[min_i, max_i]``, and hashes ``x`` to the bit ``x_i >= c``. A composite
hash concatenates ``l`` such bits into an integer bucket code in ``[0, 2**l)``.

Dimension indices are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_HASHES = 20


@dataclass(frozen=True, eq=False)
class FeatureStats:
    """Per-dimension ``[min, max]`` ranges of a point set."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("mins and maxs must be 1-d arrays of equal length")
        if np.any(mins > maxs):
            raise ValueError("min exceeds max in some dimension")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def d(self) -> int:
        return len(self.mins)

    @property
    def ranges(self) -> np.ndarray:
        return self.maxs - self.mins

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of constant dimensions (``min == max``)."""
        return self.mins == self.maxs

    @property
    def active(self) -> np.ndarray:
        """Indices of non-degenerate dimensions."""
        return np.flatnonzero(~self.degenerate)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureStats):
            return NotImplemented
        return np.array_equal(self.mins, other.mins) and np.array_equal(self.maxs, other.maxs)

    def to_dict(self) -> dict:
        mask = sum(1 << int(i) for i in np.flatnonzero(self.degenerate))
        return {
            "d": self.d,
            "min": self.mins.tolist(),
            "max": self.maxs.tolist(),
            "degenerate": mask,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> FeatureStats:
        stats = cls(np.array(obj["min"], dtype=float), np.array(obj["max"], dtype=float))
        if stats.d != obj["d"]:
            raise ValueError("dimension count does not match min/max vectors")
        return stats


def compute_feature_stats(points) -> FeatureStats:
    """Exact per-dimension min/max over ``points`` (an ``n x d`` array)."""
    X = np.asarray(points, dtype=float)
    if X.size == 0:
        raise ValueError("empty dataset")
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array of points, got shape {X.shape}")
    return FeatureStats(X.min(axis=0), X.max(axis=0))


@dataclass(frozen=True)
class RfHashFunction:
    dim: int
    cut: float


def rf_hash(h: RfHashFunction, x) -> int:
    return int(x[h.dim] >= h.cut)


@dataclass(frozen=True, eq=False)
class CompositeHash:
    """``l`` RF-LSH functions; function ``j`` sets bit ``j`` of the code."""

    dims: np.ndarray
    cuts: np.ndarray

    def __post_init__(self) -> None:
        dims = np.asarray(self.dims, dtype=np.int64)
        cuts = np.asarray(self.cuts, dtype=float)
        if dims.shape != cuts.shape or dims.ndim != 1:
            raise ValueError("dims and cuts must be 1-d arrays of equal length")
        if not 1 <= len(dims) <= MAX_HASHES:
            raise ValueError(f"composite hash length must be in [1, {MAX_HASHES}], got {len(dims)}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "cuts", cuts)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.dims)

    @property
    def functions(self) -> list[RfHashFunction]:
        return [RfHashFunction(int(i), float(c)) for i, c in zip(self.dims, self.cuts)]

    def codes(self, X: np.ndarray) -> np.ndarray:
        """Bucket codes of every row of ``X``."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0], dtype=np.int64)
        for j, (i, c) in enumerate(zip(self.dims, self.cuts)):
            out |= (X[:, i] >= c).astype(np.int64) << j
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompositeHash):
            return NotImplemented
        return np.array_equal(self.dims, other.dims) and np.array_equal(self.cuts, other.cuts)

    def to_dict(self) -> dict:
        return {"l": self.l, "pairs": [[int(i), float(c)] for i, c in zip(self.dims, self.cuts)]}

    @classmethod
    def from_dict(cls, obj: dict) -> CompositeHash:
        pairs = obj["pairs"]
        if len(pairs) != obj["l"]:
            raise ValueError("pair count does not match l")
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs], dtype=float))


def composite_code(g: CompositeHash, x) -> int:
    x = np.asarray(x, dtype=float)
    return int(g.codes(x[None, :])[0])


def sample_rf_composite(stats: FeatureStats, l: int, rng: np.random.Generator) -> CompositeHash:
    """Draw ``l`` RF-LSH functions; dimensions with replacement, constant ones skipped."""
    if not 1 <= l <= MAX_HASHES:
        raise ValueError(f"l must be in [1, {MAX_HASHES}], got {l}")
    active = stats.active
    if len(active) == 0:
        raise ValueError("constant dataset")
    dims = rng.choice(active, size=l, replace=True)
    cuts = rng.uniform(stats.mins[dims], stats.maxs[dims])
    return CompositeHash(dims, cuts)


@dataclass(frozen=True)
class BaseModelParams:
    f: float
    l: int
    s: int
    seed: int

    def to_dict(self) -> dict:
        return {"f": self.f, "l": self.l, "s": self.s, "seed": self.seed}

    @classmethod
    def from_dict(cls, obj: dict) -> BaseModelParams:
        return cls(float(obj["f"]), int(obj["l"]), int(obj["s"]), int(obj["seed"]))


def scaling_range(s: int) -> tuple[float, float]:
    """Interval for the scaling ``f``; endpoints are sorted since they cross below s = 4."""
    lo, hi = 1 / math.sqrt(s), 1 - 1 / math.sqrt(s)
    return min(lo, hi), max(lo, hi)


def hash_count_range(s: int, f: float) -> tuple[float, float]:
    """Real interval ``[1 + 0.5 log_b s, log_b s]`` with ``b = max(2, 1/f)``."""
    log_b = math.log(s) / math.log(max(2.0, 1.0 / f))
    lo, hi = 1 + 0.5 * log_b, log_b
    return min(lo, hi), max(lo, hi)


def sample_base_params(
    s: int, rng: np.random.Generator, seed: int | None = None
) -> BaseModelParams:
    """Draw the scaling ``f`` and hash count ``l`` for one base model.

    ``l`` is the uniform draw over :func:`hash_count_range` rounded half-up and
    clamped to ``[1, MAX_HASHES]``. ``seed`` is recorded as-is; when omitted it
    is drawn from ``rng``.
    """
    if s < 2:
        raise ValueError("subsample too small")
    f = float(rng.uniform(*scaling_range(s)))
    raw = float(rng.uniform(*hash_count_range(s, f)))
    l = min(max(int(math.floor(raw + 0.5)), 1), MAX_HASHES)
    if seed is None:
        seed = int(rng.integers(0, 2**63))
    return BaseModelParams(f=f, l=l, s=s, seed=seed)


def weighted_l1(x, q, stats: FeatureStats) -> float:
    """Sum of ``|x_i - q_i| / (max_i - min_i)`` over non-degenerate dimensions."""
    act = stats.active
    x = np.asarray(x, dtype=float)[act]
    q = np.asarray(q, dtype=float)[act]
    return float(np.sum(np.abs(x - q) / stats.ranges[act]))


def rf_collision_prob(x, q, stats: FeatureStats) -> float:
    """Probability that one random RF-LSH function maps ``x`` and ``q`` together.

    A pair separates exactly when the cut lands in ``[min(x_i, q_i), max(x_i, q_i))``
    so each dimension contributes the fraction of ``[min_i, max_i]`` covered by
    that interval. For in-range points this is ``|x_i - q_i| / (max_i - min_i)``.
    """
    act = stats.active
    if len(act) == 0:
        return 1.0
    x = np.asarray(x, dtype=float)[act]
    q = np.asarray(q, dtype=float)[act]
    lo = np.clip(np.minimum(x, q), stats.mins[act], stats.maxs[act])
    hi = np.clip(np.maximum(x, q), stats.mins[act], stats.maxs[act])
    split = np.mean((hi - lo) / stats.ranges[act])
    return float(min(max(1.0 - split, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class RpHashFunction:
    a: np.ndarray
    b: float
    w: float


def sample_rp_hash(d: int, w: float, rng: np.random.Generator) -> RpHashFunction:
    if w <= 0:
        raise ValueError("width w must be positive")
    return RpHashFunction(a=rng.standard_normal(d), b=float(rng.uniform(0, w)), w=float(w))


def rp_hash(h: RpHashFunction, x) -> int:
    return int(math.floor((float(np.dot(x, h.a)) + h.b) / h.w))


def rsh_quantize(x, lo, hi, alpha, f):
    """Grid cell index ``floor(((x - lo)/(hi - lo) + alpha) / f)``; vectorises over ``x``."""
    if np.any(np.asarray(hi) <= np.asarray(lo)):
        raise ValueError("degenerate dimension")
    return np.floor(((np.asarray(x, dtype=float) - lo) / (hi - lo) + alpha) / f).astype(np.int64)
