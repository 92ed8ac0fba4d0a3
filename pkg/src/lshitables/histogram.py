"""Bucket-count histograms, Laplace release, and the CountMin sketch.

A histogram is built by inserting bucket codes, then released exactly once
(optionally with ``Lap(1/epsilon)`` noise in every cell). Released
histograms are frozen; merging sums cells into a new histogram.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

NON_PRIVATE = math.inf


class ReleasedError(RuntimeError):
    """Mutation attempted on a histogram or sketch that was already released."""


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")


def encode_epsilon(epsilon: float) -> float | str:
    return "inf" if math.isinf(epsilon) else float(epsilon)


def decode_epsilon(value) -> float:
    return math.inf if value in ("inf", None) else float(value)


class Histogram:
    """``2**l`` real-valued bucket counters.

    ``epsilons`` holds one budget per contributing source (``inf`` for a
    non-private release); it is empty until the histogram is released.
    """

    def __init__(
        self,
        l: int,
        counts: np.ndarray | None = None,
        epsilons: Sequence[float] = (),
        sources: int = 1,
        released: bool = False,
    ) -> None:
        self.l = int(l)
        size = 1 << self.l
        if counts is None:
            counts = np.zeros(size)
        counts = np.array(counts, dtype=float)
        if counts.shape != (size,):
            raise ValueError(f"expected {size} counters for l={l}, got shape {counts.shape}")
        self.counts = counts
        self.epsilons = [float(e) for e in epsilons]
        self.sources = int(sources)
        self.released = released
        if released:
            self.counts.flags.writeable = False

    def __len__(self) -> int:
        return len(self.counts)

    def __repr__(self) -> str:
        state = "released" if self.released else "open"
        return f"Histogram(l={self.l}, total={self.counts.sum():.6g}, sources={self.sources}, {state})"

    def _check_code(self, code) -> None:
        if np.any(np.asarray(code) < 0) or np.any(np.asarray(code) >= len(self.counts)):
            raise IndexError(f"bucket code out of range [0, {len(self.counts)})")

    def increment(self, code: int) -> Histogram:
        if self.released:
            raise ReleasedError("histogram already released")
        self._check_code(code)
        self.counts[code] += 1
        return self

    def insert_codes(self, codes: np.ndarray) -> Histogram:
        """Bulk :meth:`increment`."""
        if self.released:
            raise ReleasedError("histogram already released")
        codes = np.asarray(codes, dtype=np.int64)
        self._check_code(codes)
        self.counts += np.bincount(codes, minlength=len(self.counts))
        return self

    def release(self, epsilon: float = NON_PRIVATE, rng: np.random.Generator | None = None) -> Histogram:
        """Freeze the histogram, adding Laplace noise first when ``epsilon`` is finite."""
        if self.released:
            raise ReleasedError("histogram already released")
        _check_epsilon(epsilon)
        if not math.isinf(epsilon):
            if rng is None:
                raise ValueError("a random generator is required for a private release")
            self.counts += rng.laplace(0.0, 1.0 / epsilon, size=len(self.counts))
        self.epsilons = [float(epsilon)]
        self.released = True
        self.counts.flags.writeable = False
        return self

    def bucket_count(self, code: int) -> float:
        self._check_code(code)
        return float(self.counts[code])

    @property
    def epsilon(self) -> float:
        """Per-source budget; only defined for single-source releases."""
        if len(self.epsilons) != 1:
            raise ValueError("histogram does not carry a single epsilon tag")
        return self.epsilons[0]

    def to_message(self, model_id: int, participant_id: int) -> dict:
        """Wire format broadcast by a participant."""
        if not self.released:
            raise ValueError("only released histograms can be broadcast")
        return {
            "l": self.l,
            "counts": self.counts.tolist(),
            "epsilon": encode_epsilon(self.epsilon),
            "model_id": int(model_id),
            "participant_id": int(participant_id),
        }

    @classmethod
    def from_message(cls, msg: dict) -> Histogram:
        return cls(msg["l"], np.array(msg["counts"], dtype=float), [decode_epsilon(msg["epsilon"])], released=True)


def add_laplace_noise(hist: Histogram, epsilon: float, rng: np.random.Generator) -> Histogram:
    """Release a noisy copy of ``hist``; ``hist`` itself is left open."""
    if hist.released:
        raise ReleasedError("histogram already released")
    _check_epsilon(epsilon)
    return Histogram(hist.l, hist.counts.copy()).release(epsilon, rng)


def merge(histograms: Sequence[Histogram]) -> Histogram:
    """Elementwise sum. The result is released and carries every source's budget."""
    if not histograms:
        raise ValueError("nothing to merge")
    l = histograms[0].l
    if any(h.l != l for h in histograms):
        raise ValueError("incompatible histograms")
    counts = np.sum([h.counts for h in histograms], axis=0)
    epsilons = [e for h in histograms for e in h.epsilons]
    return Histogram(l, counts, epsilons, sources=sum(h.sources for h in histograms), released=True)


# CountMin -----------------------------------------------------------------

_MASK32 = np.uint64(0xFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def fold_keys(Q: np.ndarray) -> np.ndarray:
    """Fold the rows of an integer matrix into 64-bit keys."""
    Q = np.asarray(Q, dtype=np.int64)
    h = np.zeros(Q.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j in range(Q.shape[1]):
            h = _splitmix64(h ^ Q[:, j].view(np.uint64))
    return h


class CountMinSketch:
    """``depth x width`` counters with one multiply-add-shift hash per row.

    Row ``r`` maps a key to ``((a_r * v + b_r) mod 2**64) >> 32`` scaled onto
    ``[0, width)``, where ``v`` is the key mixed down to 32 bits. The family is
    pairwise independent over ``v``; sketches built from the same ``seed``
    share their layout and can be merged.
    """

    def __init__(
        self,
        depth: int = 4,
        width: int = 1000,
        seed: int = 0,
        counters: np.ndarray | None = None,
        epsilons: Sequence[float] = (),
        released: bool = False,
    ) -> None:
        self.depth = int(depth)
        self.width = int(width)
        self.seed = int(seed)
        ab = np.random.default_rng(self.seed).integers(0, 2**63, size=(self.depth, 2), dtype=np.uint64)
        self._a = (ab[:, 0] << np.uint64(1)) | np.uint64(1)
        self._b = ab[:, 1]
        if counters is None:
            counters = np.zeros((self.depth, self.width))
        self.counters = np.array(counters, dtype=float)
        if self.counters.shape != (self.depth, self.width):
            raise ValueError("counter array does not match depth x width")
        self.epsilons = [float(e) for e in epsilons]
        self.released = released

    def buckets(self, keys: np.ndarray) -> np.ndarray:
        """Column index of every key in every row, shape ``(depth, n)``."""
        keys = np.asarray(keys, dtype=np.uint64)
        with np.errstate(over="ignore"):
            v = _splitmix64(keys) >> np.uint64(32)
            h = (self._a[:, None] * v[None, :] + self._b[:, None]) >> np.uint64(32)
            return ((h * np.uint64(self.width)) >> np.uint64(32)).astype(np.int64)

    def insert(self, keys: np.ndarray) -> CountMinSketch:
        if self.released:
            raise ReleasedError("sketch already released")
        cols = self.buckets(np.atleast_1d(keys))
        for r in range(self.depth):
            self.counters[r] += np.bincount(cols[r], minlength=self.width)
        return self

    def query(self, keys: np.ndarray) -> np.ndarray:
        cols = self.buckets(np.atleast_1d(keys))
        return self.counters[np.arange(self.depth)[:, None], cols].min(axis=0)

    def add_noise(self, epsilon: float, rng: np.random.Generator | None = None) -> CountMinSketch:
        """Release the sketch; every cell gets ``Lap(1/epsilon)`` when ``epsilon`` is finite."""
        if self.released:
            raise ReleasedError("sketch already released")
        _check_epsilon(epsilon)
        if not math.isinf(epsilon):
            if rng is None:
                raise ValueError("a random generator is required for a private release")
            self.counters += rng.laplace(0.0, 1.0 / epsilon, size=self.counters.shape)
        self.epsilons = [float(epsilon)]
        self.released = True
        return self

    def to_message(self, model_id: int, participant_id: int) -> dict:
        if not self.released:
            raise ValueError("only released sketches can be broadcast")
        return {
            "depth": self.depth,
            "width": self.width,
            "seed": self.seed,
            "counts": self.counters.tolist(),
            "epsilon": encode_epsilon(self.epsilons[0]),
            "model_id": int(model_id),
            "participant_id": int(participant_id),
        }

    @classmethod
    def from_message(cls, msg: dict) -> CountMinSketch:
        return cls(
            msg["depth"], msg["width"], msg["seed"], np.array(msg["counts"], dtype=float),
            [decode_epsilon(msg["epsilon"])], released=True,
        )


def cm_insert(sketch: CountMinSketch, key) -> CountMinSketch:
    return sketch.insert(np.array([key], dtype=np.uint64))


def cm_query(sketch: CountMinSketch, key) -> float:
    return float(sketch.query(np.array([key], dtype=np.uint64))[0])


def cm_add_noise(sketch: CountMinSketch, epsilon: float, rng: np.random.Generator) -> CountMinSketch:
    return sketch.add_noise(epsilon, rng)


def merge_sketches(sketches: Sequence[CountMinSketch]) -> CountMinSketch:
    if not sketches:
        raise ValueError("nothing to merge")
    first = sketches[0]
    if any((s.depth, s.width, s.seed) != (first.depth, first.width, first.seed) for s in sketches):
        raise ValueError("incompatible sketches")
    return CountMinSketch(
        first.depth, first.width, first.seed,
        np.sum([s.counters for s in sketches], axis=0),
        [e for s in sketches for e in s.epsilons],
        released=True,
    )
