"""Isolation forest baseline.

Trees split on a random non-constant dimension at a cut drawn uniformly from
that dimension's range *within the node*, down to a height limit of 8 on
subsamples of 256 points. The score is ``2 ** (-E[h(q)] / c(psi))``, higher
meaning more outlying.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensemble import DetectorKind, Orientation, _as_points, subsample
from .seeding import child_seeds, data_rng

EULER_GAMMA = 0.5772156649015329
SUBSAMPLE = 256
HEIGHT_LIMIT = 8


def average_path_length(n) -> np.ndarray:
    """``c(n)``: mean unsuccessful-search path length in a BST of ``n`` keys."""
    n = np.asarray(n, dtype=float)
    out = np.zeros_like(n)
    big = n > 2
    out[n == 2] = 1.0
    m = n[big]
    out[big] = 2.0 * (np.log(m - 1.0) + EULER_GAMMA) - 2.0 * (m - 1.0) / m
    return out


@dataclass(eq=False)
class IsolationTree:
    """Array-encoded tree; ``feature[k] == -1`` marks a leaf holding ``size[k]`` points."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray

    @property
    def height(self) -> int:
        return int(self.depth.max())

    def leaves(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.height):
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            go_right = X[rows, np.where(inner, feat, 0)] >= self.threshold[node]
            node = np.where(inner, np.where(go_right, self.right[node], self.left[node]), node)
        return node

    def path_length(self, X: np.ndarray) -> np.ndarray:
        leaf = self.leaves(X)
        return self.depth[leaf] + average_path_length(self.size[leaf])


def grow_tree(S: np.ndarray, height_limit: int, rng: np.random.Generator) -> IsolationTree:
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def new_node(n: int, h: int) -> int:
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (size, n), (depth, h)):
            arr.append(v)
        return len(feature) - 1

    stack = [(new_node(len(S), 0), S)]
    while stack:
        k, pts = stack.pop()
        if len(pts) <= 1 or depth[k] >= height_limit:
            continue
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        candidates = np.flatnonzero(hi > lo)
        if len(candidates) == 0:
            continue
        i = int(rng.choice(candidates))
        c = float(rng.uniform(lo[i], hi[i]))
        mask = pts[:, i] >= c
        feature[k], threshold[k] = i, c
        left[k] = new_node(int((~mask).sum()), depth[k] + 1)
        right[k] = new_node(int(mask.sum()), depth[k] + 1)
        stack.append((left[k], pts[~mask]))
        stack.append((right[k], pts[mask]))

    return IsolationTree(
        np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64), np.array(size, dtype=np.int64), np.array(depth, dtype=np.int64),
    )


@dataclass(eq=False)
class IsolationForestModel:
    trees: list[IsolationTree] = field(default_factory=list)
    subsample_size: int = 0
    master_seed: int = 0
    kind: DetectorKind = DetectorKind.IFOREST

    @property
    def orientation(self) -> Orientation:
        return Orientation.HIGHER_IS_OUTLIER

    @property
    def m(self) -> int:
        return len(self.trees)

    def path_length(self, X) -> np.ndarray:
        """Mean path length over trees."""
        if not self.trees:
            raise ValueError("isolation forest has no trees (trained on an empty shard)")
        X = np.asarray(X, dtype=float)
        return np.mean([t.path_length(X) for t in self.trees], axis=0)

    def score(self, X) -> np.ndarray:
        norm = float(average_path_length(self.subsample_size))
        return 2.0 ** (-self.path_length(X) / (norm if norm > 0 else 1.0))


def iforest_train(
    points,
    m: int = 100,
    subsample_size: int = SUBSAMPLE,
    height_limit: int = HEIGHT_LIMIT,
    seed: int = 0,
) -> IsolationForestModel:
    X = _as_points(points)
    psi = min(subsample_size, len(X))
    trees = []
    for model_seed in child_seeds(seed, m):
        rng = data_rng(model_seed, 0)
        trees.append(grow_tree(subsample(X, psi, rng), height_limit, rng))
    return IsolationForestModel(trees, psi, seed)


def iforest_score(model: IsolationForestModel, q) -> np.ndarray:
    return model.score(np.atleast_2d(np.asarray(q, dtype=float)))


def iforest_local_only_train(shards, m: int = 100, seed: int = 0) -> list[IsolationForestModel]:
    """One forest per shard, trained on that shard alone.

    Empty shards get an empty forest whose scoring raises ``ValueError``.
    """
    out = []
    for X in shards:
        X = np.asarray(X, dtype=float)
        out.append(iforest_train(X, m, seed=seed) if len(X) else IsolationForestModel([], 0, seed))
    return out
