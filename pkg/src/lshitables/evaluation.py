"""AUC, repeated-run evaluation, and brute-force oracles."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .ensemble import DetectorKind, Orientation, lsh_itables_train
from .hashing import CompositeHash, FeatureStats
from .histogram import NON_PRIVATE
from .iforest import iforest_train
from .rsh import rsh_train
from .seeding import child_seeds

LEDGER_COLUMNS = ["detector", "dataset", "runs", "auc_mean", "auc_std", "seconds", "epsilon", "participants"]


def auc(scores, labels, orientation: Orientation = Orientation.HIGHER_IS_OUTLIER) -> float:
    """Probability that a random outlier outranks a random inlier; ties count 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("degenerate labels")
    if Orientation(orientation) is Orientation.LOWER_IS_OUTLIER:
        scores = -scores
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def ball_count(points, q, r: float, stats: FeatureStats) -> int:
    """Linear-scan ``|{x : weighted_l1(x, q) <= r}|``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    X = np.asarray(points, dtype=float)
    if len(X) == 0:
        return 0
    act = stats.active
    dist = (np.abs(X[:, act] - np.asarray(q, dtype=float)[act]) / stats.ranges[act]).sum(axis=1)
    return int((dist <= r).sum())


def exact_bucket_oracle(points, g: CompositeHash) -> dict[int, int]:
    """Bucket sizes by scanning every point and every hash function in Python."""
    counts: dict[int, int] = {}
    pairs = [(int(i), float(c)) for i, c in zip(g.dims, g.cuts)]
    for x in points:
        code = 0
        for bit, (i, c) in enumerate(pairs):
            if x[i] >= c:
                code += 1 << bit
        counts[code] = counts.get(code, 0) + 1
    return counts


@dataclass(frozen=True)
class DetectorConfig:
    kind: DetectorKind = DetectorKind.LSH_ITABLES
    m: int = 100
    epsilon: float = NON_PRIVATE

    def train(self, X: np.ndarray, seed: int):
        kind = DetectorKind(self.kind)
        if kind is DetectorKind.LSH_ITABLES:
            return lsh_itables_train(X, self.m, self.epsilon, seed)
        if kind is DetectorKind.RSH:
            return rsh_train(X, self.m, self.epsilon, seed)
        if not math.isinf(self.epsilon):
            raise ValueError("iforest has no private mode")
        return iforest_train(X, self.m, seed=seed)


def fit_score(config: DetectorConfig, X: np.ndarray, seed: int) -> tuple[np.ndarray, Orientation]:
    model = config.train(X, seed)
    return model.score(X), model.orientation


@dataclass(frozen=True)
class EvalResult:
    detector: str
    dataset: str
    runs: int
    auc_mean: float
    auc_std: float
    seconds: float
    epsilon: float = NON_PRIVATE
    participants: int = 1
    aucs: tuple[float, ...] = ()

    def row(self) -> dict:
        return {
            "detector": self.detector,
            "dataset": self.dataset,
            "runs": self.runs,
            "auc_mean": f"{self.auc_mean:.6f}",
            "auc_std": f"{self.auc_std:.6f}",
            "seconds": f"{self.seconds:.4f}",
            "epsilon": "inf" if math.isinf(self.epsilon) else repr(self.epsilon),
            "participants": self.participants,
        }


def run_seeds(master_seed: int, runs: int) -> list[int]:
    return child_seeds(master_seed, runs)


def repeated_eval(config: DetectorConfig, dataset, runs: int = 10, seed: int = 0, fit=fit_score) -> EvalResult:
    """Train and score ``runs`` times with seeds derived from ``seed``.

    Timing covers training and scoring only.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    aucs, seconds = [], 0.0
    for run_seed in run_seeds(seed, runs):
        t0 = time.perf_counter()
        scores, orientation = fit(config, dataset.X, run_seed)
        seconds += time.perf_counter() - t0
        aucs.append(auc(scores, dataset.y, orientation))
    return EvalResult(
        DetectorKind(config.kind).value, dataset.name, runs, float(np.mean(aucs)), float(np.std(aucs)),
        seconds, config.epsilon, 1, tuple(aucs),
    )


def append_results(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LEDGER_COLUMNS)
        if new:
            w.writeheader()
        w.writerows(rows)
