"""Dataset loading and synthetic generators."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hashing import FeatureStats, compute_feature_stats

# Reference (n, d, outliers) of the ODDS/UCI benchmarks after preprocessing.
REFERENCE_SHAPES = {
    "breastw": (683, 9, 239),
    "pima": (768, 8, 268),
    "cardio": (1822, 21, 175),
    "mnist": (7603, 100, 700),
    "musk": (3062, 166, 97),
    "pendigits": (6870, 16, 156),
    "satimage-2": (5801, 36, 69),
    "thyroid": (3656, 6, 93),
    "shuttle": (49097, 9, 3511),
    "cover": (286048, 54, 2747),
    "kdd99": (48113, 40, 200),
}


class DataError(ValueError):
    pass


@dataclass(eq=False)
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    note: str = ""
    ids: np.ndarray = field(default=None)  # row ids in the source dataset

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise DataError(f"expected a 2-d feature matrix, got shape {self.X.shape}")
        if len(self.y) != len(self.X):
            raise DataError("labels and points differ in length")
        if self.ids is None:
            self.ids = np.arange(len(self.X))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_outliers(self) -> int:
        return int(self.y.sum())

    def subset(self, idx, name: str | None = None) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(name or self.name, self.X[idx], self.y[idx], self.note, self.ids[idx])

    def stats(self) -> FeatureStats:
        return compute_feature_stats(self.X)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_col: int = -1, dedup: bool = True, name: str | None = None) -> Dataset:
    """Read a numeric CSV with a 0/1 label column (last column by default).

    A non-numeric first row is taken as a header. With ``dedup`` rows whose
    feature vectors repeat an earlier row are dropped (first occurrence wins,
    labels are not compared).
    """
    path = Path(path)
    name = name or path.stem.lower()
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows, start = rows[1:], 2
    else:
        start = 1
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: need at least one feature and a label column")
    lab = label_col % width
    feats, labels = [], []
    for lineno, row in enumerate(rows, start=start):
        if len(row) != width:
            raise DataError(f"{path}: row {lineno} has {len(row)} cells, expected {width}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: non-numeric cell ({exc})") from None
        if vals[lab] not in (0.0, 1.0):
            raise DataError(f"{path}: row {lineno}: label must be 0 or 1, got {row[lab]!r}")
        labels.append(int(vals[lab]))
        feats.append(vals[:lab] + vals[lab + 1:])

    X = np.array(feats)
    y = np.array(labels, dtype=np.int64)
    ids = np.arange(len(X))
    note = f"loaded from {path}"
    if dedup:
        _, first = np.unique(X, axis=0, return_index=True)
        keep = np.sort(first)
        if len(keep) < len(X):
            note += f"; {len(X) - len(keep)} duplicate rows removed"
        X, y, ids = X[keep], y[keep], ids[keep]
    ds = Dataset(name, X, y, note, ids)
    check_reference_shape(ds)
    return ds


def check_reference_shape(ds: Dataset) -> bool:
    """Warn when a known benchmark's shape differs from its reference counts."""
    ref = REFERENCE_SHAPES.get(ds.name)
    if ref is None:
        return True
    got = (ds.n, ds.d, ds.n_outliers)
    if got != ref:
        warnings.warn(
            f"dataset {ds.name!r}: (n, d, outliers) = {got} but the reference is {ref}",
            stacklevel=2,
        )
        return False
    return True


def synth_planted(
    n_inliers: int, n_outliers: int, d: int, separation: float, seed: int = 0
) -> Dataset:
    """Gaussian inlier cluster with outliers spread over a shell around it.

    The shell radius is ``separation`` times the largest inlier norm.
    """
    if separation <= 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    inliers = rng.standard_normal((n_inliers, d))
    radius = separation * (np.linalg.norm(inliers, axis=1).max() if n_inliers else 1.0)
    dirs = rng.standard_normal((n_outliers, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    X = np.vstack([inliers, radius * dirs])
    y = np.r_[np.zeros(n_inliers, dtype=np.int64), np.ones(n_outliers, dtype=np.int64)]
    return Dataset("planted", X, y, f"synthetic: {n_inliers} inliers, {n_outliers} outliers, sep={separation}")


@dataclass(eq=False)
class BallPairInstance:
    points: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    r: float
    stats: FeatureStats
    count1: int
    count2: int


def _l1_ball_offsets(k: int, d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """``k`` offsets with l1 norm ~ U[0, r] and uniformly random direction."""
    radius = rng.uniform(0.0, r, size=k)
    direction = rng.dirichlet(np.ones(d), size=k) * rng.choice([-1.0, 1.0], size=(k, d))
    return direction * radius[:, None]


def synth_ball_pair(
    s: int,
    r: float = 0.2,
    seed: int = 0,
    d: int = 4,
    near1: int = 30,
    near2: int = 5,
) -> BallPairInstance:
    """Subsample with two probes whose weighted-l1 balls hold ``near1`` and ``near2`` points.

    Points live in ``[0, 1]^d``; two anchor points at the corners pin every
    range to exactly 1, so the weighted distance is the plain l1 distance.
    In-ball distances are uniform on ``[0, r]`` and every other point lies
    farther than ``r`` from both probes.
    """
    from .evaluation import ball_count

    if s < 20:
        raise ValueError("s must be at least 20")
    if near1 <= near2:
        raise ValueError("the first probe must have the larger ball")
    background = s - near1 - near2 - 2
    if background < 0:
        raise ValueError(f"s={s} cannot hold {near1} + {near2} ball points and 2 anchors")
    if not 0 < r <= 0.2:
        raise ValueError("r must lie in (0, 0.2] so balls stay inside the unit cube")

    rng = np.random.default_rng(seed)
    q1 = rng.uniform(0.3, 0.7, size=d)
    q2 = rng.uniform(0.3, 0.7, size=d)
    while np.abs(q1 - q2).sum() <= 2 * r:
        q2 = rng.uniform(0.3, 0.7, size=d)

    parts = [q1 + _l1_ball_offsets(near1, d, r, rng), q2 + _l1_ball_offsets(near2, d, r, rng)]
    bg = []
    while len(bg) < background:
        p = rng.uniform(0.0, 1.0, size=d)
        if np.abs(p - q1).sum() > r and np.abs(p - q2).sum() > r:
            bg.append(p)
    parts += [np.array(bg).reshape(-1, d), np.zeros((1, d)), np.ones((1, d))]
    points = np.vstack(parts)
    stats = compute_feature_stats(points)

    c1, c2 = ball_count(points, q1, r, stats), ball_count(points, q2, r, stats)
    if (c1, c2) != (near1, near2):
        raise AssertionError(f"ball counts {c1}, {c2} differ from the construction")
    return BallPairInstance(points, q1, q2, r, stats, c1, c2)
