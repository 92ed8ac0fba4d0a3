"""In-process simulation of collaborative outlier detection.

A coordinator publishes the shared hashing spec (feature ranges plus the
``m`` base-model hash functions). Every participant trains one histogram per
base model on its own shard, releases it (noised when its epsilon is finite),
merges everybody's releases and scores its own points. Every message goes
through JSON so that participants only ever see what was broadcast.

The coordinator computes feature ranges over the full dataset, standing in
for a trusted party. That disclosure is not covered by the privacy account.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .ensemble import (
    BaseModel,
    DetectorKind,
    EnsembleModel,
    default_subsample_size,
    draw_shared_hashes,
    subsample,
    train_base,
)
from .evaluation import auc
from .hashing import BaseModelParams, CompositeHash, FeatureStats, compute_feature_stats
from .histogram import NON_PRIVATE, CountMinSketch, Histogram, merge, merge_sketches
from .iforest import iforest_local_only_train
from .rsh import RshBaseModel, RshHashSpec, build_sketch, draw_rsh_spec
from .seeding import child_seeds, data_rng, hash_rng

logger = logging.getLogger(__name__)

UNIFORM = "uniform"
OUTLIER_SKEWED = "outlier-skewed"


@dataclass(frozen=True)
class PartitionSpec:
    k: int
    strategy: str = UNIFORM
    skew: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.strategy not in (UNIFORM, OUTLIER_SKEWED):
            raise ValueError(f"unknown partition strategy {self.strategy!r}")
        if not 0.0 <= self.skew <= 1.0:
            raise ValueError("skew must lie in [0, 1]")


def partition(dataset: Dataset, spec: PartitionSpec) -> list[Dataset]:
    """Split into ``k`` disjoint shards covering the dataset.

    ``uniform`` deals a random permutation into near-equal shards.
    ``outlier-skewed`` first routes a ``skew`` fraction of the labelled
    outliers to participant 0 and deals the rest the same way. Rows keep
    their original order inside each shard.
    """
    if spec.k > dataset.n:
        raise ValueError(f"cannot split {dataset.n} points among {spec.k} participants")
    rng = np.random.default_rng(spec.seed)
    idx = np.arange(dataset.n)
    routed = np.array([], dtype=np.int64)
    if spec.strategy == OUTLIER_SKEWED:
        outliers = np.flatnonzero(dataset.y == 1)
        routed = rng.choice(outliers, size=int(round(spec.skew * len(outliers))), replace=False)
        idx = np.setdiff1d(idx, routed)
    chunks = np.array_split(rng.permutation(idx), spec.k)
    chunks[0] = np.concatenate([chunks[0], routed])
    return [dataset.subset(np.sort(c), name=f"{dataset.name}[{p}]") for p, c in enumerate(chunks)]


@dataclass
class PrivacyAccount:
    """Budgets of the released histograms.

    ``total`` adds the per-participant budgets. Each participant releases
    ``releases_per_participant`` histograms of overlapping data at that
    budget, so ``sequential_total`` is the bound if they are composed.
    """

    epsilons: list[float]
    releases_per_participant: int = 1

    @property
    def total(self) -> float:
        return float(sum(self.epsilons))

    @property
    def sequential_total(self) -> float:
        return self.total * self.releases_per_participant


class Transcript:
    """Every exchanged message, serialised. Optionally written as JSON lines."""

    def __init__(self, keep: bool = False) -> None:
        self.keep = keep
        self.lines: list[str] = []

    def send(self, kind: str, payload: dict) -> dict:
        line = json.dumps({"kind": kind, **payload})
        if self.keep:
            self.lines.append(line)
        msg = json.loads(line)
        msg.pop("kind")
        return msg

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.lines) + ("\n" if self.lines else ""))


class Coordinator:
    """Samples the shared hash functions; never sees released histograms."""

    def __init__(self, X: np.ndarray, m: int, seed: int, kind: DetectorKind = DetectorKind.LSH_ITABLES) -> None:
        self.kind = DetectorKind(kind)
        self.stats = compute_feature_stats(X)
        self.s = default_subsample_size(len(X))
        self.m = m
        self.seed = seed

    def hash_spec_message(self) -> dict:
        msg = {"detector": self.kind.value, "master_seed": self.seed, "stats": self.stats.to_dict()}
        if self.kind is DetectorKind.LSH_ITABLES:
            msg["models"] = [
                {"params": p.to_dict(), "g": g.to_dict()}
                for p, g in draw_shared_hashes(self.stats, self.s, self.m, self.seed)
            ]
        elif self.kind is DetectorKind.RSH:
            msg["models"] = [
                draw_rsh_spec(self.stats, self.s, hash_rng(sd), seed=sd).to_dict()
                for sd in child_seeds(self.seed, self.m)
            ]
        else:
            raise ValueError(f"{self.kind.value} is not mergeable")
        return msg


@dataclass(eq=False)
class Participant:
    pid: int
    shard: Dataset
    epsilon: float = NON_PRIVATE
    kind: DetectorKind = DetectorKind.LSH_ITABLES
    stats: FeatureStats | None = None
    specs: list = field(default_factory=list)
    released: list = field(default_factory=list)
    model: EnsembleModel | None = None
    master_seed: int = 0

    def receive_hash_spec(self, msg: dict) -> None:
        self.kind = DetectorKind(msg["detector"])
        self.master_seed = msg["master_seed"]
        self.stats = FeatureStats.from_dict(msg["stats"])
        if self.kind is DetectorKind.LSH_ITABLES:
            self.specs = [
                (BaseModelParams.from_dict(o["params"]), CompositeHash.from_dict(o["g"])) for o in msg["models"]
            ]
        else:
            self.specs = [RshHashSpec.from_dict(o) for o in msg["models"]]

    def train_and_release(self) -> list[dict]:
        """One released histogram (or sketch) per base model."""
        if self.shard.n == 0:
            self.released = []
            return []
        X = self.shard.X
        s = default_subsample_size(len(X))
        out = []
        for j, spec in enumerate(self.specs):
            if self.kind is DetectorKind.LSH_ITABLES:
                params, g = spec
                hist = train_base(X, g, s, self.epsilon, data_rng(params.seed, self.pid))
                out.append(hist.to_message(j, self.pid))
            else:
                rng = data_rng(spec.params.seed, self.pid)
                sketch = build_sketch(spec, subsample(X, s, rng), self.epsilon, rng)
                out.append(sketch.to_message(j, self.pid))
        self.released = out
        return out

    def merge_releases(self, releases: Sequence[dict]) -> EnsembleModel:
        """Sum every participant's release per base model into the global model."""
        by_model: dict[int, list[dict]] = {j: [] for j in range(len(self.specs))}
        for msg in releases:
            by_model[msg["model_id"]].append(msg)
        models = []
        for j, spec in enumerate(self.specs):
            msgs = sorted(by_model[j], key=lambda m: m["participant_id"])
            if self.kind is DetectorKind.LSH_ITABLES:
                params, g = spec
                models.append(BaseModel(params, g, merge([Histogram.from_message(m) for m in msgs])))
            else:
                models.append(RshBaseModel(spec, merge_sketches([CountMinSketch.from_message(m) for m in msgs])))
        self.model = EnsembleModel(self.kind, self.stats, models, self.master_seed)
        return self.model

    def score(self) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("participant has not merged a global model yet")
        if self.shard.n == 0:
            raise ValueError(f"participant {self.pid} holds no data")
        return self.model.score(self.shard.X)

    def local_auc(self) -> float | None:
        """AUC on the local shard, ``None`` when the shard is empty or single-class."""
        if self.shard.n == 0 or len(np.unique(self.shard.y)) < 2:
            return None
        return auc(self.score(), self.shard.y, self.model.orientation)


@dataclass
class CollabResult:
    aucs: dict[int, float | None]
    account: PrivacyAccount
    participants: list[Participant]

    @property
    def mean_auc(self) -> float:
        vals = [a for a in self.aucs.values() if a is not None]
        if not vals:
            raise ValueError("no participant could compute an AUC")
        return float(np.mean(vals))


def _epsilons(epsilon, k: int) -> list[float]:
    if isinstance(epsilon, (int, float)):
        return [float(epsilon)] * k
    eps = [float(e) for e in epsilon]
    if len(eps) != k:
        raise ValueError(f"expected {k} per-participant budgets, got {len(eps)}")
    return eps


def run_collaboration(
    dataset: Dataset,
    spec: PartitionSpec,
    m: int = 100,
    epsilon: float | Sequence[float] = NON_PRIVATE,
    seed: int = 0,
    detector: DetectorKind | str = DetectorKind.LSH_ITABLES,
    transcript_path=None,
) -> CollabResult:
    """Partition, share hashes, train-and-release, merge, and score locally."""
    eps = _epsilons(epsilon, spec.k)
    for e in eps:
        if not e > 0:
            raise ValueError(f"epsilon must be positive, got {e}")
    shards = partition(dataset, spec)
    transcript = Transcript(keep=transcript_path is not None)

    coordinator = Coordinator(dataset.X, m, seed, DetectorKind(detector))
    hash_msg = coordinator.hash_spec_message()
    participants = [Participant(p, shard, eps[p]) for p, shard in enumerate(shards)]
    for p in participants:
        p.receive_hash_spec(transcript.send("hash-spec", hash_msg))

    # Barrier: merging starts only after every participant has released.
    releases = [msg for p in participants for msg in p.train_and_release()]
    delivered = [transcript.send("release", msg) for msg in releases]
    for p in participants:
        p.merge_releases(delivered)

    aucs = {}
    for p in participants:
        aucs[p.pid] = p.local_auc()
        if aucs[p.pid] is None:
            logger.warning("participant %d excluded from AUC averaging (%d points)", p.pid, p.shard.n)
    if transcript_path is not None:
        transcript.write(transcript_path)
    return CollabResult(aucs, PrivacyAccount(eps, m), participants)


def run_collaboration_rsh(dataset: Dataset, spec: PartitionSpec, m: int = 100, epsilon=NON_PRIVATE, seed: int = 0,
                          transcript_path=None) -> CollabResult:
    return run_collaboration(dataset, spec, m, epsilon, seed, DetectorKind.RSH, transcript_path)


def local_iforest_aucs(shards: Sequence[Dataset], m: int = 100, seed: int = 0) -> dict[int, float | None]:
    """AUC of a forest trained and evaluated on each shard alone."""
    out = {}
    for p, (shard, model) in enumerate(zip(shards, iforest_local_only_train([s.X for s in shards], m, seed))):
        if shard.n == 0 or len(np.unique(shard.y)) < 2:
            out[p] = None
        else:
            out[p] = auc(model.score(shard.X), shard.y, model.orientation)
    return out


