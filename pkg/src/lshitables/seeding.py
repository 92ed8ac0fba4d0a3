"""Deterministic splitting of a master seed into per-model streams.

Model ``j`` owns a 64-bit seed. Its hash functions are drawn from
``default_rng([seed_j, 0])`` and participant ``p`` subsamples and noises with
``default_rng([seed_j, 1, p])``. A centralized run is participant 0, so a
one-participant collaboration reproduces it exactly.
"""

import numpy as np


def child_seeds(master_seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def hash_rng(model_seed: int) -> np.random.Generator:
    return np.random.default_rng([model_seed, 0])


def data_rng(model_seed: int, participant: int = 0) -> np.random.Generator:
    return np.random.default_rng([model_seed, 1, participant])
