"""Named random streams derived from a single top-level seed.

Each consumer (split, kmeans, ...) gets its own stream so that adding a new
consumer never perturbs the numbers drawn by existing ones.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *names: object) -> int:
    key = "/".join([str(int(seed))] + [str(n) for n in names])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, *names: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *names))
