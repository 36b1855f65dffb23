"""Deterministic random streams.

Every random choice in the package flows from a single integer seed through
named substreams, so unrelated consumers (weight init, data shuffling, noise
draws) never perturb each other's sequences when one of them changes.
"""

import hashlib

import numpy as np


def substream(seed: int, *names: str) -> np.random.Generator:
    """Return a Generator keyed by ``seed`` and a path of stream names.

    The same (seed, names) pair always yields the same stream; distinct
    names yield statistically independent streams. Names are hashed with
    SHA-256 so the mapping is stable across processes and platforms.
    """
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    digest = hashlib.sha256("/".join(names).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words]))
