"""
Named RNG substreams derived from one master seed.

The generator for stream S and indices (i, j, ...) is
``default_rng(SeedSequence(seed, spawn_key=(S, i, j, ...)))``. Stream ids are
fixed, so changing how many models one stream feeds never perturbs another.
"""

from enum import IntEnum
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence]


class Stream(IntEnum):
    """Stream ids of the counter scheme."""
    DATA = 0
    SPLIT = 1
    OWNER_MODELS = 2
    SHADOW_MODELS = 3
    NOISE = 4
    QUERIES = 5


def derive_rng(seed: int, stream: Stream, *index: int) -> np.random.Generator:
    """Generator for substream ``stream`` at ``index`` under master ``seed``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),) + tuple(int(i) for i in index))
    return np.random.default_rng(sequence)


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Accept a seed, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
