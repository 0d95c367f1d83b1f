# qosm/seeding.py
import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def child_seed(seed: int, *keys: Key) -> np.random.SeedSequence:
    """
    Derives an independent, reproducible seed sequence for one consumer
    (e.g. ("selection", 212) or ("ann", "main", 212)).
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        entropy.append(zlib.crc32(key.encode()) if isinstance(key, str) else int(key) & 0xFFFFFFFF)
    return np.random.SeedSequence(entropy)


def child_rng(seed: int, *keys: Key) -> np.random.Generator:
    return np.random.default_rng(child_seed(seed, *keys))


def child_int(seed: int, *keys: Key) -> int:
    return int(child_seed(seed, *keys).generate_state(1)[0])
