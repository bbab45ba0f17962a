import zlib
from typing import Union

import numpy as np

SEQUENTIAL = "sequential"

SeedLike = Union[int, str, None]


def derive_seed(seed: int, stream: str) -> int:
    """Independent 63-bit seed for a named sub-stream ("training", "folds", ...)."""
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(stream.encode("utf-8"))])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def rng_for(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, stream))
