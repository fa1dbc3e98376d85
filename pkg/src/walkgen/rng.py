"""Named, reproducible random streams derived from one master seed.

Every consumer asks for ``stream(seed, "name", index, ...)``; the key path is
folded into a numpy ``SeedSequence`` spawn key, so a stream depends only on its
key and never on how many numbers other streams have drawn.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError("stream key integers must be non-negative")
    return int(part)


def stream(master_seed: int, *key: int | str) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
