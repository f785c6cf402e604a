"""Seed derivation and generator construction.

Every random stream in the toolkit is a PCG64 generator (numpy's
``PCG64``, 128-bit state, 64-bit output) seeded with a 64-bit integer.
Per-purpose seeds are derived from a master seed as the first 8 bytes
(little endian) of ``blake2b(f"{master}:{tag}:{index}")``, so streams are
independent of each other and of the order in which they are requested.
"""

from hashlib import blake2b

import numpy as np

SEED_SCHEME = "blake2b-64(master:tag:index) -> PCG64"
_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    """Return the 64-bit seed for stream ``(tag, index)`` under ``master_seed``."""
    key = f"{int(master_seed) & _MASK64}:{tag}:{int(index)}".encode()
    return int.from_bytes(blake2b(key, digest_size=8).digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
