"""Seed derivation: one run seed fans out into independent substreams keyed
by (domain, index...), so adding workers or reordering scenes never changes
any other stream's randomness."""
from __future__ import annotations

import zlib

import numpy as np

_DOMAINS = {"scene": 1, "episode": 2, "worker": 3, "agent": 4, "noise": 5, "bench": 6}


def derive_seed(seed: int, domain: str, *indices: int) -> int:
    """Stable 64-bit subseed for a (domain, indices) slot of the run seed."""
    tag = _DOMAINS.get(domain)
    if tag is None:
        tag = zlib.crc32(domain.encode()) & 0xFFFF
    ss = np.random.SeedSequence([int(seed), tag, *[int(i) for i in indices]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(seed: int, domain: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, domain, *indices))
