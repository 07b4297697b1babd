"""Seeded random streams keyed by (seed, tag, index).

Streams come from the counter-based Philox generator, so the numbers drawn
for one object never depend on which other objects were drawn first.
"""
import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def tag_code(tag):
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed, tag, index=0):
    """Independent ``numpy.random.Generator`` for one named object."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, tag_code(tag), int(index) & _MASK64])
    return np.random.Generator(np.random.Philox(ss))


def mix_seed(*parts):
    """Hash a tuple of integers to one 64-bit seed."""
    ss = np.random.SeedSequence([int(x) & _MASK64 for x in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
