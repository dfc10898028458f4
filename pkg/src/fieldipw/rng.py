"""Portable random streams.

Multi-label resolution uses SplitMix64 keyed by ``(seed, record index)`` so the
choice made for a record depends only on the seed and its position, never on
platform or library version.  The synthetic generator uses numpy's Philox4x64-10
counter-based bit generator, which is likewise fully specified.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

LABEL_RNG_NAME = "splitmix64(seed + (index+1) * 0x9E3779B97F4A7C15)"
SYNTH_RNG_NAME = "numpy.random.Philox (Philox4x64-10) keyed by SeedSequence([seed, stream])"


def splitmix64(state: int) -> int:
    z = (state + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def record_draw(seed: int, index: int) -> int:
    """64-bit draw for record ``index`` under ``seed``."""
    return splitmix64((seed + (index + 1) * GOLDEN) & MASK64)


def choose_index(seed: int, index: int, m: int) -> int:
    """Uniform choice in ``range(m)`` using the top 53 bits of the record draw."""
    if m < 1:
        raise ValueError("m must be positive")
    u = (record_draw(seed, index) >> 11) * (1.0 / (1 << 53))
    return min(int(u * m), m - 1)


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for ``(seed, stream)``, keyed through numpy's SeedSequence."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & MASK64, stream])))
