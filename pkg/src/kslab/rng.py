"""Deterministic random substreams.

Every random quantity is keyed by ``(seed, tag, level)``.  Site draws for one
key come from a single stream consumed in zigzag order ``0, 1, -1, 2, -2, ...``
so the value at site ``n`` does not depend on the window it is requested for.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

U64 = 2**64

# stream tags
SITE = 0
TRIAL = 1
RETRY = 2


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < U64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def generator(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``(seed, *key)``."""
    words = [check_seed(seed)] + [int(k) for k in key]
    if any(w < 0 for w in words):
        raise ValidationError("substream keys must be nonnegative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def derive_seed(seed: int, *key: int) -> int:
    """A fresh 64-bit seed for the child stream ``(seed, *key)``."""
    words = [check_seed(seed)] + [int(k) for k in key]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def zigzag(n):
    """Map site ``n`` to its position in the stream: 0,1,-1,2,-2 -> 0,1,2,3,4."""
    n = np.asarray(n, dtype=np.int64)
    return np.where(n > 0, 2 * n - 1, -2 * n)


def site_uniforms(seed: int, level: int, sites) -> np.ndarray:
    """Uniform(0,1) draws for the given integer sites at one level."""
    sites = np.asarray(sites, dtype=np.int64)
    if sites.size == 0:
        return np.zeros(0)
    pos = zigzag(sites)
    stream = generator(seed, SITE, level).random(int(pos.max()) + 1)
    return stream[pos]
