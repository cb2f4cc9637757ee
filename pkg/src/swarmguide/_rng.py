"""Counter-based uniform random streams.

Every draw is a pure hash of (master seed, stream tag, step, agent id), so a
simulation produces the same numbers no matter how agents are batched or in
what order they are evaluated.  Removing an agent never perturbs the draws of
the survivors because each agent keeps its id for life.

The hash is the splitmix64 output finalizer applied to a Weyl-sequence input,
a standard construction for counter-mode generation.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

# Stream tags keep draws for different purposes statistically independent.
PLACEMENT_STREAM = 0
MOVE_STREAM = 1
REMOVAL_STREAM = 2


def mix64(x: int) -> int:
    """splitmix64 output finalizer on plain Python integers."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * _MIX_A) & _MASK
    x = ((x ^ (x >> 27)) * _MIX_B) & _MASK
    return x ^ (x >> 31)


def round_key(seed: int, stream: int, step: int) -> int:
    """Collapse (seed, stream tag, step) into one 64-bit round key."""
    k = mix64((seed + _GAMMA) & _MASK)
    k = mix64((k + stream * _GAMMA) & _MASK)
    return mix64((k + step * _GAMMA) & _MASK)


def uniform_stream(seed: int, stream: int, step: int, ids: np.ndarray) -> np.ndarray:
    """One uniform draw in [0, 1) per agent id for the given round.

    ``ids`` is an integer array of persistent agent identifiers.  The result
    is a float64 array of the same length, independent of id order: entry k
    depends only on (seed, stream, step, ids[k]).
    """
    key = round_key(seed, stream, step)
    z = np.asarray(ids).astype(np.uint64)
    z = z * np.uint64(_GAMMA)
    z = z ^ np.uint64(key)
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX_A)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX_B)
    z = z ^ (z >> np.uint64(31))
    # Top 53 bits scale to the unit interval without rounding bias.
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
