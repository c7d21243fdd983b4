"""Counter-based random streams.

Walk sampling needs one independent stream per (master seed, root, walk index)
triple, cheap enough to derive tens of thousands of times per training batch
and identical no matter how the work is scheduled.  A splitmix64 counter
stream gives both: the key is a hash of the triple, the i-th draw is a hash
of (key, i), and everything vectorizes over walks.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SALT_A = np.uint64(0xD6E8FEB86659FD93)
_SALT_B = np.uint64(0xA5CB3F4D9F8E1B7B)


def _finalize(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _u64(x) -> np.ndarray:
    # two's-complement view so negative ints and any magnitude are accepted;
    # 0-d arrays rather than numpy scalars because scalar uint64 overflow warns
    if isinstance(x, np.ndarray):
        return x.astype(np.int64).view(np.uint64) if x.dtype != np.uint64 else x
    return np.asarray(int(x) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)


def stream_key(master: int, a, b):
    """Key for the stream identified by (master, a, b); vectorizes over a or b."""
    with np.errstate(over="ignore"):
        k = _finalize(_u64(master) + _GOLDEN)
        k = _finalize(k ^ (_u64(a) * _SALT_A))
        k = _finalize(k ^ (_u64(b) * _SALT_B))
    return k


def stream_uniform(key, counter):
    """counter-th float64 in [0, 1) of the stream; vectorizes over key or counter."""
    with np.errstate(over="ignore"):
        bits = _finalize(_u64(key) + (_u64(counter) + np.uint64(1)) * _GOLDEN)
    return (bits >> np.uint64(11)) * np.float64(2.0 ** -53)


class CounterStream:
    """Sequential view of one stream: .random() yields draw 0, 1, 2, ..."""

    __slots__ = ("key", "counter")

    def __init__(self, master: int, a: int, b: int):
        self.key = stream_key(master, a, b)
        self.counter = 0

    def random(self) -> float:
        u = float(stream_uniform(self.key, self.counter))
        self.counter += 1
        return u
