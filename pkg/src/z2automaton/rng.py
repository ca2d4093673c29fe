"""Counter-based random streams shared by the Python and numba code paths.

Every trajectory owns a splitmix64 stream seeded from
``(master_seed, experiment_key, trajectory_index)``.  Streams never
interact, so ensemble results are independent of how trajectories are
scheduled across workers.  The numba kernels implement the identical
update (see ``_tabkernels.rng_next``); ``test_rng.py`` pins the two
implementations against each other.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit avalanche permutation."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a string, for stable experiment keys."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(master_seed: int, *keys: int | str) -> int:
    """Fold keys into a master seed; order-sensitive and collision-resistant
    enough for stream separation."""
    s = mix64(master_seed ^ 0x5851F42D4C957F2D)
    for k in keys:
        v = fnv1a64(k) if isinstance(k, str) else int(k) & MASK64
        s = mix64(s ^ ((v * GAMMA) & MASK64))
    return s


class Stream:
    """splitmix64 stream; the pure-Python mirror of the kernel RNG."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def bit(self) -> int:
        return self.u64() & 1

    def below(self, n: int) -> int:
        return self.u64() % n

    def u01(self) -> float:
        return (self.u64() >> 11) * 2.0**-53

    def spawn(self, *keys: int | str) -> "Stream":
        return Stream(derive_seed(self.state, *keys))
