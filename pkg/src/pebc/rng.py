"""Random number generation for simulation runs.

Each run owns a Mersenne Twister (MT19937, via :class:`random.Random`) seeded
from the master seed and the run index through a splitmix64 finaliser.  Only
two primitives are used by the simulator:

``below(n)``  uniform integer in ``[0, n)`` by rejection on ``getrandbits``;
``bits53()``  uniform integer in ``[0, 2**53)``, i.e. a 53-bit real in [0, 1).
"""

from __future__ import annotations

import random

ALGORITHM = "mt19937"
MASK64 = (1 << 64) - 1
TWO53 = 1 << 53


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def run_seed(master: int, index: int) -> int:
    """Seed of run ``index`` in a batch started from ``master``."""
    return splitmix64(splitmix64(master & MASK64) ^ (index & MASK64))


class Rng:
    __slots__ = ("seed", "_r", "_bits")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._r = random.Random(self.seed)
        self._bits = self._r.getrandbits

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        k = n.bit_length()
        bits = self._bits
        r = bits(k)
        while r >= n:
            r = bits(k)
        return r

    def bits53(self) -> int:
        return self._bits(53)

    def random(self) -> float:
        return self.bits53() / TWO53


class ScriptedRng:
    """Replays a fixed list of draws; used to hand-check traces.

    Entries are integers for ``below`` and either integers in ``[0, 2**53)``
    or floats in ``[0, 1)`` for ``bits53``.
    """

    def __init__(self, draws):
        self._draws = list(draws)
        self._i = 0
        self.seed = 0
        self.log = []

    def _next(self):
        if self._i >= len(self._draws):
            raise IndexError("scripted draws exhausted")
        v = self._draws[self._i]
        self._i += 1
        return v

    def below(self, n):
        v = self._next()
        if not 0 <= v < n:
            raise ValueError(f"scripted draw {v} outside [0, {n})")
        self.log.append(("below", n, v))
        return v

    def bits53(self):
        v = self._next()
        if isinstance(v, float):
            v = int(v * TWO53)
        self.log.append(("bits53", v))
        return v

    @property
    def remaining(self) -> int:
        return len(self._draws) - self._i
