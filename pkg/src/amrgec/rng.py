"""Portable seeded generator used by every randomized routine in the package.

SplitMix64 (Steele, Lea & Flood 2014). State is a single unsigned 64-bit
integer; each step adds the odd constant 0x9E3779B97F4A7C15 and returns a
bijective mix of the new state:

    z = state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    return z ^ (z >> 31)

Derived draws:

* ``random()``  -- ``(next_u64() >> 11) * 2**-53``, a double in [0, 1).
* ``randbelow(n)`` -- rejection sampling: draw ``x = next_u64()`` until
  ``x < 2**64 - (2**64 mod n)``, return ``x mod n``.
* ``shuffle(xs)`` -- Fisher-Yates from the last index down, ``j = randbelow(i+1)``.

Only Python integer arithmetic is used, so streams are bit-identical on
every platform.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_seed(seed: int, index: int) -> int:
    """Independent per-record seed: first output of a generator seeded at ``seed + index``."""
    return SplitMix64(seed + index).next_u64()
