"""Deterministic, platform-independent random number generation.

Every randomized operation in this package draws from SplitMix64 (Steele,
Lea & Flood's 64-bit mixing generator). It is implemented here in pure
integer arithmetic so a given seed produces the same stream on every
platform and in any faithful re-implementation:

    state    <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z        <- state
    z        <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z        <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output   <- z XOR (z >> 31)

Derived primitives (all documented so results are reproducible bit-for-bit):

* ``uniform``  - top 53 bits of one output scaled by 2^-53, in [0, 1).
* ``randint``  - unbiased bounded integer via rejection sampling.
* ``shuffle``  - Fisher-Yates from the top index downward.
* ``normal``   - Box-Muller, cosine branch only; each call consumes exactly
  two uniforms and discards the sine partner.
"""

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """SplitMix64 stream with 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random mantissa bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def randint(self, n: int) -> int:
        """Unbiased integer in [0, n). Rejection keeps the stream portable."""
        if n <= 0:
            raise ValueError("randint bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Gaussian draw via Box-Muller (cosine branch, two uniforms)."""
        u1 = self.uniform()
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(1.0 - u1))
        return mean + std * radius * math.cos(2.0 * math.pi * u2)


def derive_seed(base_seed: int, stream: int) -> int:
    """Seed for a named sub-stream: output ``stream`` + 1 of SplitMix64(base).

    Keeps independent components (splits, oversampling, model init, ...)
    on decorrelated streams while staying a pure function of the run seed.
    """
    if stream < 0:
        raise ValueError("stream index must be non-negative")
    gen = SplitMix64(base_seed)
    value = gen.next_u64()
    for _ in range(stream):
        value = gen.next_u64()
    return value
