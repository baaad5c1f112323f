"""Portable deterministic 64-bit pseudo random number generator.

Instance generation must be bitwise reproducible across platforms, so the
package carries its own generator instead of relying on library RNGs whose
streams may change between versions.  The core is the splitmix64 recurrence

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state
    z <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
    z <- (z xor (z >> 27)) * 0x94D049BB133111EB mod 2^64
    output z xor (z >> 31)

implemented on Python integers.  Uniform doubles take the top 53 bits, so
every value is an exact dyadic rational.  Gaussian draws use an Irwin-Hall
sum of twelve uniforms (mean 0, variance 1); the sum is exact in binary
floating point, which keeps the whole stream free of libm rounding
differences.
"""

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Splitmix64 stream seeded with a 64-bit integer."""

    def __init__(self, seed):
        self._state = seed & _MASK

    def next_u64(self):
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def random(self):
        """Uniform double in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def randint(self, lo, hi):
        """Uniform integer in [lo, hi] inclusive, via unbiased rejection."""
        if hi < lo:
            raise ValueError("empty range for randint")
        span = hi - lo + 1
        bits = span.bit_length()
        mask = (1 << bits) - 1
        while True:
            v = self.next_u64() & mask
            if v < span:
                return lo + v

    def normal(self):
        """Approximate standard normal draw (Irwin-Hall, 12 uniforms)."""
        total = 0.0
        for _ in range(12):
            total += self.random()
        return total - 6.0
