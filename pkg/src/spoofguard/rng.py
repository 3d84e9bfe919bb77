"""Deterministic, splittable random streams built on SplitMix64.

Every random draw in the package comes from here so that any run is
reproducible from its seed alone, independent of thread schedule, and
so that the byte-identical streams can be regenerated in any language.

Algorithm (SplitMix64, Steele/Lea/Flood 2014), as a counter-based
generator: output n of the stream keyed by ``key`` is

    mix64(key + (n + 1) * 0x9E3779B97F4A7C15)

where mix64 is

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31

with all arithmetic modulo 2**64.  Uniform doubles take the top 53
bits, ``(z >> 11) * 2**-53``; normals come from those via Box-Muller.
Child keys are derived by folding the parts (integers, or UTF-8 bytes
of strings) through the same mix, so per-subject / per-image streams
never overlap regardless of evaluation order.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_TWO53 = float(2**53)


def _mix64(z):
    # uint64 arithmetic wraps mod 2**64 by design; silence numpy's warning
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))


def derive_key(base, *parts):
    """Fold integers and strings into a 64-bit child key.

    derive_key(seed, "s017", 2) is stable across runs, platforms and
    call sites; distinct part tuples give independent streams.
    """
    with np.errstate(over="ignore"):
        key = _mix64(_U64(int(base) & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        for part in parts:
            if isinstance(part, str):
                for b in part.encode("utf-8"):
                    key = _mix64(key + _GOLDEN * _U64(b + 1))
                key = _mix64(key + _GOLDEN)
            else:
                key = _mix64(key + _GOLDEN * _U64(2) + _U64(int(part) & 0xFFFFFFFFFFFFFFFF))
    return int(key)


class Stream:
    """A counter-based SplitMix64 stream; draws never depend on array chunking."""

    def __init__(self, key):
        self.key = _U64(int(key) & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    def raw(self, n):
        """Next n raw 64-bit words."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            base = self.key + idx * _GOLDEN
        return _mix64(base)

    def uniform(self, n):
        """Next n doubles uniform in [0, 1)."""
        return (self.raw(n) >> _U64(11)).astype(np.float64) / _TWO53

    def normal(self, n):
        """Next n standard normal doubles (Box-Muller on consecutive pairs)."""
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]: keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def spawn(self, *parts):
        """Independent child stream for the given part tuple."""
        return Stream(derive_key(int(self.key), *parts))
