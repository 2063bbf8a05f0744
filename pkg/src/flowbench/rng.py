"""Deterministic random number generation.

The generator is fully specified so that runs are reproducible bit-for-bit
and a reimplementation in another language can match the streams: a
splitmix64 expansion of ``(seed, counter)`` seeds a bank of xoshiro256++
lanes, lanes are drained round-major, and normal deviates come from
Box-Muller.  State is just ``(seed, counter)``; every draw request bumps the
counter, so a copied :class:`RngState` replays the same sequence.

All integer arithmetic is uint64 modulo 2**64 via numpy, which behaves
identically on every supported platform.
"""

from __future__ import annotations

import math

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_REQ = np.uint64(0xD1B54A32D192ED03)

# Lane count trades per-call overhead against vectorized throughput.  It is
# part of the stream definition: changing it changes the sequences.
_LANES = 16384

_U64 = np.uint64
_INV53 = float(2.0 ** -53)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 output mix (finalizer) on uint64 arrays."""
    x = (x ^ (x >> _U64(30))) * _MIX1
    x = (x ^ (x >> _U64(27))) * _MIX2
    return x ^ (x >> _U64(31))


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << _U64(k)) | (x >> _U64(64 - k))


def derive_seed(seed: int, index: int) -> int:
    """Stable child seed for stream ``index`` of master ``seed``."""
    with np.errstate(over="ignore"):
        child = _mix64(np.asarray(_U64(seed & 0xFFFFFFFFFFFFFFFF))
                       + _U64(index & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + _U64(1))
    return int(child)


class RngState:
    """Seeded random stream: identical (seed, counter) replays identically."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = int(counter)

    def copy(self) -> "RngState":
        return RngState(self.seed, self.counter)

    def spawn(self, index: int) -> "RngState":
        """Independent child stream; deterministic in (seed, index)."""
        return RngState(derive_seed(self.seed, index))

    def _lane_states(self):
        with np.errstate(over="ignore"):
            key = _mix64(np.asarray(_mix64(np.asarray(_U64(self.seed)))
                                    ^ (_U64(self.counter & 0xFFFFFFFFFFFFFFFF) * _REQ)))
            idx = np.arange(1, 4 * _LANES + 1, dtype=np.uint64)
            words = _mix64(key + idx * _GOLDEN).reshape(_LANES, 4)
        return [words[:, w].copy() for w in range(4)]

    def uint64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words; advances the stream counter once."""
        if n < 0:
            raise ValueError("n must be non-negative")
        s0, s1, s2, s3 = self._lane_states()
        self.counter += 1
        rounds = max(1, -(-n // _LANES))
        out = np.empty((rounds, _LANES), dtype=np.uint64)
        with np.errstate(over="ignore"):
            for r in range(rounds):
                out[r] = _rotl(s0 + s3, 23) + s0
                t = s1 << _U64(17)
                s2 ^= s0
                s3 ^= s1
                s1 ^= s2
                s0 ^= s3
                s2 ^= t
                s3 = _rotl(s3, 45)
        return out.ravel()[:n]

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on [0, 1)."""
        return np.asarray(self.uint64(n) >> _U64(11), dtype=np.float64) * _INV53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard-normal doubles via Box-Muller."""
        m = max(1, -(-n // 2))
        bits = self.uint64(2 * m)
        # u1 on (0, 1] keeps log() finite; u2 on [0, 1).
        u1 = (np.asarray(bits[:m] >> _U64(11), dtype=np.float64) + 1.0) * _INV53
        u2 = np.asarray(bits[m:] >> _U64(11), dtype=np.float64) * _INV53
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        out = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])
        return out[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation of ``range(n)``."""
        return np.argsort(self.uint64(n), kind="stable")

    def integers(self, n: int, high: int) -> np.ndarray:
        """``n`` integers uniform on [0, high)."""
        if high <= 0:
            raise ValueError("high must be positive")
        return np.minimum((self.uniform(n) * high).astype(np.int64), high - 1)

    def __repr__(self):
        return f"RngState(seed={self.seed}, counter={self.counter})"
