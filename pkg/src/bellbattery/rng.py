"""Counter-based random streams.

Every draw is a pure function of ``(seed, round_index, draw_index)``: the
64-bit SplitMix finalizer applied to ``key + (counter + 1) * GAMMA`` where
``key`` is the mixed seed and ``counter = round_index * DRAWS_PER_ROUND +
draw_index``.  Rounds can therefore be generated in any order or partition
and still replay bit for bit.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
SEED_SALT = 0xD1B54A32D192ED03

DRAWS_PER_ROUND = 4
DRAW_QUESTIONS = 0
DRAW_OUTPUTS = 1
DRAW_PAD = 2

_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int) -> int:
    """Mixed 64-bit key for a master seed (negative seeds wrap modulo 2**64)."""
    return mix64((seed & MASK64) ^ SEED_SALT)


def word(key: int, counter: int) -> int:
    return mix64(key + ((counter + 1) * GAMMA & MASK64))


def to_unit(w: int) -> float:
    """Map a 64-bit word to a double in [0, 1) using its top 53 bits."""
    return (w >> 11) * _INV_2_53


def to_bit(w: int) -> int:
    return w >> 63


class RoundStream:
    """Randomness for one protocol round, keyed by (seed, round index)."""

    def __init__(self, seed: int, round_index: int):
        if round_index < 0:
            raise ValueError("round_index must be non-negative")
        self.seed = seed
        self.round_index = round_index
        self._key = stream_key(seed)

    def _word(self, draw: int) -> int:
        return word(self._key, self.round_index * DRAWS_PER_ROUND + draw)

    def questions_uniform(self) -> float:
        return to_unit(self._word(DRAW_QUESTIONS))

    def outputs_uniform(self) -> float:
        return to_unit(self._word(DRAW_OUTPUTS))

    def pad_bit(self) -> int:
        return to_bit(self._word(DRAW_PAD))
