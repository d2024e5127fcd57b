from __future__ import annotations
import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
UNIT = 2.0 ** -53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


class RandomStream:
    """SplitMix64 stream. Same seed gives the same sequence everywhere.

    The array methods consume exactly as many steps as the equivalent number
    of scalar calls, so the two styles can be mixed on one stream.
    """

    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return _mix(self.state)

    def next_unit(self) -> float:
        return (self.next_u64() >> 11) * UNIT

    def next_choice(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"next_choice needs n >= 1, got {n}")
        return self.next_u64() % n

    def child(self) -> "RandomStream":
        return RandomStream(self.next_u64())

    def next_u64_array(self, count: int) -> np.ndarray:
        if count <= 0:
            return np.zeros(0, dtype=np.uint64)
        steps = np.arange(1, count + 1, dtype=np.uint64)
        # uint64 array arithmetic wraps modulo 2**64
        z = steps * np.uint64(GAMMA) + np.uint64(self.state)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        z = z ^ (z >> np.uint64(31))
        self.state = (self.state + count * GAMMA) & MASK64
        return z

    def next_unit_array(self, count: int) -> np.ndarray:
        return (self.next_u64_array(count) >> np.uint64(11)).astype(np.float64) * UNIT

    def next_choice_array(self, count: int, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError(f"next_choice needs n >= 1, got {n}")
        return (self.next_u64_array(count) % np.uint64(n)).astype(np.int64)


def derive_seed(seed: int, index: int) -> int:
    """Per-task seed: first output of a stream seeded at seed + index."""
    return RandomStream((int(seed) + int(index)) & MASK64).next_u64()
