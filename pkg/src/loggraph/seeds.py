"""Deterministic seeded hashing for randomized vertex programs.

The same (seed, superstep, vertex, ...) tuple always maps to the same value
on every platform, which is what makes seeded runs reproducible and lets an
oracle replay the engine's random choices.
"""

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    x ^= x >> 31
    return x


def chain_hash(seed: int, *vals: int) -> int:
    x = mix64(seed ^ _GOLDEN)
    for v in vals:
        x = mix64(x ^ (v & _M64))
    return x


def unit_float(seed: int, *vals: int) -> float:
    """Uniform-looking float in [0, 1)."""
    return chain_hash(seed, *vals) / 2.0**64


def pick_index(seed: int, n: int, *vals: int) -> int:
    return chain_hash(seed, *vals) % n
