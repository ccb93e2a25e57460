"""Counter-based SplitMix64 streams.

Every random variate is a pure function of ``(seed, stream, index, slot)``,
so per-point draws do not depend on how many points are generated or on
which worker produces them.
"""

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SLOT_BITS = np.uint64(16)
MAX_SLOTS = 1 << 16

# stream ids
X_STREAM = 1
Y_STREAM = 2
DELTA_STREAM = 3
REGION_STREAM = 4


def mix64(z):
    """SplitMix64 finaliser applied elementwise to a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed, stream):
    base = np.array([(seed ^ (stream * 0xD1B54A32D192ED03)) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return mix64(base)[0]


def bits(seed, stream, index, slot=0):
    """Raw 64-bit words for the given point indices and slot."""
    if slot < 0 or slot >= MAX_SLOTS:
        raise ValueError(f"slot {slot} out of range")
    idx = np.asarray(index, dtype=np.uint64)
    counter = (idx << _SLOT_BITS) | np.uint64(slot)
    with np.errstate(over="ignore"):
        z = stream_key(seed, stream) + (counter + np.uint64(1)) * _GOLDEN
    return mix64(z)


def uniform(seed, stream, index, slot=0):
    """Uniforms in [0, 1) with 53 bits of precision."""
    return (bits(seed, stream, index, slot) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(*parts):
    """64-bit seed from a tuple of integers (blake2b over their decimal forms)."""
    payload = ":".join(str(int(p)) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
