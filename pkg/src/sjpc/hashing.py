"""Seed derivation, the 4-universal polynomial family and sub-value fingerprints.

Every random choice in a run is a pure function of one ``master_seed``:
per-(level, row, purpose) seeds come from a counter-mode expansion of it,
so a single integer reproduces an entire sketch.
"""
from __future__ import annotations

from dataclasses import dataclass

from ._backend import kernels
from ._pykernels import GOLDEN, M64, MERSENNE_P, SplitMix64, mix64

__all__ = [
    "MERSENNE_P",
    "Hash4Seed",
    "SplitMix64",
    "derive_seed",
    "fingerprint",
    "fingerprint_seed",
    "hash4_bucket",
    "hash4_sign",
    "sampling_key",
]

PURPOSES = {"bucket": 1, "sign": 2, "fingerprint": 3, "sampling": 4}


def derive_seed(master_seed: int, *parts: int) -> int:
    """Fold ``parts`` into ``master_seed``; distinct paths give unrelated 64-bit seeds."""
    state = mix64((master_seed + GOLDEN) & M64)
    for part in parts:
        state = mix64(((state ^ (part & M64)) + GOLDEN) & M64)
    return state


def fingerprint_seed(master_seed: int) -> int:
    return derive_seed(master_seed, 0, 0, PURPOSES["fingerprint"])


def sampling_key(master_seed: int, stream_id: int = 0) -> int:
    """Key for per-record sampling streams; joins give each input its own ``stream_id``."""
    return derive_seed(master_seed, stream_id, 0, PURPOSES["sampling"])


@dataclass(frozen=True)
class Hash4Seed:
    """Coefficients ``(c0, c1, c2, c3)`` of one member of the degree-3 family over Z_p."""

    coefficients: tuple[int, int, int, int]
    purpose_tag: str
    level_k: int = 0
    row: int = 0

    @classmethod
    def derive(cls, master_seed: int, level_k: int, row: int, purpose_tag: str) -> "Hash4Seed":
        if purpose_tag not in ("bucket", "sign"):
            raise ValueError(f"unknown purpose {purpose_tag!r}")
        rng = SplitMix64(derive_seed(master_seed, level_k, row, PURPOSES[purpose_tag]))
        coeffs = []
        while len(coeffs) < 4:
            v = rng.next_u64() >> 3
            if v < MERSENNE_P:
                coeffs.append(v)
        return cls(tuple(coeffs), purpose_tag, level_k, row)

    def __call__(self, key: int) -> int:
        return kernels.poly_hash(self.coefficients, key)


def hash4_bucket(seed: Hash4Seed, key: int, w: int) -> int:
    """Bucket in ``[0, w)``: the polynomial value reduced mod ``w``."""
    if w < 1:
        raise ValueError("w must be >= 1")
    return kernels.poly_hash(seed.coefficients, key) % w


def hash4_sign(seed: Hash4Seed, key: int) -> int:
    """+1 or -1 from the low bit of the polynomial value."""
    return 1 if kernels.poly_hash(seed.coefficients, key) & 1 else -1


def fingerprint(data: bytes, master_seed: int) -> int:
    """Seeded 64-bit MurmurHash64A digest of ``data``.

    Not cryptographic. Collisions between distinct sub-values are treated as
    negligible (about 2^-64 per pair).
    """
    return kernels.fingerprint(bytes(data), fingerprint_seed(master_seed))
