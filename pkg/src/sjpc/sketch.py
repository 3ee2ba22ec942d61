"""Fast-AGMS sketch: signed counters for self-join (F2) and join-size estimates.

Each of ``t`` rows owns an independent bucket hash and sign hash; an item
adds its sign to one counter per row. A row's sum of squared counters is an
unbiased F2 estimate, and the row-wise inner product of two compatible
sketches estimates their join size. Rows are combined by median (default)
or mean.
"""
from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

from ._backend import kernels
from .hashing import Hash4Seed

MAGIC = b"SJPCFAGM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHIIQiQ")
# A row's |counter| sum is bounded by the insert count; past this an int64
# counter could wrap.
MAX_ITEMS = 1 << 62
_M64 = (1 << 64) - 1


def _aggregate(values: np.ndarray, how: str) -> float:
    if how == "median":
        # lower median for even depth
        ordered = np.sort(values)
        return float(ordered[(len(ordered) - 1) // 2])
    if how == "mean":
        return float(np.mean(values))
    raise ValueError(f"unknown aggregation {how!r}")


class FastAgmsSketch:
    """A ``depth x width`` array of signed 64-bit counters.

    Args:
        width: counters per row (``w``).
        depth: independent rows (``t``).
        master_seed: root seed; row hashes derive from ``(master_seed, level_k, row)``.
        level_k: lattice level this sketch serves; part of the seed path.

    Two sketches are compatible when width, depth, master_seed and level_k agree,
    which makes their hash functions identical.
    """

    def __init__(self, width: int, depth: int, master_seed: int = 0, level_k: int = 0) -> None:
        if width < 1 or depth < 1:
            raise ValueError("width and depth must be >= 1")
        self.width = int(width)
        self.depth = int(depth)
        self.master_seed = int(master_seed) & _M64
        self.level_k = int(level_k)
        self.counters = np.zeros((self.depth, self.width), dtype=np.int64)
        self.items_inserted = 0
        self.bucket_seeds = [Hash4Seed.derive(master_seed, level_k, j, "bucket") for j in range(depth)]
        self.sign_seeds = [Hash4Seed.derive(master_seed, level_k, j, "sign") for j in range(depth)]
        self._bucket_coef = np.array([s.coefficients for s in self.bucket_seeds], dtype=np.uint64)
        self._sign_coef = np.array([s.coefficients for s in self.sign_seeds], dtype=np.uint64)

    def __repr__(self) -> str:
        return (f"FastAgmsSketch(width={self.width}, depth={self.depth}, "
                f"level_k={self.level_k}, items={self.items_inserted})")

    @property
    def nbytes(self) -> int:
        return self.counters.nbytes

    def compatible(self, other: "FastAgmsSketch") -> bool:
        return (self.width, self.depth, self.master_seed, self.level_k) == (
            other.width, other.depth, other.master_seed, other.level_k)

    def _require_compatible(self, other: "FastAgmsSketch") -> None:
        if not isinstance(other, FastAgmsSketch) or not self.compatible(other):
            raise ValueError("sketches are not compatible (width, depth and seeds must match)")

    def insert(self, key: int) -> None:
        self.insert_many(np.array([key], dtype=np.uint64))

    def insert_many(self, keys: Iterable[int] | np.ndarray) -> None:
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if self.items_inserted + len(keys) >= MAX_ITEMS:
            raise OverflowError("sketch counters could overflow int64")
        kernels.sketch_update(self.counters, self._bucket_coef, self._sign_coef, keys)
        self.items_inserted += len(keys)

    def row_f2(self) -> np.ndarray:
        c = self.counters.astype(np.float64)
        return np.einsum("ij,ij->i", c, c)

    def estimate_f2(self, aggregate: str = "median") -> float:
        return _aggregate(self.row_f2(), aggregate)

    def row_inner_products(self, other: "FastAgmsSketch") -> np.ndarray:
        self._require_compatible(other)
        a = self.counters.astype(np.float64)
        b = other.counters.astype(np.float64)
        return np.einsum("ij,ij->i", a, b)

    def inner_product(self, other: "FastAgmsSketch", aggregate: str = "median") -> float:
        return _aggregate(self.row_inner_products(other), aggregate)

    def copy(self) -> "FastAgmsSketch":
        out = FastAgmsSketch.__new__(FastAgmsSketch)
        out.__dict__.update(self.__dict__)
        out.counters = self.counters.copy()
        return out

    def merge(self, other: "FastAgmsSketch") -> "FastAgmsSketch":
        """Counter-wise sum; equals the sketch of the concatenated streams."""
        self._require_compatible(other)
        out = self.copy()
        out.counters += other.counters
        out.items_inserted += other.items_inserted
        return out

    def merge_inplace(self, other: "FastAgmsSketch") -> None:
        self._require_compatible(other)
        self.counters += other.counters
        self.items_inserted += other.items_inserted

    def to_bytes(self) -> bytes:
        """Versioned little-endian blob: header, then row-major int64 counters."""
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, self.width, self.depth,
                              self.master_seed, self.level_k, self.items_inserted)
        return header + self.counters.astype("<i8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "FastAgmsSketch":
        if len(blob) < _HEADER.size:
            raise ValueError("truncated sketch blob")
        magic, version, width, depth, seed, level_k, items = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise ValueError("not a sketch blob")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported sketch format version {version}")
        body = blob[_HEADER.size:]
        if len(body) != width * depth * 8:
            raise ValueError("sketch blob length does not match its header")
        out = cls(width, depth, seed, level_k)
        out.counters[:] = np.frombuffer(body, dtype="<i8").reshape(depth, width)
        out.items_inserted = items
        return out


def sketch_insert(sk: FastAgmsSketch, key: int) -> FastAgmsSketch:
    sk.insert(key)
    return sk


def sketch_estimate_f2(sk: FastAgmsSketch, aggregate: str = "median") -> float:
    return sk.estimate_f2(aggregate)


def sketch_inner_product(a: FastAgmsSketch, b: FastAgmsSketch, aggregate: str = "median") -> float:
    return a.inner_product(b, aggregate)


def sketch_merge(a: FastAgmsSketch, b: FastAgmsSketch) -> FastAgmsSketch:
    return a.merge(b)
