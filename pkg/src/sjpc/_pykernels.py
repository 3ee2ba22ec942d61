"""Pure-Python kernels.

Reference implementation of every hot loop. The compiled ``_kernels``
extension must produce bit-identical output for the same inputs; the
backend-equivalence tests hold both to that.
"""
from __future__ import annotations

import math
import struct

import numpy as np

M64 = (1 << 64) - 1
MERSENNE_P = (1 << 61) - 1
GOLDEN = 0x9E3779B97F4A7C15
RECORD_STRIDE = 0xD1B54A32D192ED03
_MURMUR_M = 0xC6A4A7935BD1E995
_MURMUR_R = 47

NAME = "python"


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit words."""
    z &= M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


class SplitMix64:
    """Tiny counter-based generator shared by both kernel backends."""

    __slots__ = ("state",)

    def __init__(self, state: int) -> None:
        self.state = state & M64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & M64
        return mix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` (Lemire's multiply-shift with rejection)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        m = self.next_u64() * bound
        low = m & M64
        if low < bound:
            threshold = ((1 << 64) - bound) % bound
            while low < threshold:
                m = self.next_u64() * bound
                low = m & M64
        return m >> 64


def record_state(sample_key: int, index: int) -> int:
    """Initial generator state for the record at stream position ``index``."""
    return mix64(sample_key ^ (((index + 1) * RECORD_STRIDE) & M64))


def murmur64a(data: bytes, seed: int) -> int:
    m = _MURMUR_M
    r = _MURMUR_R
    length = len(data)
    h = (seed ^ ((length * m) & M64)) & M64
    nblocks = length // 8
    for (k,) in struct.iter_unpack("<Q", data[: nblocks * 8]):
        k = (k * m) & M64
        k ^= k >> r
        k = (k * m) & M64
        h ^= k
        h = (h * m) & M64
    tail = data[nblocks * 8:]
    if tail:
        for i in range(len(tail) - 1, -1, -1):
            h ^= tail[i] << (8 * i)
        h = (h * m) & M64
    h ^= h >> r
    h = (h * m) & M64
    h ^= h >> r
    return h


fingerprint = murmur64a


def reduce_key(key: int) -> int:
    x = (key & MERSENNE_P) + ((key & M64) >> 61)
    return x - MERSENNE_P if x >= MERSENNE_P else x


def poly_hash(coeffs, key: int) -> int:
    """Degree-3 polynomial ``c3*x^3 + c2*x^2 + c1*x + c0`` over Z_p, p = 2^61 - 1."""
    x = reduce_key(int(key))
    c0, c1, c2, c3 = (int(c) for c in coeffs)
    h = c3
    h = (h * x + c2) % MERSENNE_P
    h = (h * x + c1) % MERSENNE_P
    h = (h * x + c0) % MERSENNE_P
    return h


def encode_header(k: int, rank: int) -> bytes:
    return struct.pack("<IQ", k, rank)


def encode_fields(values) -> bytes:
    return b"".join(struct.pack("<Q", len(v)) + bytes(v) for v in values)


def level_sample_size(size: int, r: float, rng: SplitMix64) -> int:
    target = r * float(size)
    floor = math.floor(target)
    m = int(floor)
    frac = target - floor
    if frac > 0.0 and rng.random() < frac:
        m += 1
    return min(m, size)


def sample_ranks(size: int, m: int, rng: SplitMix64) -> list[int]:
    """``m`` distinct ranks from ``range(size)`` by partial Fisher-Yates."""
    if m >= size:
        return list(range(size))
    perm = list(range(size))
    for i in range(m):
        j = i + rng.below(size - i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:m]


def emit_fingerprints(buf, starts, ends, n_rec, d, s, r, fp_seed, sample_key,
                      first_index, combos, level_offsets):
    data = bytes(buf)
    n_levels = d - s + 1
    out_levels: list[int] = []
    out_fps: list[int] = []
    for i in range(n_rec):
        base = i * d
        fields = [data[int(starts[base + c]):int(ends[base + c])] for c in range(d)]
        rng = SplitMix64(record_state(sample_key, first_index + i))
        for lvl in range(n_levels):
            k = s + lvl
            off = int(level_offsets[lvl])
            size = int(level_offsets[lvl + 1]) - off
            m = level_sample_size(size, r, rng)
            for rank in sample_ranks(size, m, rng):
                cols = combos[off + rank]
                enc = encode_header(k, rank) + encode_fields(fields[int(cols[j])] for j in range(k))
                out_fps.append(murmur64a(enc, fp_seed))
                out_levels.append(lvl)
    return np.array(out_levels, dtype=np.uint8), np.array(out_fps, dtype=np.uint64)


def sketch_update(counters, bucket_coef, sign_coef, keys) -> None:
    depth, width = counters.shape
    for row in range(depth):
        bc = tuple(int(c) for c in bucket_coef[row])
        sc = tuple(int(c) for c in sign_coef[row])
        target = counters[row]
        for key in keys:
            key = int(key)
            bucket = poly_hash(bc, key) % width
            target[bucket] += 1 if poly_hash(sc, key) & 1 else -1


def split_lines(buf, delimiter: int, d: int):
    """Field boundaries for a block of complete newline-terminated lines.

    Returns ``(starts, ends, n_records, bad_line)``; ``bad_line`` is the
    0-based index of the first line without exactly ``d`` fields, or -1.
    """
    data = bytes(buf)
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    starts = np.empty(len(lines) * d, dtype=np.int64)
    ends = np.empty(len(lines) * d, dtype=np.int64)
    sep = bytes([delimiter])
    pos = 0
    for li, line in enumerate(lines):
        parts = line.split(sep)
        if len(parts) != d:
            return starts[: li * d], ends[: li * d], li, li
        p = pos
        for c, part in enumerate(parts):
            starts[li * d + c] = p
            ends[li * d + c] = p + len(part)
            p += len(part) + 1
        pos += len(line) + 1
    return starts, ends, len(lines), -1
