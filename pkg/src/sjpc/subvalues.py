"""Sampled k-sub-values of a record.

For each level k a record contributes ``r * C(d, k)`` projections on
average: the expected size is rounded up or down at random so its mean is
exact, and the projections are drawn without replacement. Each projection
is encoded together with its combination identity, so equal values under
different column sets never collide, and then fingerprinted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _pykernels
from ._backend import kernels
from ._pykernels import SplitMix64
from .combinatorics import ColumnCombination, choose, enumerate_combinations, unrank_combination
from .hashing import fingerprint_seed

Record = Sequence[bytes]


def as_record(values: Iterable[bytes | str], d: int | None = None) -> tuple[bytes, ...]:
    rec = tuple(v.encode() if isinstance(v, str) else bytes(v) for v in values)
    if d is not None and len(rec) != d:
        raise ValueError(f"record has {len(rec)} fields, expected {d}")
    return rec


@dataclass(frozen=True)
class SubValue:
    combination: ColumnCombination
    projected: tuple[bytes, ...]
    encoded: bytes
    fp: int


@dataclass(frozen=True)
class SamplingPlan:
    d: int
    r: float
    per_level_expected: dict[int, float] = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"sampling ratio must be in (0, 1], got {self.r}")
        object.__setattr__(self, "per_level_expected",
                           {k: self.r * choose(self.d, k) for k in range(1, self.d + 1)})


def sample_level_size(d: int, k: int, r: float, rng: SplitMix64) -> int:
    """``floor(r*C(d,k))`` or one more, rounding up with probability equal to the fraction."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"sampling ratio must be in (0, 1], got {r}")
    return _pykernels.level_sample_size(choose(d, k), r, rng)


def encode_subvalue(c: ColumnCombination, projected: Sequence[bytes]) -> bytes:
    """``(k, rank)`` header followed by length-prefixed field bytes.

    Length prefixes keep the encoding injective; plain delimiter joining would
    map ``("a.b", "c")`` and ``("a", "b.c")`` to the same string.
    """
    if len(projected) != c.level_k:
        raise ValueError(f"combination has {c.level_k} columns but {len(projected)} values given")
    return _pykernels.encode_header(c.level_k, c.rank) + _pykernels.encode_fields(projected)


def emit_subvalues(rec: Record, k: int, plan: SamplingPlan, rng: SplitMix64,
                   master_seed: int = 0) -> list[SubValue]:
    """Sampled level-k sub-values of one record, fully populated."""
    d = plan.d
    rec = as_record(rec, d)
    size = choose(d, k)
    m = sample_level_size(d, k, plan.r, rng)
    fseed = fingerprint_seed(master_seed)
    out = []
    for rank in _pykernels.sample_ranks(size, m, rng):
        comb = unrank_combination(d, k, rank)
        projected = tuple(rec[i] for i in comb.indices)
        enc = encode_subvalue(comb, projected)
        out.append(SubValue(comb, projected, enc, kernels.fingerprint(enc, fseed)))
    return out


@dataclass(frozen=True)
class LevelTable:
    """Flattened combination table for levels ``s..d``, as the kernels consume it."""

    d: int
    s: int
    combos: np.ndarray
    offsets: np.ndarray

    @classmethod
    def build(cls, d: int, s: int) -> "LevelTable":
        rows = []
        offsets = [0]
        for k in range(s, d + 1):
            for comb in enumerate_combinations(d, k):
                rows.append(list(comb.indices) + [-1] * (d - k))
            offsets.append(len(rows))
        return cls(d, s, np.array(rows, dtype=np.int32).reshape(-1, d),
                   np.array(offsets, dtype=np.int64))


@dataclass
class RecordBlock:
    """A batch of records as one byte buffer plus per-field ``[start, end)`` offsets."""

    buf: bytes
    starts: np.ndarray
    ends: np.ndarray
    n: int
    d: int

    @classmethod
    def from_records(cls, records: Iterable[Iterable[bytes | str]], d: int) -> "RecordBlock":
        flat: list[bytes] = []
        n = 0
        for rec in records:
            rec = as_record(rec)
            if len(rec) != d:
                raise RecordArityError(n, len(rec), d)
            flat.extend(rec)
            n += 1
        lengths = np.fromiter(map(len, flat), dtype=np.int64, count=len(flat))
        ends = np.cumsum(lengths, dtype=np.int64)
        return cls(b"".join(flat), ends - lengths, ends, n, d)

    def records(self) -> list[tuple[bytes, ...]]:
        mv = self.buf
        d = self.d
        return [tuple(mv[self.starts[i * d + c]:self.ends[i * d + c]] for c in range(d))
                for i in range(self.n)]


class RecordArityError(ValueError):
    def __init__(self, position: int, got: int, expected: int) -> None:
        super().__init__(f"record {position} has {got} fields, expected {expected}")
        self.position = position
        self.got = got
        self.expected = expected
