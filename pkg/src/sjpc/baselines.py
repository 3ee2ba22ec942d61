"""Ground truth and competitors: the brute-force oracle, the random-sampling
estimator, and synthetic datasets with analytically known pair counts."""
from __future__ import annotations

import math
import random
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import choose, enumerate_combinations
from .subvalues import RecordBlock, as_record

ORACLE_CAP = 50_000

KINDS = ("near_uniform_40_60", "skewed_20_80", "skewed_10_90", "planted_lemma1")
# kind -> (percent of records that belong to similar groups, group size).
# Group sizes follow from "x% of the entities make up y% of the records":
# 20-80 gives groups of 16 (15 similar partners each), 10-90 gives 81.
_GROUPING = {
    "near_uniform_40_60": (60, 2),
    "skewed_20_80": (80, 16),
    "skewed_10_90": (90, 81),
    "planted_lemma1": (100, 2),
}


class OracleCapError(RuntimeError):
    pass


@dataclass
class ExactCounts:
    """Exact pair statistics of a dataset (directed pairs, self-pairs excluded from ``x``)."""

    d: int
    n: int
    x: dict[int, int]
    y: dict[int, int]
    g: dict[int, int]

    def to_document(self) -> dict:
        doc: dict = {"n": self.n, "d": self.d}
        for name, table in (("x", self.x), ("y", self.y), ("g", self.g)):
            for k in sorted(table):
                doc[f"{name}.{k}"] = table[k]
        return doc


@dataclass
class CrossCounts:
    """Exact pair statistics between two relations; there are no self-pairs."""

    d: int
    n_a: int
    n_b: int
    x: dict[int, int]
    y: dict[int, int]
    g: dict[int, int]

    def to_document(self) -> dict:
        doc: dict = {"n_a": self.n_a, "n_b": self.n_b, "d": self.d}
        for name, table in (("x", self.x), ("y", self.y), ("g", self.g)):
            for k in sorted(table):
                doc[f"{name}.{k}"] = table[k]
        return doc


def _codes(records: Sequence[Sequence[bytes]], d: int, vocab: list[dict] | None = None) -> np.ndarray:
    if vocab is None:
        vocab = [dict() for _ in range(d)]
    out = np.empty((len(records), d), dtype=np.int64)
    for i, rec in enumerate(records):
        if len(rec) != d:
            raise ValueError(f"record {i} has {len(rec)} fields, expected {d}")
        for c, v in enumerate(rec):
            out[i, c] = vocab[c].setdefault(v, len(vocab[c]))
    return out


def _normalize(dataset: Iterable[Iterable[bytes | str]]) -> list[tuple[bytes, ...]]:
    if isinstance(dataset, SyntheticDataset):
        return dataset.records()
    return [as_record(r) for r in dataset]


def _level_freqs(codes: np.ndarray, cols: tuple[int, ...]) -> Counter:
    return Counter(map(tuple, codes[:, list(cols)].tolist()))


def exact_pair_counts(dataset, d: int | None = None, cap: int = ORACLE_CAP) -> ExactCounts:
    """Compare every pair of records. ``y`` is computed separately from
    per-combination frequency tables, so the two halves cross-check."""
    records = _normalize(dataset)
    n = len(records)
    if n > cap:
        raise OracleCapError(f"oracle limited to {cap} records, got {n}")
    if d is None:
        if not records:
            raise ValueError("cannot infer d from an empty dataset")
        d = len(records[0])
    codes = _codes(records, d)
    hist = np.zeros(d + 1, dtype=np.int64)
    for i in range(n - 1):
        agree = (codes[i + 1:] == codes[i]).sum(axis=1)
        hist += np.bincount(agree, minlength=d + 1)
    x = {k: 2 * int(hist[k]) for k in range(1, d + 1)}
    y = {}
    for k in range(1, d + 1):
        y[k] = sum(sum(c * c for c in _level_freqs(codes, comb.indices).values())
                   for comb in enumerate_combinations(d, k)) if n else 0
    g = {s: sum(x[k] for k in range(s, d + 1)) + n for s in range(1, d + 1)}
    return ExactCounts(d, n, x, y, g)


def exact_cross_pair_counts(a, b, d: int | None = None, cap: int = ORACLE_CAP) -> CrossCounts:
    """Count ``(a_i, b_j)`` pairs by exact number of agreeing fields."""
    ra, rb = _normalize(a), _normalize(b)
    if len(ra) > cap or len(rb) > cap:
        raise OracleCapError(f"oracle limited to {cap} records per side")
    if d is None:
        first = ra[0] if ra else (rb[0] if rb else None)
        if first is None:
            raise ValueError("cannot infer d from two empty relations")
        d = len(first)
    vocab = [dict() for _ in range(d)]
    ca, cb = _codes(ra, d, vocab), _codes(rb, d, vocab)
    hist = np.zeros(d + 1, dtype=np.int64)
    if len(cb):
        for row in ca:
            hist += np.bincount((cb == row).sum(axis=1), minlength=d + 1)
    x = {k: int(hist[k]) for k in range(1, d + 1)}
    y = {}
    for k in range(1, d + 1):
        total = 0
        for comb in enumerate_combinations(d, k):
            fa, fb = _level_freqs(ca, comb.indices), _level_freqs(cb, comb.indices)
            total += sum(c * fb[v] for v, c in fa.items() if v in fb)
        y[k] = total
    g = {s: sum(x[k] for k in range(s, d + 1)) for s in range(1, d + 1)}
    return CrossCounts(d, len(ra), len(rb), x, y, g)


# --------------------------------------------------------------------------
# random sampling

@dataclass
class SamplingEstimate:
    x: dict[int, float]
    g_s: float
    n: int
    sample_size: int
    s: int


def reservoir_sample(stream: Iterable, size: int, rng: random.Random) -> tuple[list, int]:
    """Uniform sample without replacement in one pass (Li's Algorithm L)."""
    it = iter(stream)
    reservoir = []
    for item in it:
        reservoir.append(item)
        if len(reservoir) == size:
            break
    n = len(reservoir)
    if n < size:
        return reservoir, n
    w = math.exp(math.log(1.0 - rng.random()) / size)
    next_pos = n + math.floor(math.log(1.0 - rng.random()) / math.log1p(-w))
    for item in it:
        if n == next_pos:
            reservoir[rng.randrange(size)] = item
            w *= math.exp(math.log(1.0 - rng.random()) / size)
            next_pos += math.floor(math.log(1.0 - rng.random()) / math.log1p(-w)) + 1
        n += 1
    return reservoir, n


def sample_pair_estimate(sample: Sequence[Sequence[bytes]], n: int, s: int, d: int) -> SamplingEstimate:
    """Scale sample pair counts by ``n(n-1) / (R(R-1))`` and add ``n`` self-pairs."""
    sample = [as_record(r) for r in sample]
    size = len(sample)
    x = {k: 0.0 for k in range(s, d + 1)}
    if size >= 2:
        codes = _codes(sample, d)
        hist = np.zeros(d + 1, dtype=np.int64)
        for i in range(size - 1):
            hist += np.bincount((codes[i + 1:] == codes[i]).sum(axis=1), minlength=d + 1)
        scale = n * (n - 1) / (size * (size - 1))
        x = {k: 2 * int(hist[k]) * scale for k in range(s, d + 1)}
    return SamplingEstimate(x, sum(x.values()) + n, n, size, s)


def random_sampling_estimate(stream, sample_size: int, s: int, d: int, seed: int = 0) -> SamplingEstimate:
    if sample_size < 2:
        raise ValueError("sample size must be >= 2")
    if isinstance(stream, SyntheticDataset):
        stream = stream.iter_records()
    sample, n = reservoir_sample(stream, sample_size, random.Random(seed))
    if n < sample_size:
        warnings.warn(f"stream has {n} records, fewer than the sample size {sample_size}",
                      RuntimeWarning, stacklevel=2)
    return sample_pair_estimate(sample, n, s, d)


# --------------------------------------------------------------------------
# synthetic data

def _truth_tables(d: int, n: int, x: dict[int, int]) -> tuple[dict[int, int], dict[int, int]]:
    x = {k: x.get(k, 0) for k in range(1, d + 1)}
    g = {s: sum(x[k] for k in range(s, d + 1)) + n for s in range(1, d + 1)}
    y = {k: x[k] + choose(d, k) * n + sum(choose(j, k) * x[j] for j in range(k + 1, d + 1))
         for k in range(1, d + 1)}
    return g, y


@dataclass
class SyntheticDataset:
    """Records as an ``(n, d)`` array of 64-bit field values plus the exact pair counts.

    Each field renders as 16 hex digits: two 32-bit integers side by side.
    """

    kind: str
    values: np.ndarray
    seed: int
    x: dict[int, int]
    g: dict[int, int] = field(default_factory=dict)
    y: dict[int, int] = field(default_factory=dict)
    note: str = ""

    def __post_init__(self) -> None:
        self.g, self.y = _truth_tables(self.d, self.n, self.x)
        self.x = {k: self.x.get(k, 0) for k in range(1, self.d + 1)}

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def d(self) -> int:
        return int(self.values.shape[1])

    def _hex(self) -> np.ndarray:
        raw = self.values.astype(">u8").tobytes().hex().encode()
        return np.frombuffer(raw, dtype=np.uint8).reshape(self.n, self.d, 16)

    def to_bytes(self, delimiter: bytes = b"\t") -> bytes:
        out = np.empty((self.n, self.d, 17), dtype=np.uint8)
        out[:, :, :16] = self._hex()
        out[:, :, 16] = delimiter[0]
        out[:, -1, 16] = ord("\n")
        return out.tobytes()

    def block(self) -> RecordBlock:
        buf = self.to_bytes()
        starts = (np.arange(self.n * self.d, dtype=np.int64) * 17)
        return RecordBlock(buf, starts, starts + 16, self.n, self.d)

    def iter_records(self):
        hexed = self._hex()
        for row in hexed:
            yield tuple(bytes(f) for f in row)

    def records(self) -> list[tuple[bytes, ...]]:
        return list(self.iter_records())

    def truth_document(self) -> dict:
        doc: dict = {"kind": self.kind, "n": self.n, "d": self.d, "seed": self.seed}
        for name, table in (("x", self.x), ("y", self.y), ("g", self.g)):
            for k in sorted(table):
                doc[f"{name}.{k}"] = table[k]
        doc["note"] = self.note
        return doc


def generate_synthetic(kind: str, n: int, d: int = 5, seed: int = 0, s: int | None = None) -> SyntheticDataset:
    """Records built from unique rows and groups of mutually similar rows.

    Members of a group share every field except the varied ones, where each
    member gets a fresh random value: one field for the near-uniform and
    skewed kinds (pairs are exactly ``(d-1)``-similar), ``d - s`` fields for
    ``planted_lemma1`` (disjoint pairs, exactly ``s``-similar; default
    ``s = d - 1``). Rows are shuffled.
    """
    if kind not in _GROUPING:
        raise ValueError(f"unknown dataset kind {kind!r}; choose from {KINDS}")
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    sim = d - 1 if s is None or kind != "planted_lemma1" else s
    if not 1 <= sim <= d - 1:
        raise ValueError(f"planted similarity must be in [1, {d - 1}]")
    pct, size = _GROUPING[kind]
    groups = (n * pct // 100) // size
    rng = np.random.default_rng(seed)

    def fresh(shape):
        hi = rng.integers(0, 1 << 32, size=shape, dtype=np.uint64)
        lo = rng.integers(0, 1 << 32, size=shape, dtype=np.uint64)
        return (hi << np.uint64(32)) | lo

    values = fresh((n, d))
    vary = d - sim
    for g in range(groups):
        rows = slice(g * size, (g + 1) * size)
        varied = rng.choice(d, size=vary, replace=False)
        shared = [c for c in range(d) if c not in varied]
        values[rows, shared] = values[g * size, shared]
    values = values[rng.permutation(n)]
    x = {sim: groups * size * (size - 1)}
    note = (f"{groups} groups of {size} records; members differ in {vary} field(s), "
            f"so every within-group pair is exactly {sim}-similar; remaining "
            f"{n - groups * size} records are unique")
    return SyntheticDataset(kind, values, seed, x, note=note)


def expand_duplicates(ds: SyntheticDataset, factor: int) -> SyntheticDataset:
    """Repeat every record ``factor`` times; exact counts scale accordingly."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    d, n0 = ds.d, ds.n
    x = {k: factor * factor * v for k, v in ds.x.items()}
    x[d] = x.get(d, 0) + n0 * factor * (factor - 1)
    return SyntheticDataset(f"{ds.kind}_x{factor}", np.repeat(ds.values, factor, axis=0), ds.seed,
                            x, note=f"{ds.note}; each record repeated {factor} times")
