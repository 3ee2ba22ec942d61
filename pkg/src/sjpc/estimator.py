"""The one-pass SJPC pipeline.

Records are projected onto sampled column combinations for every level
``k = s..d``; each level's sub-value stream feeds one Fast-AGMS sketch
(online mode) or an exact frequency table (offline mode). At any point the
state can be finalized: per-level self-join sizes ``Y_k`` are turned into
counts ``X_k`` of exactly-k-similar record pairs by peeling off, from the
top level down, the contributions of more-similar pairs and of self-pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ._backend import kernels
from .bounds import suggest_parameters, variance_bound_offline, variance_bound_online
from .combinatorics import choose
from .hashing import fingerprint_seed, sampling_key
from .sketch import FastAgmsSketch
from .subvalues import LevelTable, RecordArityError, RecordBlock, as_record

__all__ = [
    "EstimateReport",
    "ExactLevelCounts",
    "SjpcConfig",
    "SjpcState",
    "join_finalize",
    "join_solve_pair_counts",
    "solve_pair_counts",
    "solve_pair_counts_closed_form",
    "suggest_parameters",
    "variance_bound_offline",
    "variance_bound_online",
]

MODES = ("online", "offline")
_BATCH = 4096


@dataclass(frozen=True)
class SjpcConfig:
    d: int
    s: int
    r: float = 1.0
    w: int = 1024
    t: int = 5
    master_seed: int = 0
    clamp_negative: bool = True
    mode: str = "online"
    aggregate: str = "median"

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 1 <= self.s <= self.d:
            raise ValueError(f"need 1 <= s <= d, got s={self.s}, d={self.d}")
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"sampling ratio must be in (0, 1], got {self.r}")
        if self.w < 1 or self.t < 1:
            raise ValueError("sketch width and depth must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.aggregate not in ("median", "mean"):
            raise ValueError(f"aggregate must be 'median' or 'mean', got {self.aggregate!r}")

    @property
    def levels(self) -> range:
        return range(self.s, self.d + 1)


class ExactLevelCounts:
    """Exact multiset of fingerprints for one level (offline mode)."""

    def __init__(self) -> None:
        self._keys = np.empty(0, dtype=np.uint64)
        self._counts = np.empty(0, dtype=np.int64)
        self._pending: list[np.ndarray] = []

    def add(self, keys: np.ndarray) -> None:
        if len(keys):
            self._pending.append(np.asarray(keys, dtype=np.uint64))

    def _compact(self) -> None:
        if not self._pending:
            return
        raw = np.concatenate(self._pending)
        uniq, cnt = np.unique(raw, return_counts=True)
        if len(self._keys):
            keys = np.concatenate([self._keys, uniq])
            counts = np.concatenate([self._counts, cnt])
            order = np.argsort(keys, kind="stable")
            keys, counts = keys[order], counts[order]
            uniq, first = np.unique(keys, return_index=True)
            cnt = np.add.reduceat(counts, first)
        self._keys = uniq
        self._counts = cnt.astype(np.int64)
        self._pending = []

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        self._compact()
        return self._keys, self._counts

    @property
    def total(self) -> int:
        return int(self.table()[1].sum())

    def f2(self) -> int:
        _, counts = self.table()
        exact = counts.astype(object)
        return int(np.dot(exact, exact)) if len(exact) else 0

    def inner(self, other: "ExactLevelCounts") -> int:
        ka, ca = self.table()
        kb, cb = other.table()
        _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
        return int(np.dot(ca[ia].astype(object), cb[ib].astype(object))) if len(ia) else 0

    def merge_inplace(self, other: "ExactLevelCounts") -> None:
        keys, counts = other.table()
        if len(keys):
            self._pending.append(np.repeat(keys, counts))


@dataclass
class EstimateReport:
    """Per-level results of one finalization.

    ``g_s = pair_count + n``. For a join report ``n`` is 0 because no record
    pairs with itself; the input sizes are kept in ``join_sizes``.
    """

    y: dict[int, float]
    x: dict[int, float]
    pair_count: float
    g_s: float
    n: int
    bounds: tuple[float, float] | None = None
    config: SjpcConfig | None = None
    kind: str = "self"
    join_sizes: tuple[int, int] | None = None

    def to_document(self) -> dict:
        """Flat key/value form used by the CLI."""
        doc: dict = {"kind": self.kind}
        if self.config is not None:
            c = self.config
            doc.update({"mode": c.mode, "d": c.d, "s": c.s, "r": c.r, "w": c.w, "t": c.t,
                        "seed": c.master_seed, "clamp": c.clamp_negative, "aggregate": c.aggregate})
        doc["n"] = self.n
        if self.join_sizes is not None:
            doc["n_a"], doc["n_b"] = self.join_sizes
        for k in sorted(self.y):
            doc[f"y.{k}"] = float(self.y[k])
        for k in sorted(self.x):
            doc[f"x.{k}"] = float(self.x[k])
        doc["pair_count"] = float(self.pair_count)
        doc["g_s"] = float(self.g_s)
        if self.bounds is not None:
            doc["bound.offline"], doc["bound.online"] = self.bounds
        return doc


def solve_pair_counts(y: Mapping[int, float], d: int, s: int, n: float, r: float,
                      clamp_negative: bool = True) -> dict[int, float]:
    """Recover counts of exactly-k-similar ordered pairs from level self-join sizes.

    Runs ``k = d`` down to ``s``::

        X_k = (Y_k - r*C(d,k)*n) / r^2 - sum_{j>k} C(j,k) * X_j

    With ``clamp_negative`` each ``X_k`` is floored at zero before lower levels
    use it.
    """
    x: dict[int, float] = {}
    r2 = r * r
    for k in range(d, s - 1, -1):
        value = (float(y[k]) - r * choose(d, k) * n) / r2
        value -= sum(choose(j, k) * x[j] for j in range(k + 1, d + 1))
        if clamp_negative and value < 0:
            value = 0.0
        x[k] = value
    return dict(sorted(x.items()))


def solve_pair_counts_closed_form(y: Mapping[int, float], d: int, s: int, n: float,
                                  r: float) -> dict[int, float]:
    """Non-recursive form of the unclamped solver.

    ``X_k = (1/r^2) * sum_{j=k..d} (-1)^(j-k) C(j,k) Y_j + C_k`` with the
    constant ``C_k = -(n/r) * sum_{j=k..d} (-1)^(j-k) C(j,k) C(d,j)``.
    """
    x: dict[int, float] = {}
    for k in range(s, d + 1):
        terms = [(-1) ** (j - k) * choose(j, k) * float(y[j]) for j in range(k, d + 1)]
        const = sum((-1) ** (j - k) * choose(j, k) * choose(d, j) for j in range(k, d + 1))
        x[k] = math.fsum(terms) / (r * r) - const * n / r
    return x


def join_solve_pair_counts(y: Mapping[int, float], d: int, s: int, r: float,
                           clamp_negative: bool = True) -> dict[int, float]:
    """Join variant: ``X_k = Y_k / r^2 - sum_{j>k} C(j,k) X_j`` (no self-pairs)."""
    x: dict[int, float] = {}
    r2 = r * r
    for k in range(d, s - 1, -1):
        value = float(y[k]) / r2 - sum(choose(j, k) * x[j] for j in range(k + 1, d + 1))
        if clamp_negative and value < 0:
            value = 0.0
        x[k] = value
    return dict(sorted(x.items()))


class SjpcState:
    """All memory of one SJPC pass: one structure per level plus the record count.

    Args:
        config: estimator configuration.
        stream_id: separates the sampling randomness of different inputs that
            share hash seeds (the two sides of a join).
        first_index: stream position of the first record this state will see;
            partitions of one stream use their offsets so that merged results
            match a single sequential pass exactly.
    """

    def __init__(self, config: SjpcConfig, stream_id: int = 0, first_index: int = 0) -> None:
        self.config = config
        self.stream_id = stream_id
        self.first_index = first_index
        self.n = 0
        self._table = LevelTable.build(config.d, config.s)
        self._fp_seed = fingerprint_seed(config.master_seed)
        self._sample_key = sampling_key(config.master_seed, stream_id)
        if config.mode == "online":
            self.level_sketches = {k: FastAgmsSketch(config.w, config.t, config.master_seed, k)
                                   for k in config.levels}
            self.level_counts = None
        else:
            self.level_sketches = None
            self.level_counts = {k: ExactLevelCounts() for k in config.levels}

    def __repr__(self) -> str:
        c = self.config
        return f"SjpcState(mode={c.mode!r}, d={c.d}, s={c.s}, r={c.r}, n={self.n})"

    @property
    def counter_bytes(self) -> int:
        """Bytes held by sketch counters (0 in offline mode)."""
        if self.level_sketches is None:
            return 0
        return sum(sk.nbytes for sk in self.level_sketches.values())

    def process_record(self, rec: Iterable[bytes | str]) -> "SjpcState":
        return self.process_records([rec])

    def process_records(self, records: Iterable[Iterable[bytes | str]]) -> "SjpcState":
        """Feed records in order. A record of the wrong arity stops the feed
        after all preceding records were applied."""
        d = self.config.d
        batch: list[tuple[bytes, ...]] = []
        for rec in records:
            rec = as_record(rec)
            if len(rec) != d:
                self._flush(batch)
                raise RecordArityError(self.first_index + self.n, len(rec), d)
            batch.append(rec)
            if len(batch) >= _BATCH:
                self._flush(batch)
                batch = []
        self._flush(batch)
        return self

    def _flush(self, batch: list[tuple[bytes, ...]]) -> None:
        if batch:
            self.process_block(RecordBlock.from_records(batch, self.config.d))

    def emit_block(self, block: RecordBlock) -> tuple[np.ndarray, np.ndarray]:
        """Level indices and fingerprints of every sampled sub-value in ``block``."""
        c = self.config
        if block.d != c.d:
            raise ValueError(f"block has d={block.d}, state expects d={c.d}")
        return kernels.emit_fingerprints(
            block.buf, block.starts, block.ends, block.n, c.d, c.s, c.r,
            self._fp_seed, self._sample_key, self.first_index + self.n,
            self._table.combos, self._table.offsets)

    def process_block(self, block: RecordBlock) -> "SjpcState":
        if block.n == 0:
            return self
        levels, fps = self.emit_block(block)
        c = self.config
        for lvl, k in enumerate(c.levels):
            keys = fps[levels == lvl] if c.d > c.s else fps
            if self.level_sketches is not None:
                self.level_sketches[k].insert_many(keys)
            else:
                self.level_counts[k].add(keys)
        self.n += block.n
        return self

    def estimate_level(self, k: int) -> float:
        """``Y_k``: estimated (online) or exact (offline) self-join size of level k."""
        if k not in self.config.levels:
            raise ValueError(f"level {k} outside [{self.config.s}, {self.config.d}]")
        if self.level_sketches is not None:
            return self.level_sketches[k].estimate_f2(self.config.aggregate)
        return float(self.level_counts[k].f2())

    def finalize(self, s: int | None = None, clamp_negative: bool | None = None) -> EstimateReport:
        """Report for threshold ``s`` (default: the configured one; any ``s`` at or
        above it can be answered from the same state). The state stays usable."""
        c = self.config
        s = c.s if s is None else s
        if not c.s <= s <= c.d:
            raise ValueError(f"threshold {s} not covered by levels [{c.s}, {c.d}]")
        clamp = c.clamp_negative if clamp_negative is None else clamp_negative
        y = {k: self.estimate_level(k) for k in range(s, c.d + 1)}
        x = solve_pair_counts(y, c.d, s, self.n, c.r, clamp)
        pair_count = sum(x.values())
        g_s = pair_count + self.n
        bounds = None
        if g_s > 0:
            bounds = (variance_bound_offline(c.d, s, c.r, g_s),
                      variance_bound_online(c.d, s, c.r, c.w, self.n, g_s))
        cfg = c if s == c.s else SjpcConfig(c.d, s, c.r, c.w, c.t, c.master_seed,
                                            c.clamp_negative, c.mode, c.aggregate)
        return EstimateReport(y, x, pair_count, g_s, self.n, bounds, cfg)

    def spawn(self, first_index: int) -> "SjpcState":
        """Empty state for a partition of the same stream starting at ``first_index``."""
        return SjpcState(self.config, self.stream_id, first_index)

    def merge_inplace(self, other: "SjpcState") -> None:
        if other.config != self.config or other.stream_id != self.stream_id:
            raise ValueError("can only merge partitions of the same configured stream")
        if self.level_sketches is not None:
            for k, sk in self.level_sketches.items():
                sk.merge_inplace(other.level_sketches[k])
        else:
            for k, counts in self.level_counts.items():
                counts.merge_inplace(other.level_counts[k])
        self.n += other.n


def join_level(state_a: SjpcState, state_b: SjpcState, k: int) -> float:
    """Join size between the level-k sub-value streams of two states."""
    if state_a.level_sketches is not None:
        return state_a.level_sketches[k].inner_product(state_b.level_sketches[k],
                                                       state_a.config.aggregate)
    return float(state_a.level_counts[k].inner(state_b.level_counts[k]))


def join_finalize(state_a: SjpcState, state_b: SjpcState, s: int | None = None,
                  clamp_negative: bool | None = None) -> EstimateReport:
    """Similarity join size estimate between the streams of two states.

    Both states need identical configurations (hence identical hash seeds).
    """
    if state_a.config != state_b.config:
        raise ValueError("join inputs must share d, s, r, w, t, seed, mode and aggregation")
    c = state_a.config
    s = c.s if s is None else s
    if not c.s <= s <= c.d:
        raise ValueError(f"threshold {s} not covered by levels [{c.s}, {c.d}]")
    clamp = c.clamp_negative if clamp_negative is None else clamp_negative
    y = {k: join_level(state_a, state_b, k) for k in range(s, c.d + 1)}
    x = join_solve_pair_counts(y, c.d, s, c.r, clamp)
    total = sum(x.values())
    cfg = c if s == c.s else SjpcConfig(c.d, s, c.r, c.w, c.t, c.master_seed,
                                        c.clamp_negative, c.mode, c.aggregate)
    return EstimateReport(y, x, total, total, 0, None, cfg, kind="join",
                          join_sizes=(state_a.n, state_b.n))
