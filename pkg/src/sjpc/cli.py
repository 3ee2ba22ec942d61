"""``sjpc`` command line.

Reports are flat JSON objects, one key per line; Monte-Carlo tables are CSV.
Exit codes: 0 success, 1 usage, 2 input error, 3 resource cap.
"""
from __future__ import annotations

import argparse
import codecs
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from typing import BinaryIO, Iterator, Sequence

import numpy as np

from . import __version__
from ._backend import BACKEND
from .baselines import (
    KINDS,
    ORACLE_CAP,
    OracleCapError,
    exact_cross_pair_counts,
    exact_pair_counts,
    generate_synthetic,
    random_sampling_estimate,
    reservoir_sample,
    sample_pair_estimate,
)
from .bounds import variance_bound_offline, variance_bound_online
from .estimator import SjpcConfig, SjpcState, join_finalize
from .hashing import derive_seed
from .records import InputFormatError, iter_blocks
from .subvalues import RecordArityError, RecordBlock

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
MONTECARLO_SEED_TAG = 0x4D43


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2; usage errors here are 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _delimiter(text: str) -> bytes:
    raw = codecs.decode(text, "unicode_escape").encode("latin-1")
    if len(raw) != 1 or raw == b"\n":
        raise argparse.ArgumentTypeError("delimiter must be a single byte other than newline")
    return raw


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"sampling ratio must be in (0, 1], got {text}")
    return value


def _s_list(text: str) -> list[int]:
    try:
        values = sorted({int(v) for v in text.split(",") if v.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not values or values[0] < 1:
        raise argparse.ArgumentTypeError("thresholds must be positive")
    return values


@contextmanager
def _open_input(path: str) -> Iterator[BinaryIO]:
    if path == "-":
        yield sys.stdin.buffer
    else:
        with open(path, "rb") as fh:
            yield fh


@contextmanager
def _open_output(path: str | None, mode: str = "w") -> Iterator:
    if path is None or path == "-":
        yield sys.stdout.buffer if "b" in mode else sys.stdout
    else:
        with open(path, mode, newline="" if "b" not in mode else None) as fh:
            yield fh


def _emit(doc: dict, out: str | None) -> None:
    with _open_output(out) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")


def _manifest(command: str, digests: dict[str, str]) -> dict:
    doc = {"command": command, "version": __version__}
    for name, value in digests.items():
        doc[f"{name}.sha256"] = value
    return doc


def _config(args, d: int, s: int | None = None) -> SjpcConfig:
    s = args.s if s is None else s
    if s > d:
        raise UsageError(f"threshold s={s} exceeds the number of fields d={d}")
    return SjpcConfig(d=d, s=s, r=args.r, w=args.width, t=args.depth, master_seed=args.seed,
                      clamp_negative=args.clamp == "on", mode=args.mode, aggregate=args.aggregate)


def _stream_state(path: str, args, stream_id: int = 0) -> tuple[SjpcState, str]:
    """One pass over ``path``: returns the filled state and the input's sha256."""
    digest = hashlib.sha256()
    state: SjpcState | None = None
    with _open_input(path) as fh:
        blocks = iter_blocks(fh, args.d, args.delimiter, digest=digest)
        if args.threads > 1:
            state = _stream_threaded(blocks, args, stream_id)
        else:
            for block in blocks:
                if state is None:
                    state = SjpcState(_config(args, block.d), stream_id)
                state.process_block(block)
    if state is None:
        state = SjpcState(_config(args, args.d or args.s), stream_id)
    return state, digest.hexdigest()


def _stream_threaded(blocks: Iterator[RecordBlock], args, stream_id: int) -> SjpcState | None:
    # each block gets a partition state seeded by its stream offset; merging is
    # integer addition, so the result equals the sequential pass exactly
    state: SjpcState | None = None
    offset = 0
    pending = []
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        for block in blocks:
            if state is None:
                state = SjpcState(_config(args, block.d), stream_id)
            part = state.spawn(offset)
            offset += block.n
            pending.append(pool.submit(part.process_block, block))
            if len(pending) >= 2 * args.threads:
                state.merge_inplace(pending.pop(0).result())
        for fut in pending:
            state.merge_inplace(fut.result())
    return state


def _read_all(path: str, args) -> tuple[list[tuple[bytes, ...]], int, str]:
    digest = hashlib.sha256()
    records: list[tuple[bytes, ...]] = []
    d = args.d
    with _open_input(path) as fh:
        for block in iter_blocks(fh, d, args.delimiter, digest=digest):
            d = block.d
            records.extend(block.records())
    return records, d or 0, digest.hexdigest()


# --------------------------------------------------------------------------
# commands

def cmd_estimate(args) -> int:
    state, sha = _stream_state(args.input, args)
    doc = state.finalize().to_document()
    doc["counter_bytes"] = state.counter_bytes
    doc.update(_manifest("estimate", {"input": sha}))
    _emit(doc, args.out)
    return EXIT_OK


def cmd_join(args) -> int:
    state_a, sha_a = _stream_state(args.input_a, args, stream_id=0)
    state_b, sha_b = _stream_state(args.input_b, args, stream_id=1)
    if state_a.n and state_b.n and state_a.config.d != state_b.config.d:
        raise UsageError(f"inputs have different field counts: {state_a.config.d} vs {state_b.config.d}")
    if not state_a.n or not state_b.n:
        d = state_a.config.d if state_a.n else state_b.config.d
        if not state_a.n:
            state_a = SjpcState(_config(args, d), 0)
        if not state_b.n:
            state_b = SjpcState(_config(args, d), 1)
    doc = join_finalize(state_a, state_b).to_document()
    doc.update(_manifest("join", {"input_a": sha_a, "input_b": sha_b}))
    _emit(doc, args.out)
    return EXIT_OK


def cmd_exact(args) -> int:
    records, d, sha = _read_all(args.input, args)
    if not d:
        d = args.s or 1
    cap = math.inf if args.no_cap else args.cap
    counts = exact_pair_counts(records, d, cap=cap)
    doc = counts.to_document()
    if args.input_b is not None:
        records_b, d_b, sha_b = _read_all(args.input_b, args)
        if records_b and d_b != d:
            raise UsageError(f"inputs have different field counts: {d} vs {d_b}")
        cross = exact_cross_pair_counts(records, records_b, d, cap=cap)
        doc = cross.to_document()
        doc.update(_manifest("exact", {"input_a": sha, "input_b": sha_b}))
    else:
        doc.update(_manifest("exact", {"input": sha}))
    _emit(doc, args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    digest = hashlib.sha256()
    d = args.d
    with _open_input(args.input) as fh:
        def stream():
            nonlocal d
            for block in iter_blocks(fh, d, args.delimiter, digest=digest):
                d = block.d
                yield from block.records()

        if args.sample_rows:
            wanted = set(args.sample_rows)
            sample, n = [], 0
            for rec in stream():
                n += 1
                if n in wanted:
                    sample.append(rec)
            if len(sample) != len(wanted):
                raise UsageError(f"--sample-rows refers past the end of the input ({n} records)")
        else:
            import random
            sample, n = reservoir_sample(stream(), args.sample_size, random.Random(args.seed))
    d = d or args.s
    if args.s > d:
        raise UsageError(f"threshold s={args.s} exceeds the number of fields d={d}")
    est = sample_pair_estimate(sample, n, args.s, d)
    doc = {"kind": "sample", "d": d, "s": args.s, "seed": args.seed, "n": n,
           "sample_size": est.sample_size}
    for k in sorted(est.x):
        doc[f"x.{k}"] = float(est.x[k])
    doc["pair_count"] = float(sum(est.x.values()))
    doc["g_s"] = float(est.g_s)
    doc.update(_manifest("sample", {"input": digest.hexdigest()}))
    _emit(doc, args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind not in KINDS:
        raise UsageError(f"unknown dataset kind {args.kind!r}; choose from {', '.join(KINDS)}")
    try:
        ds = generate_synthetic(args.kind, args.n, args.d, args.seed,
                                args.s if args.kind == "planted_lemma1" else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _open_output(args.out, "wb") as fh:
        fh.write(ds.to_bytes(args.delimiter))
    if args.out not in (None, "-"):
        with open(args.out + ".truth.json", "w") as fh:
            fh.write(json.dumps(ds.truth_document(), indent=2) + "\n")
    return EXIT_OK


MONTECARLO_COLUMNS = ("s", "estimator", "trials", "mean_rel_err", "std_rel_err", "emp_var",
                      "bound_offline", "bound_online")


def _truth_g(path: str | None, records, d: int, s_values: Sequence[int]) -> dict[int, float]:
    sidecar = None if path in (None, "-") else path + ".truth.json"
    if sidecar is not None and os.path.exists(sidecar):
        with open(sidecar) as fh:
            truth = json.load(fh)
        return {s: float(truth[f"g.{s}"]) for s in s_values}
    counts = exact_pair_counts(records, d)
    return {s: float(counts.g[s]) for s in s_values}


def cmd_montecarlo(args) -> int:
    if args.trials < 2:
        raise UsageError("--trials must be at least 2")
    if args.kind is not None:
        if args.kind not in KINDS:
            raise UsageError(f"unknown dataset kind {args.kind!r}; choose from {', '.join(KINDS)}")
        ds = generate_synthetic(args.kind, args.n, args.d or 5, args.seed)
        block, d = ds.block(), ds.d
        truth = {s: float(ds.g[s]) for s in args.s if s <= d}
        records = None
    else:
        if args.input is None:
            raise UsageError("give an input file or --kind")
        records, d, _ = _read_all(args.input, args)
        block = RecordBlock.from_records(records, d)
        truth = None
    if not d or max(args.s) > d:
        raise UsageError(f"thresholds {args.s} exceed the number of fields d={d}")
    if truth is None:
        truth = _truth_g(args.input, records, d, args.s)
    n = block.n
    base = SjpcConfig(d=d, s=min(args.s), r=args.r, w=args.width, t=args.depth,
                      clamp_negative=args.clamp == "on", mode=args.mode, aggregate=args.aggregate)
    estimates: dict[tuple[int, str], list[float]] = {}
    name = f"sjpc_{args.mode}"
    for trial in range(args.trials):
        seed = derive_seed(args.seed, MONTECARLO_SEED_TAG, trial)
        state = SjpcState(replace(base, master_seed=seed)).process_block(block)
        for s in args.s:
            estimates.setdefault((s, name), []).append(state.finalize(s).g_s)
        if args.sample_size:
            recs = records if records is not None else block.records()
            records = recs
            for s in args.s:
                est = random_sampling_estimate(recs, args.sample_size, s, d, seed=seed)
                estimates.setdefault((s, "sampling"), []).append(est.g_s)
    with _open_output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MONTECARLO_COLUMNS)
        for (s, est_name), values in estimates.items():
            g = truth[s]
            rel = np.asarray(values, dtype=np.float64) / g - 1.0 if g else np.zeros(len(values))
            ratio = rel + 1.0
            if est_name.startswith("sjpc") and g > 0:
                b_off = variance_bound_offline(d, s, args.r, g)
                b_on = variance_bound_online(d, s, args.r, args.width, n, g)
            else:
                b_off = b_on = ""
            writer.writerow([s, est_name, len(values), repr(float(rel.mean())),
                             repr(float(rel.std(ddof=1))), repr(float(ratio.var(ddof=1))),
                             b_off if b_off == "" else repr(b_off),
                             b_on if b_on == "" else repr(b_on)])
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _add_io(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=_positive_int, default=None,
                   help="fields per record (default: inferred from the first line)")
    p.add_argument("--delimiter", type=_delimiter, default=b"\t", help="field separator (default: tab)")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _add_sjpc(p: argparse.ArgumentParser, s_type=int) -> None:
    p.add_argument("--s", type=s_type, required=True, help="similarity threshold")
    p.add_argument("--r", type=_ratio, default=1.0, help="sampling ratio in (0, 1]")
    p.add_argument("--width", type=_positive_int, default=1024, help="sketch width w")
    p.add_argument("--depth", type=_positive_int, default=5, help="sketch depth t")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--mode", choices=("online", "offline"), default="online")
    p.add_argument("--clamp", choices=("on", "off"), default="on",
                   help="floor negative pair counts at zero")
    p.add_argument("--aggregate", choices=("median", "mean"), default="median",
                   help="how sketch rows are combined")
    p.add_argument("--threads", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sjpc", description="Similarity self-join size estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="one-pass SJPC estimate")
    p.add_argument("input", help="record file, or - for stdin")
    _add_sjpc(p)
    _add_io(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("join", help="similarity join size between two files")
    p.add_argument("input_a")
    p.add_argument("input_b")
    _add_sjpc(p)
    _add_io(p)
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("exact", help="brute-force pair counts")
    p.add_argument("input")
    p.add_argument("input_b", nargs="?", default=None, help="second file for cross counts")
    p.add_argument("--s", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--cap", type=_positive_int, default=ORACLE_CAP, help="maximum records")
    p.add_argument("--no-cap", action="store_true", help="lift the size cap")
    _add_io(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sample", help="random-sampling baseline")
    p.add_argument("input")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--sample-size", type=int, default=1000)
    p.add_argument("--sample-rows", type=lambda t: [int(v) for v in t.split(",")],
                   default=None, help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=0)
    _add_io(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gen", help="write a synthetic dataset and its truth sidecar")
    p.add_argument("kind", help=", ".join(KINDS))
    p.add_argument("n", type=_positive_int)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--s", type=int, default=None, help="planted similarity (planted_lemma1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delimiter", type=_delimiter, default=b"\t")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("montecarlo", help="repeat estimation and tabulate error statistics")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--kind", default=None, help="generate the dataset instead of reading one")
    p.add_argument("--n", type=_positive_int, default=10_000)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--sample-size", type=int, default=0,
                   help="also run random sampling with this many records")
    _add_sjpc(p, s_type=_s_list)
    _add_io(p)
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if isinstance(getattr(args, "s", None), int) and args.s < 1:
            parser.error("--s must be at least 1")
        if args.command == "sample" and args.sample_size < 2:
            parser.error("--sample-size must be at least 2")
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sjpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputFormatError, RecordArityError, UnicodeDecodeError, OSError) as exc:
        print(f"sjpc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OracleCapError, OverflowError, MemoryError) as exc:
        print(f"sjpc: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
