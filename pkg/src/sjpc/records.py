"""Delimited record files: one record per line, ``d`` fields, no quoting.

Reading is strictly sequential and block-buffered, so pipes and FIFOs work
and memory does not grow with the input.
"""
from __future__ import annotations

import hashlib
from typing import BinaryIO, Iterable, Iterator

from ._backend import kernels
from .subvalues import RecordBlock, as_record

BLOCK_BYTES = 1 << 20


class InputFormatError(ValueError):
    """A malformed line; ``line`` is 1-based."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def iter_blocks(stream: BinaryIO, d: int | None = None, delimiter: bytes = b"\t",
                block_bytes: int = BLOCK_BYTES, digest: "hashlib._Hash | None" = None
                ) -> Iterator[RecordBlock]:
    """Yield :class:`RecordBlock` batches of complete lines from a binary stream.

    ``d`` is inferred from the first line when not given. Each raw chunk is
    fed to ``digest`` as it is read, so the input is scanned exactly once.
    """
    if len(delimiter) != 1 or delimiter == b"\n":
        raise ValueError("delimiter must be a single byte other than newline")
    delim = delimiter[0]
    carry = b""
    line_base = 0
    while True:
        chunk = stream.read(block_bytes)
        if digest is not None and chunk:
            digest.update(chunk)
        if chunk:
            data = carry + chunk
            cut = data.rfind(b"\n") + 1
            if cut == 0:
                carry = data
                continue
            carry = data[cut:]
            data = data[:cut]
        else:
            data, carry = carry, b""
            if not data:
                return
        if d is None:
            d = data[: data.index(b"\n") if b"\n" in data else len(data)].count(delimiter) + 1
        starts, ends, n, bad = kernels.split_lines(data, delim, d)
        if bad >= 0:
            raise InputFormatError(line_base + bad + 1, f"expected {d} fields")
        yield RecordBlock(data, starts, ends, n, d)
        line_base += n
        if not chunk:
            return


def read_records(path: str, d: int | None = None, delimiter: bytes = b"\t") -> list[tuple[bytes, ...]]:
    """Load a whole record file into memory (oracle and tests only)."""
    out: list[tuple[bytes, ...]] = []
    with open(path, "rb") as fh:
        for block in iter_blocks(fh, d, delimiter):
            out.extend(block.records())
    return out


def format_records(records: Iterable[Iterable[bytes | str]], delimiter: bytes = b"\t") -> bytes:
    lines = []
    for rec in records:
        rec = as_record(rec)
        for field in rec:
            if delimiter in field or b"\n" in field:
                raise ValueError("fields may not contain the delimiter or a newline")
        lines.append(delimiter.join(rec) + b"\n")
    return b"".join(lines)


def write_records(path: str, records: Iterable[Iterable[bytes | str]], delimiter: bytes = b"\t") -> None:
    with open(path, "wb") as fh:
        fh.write(format_records(records, delimiter))
