"""Memory access traces: the record type, a line parser, streaming reader,
writer, and a seeded synthetic generator.

Trace file format (UTF-8 text, one access per line)::

    # comment lines start with '#'
    R 0x1000
    W 4096

The first token is ``R`` (read) or ``W`` (write); the second is the byte
address, either ``0x``-prefixed hexadecimal or decimal, at most 64 bits.
Leading/trailing whitespace and blank lines are ignored.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

PAGE_SIZE = 4096
MAX_ADDRESS = 2**64 - 1
_CHUNK = 1 << 16


class Op(str, Enum):
    READ = "R"
    WRITE = "W"


class MemoryAccess(NamedTuple):
    op: Op
    address: int
    page_id: int

    @property
    def is_write(self) -> bool:
        return self.op is Op.WRITE


class TraceParseError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


class TraceIOError(OSError):
    """Reading a trace failed part-way; ``count`` accesses were read first."""

    def __init__(self, message: str, count: int, lineno: int):
        self.count = count
        self.lineno = lineno
        super().__init__(f"{message} (after {count} accesses, line {lineno})")


def page_of(address: int, page_size: int = PAGE_SIZE) -> int:
    return address // page_size


def make_access(op: Op, address: int, page_size: int = PAGE_SIZE) -> MemoryAccess:
    return MemoryAccess(op, address, address // page_size)


def parse_trace_line(line: str, page_size: int = PAGE_SIZE,
                     lineno: int | None = None) -> MemoryAccess | None:
    """Decode one trace line. Returns None for blank and comment lines."""
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    if len(parts) != 2:
        raise TraceParseError(f"expected '<R|W> <address>', got {text!r}", lineno)
    tok, addr_tok = parts
    if tok == "R":
        op = Op.READ
    elif tok == "W":
        op = Op.WRITE
    else:
        raise TraceParseError(f"unknown op {tok!r}", lineno)
    try:
        if addr_tok[:2].lower() == "0x":
            address = int(addr_tok[2:], 16)
        else:
            if not addr_tok.isdigit():
                raise ValueError
            address = int(addr_tok, 10)
    except ValueError:
        raise TraceParseError(f"unparseable address {addr_tok!r}", lineno) from None
    if address > MAX_ADDRESS:
        raise TraceParseError(f"address {addr_tok} exceeds 64 bits", lineno)
    return MemoryAccess(op, address, address // page_size)


class TraceStream:
    """Iterate the accesses of a trace source in file order.

    ``count`` and ``distinct_pages`` are valid once iteration finishes.
    Memory use grows with the number of distinct pages only.
    """

    def __init__(self, source: IO, page_size: int = PAGE_SIZE):
        if page_size < 1:
            raise ValueError("page_size must be positive")
        self.source = source
        self.page_size = page_size
        self.count = 0
        self._pages: set[int] = set()

    @property
    def distinct_pages(self) -> int:
        return len(self._pages)

    def _lines(self) -> Iterator[str]:
        src = self.source
        if isinstance(src, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(src, "mode", ""):
            src = io.TextIOWrapper(src, encoding="utf-8")
        return iter(src)

    def __iter__(self) -> Iterator[MemoryAccess]:
        lines = self._lines()
        lineno = 0
        while True:
            try:
                line = next(lines)
            except StopIteration:
                return
            except (OSError, UnicodeDecodeError) as exc:
                raise TraceIOError(str(exc), self.count, lineno + 1) from exc
            lineno += 1
            acc = parse_trace_line(line, self.page_size, lineno)
            if acc is None:
                continue
            self.count += 1
            self._pages.add(acc.page_id)
            yield acc


def stream_trace(source: IO, page_size: int = PAGE_SIZE) -> TraceStream:
    return TraceStream(source, page_size)


def read_trace(path, page_size: int = PAGE_SIZE) -> list[MemoryAccess]:
    with open(path, "rb") as fh:
        return list(stream_trace(fh, page_size))


def format_access(acc: MemoryAccess) -> str:
    return f"{acc.op.value} {acc.address:#x}"


def write_trace(accesses: Iterable[MemoryAccess], fh: IO[str]) -> int:
    n = 0
    for acc in accesses:
        fh.write(format_access(acc))
        fh.write("\n")
        n += 1
    return n


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a hot/cold synthetic workload."""

    n_accesses: int
    n_pages: int
    hot_fraction: float = 1.0
    hot_access_fraction: float = 1.0
    read_ratio: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_accesses < 1:
            raise ValueError("n_accesses must be >= 1")
        if self.n_pages < 1:
            raise ValueError("n_pages must be >= 1")
        if not 0 < self.hot_fraction <= 1:
            raise ValueError("hot_fraction must be in (0, 1]")
        if not 0 < self.hot_access_fraction <= 1:
            raise ValueError("hot_access_fraction must be in (0, 1]")
        if not 0 <= self.read_ratio <= 1:
            raise ValueError("read_ratio must be in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def hot_pages(self) -> int:
        return min(self.n_pages, max(1, math.ceil(self.hot_fraction * self.n_pages - 1e-9)))


def generate_synthetic(spec: SyntheticSpec, page_size: int = PAGE_SIZE) -> Iterator[MemoryAccess]:
    """Yield ``spec.n_accesses`` accesses drawn from a hot/cold page mix.

    With probability ``hot_access_fraction`` the page is uniform over the
    first ``hot_pages`` ids, otherwise uniform over the remaining ids (all
    ids when the cold set is empty). Each access reads with probability
    ``read_ratio``. Offsets within the page are 64-byte aligned.
    """
    rng = np.random.default_rng(spec.seed)
    n_hot = spec.hot_pages
    n_cold = spec.n_pages - n_hot
    lines_per_page = max(1, page_size // 64)
    left = spec.n_accesses
    R, W = Op.READ, Op.WRITE
    while left:
        k = min(left, _CHUNK)
        left -= k
        pick_hot = rng.random(k) < spec.hot_access_fraction
        hot = rng.integers(0, n_hot, size=k)
        if n_cold:
            cold = n_hot + rng.integers(0, n_cold, size=k)
            pages = np.where(pick_hot, hot, cold)
        else:
            pages = hot
        reads = rng.random(k) < spec.read_ratio
        offsets = rng.integers(0, lines_per_page, size=k) * 64
        addrs = pages * page_size + offsets
        for page, addr, is_read in zip(pages.tolist(), addrs.tolist(), reads.tolist()):
            yield MemoryAccess(R if is_read else W, addr, page)
