"""Level-II depth records to one-second venue-aggregated snapshots.

Input format (UTF-8 CSV, optionally gzip-compressed by ``.gz`` suffix)::

    ts_ns,venue,side,price,size
    1700000000000000000,XNAS,B,100.00,300

``side`` is ``B`` (bid) or ``A`` (ask).  Each record declares the size a
venue currently shows at a price; within one second the last declaration
per (venue, side, price) wins, and sizes are then summed across venues.
"""

from __future__ import annotations

import csv
import gzip
import io
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .book import BookSnapshot
from .errors import BadHeader, CrossedBook, ParseError, UnsortedInput

HEADER = ("ts_ns", "venue", "side", "price", "size")
SIDE_CODES = {"B": "bid", "A": "ask"}
NS_PER_S = 1_000_000_000


@dataclass(frozen=True)
class DepthRecord:
    ts_ns: int
    venue: str
    side: str
    price: Decimal
    size: float


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def _parse_row(row, lineno):
    if len(row) != len(HEADER):
        raise ParseError(lineno, len(row), f"expected {len(HEADER)} fields, got {len(row)}")
    ts_raw, venue, side_raw, price_raw, size_raw = row
    try:
        ts = int(ts_raw)
    except ValueError:
        raise ParseError(lineno, "ts_ns", f"not an integer: {ts_raw!r}") from None
    if ts <= 0:
        raise ParseError(lineno, "ts_ns", "timestamp must be positive")
    venue = venue.strip()
    if not venue:
        raise ParseError(lineno, "venue", "empty venue")
    side = SIDE_CODES.get(side_raw.strip())
    if side is None:
        raise ParseError(lineno, "side", f"expected B or A, got {side_raw!r}")
    try:
        price = Decimal(price_raw.strip())
    except InvalidOperation:
        raise ParseError(lineno, "price", f"not a decimal: {price_raw!r}") from None
    if not price.is_finite() or price <= 0:
        raise ParseError(lineno, "price", "price must be positive")
    try:
        size = float(size_raw)
    except ValueError:
        raise ParseError(lineno, "size", f"not a number: {size_raw!r}") from None
    if not size >= 0 or size == float("inf"):
        raise ParseError(lineno, "size", f"size must be finite and >= 0, got {size_raw!r}")
    return DepthRecord(ts, venue, side, price, size)


def read_depth_csv(path):
    """Yield :class:`DepthRecord` in file order."""
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise BadHeader(f"{path}: expected header {','.join(HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            yield _parse_row(row, lineno)


def _flush(second, book, tick_size):
    agg = {"bid": {}, "ask": {}}
    for (_, side, price), size in book.items():
        agg[side][price] = agg[side].get(price, 0.0) + size
    bids = sorted(((p, s) for p, s in agg["bid"].items() if s > 0), reverse=True)
    asks = sorted((p, s) for p, s in agg["ask"].items() if s > 0)
    if bids and asks and bids[0][0] >= asks[0][0]:
        raise CrossedBook(second, f"best bid {bids[0][0]} >= best ask {asks[0][0]}")
    return BookSnapshot(
        second,
        tuple((float(p), s) for p, s in bids),
        tuple((float(p), s) for p, s in asks),
        float(tick_size),
    )


def build_snapshots(records, tick_size):
    """Group records into one snapshot per populated epoch-second.

    Records may be out of order within a second but not across seconds.
    Levels whose aggregate size is zero are dropped.
    """
    current = None
    book = {}
    for rec in records:
        second = rec.ts_ns // NS_PER_S
        if current is None:
            current = second
        elif second < current:
            raise UnsortedInput(f"record at ts_ns={rec.ts_ns} precedes second {current}")
        elif second > current:
            yield _flush(current, book, tick_size)
            current = second
            book = {}
        book[(rec.venue, rec.side, rec.price)] = rec.size
    if current is not None:
        yield _flush(current, book, tick_size)


# Snapshot CSV, the interchange format between `simulate` and `fit`.
SNAPSHOT_HEADER = ("timestamp", "side", "price", "size")


def snapshot_rows(snap):
    for side, code in (("bid", "B"), ("ask", "A")):
        for price, size in snap.levels(side):
            yield f"{snap.timestamp},{code},{price:.17g},{size:.17g}\n"


def read_snapshot_csv(path, tick_size):
    """Read snapshots written by :func:`snapshot_rows` (levels already aggregated)."""
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SNAPSHOT_HEADER:
            raise BadHeader(f"{path}: expected header {','.join(SNAPSHOT_HEADER)}")
        current = None
        levels = {"bid": [], "ask": []}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(lineno, len(row), "expected 4 fields")
            try:
                ts = int(row[0])
                price = float(row[2])
                size = float(row[3])
            except ValueError as exc:
                raise ParseError(lineno, "?", str(exc)) from None
            side = SIDE_CODES.get(row[1])
            if side is None:
                raise ParseError(lineno, "side", f"expected B or A, got {row[1]!r}")
            if current is not None and ts != current:
                if ts < current:
                    raise UnsortedInput(f"line {lineno}: timestamp {ts} after {current}")
                yield BookSnapshot(current, levels["bid"], levels["ask"], tick_size)
                levels = {"bid": [], "ask": []}
            current = ts
            levels[side].append((price, size))
        if current is not None:
            yield BookSnapshot(current, levels["bid"], levels["ask"], tick_size)


def sniff_format(path):
    """``"depth"`` or ``"snapshot"`` from the CSV header."""
    with _open_text(path) as fh:
        header = tuple(h.strip() for h in next(csv.reader(fh), ()))
    if header == HEADER:
        return "depth"
    if header == SNAPSHOT_HEADER:
        return "snapshot"
    raise BadHeader(f"{path}: unrecognised header {header}")
