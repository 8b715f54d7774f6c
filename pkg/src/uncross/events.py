"""Order event model and the CSV log schema.

One event per row, header required::

    timestamp_us,order_id,action,side,order_type,price,qty,latency_flag,account_type

``price`` is empty for MARKET orders.  Files are UTF-8 with LF line endings.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ParseError

ACTIONS = ("SUBMIT", "MODIFY", "CANCEL")
SIDES = ("B", "S")
ORDER_TYPES = ("LIMIT", "MARKET", "VALID_FOR_AUCTION", "VALID_FOR_CLOSING", "STOP")
LATENCY_FLAGS = ("HFT", "MIX", "NON")
ACCOUNT_TYPES = ("OWN", "CLIENT", "MARKET_MAKER", "PARENT", "RMO", "RLP")

CSV_HEADER = [
    "timestamp_us",
    "order_id",
    "action",
    "side",
    "order_type",
    "price",
    "qty",
    "latency_flag",
    "account_type",
]

# Order types that rest on the book as priced limit volume.  Valid-for-auction
# and valid-for-closing orders differ from plain limits only in temporal
# validity, which is irrelevant within a single auction replay.
PRICED_TYPES = ("LIMIT", "VALID_FOR_AUCTION", "VALID_FOR_CLOSING")


@dataclass(frozen=True)
class OrderEvent:
    """A single submit/modify/cancel message.

    For MODIFY, ``price``/``quantity``/``order_type`` carry the new values.
    A MODIFY that changes a STOP order's type to LIMIT or MARKET activates it.
    """

    timestamp: int  # microseconds
    order_id: str
    action: str
    side: str
    order_type: str
    price: float | None  # None for MARKET
    quantity: int
    latency_flag: str = "NON"
    account_type: str = "CLIENT"

    def validate(self) -> None:
        if self.action not in ACTIONS:
            raise ParseError(f"unknown action {self.action!r}; expected one of {ACTIONS}")
        if self.side not in SIDES:
            raise ParseError(f"unknown side {self.side!r}; expected one of {SIDES}")
        if self.order_type not in ORDER_TYPES:
            raise ParseError(
                f"unknown order_type {self.order_type!r}; expected one of {ORDER_TYPES}"
            )
        if self.latency_flag not in LATENCY_FLAGS:
            raise ParseError(
                f"unknown latency_flag {self.latency_flag!r}; expected one of {LATENCY_FLAGS}"
            )
        if self.account_type not in ACCOUNT_TYPES:
            raise ParseError(
                f"unknown account_type {self.account_type!r}; expected one of {ACCOUNT_TYPES}"
            )
        if self.order_type == "MARKET":
            if self.price is not None:
                raise ParseError("MARKET order must not carry a price")
        elif self.price is None and self.action != "CANCEL":
            # cancels only need the order id; price/qty are informational
            raise ParseError(f"{self.order_type} order requires a price")
        if self.price is not None and self.price <= 0:
            raise ParseError(f"price must be positive, got {self.price}")


def _parse_row(row: list[str], line: int, path: str | None) -> OrderEvent:
    if len(row) != len(CSV_HEADER):
        raise ParseError(
            f"expected {len(CSV_HEADER)} fields, got {len(row)}", line=line, path=path
        )
    ts, oid, action, side, otype, price_s, qty_s, lat, acct = row
    try:
        timestamp = int(ts)
    except ValueError:
        raise ParseError(f"bad timestamp_us {ts!r}", line=line, path=path) from None
    price: float | None
    if price_s == "":
        price = None
    else:
        try:
            price = float(price_s)
        except ValueError:
            raise ParseError(f"bad price {price_s!r}", line=line, path=path) from None
    try:
        qty = int(qty_s)
    except ValueError:
        raise ParseError(f"bad qty {qty_s!r}", line=line, path=path) from None
    ev = OrderEvent(timestamp, oid, action, side, otype, price, qty, lat, acct)
    try:
        ev.validate()
    except ParseError as exc:
        raise ParseError(str(exc), line=line, path=path) from None
    return ev


def read_events(path: str | Path) -> Iterator[OrderEvent]:
    """Stream events from a CSV log, raising line-numbered ParseError on bad rows."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1, path=str(path)) from None
        if header != CSV_HEADER:
            raise ParseError(
                f"bad header {header!r}; expected {CSV_HEADER!r}", line=1, path=str(path)
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            yield _parse_row(row, line_no, str(path))


def format_event(ev: OrderEvent) -> list[str]:
    return [
        str(ev.timestamp),
        ev.order_id,
        ev.action,
        ev.side,
        ev.order_type,
        "" if ev.price is None else format_price(ev.price),
        str(ev.quantity),
        ev.latency_flag,
        ev.account_type,
    ]


def write_events(path: str | Path, events: Iterable[OrderEvent]) -> None:
    """Write an event log; output is byte-deterministic for a fixed event sequence."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for ev in events:
        writer.writerow(format_event(ev))
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def format_price(p: float) -> str:
    # 12 significant digits: lossless for realistic price grids, no repr noise
    return f"{p:.12g}"
