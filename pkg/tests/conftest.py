import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uncross.book import AuctionBook
from uncross.events import OrderEvent
from uncross.grid import PriceGrid


@pytest.fixture
def worked_book():
    """The hand-checked book: S 30@10.0, 40@10.1, 50@10.2; B 10@9.9, 20@10.0, 60@10.1.

    Reference 10.0.  Clearing: p_a=10.1, q_a=60, sell remainder 10, buy remainder 0.
    """
    grid = PriceGrid(0.1, 10.0, 10.0)
    book = AuctionBook(grid)
    book.replay(
        [
            OrderEvent(1, "s1", "SUBMIT", "S", "LIMIT", 10.0, 30),
            OrderEvent(2, "s2", "SUBMIT", "S", "LIMIT", 10.1, 40),
            OrderEvent(3, "s3", "SUBMIT", "S", "LIMIT", 10.2, 50),
            OrderEvent(4, "b1", "SUBMIT", "B", "LIMIT", 9.9, 10),
            OrderEvent(5, "b2", "SUBMIT", "B", "LIMIT", 10.0, 20),
            OrderEvent(6, "b3", "SUBMIT", "B", "LIMIT", 10.1, 60),
        ]
    )
    return book


def make_book(tick=0.1, anchor=10.0, ref=10.0, buys=(), sells=(), buy_market=0, sell_market=0):
    """Terse book builder: buys/sells are (price, qty) pairs."""
    grid = PriceGrid(tick, anchor, ref)
    book = AuctionBook(grid)
    t = 0
    for i, (p, q) in enumerate(buys):
        t += 1
        book.apply(OrderEvent(t, f"B{i}", "SUBMIT", "B", "LIMIT", p, q))
    for i, (p, q) in enumerate(sells):
        t += 1
        book.apply(OrderEvent(t, f"S{i}", "SUBMIT", "S", "LIMIT", p, q))
    if buy_market:
        t += 1
        book.apply(OrderEvent(t, "BM", "SUBMIT", "B", "MARKET", None, buy_market))
    if sell_market:
        t += 1
        book.apply(OrderEvent(t, "SM", "SUBMIT", "S", "MARKET", None, sell_market))
    return book
