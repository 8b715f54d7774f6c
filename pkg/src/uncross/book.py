"""Auction order book reconstructed by replaying an event log.

The book keeps three mutually consistent views:

* per-price resting limit volume, one integer share count per tick and side;
* unpriced market-order share totals per side;
* a registry of live orders preserving arrival order, used for time-priority
  allocation at the clearing price and for flag breakdowns.

Supply at a price counts all sell volume at or below it plus all sell market
orders; demand counts buy volume at or above plus buy market orders.  Market
orders have no price, so they participate in the sums at every price, which
mirrors their unconditional priority in the uncrossing.

Replaying is strictly sequential (single writer per auction); completed books
are treated as immutable snapshots and may be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    DuplicateOrderId,
    EmptySide,
    NonPositiveQuantity,
    UnknownOrderId,
)
from .events import OrderEvent
from .grid import PriceGrid


@dataclass
class OrderRecord:
    """A live order in the registry.

    ``priority_ts``/``priority_seq`` implement price-time priority: a price
    change or a quantity increase resets them to the modifying event, a pure
    quantity decrease keeps the original slot.
    """

    order_id: str
    side: str
    order_type: str
    price_index: int | None  # None for MARKET (and dormant STOP)
    quantity: int
    submit_ts: int
    priority_ts: int
    priority_seq: int
    latency_flag: str
    account_type: str

    @property
    def is_market(self) -> bool:
        return self.order_type == "MARKET"

    @property
    def is_resting(self) -> bool:
        """True when the order contributes volume to the book."""
        return self.order_type != "STOP"


@dataclass
class AuctionBook:
    grid: PriceGrid
    buy_volume: dict[int, int] = field(default_factory=dict)  # tick index -> shares
    sell_volume: dict[int, int] = field(default_factory=dict)
    buy_market_total: int = 0
    sell_market_total: int = 0
    orders: dict[str, OrderRecord] = field(default_factory=dict)
    _seq: int = 0
    # conservation counters: shares ever added to / removed from resting state
    shares_added: dict[str, int] = field(default_factory=lambda: {"B": 0, "S": 0})
    shares_removed: dict[str, int] = field(default_factory=lambda: {"B": 0, "S": 0})

    # ------------------------------------------------------------------ mutation

    def apply(self, ev: OrderEvent) -> "AuctionBook":
        """Apply one event and return the (mutated) book."""
        ev.validate()
        if ev.action == "SUBMIT":
            self._submit(ev)
        elif ev.action == "CANCEL":
            self._cancel(ev)
        else:
            self._modify(ev)
        return self

    def replay(self, events) -> "AuctionBook":
        for ev in events:
            self.apply(ev)
        return self

    def _submit(self, ev: OrderEvent) -> None:
        if ev.order_id in self.orders:
            raise DuplicateOrderId(f"order id {ev.order_id!r} is already live")
        if ev.quantity < 1:
            raise NonPositiveQuantity(f"quantity must be >= 1, got {ev.quantity}")
        price_index = None
        if ev.order_type != "MARKET" and ev.price is not None:
            price_index = self.grid.index_of(ev.price)
        self._seq += 1
        rec = OrderRecord(
            order_id=ev.order_id,
            side=ev.side,
            order_type=ev.order_type,
            price_index=price_index,
            quantity=ev.quantity,
            submit_ts=ev.timestamp,
            priority_ts=ev.timestamp,
            priority_seq=self._seq,
            latency_flag=ev.latency_flag,
            account_type=ev.account_type,
        )
        self.orders[ev.order_id] = rec
        self._add_volume(rec, rec.quantity)

    def _cancel(self, ev: OrderEvent) -> None:
        rec = self.orders.get(ev.order_id)
        if rec is None:
            raise UnknownOrderId(f"CANCEL of unknown or dead order {ev.order_id!r}")
        self._remove_volume(rec, rec.quantity)
        del self.orders[ev.order_id]

    def _modify(self, ev: OrderEvent) -> None:
        rec = self.orders.get(ev.order_id)
        if rec is None:
            raise UnknownOrderId(f"MODIFY of unknown or dead order {ev.order_id!r}")
        if ev.quantity < 1:
            raise NonPositiveQuantity(f"quantity must be >= 1, got {ev.quantity}")
        new_type = ev.order_type
        new_index = None
        if new_type != "MARKET" and ev.price is not None:
            new_index = self.grid.index_of(ev.price)

        price_changed = new_index != rec.price_index or new_type != rec.order_type
        qty_up = ev.quantity > rec.quantity

        self._remove_volume(rec, rec.quantity)
        rec.order_type = new_type
        rec.price_index = new_index
        rec.quantity = ev.quantity
        if price_changed or qty_up:
            self._seq += 1
            rec.priority_ts = ev.timestamp
            rec.priority_seq = self._seq
        self._add_volume(rec, rec.quantity)

    def _add_volume(self, rec: OrderRecord, qty: int) -> None:
        if not rec.is_resting:
            return  # dormant stop orders carry no book volume
        self.shares_added[rec.side] += qty
        if rec.is_market:
            if rec.side == "B":
                self.buy_market_total += qty
            else:
                self.sell_market_total += qty
            return
        levels = self.buy_volume if rec.side == "B" else self.sell_volume
        levels[rec.price_index] = levels.get(rec.price_index, 0) + qty

    def _remove_volume(self, rec: OrderRecord, qty: int) -> None:
        if not rec.is_resting:
            return
        self.shares_removed[rec.side] += qty
        if rec.is_market:
            if rec.side == "B":
                self.buy_market_total -= qty
            else:
                self.sell_market_total -= qty
            return
        levels = self.buy_volume if rec.side == "B" else self.sell_volume
        remaining = levels[rec.price_index] - qty
        if remaining:
            levels[rec.price_index] = remaining
        else:
            del levels[rec.price_index]

    # ------------------------------------------------------------------ queries

    def supply(self, price: float) -> int:
        """Sell shares available at or below ``price``, market sells included."""
        k = self.grid.index_of(price)
        return self.sell_market_total + sum(v for i, v in self.sell_volume.items() if i <= k)

    def demand(self, price: float) -> int:
        """Buy shares available at or above ``price``, market buys included."""
        k = self.grid.index_of(price)
        return self.buy_market_total + sum(v for i, v in self.buy_volume.items() if i >= k)

    def volume_at(self, index: int) -> tuple[int, int]:
        return self.buy_volume.get(index, 0), self.sell_volume.get(index, 0)

    def nonempty_indices(self, side: str | None = None) -> list[int]:
        """Sorted tick indices carrying volume; both sides combined when side is None."""
        if side == "B":
            keys = self.buy_volume.keys()
        elif side == "S":
            keys = self.sell_volume.keys()
        else:
            keys = self.buy_volume.keys() | self.sell_volume.keys()
        out = sorted(keys)
        if side is not None and not out:
            raise EmptySide(f"no resting limit volume on side {side}")
        return out

    def live_resting_orders(self):
        """Live orders that contribute volume, in arrival order."""
        return [r for r in self.orders.values() if r.is_resting]

    def total_resting(self, side: str) -> int:
        levels = self.buy_volume if side == "B" else self.sell_volume
        market = self.buy_market_total if side == "B" else self.sell_market_total
        return sum(levels.values()) + market
