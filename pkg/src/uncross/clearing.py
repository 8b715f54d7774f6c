"""Auction uncrossing: price, volume, tie-breaks, and fill allocation.

The clearing price maximizes the executable volume ``min(S(p), D(p))``.
Among maximizers it minimizes the absolute imbalance ``|S(p) - D(p)|``, then
the distance to the reference price, and finally takes the lower price, which
makes the outcome fully deterministic.

Candidate prices are every grid tick between one tick below (above) the lowest
(highest) non-empty tick, widened to include the reference price.  Outside that
range both curves are flat, so any price there ties with the nearest scanned
sentinel tick and loses the distance tie-break to it.

At the clearing price, orders are filled in price-time priority: market orders
first, then limit orders through the price, then limit orders at the price by
priority timestamp (order id as the final tie).  The shorter side always fills
completely.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .book import AuctionBook, OrderRecord
from .errors import AllocationInvariantError, NoCross
from .grid import PriceGrid


def _arrays_for(book: AuctionBook, ref_index: int):
    """Per-tick volume arrays over the candidate index range [lo, hi].

    The range never extends to non-positive prices: an auction cannot clear
    there, and the log-price analytics downstream require positive prices.
    """
    idxs = book.nonempty_indices()
    if idxs:
        lo = min(idxs[0] - 1, ref_index)
        hi = max(idxs[-1] + 1, ref_index)
    else:
        lo = hi = ref_index
    lo = max(lo, book.grid.min_price_index)
    hi = max(hi, lo)
    n = hi - lo + 1
    vb = np.zeros(n, dtype=np.int64)
    vs = np.zeros(n, dtype=np.int64)
    for k, v in book.buy_volume.items():
        vb[k - lo] = v
    for k, v in book.sell_volume.items():
        vs[k - lo] = v
    return lo, vb, vs


def uncross_values(
    vb: np.ndarray,
    vs: np.ndarray,
    buy_market: int,
    sell_market: int,
    lo_index: int,
    ref_index: int,
) -> tuple[int, int, int]:
    """Run the full rule chain over per-tick volume arrays.

    Returns (clearing tick index, cleared volume, signed imbalance S - D).
    Raises NoCross when the maximal executable volume is zero.
    """
    supply = sell_market + np.cumsum(vs)
    demand = buy_market + np.cumsum(vb[::-1])[::-1]
    executable = np.minimum(supply, demand)
    q = int(executable.max())
    if q <= 0:
        raise NoCross("supply and demand do not cross")
    imbalance = supply - demand
    candidates = np.nonzero(executable == q)[0]
    abs_imb = np.abs(imbalance[candidates])
    candidates = candidates[abs_imb == abs_imb.min()]
    dist = np.abs(candidates + lo_index - ref_index)
    candidates = candidates[dist == dist.min()]
    k = int(candidates[0])  # lowest price among remaining ties
    return k + lo_index, q, int(imbalance[k])


@dataclass(frozen=True)
class ClearingResult:
    """Outcome of one uncrossing.

    ``vbm``/``vbr`` (``vsm``/``vsr``) split the limit volume resting exactly at
    the clearing price into matched and remaining shares.  The rationed side's
    remainder can also sit elsewhere: unpriced market volume that could not
    execute goes to ``market_buy_unfilled``/``market_sell_unfilled``, and when
    a tie chain lands the price on a tick below (above) unfilled buy (sell)
    limits, that volume goes to ``buy_spillover``/``sell_spillover``.

    Construction checks the accounting identities
    ``q_a = S(p_a) - remainder_sell = D(p_a) - remainder_buy`` with each
    remainder the sum of its three parts, and that at most one side carries
    any remainder.  On books without market rationing or tie spillover these
    reduce to the strict per-price form ``q_a = S(p_a) - vsr = D(p_a) - vbr``.
    """

    grid: PriceGrid
    price_index: int
    q_a: int
    imbalance: int  # S(p_a) - D(p_a), signed
    vbm: int
    vbr: int
    vsm: int
    vsr: int
    fills: dict[str, int]  # order_id -> filled shares (non-zero entries only)
    supply_at: int
    demand_at: int
    market_buy_unfilled: int = 0
    market_sell_unfilled: int = 0
    buy_spillover: int = 0
    sell_spillover: int = 0
    executable: tuple[tuple[float, int], ...] | None = None

    def __post_init__(self):
        rem_s = self.vsr + self.market_sell_unfilled + self.sell_spillover
        rem_b = self.vbr + self.market_buy_unfilled + self.buy_spillover
        ok = (
            self.q_a == self.supply_at - rem_s
            and self.q_a == self.demand_at - rem_b
            and rem_s * rem_b == 0
            and min(self.vbm, self.vbr, self.vsm, self.vsr,
                    self.market_buy_unfilled, self.market_sell_unfilled,
                    self.buy_spillover, self.sell_spillover) >= 0
        )
        if not ok:
            raise AllocationInvariantError(
                "matched/remaining accounting broke at the clearing price: "
                f"q_a={self.q_a} S={self.supply_at} D={self.demand_at} "
                f"vbm={self.vbm} vbr={self.vbr} vsm={self.vsm} vsr={self.vsr} "
                f"mbu={self.market_buy_unfilled} msu={self.market_sell_unfilled} "
                f"spill_b={self.buy_spillover} spill_s={self.sell_spillover}"
            )

    @property
    def p_a(self) -> float:
        return self.grid.price_at(self.price_index)

    def to_json(self) -> str:
        rec = {
            "p_a": self.p_a,
            "q_a": self.q_a,
            "imbalance": self.imbalance,
            "vbm": self.vbm,
            "vbr": self.vbr,
            "vsm": self.vsm,
            "vsr": self.vsr,
        }
        return json.dumps(rec, sort_keys=True)


def _priority_key(rec: OrderRecord):
    # market orders first, then price aggressiveness, then time, then id
    if rec.is_market:
        return (0, 0, rec.priority_ts, rec.priority_seq, rec.order_id)
    aggressiveness = -rec.price_index if rec.side == "B" else rec.price_index
    return (1, aggressiveness, rec.priority_ts, rec.priority_seq, rec.order_id)


def _allocate_side(
    book: AuctionBook, side: str, price_index: int, q_a: int
) -> dict[str, int]:
    if side == "B":
        eligible = [
            r
            for r in book.live_resting_orders()
            if r.side == "B" and (r.is_market or r.price_index >= price_index)
        ]
    else:
        eligible = [
            r
            for r in book.live_resting_orders()
            if r.side == "S" and (r.is_market or r.price_index <= price_index)
        ]
    eligible.sort(key=_priority_key)
    fills: dict[str, int] = {}
    left = q_a
    for rec in eligible:
        if left <= 0:
            break
        take = min(rec.quantity, left)
        fills[rec.order_id] = take
        left -= take
    return fills


def clear(
    book: AuctionBook,
    reference_price: float | None = None,
    diagnostics: bool = False,
) -> ClearingResult:
    """Uncross the book, allocate fills, and return the full clearing record."""
    grid = book.grid
    ref_index = (
        grid.reference_index if reference_price is None else grid.index_of(reference_price)
    )
    lo, vb, vs = _arrays_for(book, ref_index)
    k_a, q_a, imb = uncross_values(
        vb, vs, book.buy_market_total, book.sell_market_total, lo, ref_index
    )

    fills_b = _allocate_side(book, "B", k_a, q_a)
    fills_s = _allocate_side(book, "S", k_a, q_a)
    fills = {**fills_b, **fills_s}

    vb_at, vs_at = book.volume_at(k_a)
    vbm = sum(
        f for oid, f in fills_b.items() if book.orders[oid].price_index == k_a
        and not book.orders[oid].is_market
    )
    vsm = sum(
        f for oid, f in fills_s.items() if book.orders[oid].price_index == k_a
        and not book.orders[oid].is_market
    )
    mb_filled = sum(f for oid, f in fills_b.items() if book.orders[oid].is_market)
    ms_filled = sum(f for oid, f in fills_s.items() if book.orders[oid].is_market)
    # unfilled eligible limit volume resting beyond the clearing price
    spill_b = sum(
        v - fills_b.get(oid, 0)
        for oid, v in (
            (r.order_id, r.quantity)
            for r in book.live_resting_orders()
            if r.side == "B" and not r.is_market and r.price_index > k_a
        )
    )
    spill_s = sum(
        v - fills_s.get(oid, 0)
        for oid, v in (
            (r.order_id, r.quantity)
            for r in book.live_resting_orders()
            if r.side == "S" and not r.is_market and r.price_index < k_a
        )
    )

    executable = None
    if diagnostics:
        supply = book.sell_market_total + np.cumsum(vs)
        demand = book.buy_market_total + np.cumsum(vb[::-1])[::-1]
        executable = tuple(
            (grid.price_at(lo + i), int(min(supply[i], demand[i]))) for i in range(len(vb))
        )

    rel = k_a - lo
    supply_at = book.sell_market_total + int(np.cumsum(vs)[rel])
    demand_at = book.buy_market_total + int(np.cumsum(vb[::-1])[::-1][rel])

    return ClearingResult(
        grid=grid,
        price_index=k_a,
        q_a=q_a,
        imbalance=imb,
        vbm=vbm,
        vbr=vb_at - vbm,
        vsm=vsm,
        vsr=vs_at - vsm,
        fills=fills,
        supply_at=supply_at,
        demand_at=demand_at,
        market_buy_unfilled=book.buy_market_total - mb_filled,
        market_sell_unfilled=book.sell_market_total - ms_filled,
        buy_spillover=spill_b,
        sell_spillover=spill_s,
        executable=executable,
    )


# ---------------------------------------------------------------- indicative


@dataclass(frozen=True)
class IndicativePoint:
    """Hypothetical clearing outcome if the auction uncrossed at time t."""

    t: int  # microseconds
    price_index: int | None
    q_ind: int

    @property
    def crossed(self) -> bool:
        return self.price_index is not None


class LiveUncrosser:
    """Incrementally maintained volume arrays for snapshot-heavy replays.

    Rebuilding dense arrays from the book for every snapshot is O(width) per
    event; this view applies O(1) updates instead and re-runs only the array
    scan.  The window is grown on demand when an event lands outside it.
    """

    def __init__(self, grid: PriceGrid, pad: int = 64):
        self.grid = grid
        self.ref_index = grid.reference_index
        self.lo = max(self.ref_index - pad, grid.min_price_index)
        n = self.ref_index + pad - self.lo + 1
        self.vb = np.zeros(n, dtype=np.int64)
        self.vs = np.zeros(n, dtype=np.int64)
        self.mb = 0
        self.ms = 0

    def _ensure(self, index: int) -> None:
        n = len(self.vb)
        if index < self.lo:
            grow = max(self.lo - index + 64, n // 2)
            grow = min(grow, self.lo - self.grid.min_price_index)
            self.vb = np.concatenate([np.zeros(grow, dtype=np.int64), self.vb])
            self.vs = np.concatenate([np.zeros(grow, dtype=np.int64), self.vs])
            self.lo -= grow
        elif index >= self.lo + n:
            grow = max(index - (self.lo + n) + 65, n // 2)
            self.vb = np.concatenate([self.vb, np.zeros(grow, dtype=np.int64)])
            self.vs = np.concatenate([self.vs, np.zeros(grow, dtype=np.int64)])

    def add(self, side: str, price_index: int | None, qty: int) -> None:
        """Add (or with negative qty, remove) resting volume."""
        if price_index is None:
            if side == "B":
                self.mb += qty
            else:
                self.ms += qty
            return
        self._ensure(price_index)
        if side == "B":
            self.vb[price_index - self.lo] += qty
        else:
            self.vs[price_index - self.lo] += qty

    def uncross(self, extra_side: str | None = None, extra_qty: int = 0):
        """Current indicative values, optionally with a virtual market order added.

        Returns (price index, volume, imbalance) or None when there is no cross.
        """
        mb, ms = self.mb, self.ms
        if extra_qty:
            if extra_side == "B":
                mb += extra_qty
            else:
                ms += extra_qty
        try:
            return uncross_values(self.vb, self.vs, mb, ms, self.lo, self.ref_index)
        except NoCross:
            return None

    @classmethod
    def from_book(cls, book: AuctionBook) -> "LiveUncrosser":
        view = cls(book.grid)
        for k, v in book.buy_volume.items():
            view.add("B", k, v)
        for k, v in book.sell_volume.items():
            view.add("S", k, v)
        view.mb = book.buy_market_total
        view.ms = book.sell_market_total
        return view


def indicative_series(
    events: Iterable, grid: PriceGrid, interval_us: int
) -> tuple[AuctionBook, list[IndicativePoint]]:
    """Replay a time-sorted event log, uncrossing at fixed interval boundaries.

    Emits one point per boundary from the first event on, plus a final point at
    the last event's timestamp, which by construction equals the auction
    clearing of the finished book.  Instants with no cross yield a point with
    ``price_index=None`` rather than failing.
    """
    book = AuctionBook(grid)
    view = LiveUncrosser(grid)
    points: list[IndicativePoint] = []
    next_t: int | None = None
    last_t: int | None = None

    def snap(t: int) -> None:
        res = view.uncross()
        if res is None:
            points.append(IndicativePoint(t, None, 0))
        else:
            k, q, _ = res
            points.append(IndicativePoint(t, k, q))

    for ev in events:
        if next_t is None:
            next_t = ev.timestamp
        while ev.timestamp > next_t:
            snap(next_t)
            next_t += interval_us
        _apply_tracked(book, view, ev)
        last_t = ev.timestamp
    if next_t is not None:
        while last_t is not None and next_t < last_t:
            snap(next_t)
            next_t += interval_us
        snap(last_t if last_t is not None else next_t)
    return book, points


def _apply_tracked(book: AuctionBook, view: LiveUncrosser, ev) -> None:
    """Apply an event to the book while mirroring volume deltas into the view."""
    before = book.orders.get(ev.order_id)
    snapshot = None
    if before is not None and before.is_resting:
        snapshot = (before.side, before.price_index if not before.is_market else None,
                    before.quantity)
    book.apply(ev)
    after = book.orders.get(ev.order_id)
    if snapshot is not None:
        side, idx, qty = snapshot
        view.add(side, idx, -qty)
    if after is not None and after.is_resting:
        view.add(after.side, after.price_index if not after.is_market else None,
                 after.quantity)


def series_to_csv(points: Sequence[IndicativePoint], grid: PriceGrid) -> str:
    from .events import format_price

    buf = io.StringIO()
    buf.write("t_us,p_ind,q_ind\n")
    for pt in points:
        if pt.crossed:
            buf.write(f"{pt.t},{format_price(grid.price_at(pt.price_index))},{pt.q_ind}\n")
        else:
            buf.write(f"{pt.t},,\n")
    return buf.getvalue()
