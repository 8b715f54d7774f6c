"""Exact price impact of a market order injected just before the clearing.

Impact is the absolute change of the clearing log-price caused by adding a
market order of ``q`` shares, expressed against the scaled volume
``omega = q / q_a``.  It is a non-decreasing, right-continuous step function
whose discontinuities can be read directly off the cleared book:

* the first jump happens once the order eats the whole matched volume on its
  own side at the clearing price plus the opposite remainder
  (``omega0 = (vsr + vbm) / q_a`` for a buy, ``(vsm + vbr) / q_a`` for a sell);
* each further jump requires the combined buy+sell volume resting at the next
  non-empty tick in the walk direction.

Volumes at jumps are kept as exact integer share counts (numerator over the
auction volume) so breakpoint comparisons never suffer float-equality bugs;
logarithms are taken only when a value is reported.

At an exact jump volume two prices tie for executable volume; the curve adopts
the convention that the price moves to the next tick, while a full re-clearing
applies the imbalance/reference tie-breaks and may keep the old price.
Comparisons against re-clearing therefore treat exact-jump volumes separately.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .book import AuctionBook
from .clearing import ClearingResult, _arrays_for, uncross_values
from .errors import (
    BeyondTruncation,
    DegenerateAuction,
    NoPositiveRoot,
    ZeroLiquidity,
)
from .events import format_price

DEFAULT_MAX_X = 0.02  # truncate the tick walk at a 2% log-price distance


@dataclass(frozen=True)
class Breakpoint:
    omega_num: int  # shares; scaled volume is omega_num / q_a
    target_index: int  # tick the price jumps to at exactly this volume
    impact: float  # |log(target price / p_a)|


@dataclass(frozen=True)
class ImpactCurve:
    side: str
    q_a: int
    price_index_a: int
    p_a: float
    tick_size: float
    omega0_num: int
    breakpoints: tuple[Breakpoint, ...]
    cap_num: int  # first share count past the computed domain
    grid_anchor: float
    pinned: bool = False  # own-side market volume already rationed: price cannot move

    @property
    def omega0(self) -> Fraction:
        return Fraction(self.omega0_num, self.q_a)

    @property
    def omega_cap(self) -> Fraction:
        return Fraction(self.cap_num, self.q_a)

    def _check_domain(self, q: int) -> None:
        if q < 0:
            raise ValueError("injected volume must be >= 0")
        if q == 0 or self.pinned:
            return  # zero injection never moves the price
        if q >= self.cap_num:
            raise BeyondTruncation(
                f"q={q} reaches past the computed curve (cap {self.cap_num} shares)"
            )

    def price_index_at_shares(self, q: int) -> int:
        """Tick index of the clearing price after injecting q shares."""
        self._check_domain(q)
        idx = self.price_index_a
        if q == 0:
            return idx
        for bp in self.breakpoints:
            if q >= bp.omega_num:
                idx = bp.target_index
            else:
                break
        return idx

    def impact_at_shares(self, q: int) -> float:
        """Impact in log-price units of an injected order of q shares."""
        self._check_domain(q)
        out = 0.0
        if q == 0:
            return out
        for bp in self.breakpoints:
            if q >= bp.omega_num:
                out = bp.impact
            else:
                break
        return out

    def impact_at(self, omega: float | Fraction) -> float:
        """Impact at a scaled volume; exact Fractions avoid boundary rounding."""
        w = Fraction(omega)
        if w < 0:
            raise ValueError("omega must be >= 0")
        if w == 0 or self.pinned:
            return 0.0
        if w >= self.omega_cap:
            raise BeyondTruncation(
                f"omega={float(w):g} reaches past the computed curve "
                f"(cap {float(self.omega_cap):g})"
            )
        out = 0.0
        for bp in self.breakpoints:
            if w >= Fraction(bp.omega_num, self.q_a):
                out = bp.impact
            else:
                break
        return out

    def delta_omegas(self) -> list[Fraction]:
        """Incremental scaled volumes between successive jumps, omega0 first."""
        out = [Fraction(self.omega0_num, self.q_a)]
        prev = self.omega0_num
        for bp in self.breakpoints[1:]:
            out.append(Fraction(bp.omega_num - prev, self.q_a))
            prev = bp.omega_num
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("side,i,omega_num,omega_den,price,impact_log\n")
        for i, bp in enumerate(self.breakpoints):
            price = self.grid_anchor + bp.target_index * self.tick_size
            buf.write(
                f"{self.side},{i},{bp.omega_num},{self.q_a},"
                f"{format_price(price)},{bp.impact!r}\n"
            )
        return buf.getvalue()


def impact_curve(
    book: AuctionBook,
    clearing: ClearingResult,
    side: str,
    max_x: float = DEFAULT_MAX_X,
) -> ImpactCurve:
    """Compute the step impact curve for one side of a cleared book.

    The walk over non-empty ticks stops at the first tick farther than
    ``max_x`` in log-price from the clearing price (or at the edge of the
    book); the curve's domain ends at the volume that would reach it.
    """
    if clearing.q_a <= 0:
        raise DegenerateAuction("auction volume is zero")
    if max_x <= 0:
        raise ValueError("max_x must be positive")
    if side not in ("B", "S"):
        raise ValueError(f"side must be 'B' or 'S', got {side!r}")
    grid = book.grid
    k_a = clearing.price_index
    p_a = clearing.p_a
    vb_at, vs_at = book.volume_at(k_a)
    if side == "B":
        # rationed buy market volume means no buy can ever lift the price
        pinned = clearing.market_buy_unfilled > 0
        ticks = [k for k in book.nonempty_indices() if k > k_a]
        base = clearing.imbalance + vb_at  # S(p_a) - D(p_a) + V_B(p_a)
    else:
        pinned = clearing.market_sell_unfilled > 0
        ticks = [k for k in reversed(book.nonempty_indices()) if k < k_a]
        base = -clearing.imbalance + vs_at  # D(p_a) - S(p_a) + V_S(p_a)
    if pinned:
        return ImpactCurve(
            side=side,
            q_a=clearing.q_a,
            price_index_a=k_a,
            p_a=p_a,
            tick_size=grid.tick_size,
            omega0_num=0,
            breakpoints=(),
            cap_num=0,
            grid_anchor=grid.anchor,
            pinned=True,
        )
    # A zero threshold is a real jump (no zero-impact volume on this side:
    # one share moves the price).  A negative threshold only arises when the
    # rationed side's surplus rests beyond the clearing price; the price then
    # holds every tie through the reference rule and that jump never happens,
    # though the surplus still lowers all later thresholds.
    omega_num = base
    breakpoints: list[Breakpoint] = []
    cap_num = None
    for t in ticks:
        x = abs(math.log(grid.price_at(t) / p_a))
        if x > max_x:
            cap_num = omega_num
            break
        if omega_num >= 0:
            breakpoints.append(Breakpoint(omega_num, t, x))
        vb, vs = book.volume_at(t)
        omega_num += vb + vs
    if cap_num is None:
        cap_num = omega_num  # ran off the book edge inside the window
    cap_num = max(cap_num, 0)
    return ImpactCurve(
        side=side,
        q_a=clearing.q_a,
        price_index_a=k_a,
        p_a=p_a,
        tick_size=grid.tick_size,
        omega0_num=breakpoints[0].omega_num if breakpoints else cap_num,
        breakpoints=tuple(breakpoints),
        cap_num=cap_num,
        grid_anchor=grid.anchor,
    )


def signed_curve_csv(curve_buy: ImpactCurve, curve_sell: ImpactCurve) -> str:
    """Both sides on one signed axis: buys at +omega/+impact, sells negated."""
    rows = []
    for bp in reversed(curve_sell.breakpoints):
        rows.append((-bp.omega_num / curve_sell.q_a, -bp.impact))
    rows.append((0.0, 0.0))
    for bp in curve_buy.breakpoints:
        rows.append((bp.omega_num / curve_buy.q_a, bp.impact))
    buf = io.StringIO()
    buf.write("eps_omega,eps_impact\n")
    for w, i in rows:
        buf.write(f"{w!r},{i!r}\n")
    return buf.getvalue()


# ------------------------------------------------------------- re-clearing


def inject_and_reclear(
    book: AuctionBook,
    side: str,
    q: int,
    reference_price: float | None = None,
) -> float:
    """Add q market shares on a side and return the new clearing price.

    Runs the complete uncrossing rule chain (volume, imbalance, reference,
    lower price); the book itself is left untouched.
    """
    if q < 0 or q != int(q):
        raise ValueError("injected volume must be a non-negative integer")
    grid = book.grid
    ref_index = (
        grid.reference_index if reference_price is None else grid.index_of(reference_price)
    )
    lo, vb, vs = _arrays_for(book, ref_index)
    mb = book.buy_market_total + (q if side == "B" else 0)
    ms = book.sell_market_total + (q if side == "S" else 0)
    k, _, _ = uncross_values(vb, vs, mb, ms, lo, ref_index)
    return grid.price_at(k)


def cancel_market_and_reclear(
    book: AuctionBook,
    side: str,
    q: int,
    reference_price: float | None = None,
) -> float:
    """Remove q market shares from a side and return the new clearing price."""
    if q < 0 or q != int(q):
        raise ValueError("canceled volume must be a non-negative integer")
    total = book.buy_market_total if side == "B" else book.sell_market_total
    if q > total:
        raise ValueError(f"cannot cancel {q} market shares; only {total} resting")
    grid = book.grid
    ref_index = (
        grid.reference_index if reference_price is None else grid.index_of(reference_price)
    )
    lo, vb, vs = _arrays_for(book, ref_index)
    mb = book.buy_market_total - (q if side == "B" else 0)
    ms = book.sell_market_total - (q if side == "S" else 0)
    k, _, _ = uncross_values(vb, vs, mb, ms, lo, ref_index)
    return grid.price_at(k)


# ------------------------------------------------------------------ scalars


def theoretical_slope(p_first: float, l_tilde: float) -> float:
    """Linear-regime impact slope ``1 / (p_first * l_tilde)``.

    ``p_first`` is the first non-empty tick past the clearing price; passing
    the clearing price instead gives the commonly used approximation.
    """
    if l_tilde <= 0:
        raise ZeroLiquidity(f"scaled liquidity must be positive, got {l_tilde}")
    if p_first <= 0:
        raise ValueError(f"price must be positive, got {p_first}")
    return 1.0 / (p_first * l_tilde)


def post_clearing_impact(a1: float, b1: float, q: float) -> float:
    """Positive root of ``b1/2 x^2 + a1 x - q = 0``.

    Models walking a book whose density grows linearly away from the price:
    linear impact ``q/a1`` for small q, square-root ``sqrt(2 q / b1)`` for
    large q.
    """
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    if a1 < 0:
        raise ValueError(f"a1 must be >= 0, got {a1}")
    if b1 == 0:
        if a1 == 0:
            raise NoPositiveRoot("a1 = b1 = 0 admits no solution")
        return q / a1
    disc = a1 * a1 + 2.0 * b1 * q
    if disc < 0:
        raise NoPositiveRoot(f"negative discriminant {disc} (a1={a1}, b1={b1}, q={q})")
    return (-a1 + math.sqrt(disc)) / b1


def cash_volume(omega: float, q_a: int, p_a: float) -> float:
    """Currency value of a scaled volume: ``omega * q_a * p_a``."""
    if omega < 0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    if q_a <= 0 or p_a <= 0:
        raise ValueError("q_a and p_a must be positive")
    return omega * q_a * p_a
