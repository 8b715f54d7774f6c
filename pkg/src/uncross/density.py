"""Book densities: per-tick with the gap rule, and binned profiles for averaging.

The per-tick density divides the resting volume at a tick by the distance to
the next occupied tick outward from the clearing price (above for buys, below
for sells), so sparse books do not read as spuriously thin.  The outermost
occupied tick, which has no neighbour, uses one tick size as its width.

For cross-day averaging the gap rule is replaced by fixed bins of width ``dx``
in log-price distance from the clearing price, with volumes scaled by each
day's auction volume before averaging.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .book import AuctionBook
from .errors import MismatchedBinning
from .events import ACCOUNT_TYPES, LATENCY_FLAGS

DEFAULT_DX = 1e-4  # 1 basis point bins


class DensityPoint(NamedTuple):
    price: float
    x: float  # log(price / auction price)
    rho: float  # shares per currency unit per auction volume


def density(
    book: AuctionBook, side: str, auction_price: float, q_a: int
) -> list[DensityPoint]:
    """Per-tick scaled density for one side, using the own-side gap rule."""
    if q_a <= 0:
        raise ValueError(f"q_a must be positive, got {q_a}")
    grid = book.grid
    grid.index_of(auction_price)  # validates on-grid
    ticks = book.nonempty_indices(side)  # raises EmptySide when bare
    levels = book.buy_volume if side == "B" else book.sell_volume
    out = []
    for pos, k in enumerate(ticks):
        if side == "B":
            dp = (ticks[pos + 1] - k) * grid.tick_size if pos + 1 < len(ticks) else grid.tick_size
        else:
            dp = (k - ticks[pos - 1]) * grid.tick_size if pos > 0 else grid.tick_size
        price = grid.price_at(k)
        out.append(DensityPoint(price, math.log(price / auction_price), levels[k] / (dp * q_a)))
    return out


def total_density_samples(
    book: AuctionBook,
    price_index_a: int,
    q_a: int,
    side: str,
    max_x: float,
) -> tuple[list[float], list[float]]:
    """Summed buy+sell density on the occupied ticks beyond the clearing price.

    Used by the regime fit: samples are (|log-price distance|, density), the
    tick width being the gap to the next occupied tick walking away from the
    price.  Only ticks within ``max_x`` are returned.
    """
    if q_a <= 0:
        raise ValueError(f"q_a must be positive, got {q_a}")
    grid = book.grid
    p_a = grid.price_at(price_index_a)
    joint = book.nonempty_indices()
    if side == "B":
        ticks = [k for k in joint if k > price_index_a]
    else:
        ticks = [k for k in reversed(joint) if k < price_index_a]
    xs: list[float] = []
    rhos: list[float] = []
    for pos, k in enumerate(ticks):
        x = abs(math.log(grid.price_at(k) / p_a))
        if x > max_x:
            break
        if pos + 1 < len(ticks):
            dp = abs(ticks[pos + 1] - k) * grid.tick_size
        else:
            dp = grid.tick_size
        vb, vs = book.volume_at(k)
        xs.append(x)
        rhos.append((vb + vs) / (dp * q_a))
    return xs, rhos


# ---------------------------------------------------------------- binned form


@dataclass
class DensityProfile:
    """Scaled buy/sell densities on centered bins of width ``dx`` (log units).

    Bin k covers ((k - 1/2) dx, (k + 1/2) dx]; ``rho_buy[k]`` maps bin index to
    shares per log-price unit per auction volume.  ``n_days`` is the number of
    days aggregated (1 for a raw day profile).
    """

    dx: float
    rho_buy: dict[int, float]
    rho_sell: dict[int, float]
    n_days: int = 1
    group: str | None = None

    def bin_range(self) -> range:
        keys = self.rho_buy.keys() | self.rho_sell.keys()
        if not keys:
            return range(0, 0)
        return range(min(keys), max(keys) + 1)


def day_profile(
    book: AuctionBook,
    auction_price: float,
    q_a: int,
    dx: float = DEFAULT_DX,
    group_by: str | None = None,
) -> dict[str | None, DensityProfile]:
    """Bin one day's book into density profiles, optionally split by a flag.

    ``group_by`` is ``"latency"`` or ``"account"``; None gives a single profile
    keyed by None.  Grouped profiles sum to the ungrouped one bin by bin.
    """
    if q_a <= 0:
        raise ValueError(f"q_a must be positive, got {q_a}")
    if dx <= 0:
        raise ValueError(f"dx must be positive, got {dx}")
    if group_by not in (None, "latency", "account"):
        raise ValueError(f"group_by must be None, 'latency' or 'account', got {group_by!r}")
    grid = book.grid
    grid.index_of(auction_price)

    if group_by is None:
        keys: tuple[str | None, ...] = (None,)
    elif group_by == "latency":
        keys = LATENCY_FLAGS
    else:
        keys = ACCOUNT_TYPES
    shares_b: dict[str | None, dict[int, int]] = {k: {} for k in keys}
    shares_s: dict[str | None, dict[int, int]] = {k: {} for k in keys}

    for rec in book.live_resting_orders():
        if rec.is_market:
            continue  # unpriced volume has no log-price coordinate
        if group_by is None:
            key = None
        elif group_by == "latency":
            key = rec.latency_flag
        else:
            key = rec.account_type
        x = math.log(grid.price_at(rec.price_index) / auction_price)
        b = round(x / dx)
        dest = shares_b if rec.side == "B" else shares_s
        dest[key][b] = dest[key].get(b, 0) + rec.quantity

    out = {}
    for key in keys:
        out[key] = DensityProfile(
            dx=dx,
            rho_buy={b: v / (q_a * dx) for b, v in sorted(shares_b[key].items())},
            rho_sell={b: v / (q_a * dx) for b, v in sorted(shares_s[key].items())},
            n_days=1,
            group=key,
        )
    return out


def average_density(profiles: Sequence[DensityProfile]) -> DensityProfile:
    """Per-bin arithmetic mean across day profiles sharing one bin width.

    Bins missing from a day count as zero density for that day, so every day
    enters every bin's mean with the same weight.
    """
    if not profiles:
        raise ValueError("no profiles to average")
    dx = profiles[0].dx
    group = profiles[0].group
    for p in profiles[1:]:
        if p.dx != dx:
            raise MismatchedBinning(f"bin widths differ: {p.dx} vs {dx}")
    n = sum(p.n_days for p in profiles)
    acc_b: dict[int, float] = {}
    acc_s: dict[int, float] = {}
    for p in profiles:
        for b, v in p.rho_buy.items():
            acc_b[b] = acc_b.get(b, 0.0) + v * p.n_days
        for b, v in p.rho_sell.items():
            acc_s[b] = acc_s.get(b, 0.0) + v * p.n_days
    return DensityProfile(
        dx=dx,
        rho_buy={b: v / n for b, v in sorted(acc_b.items())},
        rho_sell={b: v / n for b, v in sorted(acc_s.items())},
        n_days=n,
        group=group,
    )


def profiles_to_csv(profiles: Sequence[DensityProfile]) -> str:
    """CSV rows ``x_bp,rho_buy,rho_sell,n_days[,group]`` over each profile's bins."""
    grouped = any(p.group is not None for p in profiles)
    buf = io.StringIO()
    buf.write("x_bp,rho_buy,rho_sell,n_days,group\n" if grouped else "x_bp,rho_buy,rho_sell,n_days\n")
    for p in profiles:
        for b in p.bin_range():
            x_bp = b * p.dx * 1e4
            row = f"{x_bp!r},{p.rho_buy.get(b, 0.0)!r},{p.rho_sell.get(b, 0.0)!r},{p.n_days}"
            if grouped:
                row += f",{p.group or ''}"
            buf.write(row + "\n")
    return buf.getvalue()
