"""Seeded synthetic auction order flow.

A statistical stand-in for proprietary auction logs: limit volume is laid out
around a fundamental price according to a target shape (flat, skewed bell, or
flat-then-decaying), a configurable mass accumulates right at the fundamental,
market orders and cancellation churn arrive through the accumulation window,
and the clearing time is drawn uniformly inside the configured interval.  No
agent reacts to anything, which is exactly what makes the mechanical and
one-lag responses comparable on generated flow.

Everything is driven by one ``random.Random(seed)``: the same config generates
byte-identical logs.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, asdict

from .book import AuctionBook
from .clearing import clear
from .errors import InfeasibleConfig
from .events import ACCOUNT_TYPES, LATENCY_FLAGS, OrderEvent
from .grid import PriceGrid

SHAPES = ("constant", "bell", "piecewise")


def _default_latency_weights() -> dict[str, float]:
    return {"HFT": 0.25, "MIX": 0.35, "NON": 0.40}


def _default_account_weights() -> dict[str, float]:
    return {
        "OWN": 0.30,
        "CLIENT": 0.40,
        "MARKET_MAKER": 0.15,
        "PARENT": 0.08,
        "RMO": 0.05,
        "RLP": 0.02,
    }


@dataclass
class FlowConfig:
    seed: int = 0
    tick_size: float = 0.01
    fundamental_price: float = 100.0
    start_us: int = 0
    earliest_clear_us: int = 300_000_000
    latest_clear_us: int = 330_000_000
    shape: str = "bell"
    total_shares_per_side: int = 100_000
    peak_mass: float = 0.2  # fraction of a side's shares resting at the fundamental
    # optional per-side overrides; asymmetric books give the two sides
    # different zero-impact volumes
    buy_total_shares: int | None = None
    sell_total_shares: int | None = None
    buy_peak_mass: float | None = None
    sell_peak_mass: float | None = None
    n_levels: int = 150  # priced ticks per side beyond the fundamental
    delta_star_bp: float = 50.0  # piecewise plateau half-width, basis points
    decay: float = 150.0  # log-density slope past the plateau, per unit log-price
    bell_mode_ticks: int = 25
    cancellation_rate: float = 0.0  # churn orders per surviving order
    market_shares_per_side: int = 0
    market_size_range: tuple[int, int] = (1, 2000)
    mean_order_size: int = 200
    latency_weights: dict[str, float] = field(default_factory=_default_latency_weights)
    account_weights: dict[str, float] = field(default_factory=_default_account_weights)

    def validate(self) -> None:
        if self.tick_size <= 0 or self.fundamental_price <= 0:
            raise InfeasibleConfig("tick_size and fundamental_price must be positive")
        if not self.start_us <= self.earliest_clear_us <= self.latest_clear_us:
            raise InfeasibleConfig("need start <= earliest clear <= latest clear")
        if self.earliest_clear_us <= self.start_us:
            raise InfeasibleConfig("clearing window must start after the accumulation start")
        if self.shape not in SHAPES:
            raise InfeasibleConfig(f"shape must be one of {SHAPES}, got {self.shape!r}")
        for side in "BS":
            total, pm = self.side_params(side)
            if not 0 <= pm <= 1:
                raise InfeasibleConfig(f"peak_mass must be in [0, 1], got {pm}")
            if total <= 0:
                if pm > 0:
                    raise InfeasibleConfig("zero shares with nonzero peak mass")
                raise InfeasibleConfig("per-side total shares must be positive")
            if round(pm * total) == 0 and self.market_shares_per_side == 0:
                raise InfeasibleConfig(
                    "book cannot cross: give the fundamental price some peak "
                    "mass or add market orders"
                )
        if self.n_levels < 1:
            raise InfeasibleConfig("n_levels must be >= 1")
        if self.cancellation_rate < 0:
            raise InfeasibleConfig("cancellation_rate must be >= 0")
        if self.market_shares_per_side < 0:
            raise InfeasibleConfig("market_shares_per_side must be >= 0")
        if self.mean_order_size < 1:
            raise InfeasibleConfig("mean_order_size must be >= 1")
        for name, weights, allowed in (
            ("latency_weights", self.latency_weights, LATENCY_FLAGS),
            ("account_weights", self.account_weights, ACCOUNT_TYPES),
        ):
            if set(weights) - set(allowed) or not weights:
                raise InfeasibleConfig(f"{name} keys must be a subset of {allowed}")
            if min(weights.values()) < 0 or sum(weights.values()) <= 0:
                raise InfeasibleConfig(f"{name} must be non-negative and sum > 0")

    def side_params(self, side: str) -> tuple[int, float]:
        """Resolved (total shares, peak mass) for one side."""
        if side == "B":
            total = self.buy_total_shares
            pm = self.buy_peak_mass
        else:
            total = self.sell_total_shares
            pm = self.sell_peak_mass
        return (
            self.total_shares_per_side if total is None else total,
            self.peak_mass if pm is None else pm,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FlowConfig":
        data = json.loads(text)
        if "market_size_range" in data:
            data["market_size_range"] = tuple(data["market_size_range"])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InfeasibleConfig(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def _largest_remainder(weights: list[float], total: int) -> list[int]:
    s = sum(weights)
    raw = [w / s * total for w in weights]
    base = [int(r) for r in raw]
    short = total - sum(base)
    # hand the leftover to the largest fractional parts, index as tiebreak
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def _level_targets(cfg: FlowConfig, side: str) -> tuple[list[int], int]:
    """Per-tick share targets for one side (tick 1..n_levels) and the peak size."""
    total, peak_mass = cfg.side_params(side)
    peak = round(peak_mass * total)
    body = total - peak
    if cfg.shape == "constant":
        per = body // cfg.n_levels
        peak += body - per * cfg.n_levels  # keep the body exactly flat
        return [per] * cfg.n_levels, peak
    theta_x = cfg.tick_size / cfg.fundamental_price
    if cfg.shape == "piecewise":
        cut = cfg.delta_star_bp * 1e-4
        weights = []
        for k in range(1, cfg.n_levels + 1):
            x = k * theta_x
            weights.append(1.0 if x <= cut else math.exp(-cfg.decay * (x - cut)))
    else:  # bell, mode a few ticks out, heavier outer tail
        mode = max(1, cfg.bell_mode_ticks)
        weights = [(k / mode) ** 2 * math.exp(-2.0 * (k / mode - 1.0)) for k in range(1, cfg.n_levels + 1)]
    return _largest_remainder(weights, body), peak


def _split_sizes(total: int, mean: int, rng: random.Random) -> list[int]:
    sizes = []
    left = total
    while left > 0:
        s = min(left, max(1, int(rng.expovariate(1.0 / mean))))
        sizes.append(s)
        left -= s
    return sizes


@dataclass
class _Pending:
    t: int
    ordinal: int
    event: OrderEvent


def generate(cfg: FlowConfig) -> tuple[list[OrderEvent], dict, dict]:
    """Produce a time-sorted event log, its ground-truth sidecar, and grid metadata.

    The ground truth carries the shape parameters a regime fit should recover
    (``delta_star_bp``, ``l_star``, ``peak_mass``, ``clear_time_us``); the meta
    record carries the grid definition and the realized clearing outcome.
    """
    cfg.validate()
    rng = random.Random(cfg.seed)
    grid = PriceGrid(cfg.tick_size, cfg.fundamental_price, cfg.fundamental_price)
    t_clear = rng.randrange(cfg.earliest_clear_us, cfg.latest_clear_us + 1)

    pending: list[_Pending] = []
    ordinal = 0
    next_id = 1

    lat_names = list(cfg.latency_weights)
    lat_w = [cfg.latency_weights[k] for k in lat_names]
    acct_names = list(cfg.account_weights)
    acct_w = [cfg.account_weights[k] for k in acct_names]

    def flags() -> tuple[str, str]:
        return (
            rng.choices(lat_names, weights=lat_w, k=1)[0],
            rng.choices(acct_names, weights=acct_w, k=1)[0],
        )

    def push(t: int, ev: OrderEvent) -> None:
        nonlocal ordinal
        pending.append(_Pending(t, ordinal, ev))
        ordinal += 1

    def submit(side: str, otype: str, price: float | None, qty: int, t: int) -> str:
        nonlocal next_id
        oid = f"O{next_id:07d}"
        next_id += 1
        lat, acct = flags()
        push(t, OrderEvent(t, oid, "SUBMIT", side, otype, price, qty, lat, acct))
        return oid

    def t_body() -> int:
        return rng.randrange(cfg.start_us, t_clear)

    def t_late() -> int:
        # peak liquidity leans toward the clearing
        u = rng.random() ** 2
        return int(t_clear - u * (t_clear - cfg.start_us - 1)) - 1

    side_targets = {}
    side_peaks = {}
    n_real = 0
    for side in ("B", "S"):
        targets, peak = _level_targets(cfg, side)
        side_targets[side] = targets
        side_peaks[side] = peak
        sign = -1 if side == "B" else 1
        for k, target in enumerate(targets, start=1):
            if target == 0:
                continue
            price = grid.price_at(sign * k)
            for size in _split_sizes(target, cfg.mean_order_size, rng):
                submit(side, "LIMIT", price, size, t_body())
                n_real += 1
        for size in _split_sizes(peak, cfg.mean_order_size, rng) if peak else []:
            submit(side, "LIMIT", cfg.fundamental_price, size, t_late())
            n_real += 1
        if cfg.market_shares_per_side:
            lo, hi = cfg.market_size_range
            left = cfg.market_shares_per_side
            while left > 0:
                size = min(left, rng.randrange(lo, hi + 1))
                submit(side, "MARKET", None, size, t_body())
                left -= size
                n_real += 1

    # churn: extra orders that are fully canceled before the clearing,
    # leaving the shaped book untouched
    n_churn = int(cfg.cancellation_rate * n_real)
    market_prob = (
        cfg.market_shares_per_side
        / (cfg.market_shares_per_side + cfg.total_shares_per_side)
        if cfg.market_shares_per_side
        else 0.0
    )
    for _ in range(n_churn):
        side = rng.choice(("B", "S"))
        t_sub = rng.randrange(cfg.start_us, max(cfg.start_us + 1, t_clear - 1))
        qty = max(1, int(rng.expovariate(1.0 / cfg.mean_order_size)))
        if rng.random() < market_prob:
            otype, price = "MARKET", None
        else:
            sign = -1 if side == "B" else 1
            otype, price = "LIMIT", grid.price_at(sign * rng.randrange(1, cfg.n_levels + 1))
        oid = submit(side, otype, price, qty, t_sub)
        t_cxl = rng.randrange(t_sub + 1, t_clear + 1)
        lat, acct = flags()
        push(t_cxl, OrderEvent(t_cxl, oid, "CANCEL", side, otype, price, qty, lat, acct))

    pending.sort(key=lambda p: (p.t, p.ordinal))
    events = [p.event for p in pending]

    book = AuctionBook(grid).replay(events)
    clearing = clear(book)
    theta_x = cfg.tick_size / cfg.fundamental_price
    # ground truth describes the joint buy+sell density the fits should see:
    # above the price that is the sell ladder, below it the buy ladder
    mean_targets = [
        (b + s) / 2 for b, s in zip(side_targets["B"], side_targets["S"])
    ]
    if cfg.shape == "constant":
        delta_star_bp = cfg.n_levels * theta_x * 1e4
        l_star = mean_targets[0] / (clearing.q_a * cfg.tick_size)
    elif cfg.shape == "piecewise":
        delta_star_bp = cfg.delta_star_bp
        plateau = [
            t for k, t in enumerate(mean_targets, start=1)
            if k * theta_x <= delta_star_bp * 1e-4
        ]
        l_star = (sum(plateau) / len(plateau)) / (clearing.q_a * cfg.tick_size) if plateau else None
    else:
        delta_star_bp = None
        l_star = None
    total_b, _ = cfg.side_params("B")
    total_s, _ = cfg.side_params("S")
    truth = {
        "delta_star_bp": delta_star_bp,
        "l_star": l_star,
        "peak_mass": (side_peaks["B"] + side_peaks["S"]) / (total_b + total_s),
        "clear_time_us": t_clear,
    }
    meta = {
        "tick_size": cfg.tick_size,
        "anchor": cfg.fundamental_price,
        "reference_price": cfg.fundamental_price,
        "p_a": clearing.p_a,
        "q_a": clearing.q_a,
        "n_events": len(events),
    }
    return events, truth, meta
