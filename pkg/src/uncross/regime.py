"""Linear-impact regime detection.

Near the clearing price the summed buy+sell density is flat on most days,
which makes impact exactly linear there.  The fit finds the half-width of the
flat window by change-point detection: for every candidate cut y the samples
on (0, y] are modeled as constant (their log-mean) and the samples beyond as
log-linear in distance; the cut minimizing the total squared log-residual is
the window edge.  Errors are multiplicative, hence the log scale; the window
liquidity is then the plain mean of the raw densities inside the window, which
avoids the downward bias of exponentiating a mean of logs.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .book import AuctionBook
from .clearing import ClearingResult
from .density import total_density_samples
from .errors import NonPositiveDensity, TooFewPoints
from .impact import ImpactCurve, impact_curve, theoretical_slope

DEFAULT_MIN_POINTS = 20


@dataclass(frozen=True)
class ChangepointFit:
    delta: float  # half-width of the constant window, log-price units
    l_tilde: float  # mean raw density inside the window
    n_points: int  # samples entering the fit
    n_window: int  # samples inside the window
    cost: float


def changepoint(
    xs: Sequence[float],
    rhos: Sequence[float],
    min_points: int = DEFAULT_MIN_POINTS,
) -> ChangepointFit:
    """Fit constant-then-log-linear density and return the cut and window mean.

    Candidates for the cut are the sample abscissae themselves (the cost only
    changes there).  Ties prefer the widest window.  Tails with fewer than two
    samples cost nothing, so the all-constant fit is always admissible.
    """
    x = np.asarray(xs, dtype=float)
    r = np.asarray(rhos, dtype=float)
    if len(x) != len(r):
        raise ValueError("xs and rhos must have equal length")
    if len(x) < max(2, min_points):
        raise TooFewPoints(f"need at least {max(2, min_points)} samples, got {len(x)}")
    if np.any(r <= 0):
        raise NonPositiveDensity("density samples must be strictly positive")
    order = np.argsort(x)
    x = x[order]
    r = r[order]
    logs = np.log(r)
    n = len(x)

    costs = np.empty(n)
    for j in range(n):  # window = samples[0..j], cut y = x[j]
        m = j + 1
        seg = logs[:m]
        sse_flat = float(np.sum((seg - seg.mean()) ** 2))
        if n - m >= 2:
            xt = x[m:]
            lt = logs[m:]
            xm = xt.mean()
            lm = lt.mean()
            sxx = float(np.sum((xt - xm) ** 2))
            beta = float(np.sum((xt - xm) * (lt - lm))) / sxx if sxx > 0 else 0.0
            resid = lt - (lm + beta * (xt - xm))
            sse_tail = float(np.sum(resid**2))
        else:
            sse_tail = 0.0  # a line through <2 points is exact
        costs[j] = sse_flat + sse_tail

    cmin = float(costs.min())
    # rounding noise makes exact cost ties (flat data) come out ~1e-15 apart
    tol = 1e-9 * max(1.0, float(np.sum(logs**2)))
    best_j = int(np.nonzero(costs <= cmin + tol)[0][-1])  # widest window on ties
    m = best_j + 1
    return ChangepointFit(
        delta=float(x[best_j]),
        l_tilde=float(r[:m].mean()),
        n_points=n,
        n_window=m,
        cost=float(costs[best_j]),
    )


def omega_max(
    curve: ImpactCurve,
    book: AuctionBook,
    delta_b: float,
    delta_s: float,
) -> float:
    """Largest scaled order with zero-or-linear impact on the curve's side.

    Adds to ``omega0`` the scaled buy+sell volume of every occupied tick within
    the matching side's constant window.
    """
    delta = delta_b if curve.side == "B" else delta_s
    grid = book.grid
    k_a = curve.price_index_a
    p_a = curve.p_a
    total = 0
    for k in book.nonempty_indices():
        if curve.side == "B" and k <= k_a:
            continue
        if curve.side == "S" and k >= k_a:
            continue
        x = abs(math.log(grid.price_at(k) / p_a))
        if 0 < x <= delta:
            vb, vs = book.volume_at(k)
            total += vb + vs
    return float(curve.omega0) + total / curve.q_a


def empirical_slope(
    curve: ImpactCurve,
    omega_lo: float,
    omega_hi: float,
    include_lo: bool = False,
) -> tuple[float, int]:
    """Least-squares slope of impact against scaled volume over curve jumps.

    Uses jumps with omega in (omega_lo, omega_hi] (closed below when
    ``include_lo``).  Returns (slope, number of points).
    """
    pts = []
    for bp in curve.breakpoints:
        w = bp.omega_num / curve.q_a
        above = w >= omega_lo if include_lo else w > omega_lo
        if above and w <= omega_hi:
            pts.append((w, bp.impact))
    if len(pts) < 2:
        raise TooFewPoints(f"need >= 2 jumps inside the window, got {len(pts)}")
    w = np.array([p[0] for p in pts])
    i = np.array([p[1] for p in pts])
    wm = w.mean()
    slope = float(np.sum((w - wm) * (i - i.mean())) / np.sum((w - wm) ** 2))
    return slope, len(pts)


@dataclass(frozen=True)
class RegimeFit:
    """Linear-regime description of one auction side."""

    side: str
    delta: float  # log-price units
    l_tilde: float
    omega_max: float
    beta_emp: float | None  # None when too few jumps to regress
    beta_theo: float
    n_points: int
    p_first: float  # first occupied tick past the clearing price

    def csv_row(self, date: str) -> str:
        beta = "" if self.beta_emp is None else repr(self.beta_emp)
        return (
            f"{date},{self.side},{self.delta * 1e4!r},{self.l_tilde!r},"
            f"{self.omega_max!r},{beta},{self.beta_theo!r},{self.n_points}"
        )


REGIME_CSV_HEADER = "date,side,delta_bp,l_tilde,omega_max,beta_emp,beta_theo,n_points"


def fit_regime(
    book: AuctionBook,
    clearing: ClearingResult,
    side: str,
    max_x: float = 0.02,
    min_points: int = DEFAULT_MIN_POINTS,
    slope_from_auction_price: bool = False,
) -> RegimeFit:
    """Full one-side pipeline: density samples, change point, window, slopes."""
    xs, rhos = total_density_samples(book, clearing.price_index, clearing.q_a, side, max_x)
    cp = changepoint(xs, rhos, min_points=min_points)
    curve = impact_curve(book, clearing, side, max_x=max_x)
    if not curve.breakpoints:
        raise TooFewPoints("no occupied ticks past the clearing price inside the window")
    w_max = omega_max(curve, book, cp.delta, cp.delta)
    p_first = curve.grid_anchor + curve.breakpoints[0].target_index * curve.tick_size
    ref = clearing.p_a if slope_from_auction_price else p_first
    beta_theo = theoretical_slope(ref, cp.l_tilde)
    try:
        beta_emp, _ = empirical_slope(curve, float(curve.omega0), w_max)
    except TooFewPoints:
        beta_emp = None
    return RegimeFit(
        side=side,
        delta=cp.delta,
        l_tilde=cp.l_tilde,
        omega_max=w_max,
        beta_emp=beta_emp,
        beta_theo=beta_theo,
        n_points=cp.n_points,
        p_first=p_first,
    )


def fits_to_csv(rows: Sequence[tuple[str, RegimeFit]]) -> str:
    buf = io.StringIO()
    buf.write(REGIME_CSV_HEADER + "\n")
    for date, fit in rows:
        buf.write(fit.csv_row(date) + "\n")
    return buf.getvalue()
