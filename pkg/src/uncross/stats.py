"""Batch statistics over per-day auction metrics.

The rank correlation and two-sample KS test are implemented directly (they are
small enough that an explicit implementation doubles as documentation of the
conventions: mid-ranks for ties, t-approximation for significance, asymptotic
Kolmogorov p-values at effective size n*m/(n+m)).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import stdtr

from .errors import (
    DegenerateSample,
    EmptyBatch,
    EmptySample,
    LengthMismatch,
    TooFewPoints,
)


def _midranks(values: Sequence[float]) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v))
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    return ranks


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float  # two-sided, t-approximation

    @property
    def stars(self) -> str:
        if self.p_value < 0.001:
            return "***"
        if self.p_value < 0.01:
            return "**"
        if self.p_value < 0.05:
            return "*"
        return ""


def spearman(x: Sequence[float], y: Sequence[float]) -> SpearmanResult:
    """Rank correlation with mid-ranks for ties."""
    if len(x) != len(y):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise TooFewPoints(f"need >= 3 pairs, got {n}")
    rx = _midranks(x)
    ry = _midranks(y)
    sx = rx.std()
    sy = ry.std()
    if sx == 0 or sy == 0:
        raise DegenerateSample("constant sample has no rank correlation")
    rho = float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return SpearmanResult(rho, p)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float


def _kolmogorov_sf(lam: float) -> float:
    # survival function of the Kolmogorov distribution, alternating series
    if lam <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return min(1.0, max(0.0, total))


def ks_two_sample(
    x: Sequence[float], y: Sequence[float], alternative: str = "two-sided"
) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test.

    ``alternative`` is ``"two-sided"`` (sup |Fx - Fy|), ``"greater"``
    (sup Fx - Fy: x stochastically smaller) or ``"less"`` (sup Fy - Fx).
    P-values are asymptotic with effective size n*m/(n+m); the one-sided tail
    uses exp(-2 ne D^2).
    """
    if len(x) == 0 or len(y) == 0:
        raise EmptySample("both samples must be non-empty")
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    n, m = len(xs), len(ys)
    grid = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, grid, side="right") / n
    fy = np.searchsorted(ys, grid, side="right") / m
    if alternative == "two-sided":
        d = float(np.max(np.abs(fx - fy)))
    elif alternative == "greater":
        d = float(np.max(fx - fy))
    else:
        d = float(np.max(fy - fx))
    ne = n * m / (n + m)
    if alternative == "two-sided":
        p = _kolmogorov_sf(math.sqrt(ne) * d)
    else:
        p = min(1.0, math.exp(-2.0 * ne * d * d)) if d > 0 else 1.0
    return KsResult(d, p)


# ----------------------------------------------------------------- day metrics


@dataclass(frozen=True)
class DayMetrics:
    """One (day, side) record of the per-day metrics table."""

    date: str
    side: str
    p_a: float
    q_a: int
    omega0: float
    delta: float | None = None  # log-price units
    l_tilde: float | None = None
    omega_max: float | None = None
    beta_emp: float | None = None
    beta_theo: float | None = None

    @property
    def l_cash(self) -> float | None:
        """Window liquidity in currency units: p_a * q_a * l_tilde."""
        if self.l_tilde is None:
            return None
        return self.p_a * self.q_a * self.l_tilde


DAY_METRICS_HEADER = (
    "date,side,p_a,q_a,omega0,delta_bp,l_tilde,omega_max,beta_emp,beta_theo,l_cash"
)


def day_metrics_to_csv(rows: Sequence[DayMetrics]) -> str:
    def opt(v) -> str:
        return "" if v is None else repr(v)

    buf = io.StringIO()
    buf.write(DAY_METRICS_HEADER + "\n")
    for r in rows:
        delta_bp = None if r.delta is None else r.delta * 1e4
        buf.write(
            f"{r.date},{r.side},{r.p_a!r},{r.q_a},{r.omega0!r},{opt(delta_bp)},"
            f"{opt(r.l_tilde)},{opt(r.omega_max)},{opt(r.beta_emp)},"
            f"{opt(r.beta_theo)},{opt(r.l_cash)}\n"
        )
    return buf.getvalue()


def read_day_metrics(path) -> list[DayMetrics]:
    import csv

    from .errors import ParseError

    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = DAY_METRICS_HEADER.split(",")
        if reader.fieldnames is None or [f for f in expected if f not in reader.fieldnames]:
            raise ParseError(
                f"day metrics header must contain {expected}", line=1, path=str(path)
            )
        for line_no, rec in enumerate(reader, start=2):
            try:
                rows.append(
                    DayMetrics(
                        date=rec["date"],
                        side=rec["side"],
                        p_a=float(rec["p_a"]),
                        q_a=int(rec["q_a"]),
                        omega0=float(rec["omega0"]),
                        delta=float(rec["delta_bp"]) / 1e4 if rec["delta_bp"] else None,
                        l_tilde=float(rec["l_tilde"]) if rec["l_tilde"] else None,
                        omega_max=float(rec["omega_max"]) if rec["omega_max"] else None,
                        beta_emp=float(rec["beta_emp"]) if rec["beta_emp"] else None,
                        beta_theo=float(rec["beta_theo"]) if rec["beta_theo"] else None,
                    )
                )
            except (ValueError, KeyError) as exc:
                raise ParseError(f"bad day metrics row: {exc}", line=line_no, path=str(path))
    return rows


def zero_impact_probability(rows: Sequence[DayMetrics], threshold: float) -> float:
    """Fraction of (day, side) records whose zero-impact volume reaches the threshold.

    A record counts when ``omega0 >= threshold``; note an order of exactly the
    threshold size shifts the price, so this is the chance that any order
    strictly smaller than ``threshold * q_a`` is free.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if not rows:
        raise EmptyBatch("no day metrics")
    hits = sum(1 for r in rows if r.omega0 >= threshold)
    return hits / len(rows)


# ----------------------------------------------------------- distribution views


def rcdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Reverse CDF step table: (v, fraction of sample >= v) at each unique value."""
    if len(values) < 2:
        raise TooFewPoints(f"need >= 2 values, got {len(values)}")
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    out = []
    for u in np.unique(v):
        out.append((float(u), float(np.sum(v >= u)) / n))
    return out


def kernel_density(
    values: Sequence[float],
    grid_points: int = 256,
    bandwidth: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density on a fixed grid; Silverman bandwidth by default."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        raise TooFewPoints(f"need >= 2 values, got {len(v)}")
    if bandwidth is None:
        sd = float(v.std(ddof=1))
        q75, q25 = np.percentile(v, [75, 25])
        iqr = float(q75 - q25)
        spread = min(sd, iqr / 1.34) if iqr > 0 else sd
        if spread == 0:
            raise DegenerateSample("constant sample has no density estimate")
        bandwidth = 0.9 * spread * len(v) ** (-0.2)
    lo = float(v.min()) - 5 * bandwidth
    hi = float(v.max()) + 5 * bandwidth
    grid = np.linspace(lo, hi, grid_points)
    z = (grid[:, None] - v[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(v) * bandwidth * math.sqrt(2 * math.pi))
    return grid, dens


def distribution_report(values: Sequence[float], kind: str) -> str:
    """CSV table for a sample: smoothed histogram or exact reverse CDF."""
    if kind == "rcdf":
        buf = io.StringIO()
        buf.write("value,fraction_ge\n")
        for v, f in rcdf(values):
            buf.write(f"{v!r},{f!r}\n")
        return buf.getvalue()
    if kind == "histogram-smoothed":
        grid, dens = kernel_density(values)
        buf = io.StringIO()
        buf.write("value,density\n")
        for g, d in zip(grid, dens):
            buf.write(f"{g!r},{d!r}\n")
        return buf.getvalue()
    raise ValueError(f"unknown report kind {kind!r}; use 'rcdf' or 'histogram-smoothed'")
