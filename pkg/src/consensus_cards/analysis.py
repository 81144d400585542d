"""Curve fitting and scaling analysis.

Two fit shapes cover everything this toolkit reports:

* exponential tail       p(tau) = a * exp(-tau / tau_c)
* noise-parameter decay  p(beta) = a * exp(-b / beta)

Both are linear least squares on log p.  The exponential fit weights points
by (p/se)^2, the delta-method inverse variance of log p, and uses only rows
with p <= 0.02 and at least 50 failure events: the decay becomes a clean
exponential only well past the early shoulder (local slopes keep steepening
until p drops below a few percent), and rows with few failures carry
unusable log-variance.  The failure-count floor and the tail threshold
together require ensembles of at least a few thousand runs before any row
is usable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ensemble import FailureCurve, run_ensemble_result
from .errors import InsufficientDataError
from .model import SimConfig

MIN_FIT_POINTS = 3
FIT_MAX_P = 0.02
FIT_MIN_FAILURES = 50

DEFAULT_TAU_INFINITY = 10_000


@dataclass(frozen=True)
class FitResult:
    """Exponential-tail fit p = a * exp(-tau / tau_c)."""

    a: float
    tau_c: float
    window: tuple[int, int]
    residual: float
    points_used: int


@dataclass(frozen=True)
class BetaFit:
    """Noise-decay fit p = a * exp(-b / beta)."""

    a: float
    b: float


@dataclass(frozen=True)
class CollapsePoint:
    n: int
    c: int
    x: float            # C/N
    tau_c: float
    collapsed: float    # tau_c / N^(3/2)
    reference: float    # f(x)
    rel_err: float


@dataclass(frozen=True)
class CollapseReport:
    points: tuple[CollapsePoint, ...]
    rms_dev: float


def scaling_reference(x: float) -> float:
    """The collapse curve f(x) = 1.75 * (1/x - 1) for x = C/N."""
    return 1.75 * (1.0 / x - 1.0)


def usable_rows(curve: FailureCurve):
    return [row for row in curve.rows
            if row.p <= FIT_MAX_P and row.failures >= FIT_MIN_FAILURES]


def fit_exponential(curve: FailureCurve) -> FitResult:
    """Weighted least squares of log p against tau over the usable window."""
    rows = usable_rows(curve)
    if len(rows) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"need at least {MIN_FIT_POINTS} rows with p <= {FIT_MAX_P} and "
            f">= {FIT_MIN_FAILURES} failures, have {len(rows)}")
    slope, intercept, residual = _wls_log_fit(rows)
    if slope >= 0:
        raise InsufficientDataError("curve does not decay; no exponential tail")
    return FitResult(a=float(np.exp(intercept)), tau_c=float(-1.0 / slope),
                     window=(rows[0].tau, rows[-1].tau), residual=residual,
                     points_used=len(rows))


def _wls_log_fit(rows) -> tuple[float, float, float]:
    """(slope, intercept, rms log-residual) of the weighted log-linear fit."""
    tau = np.array([row.tau for row in rows], dtype=float)
    logp = np.log([row.p for row in rows])
    # (p/se)^2 = runs * p / (1 - p); polyfit wants sqrt-weights.
    wsq = np.sqrt([row.runs * row.p / (1.0 - row.p) for row in rows])
    slope, intercept = np.polyfit(tau, logp, 1, w=wsq)
    residual = float(np.sqrt(np.mean((logp - (intercept + slope * tau)) ** 2)))
    return float(slope), float(intercept), residual


def fit_beta_decay(points: Iterable[tuple[float, float]]) -> BetaFit:
    """Least squares of log p against 1/beta over points with p, beta > 0."""
    pts = [(b, p) for b, p in points if b > 0 and p > 0]
    if len(pts) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"need at least {MIN_FIT_POINTS} points with beta > 0 and p > 0, "
            f"have {len(pts)}")
    x = np.array([1.0 / b for b, _ in pts])
    logp = np.log([p for _, p in pts])
    slope, intercept = np.polyfit(x, logp, 1)
    if slope >= 0:
        raise InsufficientDataError("failure probability does not decay in 1/beta")
    return BetaFit(a=float(np.exp(intercept)), b=float(-slope))


def scaling_check(tau_c_table: Sequence[tuple[int, int, float]]) -> CollapseReport:
    """Collapse tau_c values onto f(C/N) and report the deviation."""
    if not tau_c_table:
        raise ValueError("empty tau_c table")
    points = []
    for n, c, tau_c in tau_c_table:
        if not c < n:
            raise ValueError(f"collapse needs C < N, got C={c}, N={n}")
        x = c / n
        collapsed = tau_c / n**1.5
        ref = scaling_reference(x)
        points.append(CollapsePoint(n=n, c=c, x=x, tau_c=tau_c,
                                    collapsed=collapsed, reference=ref,
                                    rel_err=abs(collapsed - ref) / ref))
    rms = math.sqrt(sum((pt.collapsed - pt.reference) ** 2 for pt in points) / len(points))
    return CollapseReport(points=tuple(points), rms_dev=rms)


def estimate_p_infinity(config: SimConfig, tau_eval: int = DEFAULT_TAU_INFINITY,
                        threads: int | None = None) -> tuple[float, float]:
    """Plateau failure probability, measured at a single late checkpoint."""
    cfg = config.with_updates(tau_max=tau_eval, checkpoints=(tau_eval,))
    result = run_ensemble_result(cfg, threads=threads)
    row = result.curve().rows[0]
    return row.p, row.se
