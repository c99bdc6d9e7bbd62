"""Correlation/error metrics and the monotone logistic score mapping.

SRCC uses tie-averaged ranks, KRCC is tau-b (tie-corrected). PLCC and RMSE
default to logistic-mapped predictions, matching the usual quality-assessment
evaluation convention; pass ``fitted=False`` for the raw versions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import expit

from talkqa.errors import DegenerateInputError
from talkqa.metrics._kernels import average_ranks, kendall_counts


def _check_pair(x, y, min_n: int = 2):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("metric inputs must be 1-D vectors")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < min_n:
        raise DegenerateInputError(f"need at least {min_n} samples, got {x.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("metric inputs must be finite")
    return x, y


def _require_nonconstant(v, name: str):
    if np.all(v == v[0]):
        raise DegenerateInputError(f"correlation undefined: {name} is constant")


def pearson(x, y) -> float:
    """Pearson correlation of two non-constant vectors."""
    x, y = _check_pair(x, y)
    _require_nonconstant(x, "x")
    _require_nonconstant(y, "y")
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc @ yc) / np.sqrt((xc @ xc) * (yc @ yc)))


def srcc(x, y) -> float:
    """Spearman rank correlation: Pearson on tie-averaged ranks."""
    x, y = _check_pair(x, y)
    _require_nonconstant(x, "x")
    _require_nonconstant(y, "y")
    return pearson(average_ranks(x), average_ranks(y))


def krcc(x, y) -> float:
    """Kendall tau-b; reduces to (C - D) / (n(n-1)/2) when tie-free."""
    x, y = _check_pair(x, y)
    _require_nonconstant(x, "x")
    _require_nonconstant(y, "y")
    c, d, tx, ty, txy = kendall_counts(x, y)
    n = x.shape[0]
    n0 = n * (n - 1) // 2
    n1 = tx + txy
    n2 = ty + txy
    denom = np.sqrt(float(n0 - n1) * float(n0 - n2))
    return float((c - d) / denom)


def rmse_raw(pred, target) -> float:
    pred, target = _check_pair(pred, target, min_n=1)
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def _logistic4(s, b1, b2, b3, b4):
    # 1/(1 + exp(u)) == expit(-u); expit saturates instead of overflowing
    return b1 * (0.5 - expit(-b2 * (s - b3))) + b4


@dataclass(frozen=True)
class LogisticFit:
    """Fitted 4-parameter monotone mapping from predictions to the score scale."""

    params: tuple[float, float, float, float] | None
    converged: bool

    def apply(self, pred) -> np.ndarray:
        pred = np.asarray(pred, dtype=np.float64)
        if self.params is None:
            return pred.copy()
        return _logistic4(pred, *self.params)


def _fit_initializations(pred, mos) -> list[np.ndarray]:
    span = mos.max() - mos.min()
    inits = [
        np.array([span if span > 0 else 1.0, 1.0 / (pred.std() + 1e-12), pred.mean(), mos.mean()])
    ]
    # near-linear start seeded by the ordinary-least-squares line
    slope, intercept = np.polyfit(pred, mos, 1)
    if slope != 0.0 and np.isfinite(slope):
        curvature = 0.5
        inits.append(
            np.array([4.0 * slope / curvature, curvature, pred.mean(), slope * pred.mean() + intercept])
        )
    return inits


def logistic_fit(pred, mos, max_restarts: int = 8) -> LogisticFit:
    """Least-squares fit of the 4-parameter logistic.

    Two deterministic starts (score-span and near-linear). The family contains
    the identity map only in the b2 -> 0 limit, where the cost surface is a
    flat valley; after each converged fit we restart deeper into the valley
    (b1 * 10, b2 / 10) and keep the restart only while the residual drops.
    If no start converges the identity mapping is returned, flagged.
    """
    pred, mos = _check_pair(pred, mos, min_n=5)
    _require_nonconstant(pred, "pred")
    best_params = None
    best_cost = np.inf
    for p0 in _fit_initializations(pred, mos):
        for _ in range(max_restarts):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    popt, _ = curve_fit(
                        _logistic4, pred, mos, p0=p0, maxfev=50_000, ftol=1e-15, xtol=1e-15, gtol=1e-15
                    )
            except RuntimeError:
                break
            resid = _logistic4(pred, *popt) - mos
            cost = float(resid @ resid)
            if cost < best_cost * (1.0 - 1e-12):
                best_params, best_cost = popt, cost
                p0 = popt * np.array([10.0, 0.1, 1.0, 1.0])
            else:
                break
    if best_params is None or not np.isfinite(_logistic4(pred, *best_params)).all():
        return LogisticFit(params=None, converged=False)
    return LogisticFit(params=tuple(float(v) for v in best_params), converged=True)


def plcc(pred, mos, fitted: bool = True) -> float:
    """Pearson correlation, on logistic-mapped predictions when ``fitted``."""
    if fitted:
        pred = logistic_fit(pred, mos).apply(pred)
    return pearson(pred, mos)


def rmse(pred, mos, fitted: bool = True) -> float:
    """Root mean square error, on logistic-mapped predictions when ``fitted``."""
    if fitted:
        pred = logistic_fit(pred, mos).apply(pred)
    return rmse_raw(pred, mos)


@dataclass(frozen=True)
class MetricReport:
    """The four headline metrics for one prediction/score pairing."""

    srcc: float
    plcc: float
    krcc: float
    rmse: float
    n: int
    logistic_params: tuple[float, float, float, float] | None = None
    fit_fallback: bool = False

    def __post_init__(self):
        for name in ("srcc", "plcc", "krcc"):
            v = getattr(self, name)
            if abs(v) > 1.0 + 1e-9:
                raise ValueError(f"{name}={v} outside [-1, 1]")
        if self.rmse < 0:
            raise ValueError(f"rmse={self.rmse} negative")

    def to_dict(self) -> dict:
        return {
            "srcc": self.srcc,
            "plcc": self.plcc,
            "krcc": self.krcc,
            "rmse": self.rmse,
            "n": self.n,
            "logistic_params": list(self.logistic_params) if self.logistic_params else None,
            "fit_fallback": self.fit_fallback,
        }


def compute_metrics(pred, mos, fit: bool = True) -> MetricReport:
    """All four metrics with a single shared logistic fit."""
    pred, mos = _check_pair(pred, mos)
    mapped = pred
    params = None
    fallback = False
    if fit:
        lf = logistic_fit(pred, mos)
        mapped = lf.apply(pred)
        params = lf.params
        fallback = not lf.converged
    return MetricReport(
        srcc=srcc(pred, mos),
        plcc=pearson(mapped, mos),
        krcc=krcc(pred, mos),
        rmse=rmse_raw(mapped, mos),
        n=int(pred.shape[0]),
        logistic_params=params,
        fit_fallback=fallback,
    )
