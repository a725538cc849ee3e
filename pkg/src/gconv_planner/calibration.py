"""Fitting the energy proxy to measured energy-per-frame data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import CostBreakdown
from .planner import EnergyModelParams

# beta is clamped into [BETA_EPS, 1 - BETA_EPS] when the free optimum leaves (0, 1)
BETA_EPS = 1e-6

MODEL_NOTE = (
    "The proxy uses a single reuse factor per platform, so for a fixed-g sweep it is "
    "monotone in g and cannot express an interior EPF minimum; residual structure across "
    "g reflects reuse that varies with group count."
)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementRecord:
    config_id: str
    batch_size: int
    device: str
    epf_millijoule: float

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"{self.config_id}: batch_size must be >= 1")
        if not self.epf_millijoule > 0:
            raise ValueError(f"{self.config_id}: epf_millijoule must be positive")


class EnergyProxyRegressor(RegressorMixin, BaseEstimator):
    """Log-linear least-squares fit of ``EPF = k * mc**(1-beta) * footprint**beta``.

    ``X`` has two columns, MACs and footprint (params + activations). Taking
    logs makes the model linear in ``(ln k, beta)``::

        ln EPF - ln mc = ln k + beta * (ln footprint - ln mc)

    which is solved in closed form. ``alpha`` cannot be separated from ``k``;
    ``scale_k_`` is their product.

    Parameters
    ----------
    beta : float or None
        Fix beta instead of fitting it (only ``k`` is then estimated).
    """

    def __init__(self, beta=None):
        self.beta = beta

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if X.shape[1] != 2:
            raise CalibrationError(f"expected 2 feature columns (mc, footprint), got {X.shape[1]}")
        if np.any(X <= 0) or np.any(y <= 0):
            raise CalibrationError("mc, footprint and EPF must all be positive")
        if X.shape[0] < 3:
            raise CalibrationError(f"need at least 3 usable records, got {X.shape[0]}")
        log_mc = np.log(X[:, 0])
        u = np.log(X[:, 1]) - log_mc
        v = np.log(y) - log_mc

        self.beta_clamped_ = False
        if self.beta is None:
            du = u - u.mean()
            sxx = float(du @ du)
            if sxx <= 1e-24 * max(1.0, float(u @ u)):
                raise CalibrationError(
                    "degenerate design: every configuration has the same mc/footprint ratio"
                )
            beta = float(du @ (v - v.mean())) / sxx
            self.beta_unconstrained_ = beta
            if not BETA_EPS <= beta <= 1.0 - BETA_EPS:
                beta = min(max(beta, BETA_EPS), 1.0 - BETA_EPS)
                self.beta_clamped_ = True
        else:
            beta = float(self.beta)
            self.beta_unconstrained_ = beta
        self.beta_ = beta
        self.log_scale_k_ = float(np.mean(v - beta * u))
        self.scale_k_ = math.exp(self.log_scale_k_)

        log_pred = self.log_scale_k_ + log_mc + beta * u
        log_y = np.log(y)
        self.residuals_ = log_y - log_pred
        ss_res = float(self.residuals_ @ self.residuals_)
        centered = log_y - log_y.mean()
        ss_tot = float(centered @ centered)
        if ss_tot > 0:
            self.r2_log_ = 1.0 - ss_res / ss_tot
        else:
            self.r2_log_ = 1.0 if ss_res == 0 else 0.0
        return self

    def predict(self, X):
        check_is_fitted(self, "beta_")
        X = check_array(X, dtype=np.float64)
        return self.scale_k_ * X[:, 0] ** (1.0 - self.beta_) * X[:, 1] ** self.beta_

    def to_params(self, **kwargs) -> EnergyModelParams:
        check_is_fitted(self, "beta_")
        return EnergyModelParams(beta=self.beta_, scale_k=self.scale_k_, **kwargs)


@dataclass
class FitReport:
    beta: float
    scale_k: float
    n_records: int
    r2_log: float
    spearman_rho: float
    beta_clamped: bool
    beta_unconstrained: float
    residuals: Dict[str, float] = field(default_factory=dict)
    predictions: Dict[str, float] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)
    note: str = MODEL_NOTE

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "scale_k": self.scale_k,
            "n_records": self.n_records,
            "r2_log": self.r2_log,
            "spearman_rho": self.spearman_rho,
            "beta_clamped": self.beta_clamped,
            "beta_unconstrained": self.beta_unconstrained,
            "residuals": dict(self.residuals),
            "predictions": dict(self.predictions),
            "skipped": list(self.skipped),
            "note": self.note,
        }


def _record_key(rec: MeasurementRecord) -> str:
    return f"{rec.config_id}@{rec.device}/B={rec.batch_size}"


def calibrate(
    records: Sequence[MeasurementRecord],
    costs: Mapping[str, CostBreakdown],
    base: EnergyModelParams | None = None,
) -> Tuple[EnergyModelParams, FitReport]:
    """Fit ``beta`` and ``scale_k`` to measured EPF.

    Records whose config id has no entry in ``costs`` are skipped and listed
    in the report. Remaining fields of ``base`` (alpha, gamma, target_G) are
    carried over unchanged.
    """
    usable, skipped = [], []
    for rec in records:
        if rec.config_id in costs and costs[rec.config_id].mc > 0:
            usable.append(rec)
        else:
            skipped.append(_record_key(rec))
    if len(usable) < 3:
        raise CalibrationError(f"need at least 3 usable records, got {len(usable)}")

    X = np.array(
        [[costs[r.config_id].mc, costs[r.config_id].footprint] for r in usable], dtype=np.float64
    )
    y = np.array([r.epf_millijoule for r in usable], dtype=np.float64)
    model = EnergyProxyRegressor().fit(X, y)
    pred = model.predict(X)
    if np.ptp(pred) == 0 or np.ptp(y) == 0:
        rho = float("nan")
    else:
        rho = float(spearmanr(pred, y)[0])

    base = base or EnergyModelParams()
    params = EnergyModelParams(
        alpha=base.alpha, beta=model.beta_, gamma=base.gamma,
        target_G=base.target_G, scale_k=model.scale_k_,
    )
    keys = [_record_key(r) for r in usable]
    report = FitReport(
        beta=model.beta_,
        scale_k=model.scale_k_,
        n_records=len(usable),
        r2_log=model.r2_log_,
        spearman_rho=rho,
        beta_clamped=model.beta_clamped_,
        beta_unconstrained=model.beta_unconstrained_,
        residuals=dict(zip(keys, map(float, model.residuals_))),
        predictions=dict(zip(keys, map(float, pred))),
        skipped=skipped,
    )
    return params, report
