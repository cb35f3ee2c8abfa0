"""Average-treatment-effect estimators with a scikit-learn style interface.

Each estimator is parameterised by an :class:`~causalcheck.identify.Estimand`
and fitted on a :class:`~causalcheck.data.Dataset` (or a pandas DataFrame)::

    est = BackdoorRegression(estimand).fit(data)
    est.ate_, est.std_error_, est.estimate_

All treatments must be binary 0/1. Confidence intervals are 95%: normal
approximation for the analytic estimators, bootstrap percentile for the
estimators whose standard error is bootstrapped.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import check_binary, check_dataset, check_estimand, check_seed, check_treatment
from ..data import DataError, Dataset, bootstrap_sample
from ..identify import BACKDOOR, FRONTDOOR, IV, Estimand
from .kernels import EstimationError, logistic_fit, ols_fit

Z_95 = 1.959963984540054


class WeakInstrumentWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EffectEstimate:
    ate: float
    std_error: float
    ci_low: float
    ci_high: float
    method: str
    estimand: Estimand
    n: int
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"ate": self.ate, "std_error": self.std_error, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "method": self.method, "n": self.n,
                "estimand": self.estimand.to_dict(), "notes": list(self.notes)}

    @classmethod
    def from_dict(cls, d: dict) -> "EffectEstimate":
        return cls(d["ate"], d["std_error"], d["ci_low"], d["ci_high"], d["method"],
                   Estimand.from_dict(d["estimand"]), d["n"], tuple(d.get("notes", ())))


def _normal_estimate(ate, se, method, estimand, n, notes=()):
    ate, se = float(ate), float(se)
    return EffectEstimate(ate, se, ate - Z_95 * se, ate + Z_95 * se, method, estimand, n, tuple(notes))


def _bootstrap_estimate(point_fn, d, ate, n_bootstrap, seed, method, estimand, notes=()):
    """Standard error and percentile interval from rerunning ``point_fn`` on
    bootstrap resamples. Replicates that cannot be estimated are skipped."""
    seed = check_seed(seed)
    values = []
    for b in range(n_bootstrap):
        try:
            values.append(point_fn(bootstrap_sample(d, seed.child(b))))
        except (EstimationError, DataError):
            continue
    notes = list(notes)
    if len(values) < max(2, n_bootstrap // 2):
        raise EstimationError(f"only {len(values)} of {n_bootstrap} bootstrap replicates could be estimated")
    if len(values) < n_bootstrap:
        notes.append(f"{n_bootstrap - len(values)} bootstrap replicates skipped")
    values = np.asarray(values)
    se = float(np.std(values, ddof=1))
    lo, hi = np.percentile(values, [2.5, 97.5])
    # the point estimate must lie inside its own interval
    lo, hi = min(float(lo), ate), max(float(hi), ate)
    return EffectEstimate(float(ate), se, lo, hi, method, estimand, d.row_count, tuple(notes))


class EffectEstimator(BaseEstimator):
    """Base class: subclasses implement ``_estimate(data, estimand)``."""

    method_name: ClassVar[str] = ""
    estimand_kinds: ClassVar[tuple[str, ...]] = ()

    def fit(self, X, y=None):
        data = check_dataset(X)
        estimand = check_estimand(self.estimand, self.estimand_kinds)
        data.require([estimand.treatment, estimand.outcome, *estimand.variables])
        check_treatment(data, estimand.treatment)
        self.estimate_ = self._estimate(data, estimand)
        self.ate_ = self.estimate_.ate
        self.std_error_ = self.estimate_.std_error
        self.n_samples_ = data.row_count
        return self

    def _estimate(self, data: Dataset, estimand: Estimand) -> EffectEstimate:
        raise NotImplementedError


class BackdoorRegression(EffectEstimator):
    """OLS of the outcome on the treatment and the adjustment set."""

    method_name = "backdoor.linear_regression"
    estimand_kinds = (BACKDOOR,)

    def __init__(self, estimand=None):
        self.estimand = estimand

    def _estimate(self, data, estimand):
        names = [estimand.treatment, *estimand.adjustment_set]
        fit = ols_fit(data.matrix(names), data[estimand.outcome], names)
        return _normal_estimate(fit.coef(estimand.treatment), fit.std_error(estimand.treatment),
                                self.method_name, estimand, data.row_count)


class PropensityWeighting(EffectEstimator):
    """Self-normalised (Hajek) inverse probability weighting.

    Propensities come from a logistic model of the treatment on the
    adjustment set and are clipped to ``clip`` before weighting. The standard
    error bootstraps the whole procedure, propensity fit included.
    """

    method_name = "backdoor.propensity_score_weighting.hajek"
    estimand_kinds = (BACKDOOR,)

    def __init__(self, estimand=None, clip=(0.01, 0.99), n_bootstrap=200, random_state=0):
        self.estimand = estimand
        self.clip = clip
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    def _point(self, data, estimand):
        t = check_treatment(data, estimand.treatment)
        y = data[estimand.outcome]
        fit = logistic_fit(data.matrix(estimand.adjustment_set), t)
        e = np.clip(fit.predict_proba(data.matrix(estimand.adjustment_set)), *self.clip)
        w1 = t / e
        w0 = (1.0 - t) / (1.0 - e)
        return float(w1 @ y / w1.sum() - w0 @ y / w0.sum()), fit.separation

    def _estimate(self, data, estimand):
        lo, hi = self.clip
        if not 0.0 < lo <= hi < 1.0:
            raise ValueError(f"clip bounds must satisfy 0 < low <= high < 1, got {self.clip}")
        ate, separated = self._point(data, estimand)
        notes = ["propensity model separated; L2 fallback used"] if separated else []
        return _bootstrap_estimate(lambda d: self._point(d, estimand)[0], data, ate,
                                   self.n_bootstrap, self.random_state, self.method_name,
                                   estimand, notes)


class IVWald(EffectEstimator):
    """Wald ratio for a single binary instrument, delta-method standard error."""

    method_name = "iv.wald"
    estimand_kinds = (IV,)

    def __init__(self, estimand=None, weak_threshold=0.05):
        self.estimand = estimand
        self.weak_threshold = weak_threshold

    def _estimate(self, data, estimand):
        if len(estimand.instrument_set) != 1:
            raise EstimationError(
                f"Wald estimator supports exactly one instrument, got {list(estimand.instrument_set)}")
        (zname,) = estimand.instrument_set
        z = check_binary(data[zname], zname) == 1.0
        t, y = data[estimand.treatment], data[estimand.outcome]
        if z.all() or not z.any():
            raise EstimationError(f"instrument {zname!r} is constant")
        g1, g0 = (t[z], y[z]), (t[~z], y[~z])
        num = g1[1].mean() - g0[1].mean()
        den = g1[0].mean() - g0[0].mean()
        if abs(den) < 1e-12:
            raise EstimationError(f"instrument {zname!r} does not move the treatment (zero denominator)")
        notes = []
        if abs(den) < self.weak_threshold:
            msg = f"weak instrument: first-stage difference {den:.4g} below {self.weak_threshold}"
            warnings.warn(msg, WeakInstrumentWarning, stacklevel=3)
            notes.append(msg)
        ate = num / den

        def moments(tg, yg):
            ng = tg.shape[0]
            ddof = 1 if ng > 1 else 0
            c = np.cov(np.vstack([yg, tg]), ddof=ddof).reshape(2, 2)
            return c / ng

        c1, c0 = moments(*g1), moments(*g0)
        var_num, var_den, cov = c1[0, 0] + c0[0, 0], c1[1, 1] + c0[1, 1], c1[0, 1] + c0[0, 1]
        var = (var_num - 2.0 * ate * cov + ate * ate * var_den) / (den * den)
        return _normal_estimate(ate, np.sqrt(max(var, 0.0)), self.method_name, estimand,
                                data.row_count, notes)


class FrontdoorTwoStage(EffectEstimator):
    """Product of the treatment->mediator and mediator->outcome OLS slopes.

    Valid under a linear structural model. The second stage regresses the
    outcome on the mediator and the treatment.
    """

    method_name = "frontdoor.two_stage_linear"
    estimand_kinds = (FRONTDOOR,)

    def __init__(self, estimand=None, n_bootstrap=200, random_state=0):
        self.estimand = estimand
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    @staticmethod
    def _point(data, estimand):
        (m,) = estimand.mediator_set
        t = estimand.treatment
        first = ols_fit(data.matrix([t]), data[m], [t]).coef(t)
        second = ols_fit(data.matrix([m, t]), data[estimand.outcome], [m, t]).coef(m)
        return first * second

    def _estimate(self, data, estimand):
        if len(estimand.mediator_set) != 1:
            raise EstimationError(
                f"two-stage frontdoor estimator needs exactly one mediator, got {list(estimand.mediator_set)}")
        ate = self._point(data, estimand)
        return _bootstrap_estimate(lambda d: self._point(d, estimand), data, ate, self.n_bootstrap,
                                   self.random_state, self.method_name, estimand)


#: CLI/pipeline method names mapped to estimator classes.
ESTIMATORS = {
    "regression": BackdoorRegression,
    "propensity_score_weighting": PropensityWeighting,
    "iv_wald": IVWald,
    "frontdoor_two_stage": FrontdoorTwoStage,
}


def compatible_methods(kind: str) -> list[str]:
    return sorted(name for name, cls in ESTIMATORS.items() if kind in cls.estimand_kinds)


def estimate_backdoor_regression(d, e: Estimand) -> EffectEstimate:
    return BackdoorRegression(e).fit(d).estimate_


def estimate_propensity_weighting(d, e: Estimand, clip=(0.01, 0.99), n_bootstrap=200,
                                  seed=0) -> EffectEstimate:
    return PropensityWeighting(e, clip, n_bootstrap, seed).fit(d).estimate_


def estimate_iv_wald(d, e: Estimand) -> EffectEstimate:
    return IVWald(e).fit(d).estimate_


def estimate_frontdoor(d, e: Estimand, n_bootstrap=200, seed=0) -> EffectEstimate:
    return FrontdoorTwoStage(e, n_bootstrap, seed).fit(d).estimate_
