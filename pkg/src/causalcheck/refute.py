"""Refutation tests: perturb the data or the model, rerun the pipeline, and
check the estimate lands where it should.

Two decision rules are used, both at ``significance`` (default 0.05):

* ``z_score`` (placebo treatment, dummy outcome, simulated outcome): the
  target is scored against the refuted estimates' distribution,
  ``z = (target - mean) / sd``, two-sided. A single replication has no sd
  and falls back to the original estimate's standard error.
* ``percentile`` (random common cause, data subsets, bootstrap): the
  original estimate must sit inside the central 95% of the refuted
  estimates; ``p = 2 * min(P(refuted <= target), P(refuted >= target))``.

Replication ``i`` draws its perturbation from ``seed.child(i).child(0)`` and
passes ``seed.child(i).child(1)`` to the estimator, so reports are
reproducible and independent of scheduling when ``n_jobs`` is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit
from scipy.stats import norm

from ._validation import check_dataset, check_seed, check_treatment
from .data import Dataset, RandomSeed, bootstrap_sample, subset_sample
from .estimate import EffectEstimate, logistic_fit, ols_fit
from .identify import BACKDOOR, FRONTDOOR, Estimand
from .pipeline import Pipeline

INTEGRATION, UNIT, PERTURBATION = "integration", "unit", "model-perturbation"


class RefutationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RefutationReport:
    refuter: str
    category: str
    original_ate: float
    refuted_ates: tuple[float, ...]
    target: float
    p_value: float
    passed: bool
    replications: int
    seed: RandomSeed
    significance: float = 0.05
    test: str = "z_score"
    estimand: Estimand | None = None
    method: str = ""
    ci: tuple[float, float] | None = None
    params: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.refuted_ates))

    def to_dict(self) -> dict:
        return {
            "refuter": self.refuter, "category": self.category, "method": self.method,
            "estimand": self.estimand.to_dict() if self.estimand else None,
            "original_ate": self.original_ate, "target": self.target,
            "mean_refuted_ate": self.mean, "p_value": self.p_value, "passed": self.passed,
            "significance": self.significance, "test": self.test,
            "replications": self.replications,
            "seed": {"seed": self.seed.seed, "stream": list(self.seed.stream)},
            "ci": list(self.ci) if self.ci else None, "params": dict(self.params),
            "refuted_ates": list(self.refuted_ates),
        }

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.refuter:<24} {verdict}  original={self.original_ate:.4f} "
                f"mean_refuted={self.mean:.4f} target={self.target:.4f} p={self.p_value:.4f}")


@dataclass(frozen=True)
class SensitivityCell:
    kappa_t: float
    kappa_y: float
    adjusted_ate: float
    std_error: float
    refuted_ates: tuple[float, ...]


@dataclass(frozen=True)
class SensitivitySurface:
    """Mean re-estimated effect for each simulated confounder strength.

    ``kappa_t`` shifts the treatment log-odds per unit of the confounder,
    ``kappa_y`` shifts the outcome in outcome units.
    """

    original_ate: float
    cells: tuple[SensitivityCell, ...]
    replications: int
    seed: RandomSeed
    estimand: Estimand | None = None
    method: str = ""
    refuter: str = "unobserved_common_cause"
    category: str = PERTURBATION

    @property
    def grid(self) -> list[tuple[float, float, float]]:
        return [(c.kappa_t, c.kappa_y, c.adjusted_ate) for c in self.cells]

    def cell(self, kappa_t: float, kappa_y: float) -> SensitivityCell:
        for c in self.cells:
            if c.kappa_t == kappa_t and c.kappa_y == kappa_y:
                return c
        raise KeyError((kappa_t, kappa_y))

    def to_dict(self) -> dict:
        return {
            "refuter": self.refuter, "category": self.category, "method": self.method,
            "estimand": self.estimand.to_dict() if self.estimand else None,
            "original_ate": self.original_ate, "replications": self.replications,
            "seed": {"seed": self.seed.seed, "stream": list(self.seed.stream)},
            "grid": [{"kappa_t": c.kappa_t, "kappa_y": c.kappa_y, "adjusted_ate": c.adjusted_ate,
                      "std_error": c.std_error} for c in self.cells],
        }

    def summary(self) -> str:
        worst = max(self.cells, key=lambda c: abs(c.adjusted_ate - self.original_ate))
        return (f"{self.refuter:<24} ----  original={self.original_ate:.4f} largest shift "
                f"{worst.adjusted_ate - self.original_ate:+.4f} at kappa_t={worst.kappa_t:g}, "
                f"kappa_y={worst.kappa_y:g}")


# -- shared machinery ----------------------------------------------------

def z_score_p_value(values, target: float, fallback_sd: float = 0.0) -> float:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else fallback_sd
    scale = max(1.0, abs(target), abs(mean))
    # a spread at round-off level is a degenerate distribution, not evidence
    if not sd > 1e-9 * scale:
        return 1.0 if abs(mean - target) <= 1e-9 * scale else 0.0
    return float(2.0 * norm.sf(abs(target - mean) / sd))


def percentile_p_value(values, target: float) -> float:
    values = np.asarray(values, dtype=float)
    tol = 1e-12 * max(1.0, abs(target))
    below = float(np.mean(values <= target + tol))
    above = float(np.mean(values >= target - tol))
    return min(1.0, 2.0 * min(below, above))


def _check_replications(replications):
    if int(replications) != replications or replications < 1:
        raise ValueError(f"replications must be a positive integer, got {replications}")
    return int(replications)


def _original(pipeline: Pipeline, d: Dataset, seed: RandomSeed, estimate) -> EffectEstimate:
    if estimate is not None:
        return estimate
    return pipeline.estimate(d, seed.child(2**31))


def _replicate(name: str, one: Callable[[RandomSeed], float], replications: int,
               seed: RandomSeed, n_jobs) -> tuple[float, ...]:
    def run(i):
        try:
            return float(one(seed.child(i)))
        except Exception as exc:
            raise RefutationError(f"{name}: replication {i} failed: {exc}") from exc

    if n_jobs in (None, 1):
        return tuple(run(i) for i in range(replications))
    return tuple(Parallel(n_jobs=n_jobs)(delayed(run)(i) for i in range(replications)))


def _report(name, category, test, pipeline, d, original, values, target, replications, seed,
            significance, ci=None, params=None):
    if test == "z_score":
        p = z_score_p_value(values, target, original.std_error)
    else:
        p = percentile_p_value(values, target)
    return RefutationReport(
        refuter=name, category=category, original_ate=original.ate, refuted_ates=values,
        target=float(target), p_value=p, passed=p >= significance, replications=replications,
        seed=seed, significance=significance, test=test, estimand=original.estimand,
        method=original.method, ci=ci, params=params or {})


# -- refuters ------------------------------------------------------------

def refute_placebo_treatment(pipeline: Pipeline, d, replications: int = 100, seed=0, *,
                             mode: str = "bernoulli", significance: float = 0.05,
                             estimate: EffectEstimate | None = None, n_jobs=None) -> RefutationReport:
    """Swap the treatment for an independent placebo; the effect should vanish.

    ``mode="bernoulli"`` draws Bernoulli(observed treatment rate);
    ``mode="permute"`` shuffles the observed treatment column.
    """
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    if mode not in ("bernoulli", "permute"):
        raise ValueError(f"mode must be 'bernoulli' or 'permute', got {mode!r}")
    original = _original(pipeline, d, seed, estimate)
    t = d[pipeline.treatment]
    rate = float(t.mean())

    def one(s):
        rng = s.child(0).generator()
        placebo = rng.permutation(t) if mode == "permute" else (rng.random(d.row_count) < rate).astype(float)
        return pipeline.estimate(d.replace_column(pipeline.treatment, placebo), s.child(1)).ate

    values = _replicate("placebo_treatment", one, replications, seed, n_jobs)
    return _report("placebo_treatment", INTEGRATION, "z_score", pipeline, d, original, values, 0.0,
                   replications, seed, significance, params={"mode": mode})


def refute_dummy_outcome(pipeline: Pipeline, d, replications: int = 100, seed=0, *,
                         significance: float = 0.05, estimate: EffectEstimate | None = None,
                         n_jobs=None) -> RefutationReport:
    """Swap the outcome for Normal(mean(y), var(y)) noise; the effect should vanish."""
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    original = _original(pipeline, d, seed, estimate)
    y = d[pipeline.outcome]
    mu, sd = float(y.mean()), float(y.std())

    def one(s):
        dummy = s.child(0).generator().normal(mu, sd, size=d.row_count)
        return pipeline.estimate(d.replace_column(pipeline.outcome, dummy), s.child(1)).ate

    values = _replicate("dummy_outcome", one, replications, seed, n_jobs)
    return _report("dummy_outcome", INTEGRATION, "z_score", pipeline, d, original, values, 0.0,
                   replications, seed, significance)


def refute_simulated_outcome(pipeline: Pipeline, d, true_effect: float = 0.0,
                             replications: int = 100, seed=0, *, significance: float = 0.05,
                             estimate: EffectEstimate | None = None, n_jobs=None) -> RefutationReport:
    """Regenerate the outcome from a fitted linear model whose treatment
    coefficient is replaced by ``true_effect``; the pipeline should recover it.

    The outcome model uses the backdoor adjustment set as covariates (none for
    iv pipelines) and resamples its residuals with replacement.
    """
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    original = _original(pipeline, d, seed, estimate)
    estimand = original.estimand
    if estimand.kind == FRONTDOOR:
        raise RefutationError("simulated_outcome: a direct-effect outcome model cannot be "
                              "recovered through a frontdoor estimand")
    names = [pipeline.treatment, *(estimand.adjustment_set if estimand.kind == BACKDOOR else ())]
    fit = ols_fit(d.matrix(names), d[pipeline.outcome], names)
    t = d[pipeline.treatment]
    base = d[pipeline.outcome] - fit.residuals - fit.coef(pipeline.treatment) * t + true_effect * t

    def one(s):
        noise = s.child(0).generator().choice(fit.residuals, size=d.row_count, replace=True)
        return pipeline.estimate(d.replace_column(pipeline.outcome, base + noise), s.child(1)).ate

    values = _replicate("simulated_outcome", one, replications, seed, n_jobs)
    return _report("simulated_outcome", INTEGRATION, "z_score", pipeline, d, original, values,
                   true_effect, replications, seed, significance,
                   params={"true_effect": float(true_effect)})


def _fresh_name(taken, stem="random_cause"):
    name, i = stem, 0
    while name in taken:
        i += 1
        name = f"{stem}{i}"
    return name


def refute_random_common_cause(pipeline: Pipeline, d, replications: int = 100, seed=0, *,
                               significance: float = 0.05, estimate: EffectEstimate | None = None,
                               n_jobs=None) -> RefutationReport:
    """Add an independent standard-normal common cause of treatment and
    outcome (to the graph and the data); the estimate should not move."""
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    if pipeline.estimand_kind != BACKDOOR:
        raise RefutationError("random_common_cause requires a backdoor pipeline")
    original = _original(pipeline, d, seed, estimate)
    name = _fresh_name(set(d.columns) | set(pipeline.graph.nodes))
    graph = pipeline.graph.with_node(name, [pipeline.treatment, pipeline.outcome])
    pinned = None
    if pipeline.estimand is not None:
        e = pipeline.estimand
        pinned = Estimand(BACKDOOR, e.treatment, e.outcome, adjustment_set=e.adjustment_set + (name,))

    def one(s):
        u = s.child(0).generator().standard_normal(d.row_count)
        return pipeline.estimate(d.with_column(name, u), s.child(1), graph=graph, estimand=pinned).ate

    values = _replicate("random_common_cause", one, replications, seed, n_jobs)
    return _report("random_common_cause", PERTURBATION, "percentile", pipeline, d, original, values,
                   original.ate, replications, seed, significance, params={"column": name})


def refute_data_subset(pipeline: Pipeline, d, fraction: float = 0.8, replications: int = 100,
                       seed=0, *, significance: float = 0.05,
                       estimate: EffectEstimate | None = None, n_jobs=None) -> RefutationReport:
    """Re-estimate on random subsets; the original should fall inside the
    central 95% of the subset estimates."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    original = _original(pipeline, d, seed, estimate)

    def one(s):
        return pipeline.estimate(subset_sample(d, fraction, s.child(0)), s.child(1)).ate

    values = _replicate("data_subset", one, replications, seed, n_jobs)
    return _report("data_subset", UNIT, "percentile", pipeline, d, original, values, original.ate,
                   replications, seed, significance, params={"fraction": float(fraction)})


def refute_bootstrap(pipeline: Pipeline, d, replications: int = 100, seed=0, *,
                     significance: float = 0.05, estimate: EffectEstimate | None = None,
                     n_jobs=None) -> RefutationReport:
    """Re-estimate on bootstrap resamples; also reports the percentile CI."""
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    original = _original(pipeline, d, seed, estimate)

    def one(s):
        return pipeline.estimate(bootstrap_sample(d, s.child(0)), s.child(1)).ate

    values = _replicate("bootstrap", one, replications, seed, n_jobs)
    lo, hi = np.percentile(values, [2.5, 97.5])
    return _report("bootstrap", UNIT, "percentile", pipeline, d, original, values, original.ate,
                   replications, seed, significance, ci=(float(lo), float(hi)))


def sensitivity_unobserved_confounder(pipeline: Pipeline, d, kappa_t_grid=(0.0, 0.5, 1.0),
                                      kappa_y_grid=(0.0, 1.0, 2.0, 5.0), seed=0, *,
                                      replications: int = 20,
                                      estimate: EffectEstimate | None = None,
                                      n_jobs=None) -> SensitivitySurface:
    """Simulate an unobserved confounder ``u ~ N(0, 1)`` of given strength.

    For each grid cell the treatment is redrawn as
    ``Bernoulli(sigmoid(logit e(x) + kappa_t * u))`` with ``e`` the fitted
    propensity on the adjustment set, and the outcome becomes
    ``y + ate * (t_new - t) + kappa_y * u`` so that, absent confounding,
    the original effect is preserved. No pass/fail verdict is attached.
    """
    d, seed, replications = check_dataset(d), check_seed(seed), _check_replications(replications)
    kt_grid = [float(k) for k in kappa_t_grid]
    ky_grid = [float(k) for k in kappa_y_grid]
    if not kt_grid or not ky_grid:
        raise ValueError("sensitivity grids must be non-empty")
    if 0.0 not in kt_grid or 0.0 not in ky_grid:
        raise ValueError("sensitivity grids must both contain 0")
    if not np.all(np.isfinite(kt_grid + ky_grid)):
        raise ValueError("sensitivity grids must be finite")
    if pipeline.estimand_kind != BACKDOOR:
        raise RefutationError("unobserved_common_cause requires a backdoor pipeline")
    original = _original(pipeline, d, seed, estimate)
    adjust = list(original.estimand.adjustment_set)
    t = check_treatment(d, pipeline.treatment)
    y = d[pipeline.outcome]
    X = d.matrix(adjust)
    prop = logistic_fit(X, t)
    logit = np.column_stack([X, np.ones(d.row_count)]) @ prop.coefficients

    cells = []
    for ci, kt in enumerate(kt_grid):
        for cj, ky in enumerate(ky_grid):
            cell_seed = seed.child(ci).child(cj)

            def one(s, kt=kt, ky=ky):
                rng = s.child(0).generator()
                u = rng.standard_normal(d.row_count)
                t_new = (rng.random(d.row_count) < expit(logit + kt * u)).astype(float)
                y_new = y + original.ate * (t_new - t) + ky * u
                data = d.replace_column(pipeline.treatment, t_new).replace_column(pipeline.outcome, y_new)
                return pipeline.estimate(data, s.child(1)).ate

            values = _replicate("unobserved_common_cause", one, replications, cell_seed, n_jobs)
            se = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
            cells.append(SensitivityCell(kt, ky, float(np.mean(values)), se, values))
    return SensitivitySurface(original.ate, tuple(cells), replications, seed, original.estimand,
                              original.method)


REFUTERS = {
    "placebo_treatment": refute_placebo_treatment,
    "dummy_outcome": refute_dummy_outcome,
    "simulated_outcome": refute_simulated_outcome,
    "random_common_cause": refute_random_common_cause,
    "unobserved_common_cause": sensitivity_unobserved_confounder,
    "data_subset": refute_data_subset,
    "bootstrap": refute_bootstrap,
}
