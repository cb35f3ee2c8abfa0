"""The model / identify / estimate / refute workflow.

:class:`Pipeline` is the reusable recipe (graph, treatment, outcome, which
estimand, which estimator) that refuters rerun on perturbed data.
:class:`CausalModel` is the interactive front door::

    model = CausalModel(data, graph, "t", "y")
    estimands = model.identify_effect()
    estimate = model.estimate_effect(estimands[0], method_name="regression")
    report = model.refute_estimate(estimands[0], estimate, method_name="placebo_treatment")
"""

from __future__ import annotations

import inspect
import os
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

from ._validation import IncompatibleEstimandError, check_dataset, check_seed
from .data import Dataset
from .estimate import ESTIMATORS, EffectEstimate
from .graph import CausalGraph, parse_graph, read_graph
from .identify import KINDS, Estimand, IdentificationError, identify_effect


class UnknownMethodError(ValueError):
    pass


def as_graph(graph) -> CausalGraph:
    if isinstance(graph, CausalGraph):
        return graph
    if isinstance(graph, os.PathLike) or (isinstance(graph, str) and "{" not in graph):
        return read_graph(graph)
    return parse_graph(graph)


@dataclass(frozen=True)
class Pipeline:
    """A complete analysis recipe.

    ``method`` is either a name from :data:`~causalcheck.estimate.ESTIMATORS`
    or a callable ``(data, estimand, seed) -> EffectEstimate | float``.
    Setting ``estimand`` pins it; otherwise each run re-identifies on the
    (possibly augmented) graph and takes the ``estimand_index``-th estimand
    of kind ``estimand_kind``.
    """

    graph: CausalGraph
    treatment: str
    outcome: str
    estimand_kind: str
    estimand_index: int = 0
    method: str | Callable = "regression"
    method_params: Mapping[str, Any] = field(default_factory=dict)
    estimand: Estimand | None = None

    def __post_init__(self):
        if self.estimand_kind not in KINDS:
            raise ValueError(f"estimand_kind must be one of {KINDS}, got {self.estimand_kind!r}")
        if isinstance(self.method, str):
            if self.method not in ESTIMATORS:
                raise UnknownMethodError(
                    f"unknown estimator {self.method!r}; valid: {', '.join(sorted(ESTIMATORS))}")
            if self.estimand_kind not in ESTIMATORS[self.method].estimand_kinds:
                raise IncompatibleEstimandError(
                    f"estimator {self.method!r} cannot estimate a {self.estimand_kind} estimand")
        if self.estimand is not None and self.estimand.kind != self.estimand_kind:
            raise ValueError("pinned estimand kind differs from estimand_kind")

    @property
    def method_label(self) -> str:
        if isinstance(self.method, str):
            return self.method
        return getattr(self.method, "__name__", type(self.method).__name__)

    def identify(self, graph: CausalGraph | None = None) -> list[Estimand]:
        return identify_effect(graph or self.graph, self.treatment, self.outcome)

    def select(self, graph: CausalGraph | None = None) -> Estimand:
        if self.estimand is not None:
            return self.estimand
        matching = [e for e in self.identify(graph) if e.kind == self.estimand_kind]
        if self.estimand_index >= len(matching):
            raise IdentificationError(
                f"requested {self.estimand_kind} estimand #{self.estimand_index} but only "
                f"{len(matching)} identified")
        return matching[self.estimand_index]

    def estimate(self, data, seed=0, graph: CausalGraph | None = None,
                 estimand: Estimand | None = None) -> EffectEstimate:
        data = check_dataset(data)
        estimand = estimand or self.select(graph)
        if not isinstance(self.method, str):
            result = self.method(data, estimand, check_seed(seed))
            if isinstance(result, EffectEstimate):
                return result
            ate = float(result)
            return EffectEstimate(ate, 0.0, ate, ate, self.method_label, estimand, data.row_count)
        cls = ESTIMATORS[self.method]
        params = dict(self.method_params)
        if "random_state" in inspect.signature(cls).parameters:
            params.setdefault("random_state", check_seed(seed))
        return cls(estimand, **params).fit(data).estimate_

    def pinned(self, estimand: Estimand) -> "Pipeline":
        return replace(self, estimand=estimand)


class CausalModel:
    """Data plus graph plus the treatment/outcome question."""

    def __init__(self, data, graph, treatment: str, outcome: str):
        self.data: Dataset = check_dataset(data)
        self.graph = as_graph(graph)
        self.treatment = treatment
        self.outcome = outcome
        self.graph._check(treatment, outcome)

    def identify_effect(self) -> list[Estimand]:
        return identify_effect(self.graph, self.treatment, self.outcome)

    def pipeline(self, estimand: Estimand, method_name="regression", **params) -> Pipeline:
        same_kind = [e for e in self.identify_effect() if e.kind == estimand.kind]
        if estimand in same_kind:
            return Pipeline(self.graph, self.treatment, self.outcome, estimand.kind,
                            same_kind.index(estimand), method_name, params)
        return Pipeline(self.graph, self.treatment, self.outcome, estimand.kind,
                        method=method_name, method_params=params, estimand=estimand)

    def estimate_effect(self, estimand: Estimand, method_name="regression", seed=0,
                        **params) -> EffectEstimate:
        return self.pipeline(estimand, method_name, **params).estimate(self.data, seed)

    def refute_estimate(self, estimand: Estimand, estimate: EffectEstimate | None = None,
                        method_name="placebo_treatment", estimator="regression", **kwargs):
        from .refute import REFUTERS

        if method_name not in REFUTERS:
            raise UnknownMethodError(
                f"unknown refuter {method_name!r}; valid: {', '.join(sorted(REFUTERS))}")
        if estimate is not None:
            by_label = {cls.method_name: name for name, cls in ESTIMATORS.items()}
            estimator = by_label.get(estimate.method, estimator)
        pipe = self.pipeline(estimand, estimator)
        return REFUTERS[method_name](pipe, self.data, estimate=estimate, **kwargs)
