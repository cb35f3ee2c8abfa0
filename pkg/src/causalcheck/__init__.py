"""Causal effect estimation with explicit graph assumptions and refutation tests."""

from .data import Dataset, RandomSeed, bootstrap_sample, load_csv, replace_column, subset_sample, with_column
from .estimate import (BackdoorRegression, EffectEstimate, FrontdoorTwoStage, IVWald,
                       PropensityWeighting, logistic_fit, ols_fit)
from .graph import (CausalGraph, Path, ancestors, backdoor_paths, d_separated, descendants,
                    parse_graph, topological_order)
from .identify import (Estimand, classify_variable, find_backdoor_sets, find_frontdoor_set,
                       find_instruments, identify_effect)
from .pipeline import CausalModel, Pipeline
from .refute import REFUTERS, RefutationReport, SensitivitySurface

__version__ = "0.1.0"

__all__ = [
    "BackdoorRegression", "CausalGraph", "CausalModel", "Dataset", "EffectEstimate", "Estimand",
    "FrontdoorTwoStage", "IVWald", "Path", "Pipeline", "PropensityWeighting", "REFUTERS",
    "RandomSeed", "RefutationReport", "SensitivitySurface", "ancestors", "backdoor_paths",
    "bootstrap_sample", "classify_variable", "d_separated", "descendants", "find_backdoor_sets",
    "find_frontdoor_set", "find_instruments", "identify_effect", "load_csv", "logistic_fit",
    "ols_fit", "parse_graph", "replace_column", "subset_sample", "topological_order", "with_column",
]
