"""Input coercion shared by estimators, refuters and the pipeline."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .data import Dataset, DataError, RandomSeed, as_seed
from .identify import KINDS, Estimand


def check_dataset(X) -> Dataset:
    """Accept a Dataset, a pandas DataFrame or a mapping of columns."""
    if isinstance(X, Dataset):
        return X
    if hasattr(X, "columns") and hasattr(X, "to_numpy"):
        return Dataset.from_pandas(X)
    if isinstance(X, Mapping):
        return Dataset(X)
    raise TypeError(f"expected a Dataset, DataFrame or mapping of columns, got {type(X).__name__}")


def check_binary(values, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all((values == 0.0) | (values == 1.0)):
        raise DataError(f"column {name!r} must be binary 0/1")
    return values


def check_treatment(d: Dataset, treatment: str) -> np.ndarray:
    t = check_binary(d[treatment], treatment)
    if t.size and t.min() == t.max():
        raise DataError(f"treatment column {treatment!r} is constant")
    return t


def check_estimand(estimand, kinds=KINDS) -> Estimand:
    if isinstance(estimand, Mapping):
        estimand = Estimand.from_dict(estimand)
    if not isinstance(estimand, Estimand):
        raise TypeError(f"expected an Estimand, got {type(estimand).__name__}")
    if estimand.kind not in kinds:
        raise IncompatibleEstimandError(
            f"estimator needs a {' or '.join(kinds)} estimand, got {estimand.kind}")
    return estimand


def check_seed(seed) -> RandomSeed:
    return as_seed(seed)


class IncompatibleEstimandError(ValueError):
    pass
