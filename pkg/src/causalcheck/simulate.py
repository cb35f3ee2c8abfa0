"""Data-generating processes with known effects.

``Normal(mu, v)`` in the two motivating examples is read as mean/variance,
so ``w ~ Normal(0, 0.4)`` has standard deviation ``sqrt(0.4)`` and the
outcome noise ``Normal(0, 100)`` has standard deviation 10. Pass
``scale="std"`` to read the second parameter as a standard deviation.

Example 2 has true ATE ``10 * (0.95 - 0.05) = 9``: the treatment moves the
mediator's success probability by 0.9 and the outcome is ``10 m + noise``.

The configurable linear DGP (:func:`generate_linear_dgp`) uses::

    w_j ~ Normal(0, 1)                    confounders
    z_k ~ Bernoulli(0.5)                  instruments
    t   ~ Bernoulli(sigmoid(sum_k a_k (2 z_k - 1) + sum_j b_j w_j))
    m   = t + Normal(0, 1)                (only with include_mediator)
    y   = effect * (m or t) + sum_j c_j w_j + Normal(0, noise_variance)

with coefficients drawn once per config: ``a_k ~ U(1, 3)``,
``b_j ~ U(0.5, 1.5)``, ``c_j ~ U(5, 15)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import Dataset, RandomSeed, as_seed
from .graph import CausalGraph, parse_graph
from .identify import BACKDOOR
from .pipeline import Pipeline

EXAMPLE1_TRUE_ATE = 10.0
EXAMPLE2_TRUE_ATE = 9.0

EXAMPLE1_DOT = """digraph example1 {
    w -> t; w -> y;
    z -> t;
    t -> y;
}
"""
# z mistaken for a confounder
EXAMPLE1_FAULTY_DOT = """digraph example1_faulty {
    w -> t; w -> y;
    z -> t; z -> y;
    t -> y;
}
"""
EXAMPLE2_DOT = """digraph example2 {
    t -> m; m -> y;
}
"""
# m mistaken for a confounder
EXAMPLE2_FAULTY_DOT = """digraph example2_faulty {
    m -> t; m -> y;
    t -> y;
}
"""


def _sd(param: float, scale: str) -> float:
    if scale == "variance":
        return float(np.sqrt(param))
    if scale == "std":
        return float(param)
    raise ValueError(f"scale must be 'variance' or 'std', got {scale!r}")


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return int(n)


def dgp_example1(n: int = 10000, seed=0, scale: str = "variance") -> tuple[Dataset, float]:
    """Instrument example: ``y = 10 t + 10 w + e`` with ``t = [2z - 1 + w >= 0]``."""
    n = _check_n(n)
    rng = as_seed(seed).generator()
    z = (rng.random(n) < 0.5).astype(float)
    w = rng.normal(0.0, _sd(0.4, scale), n)
    eps = rng.normal(0.0, _sd(100.0, scale), n)
    # sigmoid(x) >= 0.5 <=> x >= 0; the tie goes to treatment
    t = (2.0 * z - 1.0 + w >= 0.0).astype(float)
    y = 10.0 * t + 10.0 * w + eps
    return Dataset({"t": t, "y": y, "z": z, "w": w}), EXAMPLE1_TRUE_ATE


def dgp_example2(n: int = 10000, seed=0) -> tuple[Dataset, float]:
    """Mediator example: ``t -> m -> y`` with ``y = 10 m + e``."""
    n = _check_n(n)
    rng = as_seed(seed).generator()
    t = (rng.random(n) < 0.5).astype(float)
    m = (rng.random(n) < 0.95 * t + 0.05 * (1.0 - t)).astype(float)
    y = 10.0 * m + rng.normal(0.0, 1.0, n)
    return Dataset({"t": t, "y": y, "m": m}), EXAMPLE2_TRUE_ATE


@dataclass(frozen=True)
class LinearDgpConfig:
    n: int = 10000
    num_confounders: int = 1
    num_instruments: int = 1
    include_mediator: bool = False
    effect: float = 10.0
    noise_variance: float = 1.0
    seed: int | RandomSeed = 0

    def __post_init__(self):
        _check_n(self.n)
        if self.num_confounders < 0 or self.num_instruments < 0:
            raise ValueError("variable counts must be nonnegative")
        if not self.noise_variance >= 0:
            raise ValueError("noise_variance must be nonnegative")


def generate_linear_dgp(cfg: LinearDgpConfig) -> tuple[Dataset, CausalGraph, float]:
    rng = as_seed(cfg.seed).generator()
    n, J, K = cfg.n, cfg.num_confounders, cfg.num_instruments
    a = rng.uniform(1.0, 3.0, K)
    b = rng.uniform(0.5, 1.5, J)
    c = rng.uniform(5.0, 15.0, J)
    W = rng.standard_normal((n, J))
    Z = (rng.random((n, K)) < 0.5).astype(float)
    logit = (2.0 * Z - 1.0) @ a + W @ b
    t = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(float)
    cols = {"t": t}
    edges = []
    if cfg.include_mediator:
        m = t + rng.standard_normal(n)
        driver = m
        edges += [("t", "m"), ("m", "y")]
    else:
        driver = t
        edges.append(("t", "y"))
    y = cfg.effect * driver + W @ c + rng.normal(0.0, np.sqrt(cfg.noise_variance), n)
    cols["y"] = y
    for j in range(J):
        cols[f"w{j}"] = W[:, j]
        edges += [(f"w{j}", "t"), (f"w{j}", "y")]
    for k in range(K):
        cols[f"z{k}"] = Z[:, k]
        edges.append((f"z{k}", "t"))
    if cfg.include_mediator:
        cols["m"] = m
    graph = CausalGraph.from_edges(edges, nodes=list(cols))
    return Dataset(cols), graph, float(cfg.effect)


# -- correct vs faulty replication ------------------------------------

FIGURE_VARIANTS = {
    1: dict(dgp=dgp_example1, truth=EXAMPLE1_TRUE_ATE,
            correct=EXAMPLE1_DOT, faulty=EXAMPLE1_FAULTY_DOT),
    2: dict(dgp=dgp_example2, truth=EXAMPLE2_TRUE_ATE,
            correct=EXAMPLE2_DOT, faulty=EXAMPLE2_FAULTY_DOT),
}


def figure_pipelines(variant: int) -> dict[str, Pipeline]:
    """The correctly and wrongly specified backdoor pipelines for a variant."""
    spec = _variant(variant)
    out = {}
    for role in ("correct", "faulty"):
        graph = parse_graph(spec[role])
        pipe = Pipeline(graph, "t", "y", BACKDOOR, method="regression")
        adjust = pipe.select().adjustment_set
        out[f"{role}_adjust_{'_'.join(adjust) or 'none'}"] = pipe
    return out


def _variant(variant):
    if variant not in FIGURE_VARIANTS:
        raise ValueError(f"figure variant must be 1 or 2, got {variant!r}")
    return FIGURE_VARIANTS[variant]


def replicate_figure1(variant: int, n_datasets: int = 100, n: int = 10000, seed=0) -> pd.DataFrame:
    """Estimate with the correct and the faulty pipeline on ``n_datasets``
    fresh datasets. Returns a tidy frame ``dataset_index, estimator, ate``."""
    spec = _variant(variant)
    if n_datasets < 1:
        raise ValueError("n_datasets must be positive")
    seed = as_seed(seed)
    pipes = figure_pipelines(variant)
    rows = []
    for i in range(n_datasets):
        data, _ = spec["dgp"](n, seed.child(i))
        for label, pipe in pipes.items():
            rows.append((i, label, pipe.estimate(data).ate))
    return pd.DataFrame(rows, columns=["dataset_index", "estimator", "ate"])


def figure_summary(table: pd.DataFrame, variant: int) -> dict:
    truth = _variant(variant)["truth"]
    stats = {}
    for label, group in table.groupby("estimator", sort=False):
        ate = group["ate"].to_numpy()
        stats[label] = {"mean": float(ate.mean()),
                        "std": float(ate.std(ddof=1)) if ate.size > 1 else 0.0,
                        "bias": float(ate.mean() - truth), "n_datasets": int(ate.size)}
    correct = next(v for k, v in stats.items() if k.startswith("correct"))
    faulty = next(v for k, v in stats.items() if k.startswith("faulty"))
    ratio = faulty["std"] / correct["std"] if correct["std"] > 0 else float("inf")
    return {"variant": variant, "true_ate": truth, "estimators": stats,
            "std_ratio_faulty_to_correct": ratio}
