import json

import numpy as np
import pytest

from causalcheck import simulate
from causalcheck.data import Dataset
from causalcheck.estimate import ols_fit
from causalcheck.identify import Estimand
from causalcheck.pipeline import CausalModel, Pipeline
from causalcheck.refute import (REFUTERS, RefutationError, percentile_p_value, refute_bootstrap,
                                refute_data_subset, refute_dummy_outcome, refute_placebo_treatment,
                                refute_random_common_cause, refute_simulated_outcome,
                                sensitivity_unobserved_confounder, z_score_p_value)


@pytest.fixture(scope="module")
def ex1():
    return simulate.dgp_example1(10000, 11)[0]


@pytest.fixture(scope="module")
def ex2():
    return simulate.dgp_example2(10000, 12)[0]


@pytest.fixture(scope="module")
def pipe1(fig1a):
    return Pipeline(fig1a, "t", "y", "backdoor")


@pytest.fixture(scope="module")
def pipes2():
    return simulate.figure_pipelines(2)


def constant_estimator(d, e, s):
    return 3.0


def average_coefficients(d, e, s):
    # planted bug: reports the mean of every slope, not the treatment's
    names = [e.treatment, *e.adjustment_set]
    return float(np.mean(ols_fit(d.matrix(names), d[e.outcome], names).coefficients[:-1]))


class TestPValues:
    def test_z_score(self):
        assert z_score_p_value([-1.0, 1.0], 0.0) == pytest.approx(1.0)
        assert z_score_p_value([3.0, 3.0, 3.0], 0.0) == 0.0
        assert z_score_p_value([0.0, 0.0], 0.0) == 1.0

    def test_percentile(self):
        values = np.arange(100.0)
        assert percentile_p_value(values, 50.0) == pytest.approx(1.0)
        assert percentile_p_value(values, -1.0) == 0.0
        assert percentile_p_value(values, 1.0) == pytest.approx(0.04)


class TestPlacebo:
    def test_passes_on_correct_pipeline(self, pipe1, ex1):
        r = refute_placebo_treatment(pipe1, ex1, replications=30, seed=1)
        assert r.passed and r.category == "integration" and r.target == 0.0
        assert abs(r.mean) < 1.0

    def test_constant_estimator_fails(self, fig1a, ex1):
        pipe = Pipeline(fig1a, "t", "y", "backdoor", method=constant_estimator)
        r = refute_placebo_treatment(pipe, ex1, replications=20, seed=0)
        assert not r.passed and r.p_value < 0.01

    def test_single_replication(self, pipe1, ex1):
        r = refute_placebo_treatment(pipe1, ex1, replications=1, seed=0)
        assert len(r.refuted_ates) == 1 and 0.0 <= r.p_value <= 1.0

    def test_permute_mode_keeps_rate(self, pipe1, ex1):
        r = refute_placebo_treatment(pipe1, ex1, replications=10, seed=0, mode="permute")
        assert r.passed and r.params == {"mode": "permute"}
        with pytest.raises(ValueError):
            refute_placebo_treatment(pipe1, ex1, replications=1, mode="flip")

    @pytest.mark.parametrize("bad", [0, -3, 2.5])
    def test_replications_validated(self, pipe1, ex1, bad):
        with pytest.raises(ValueError):
            refute_placebo_treatment(pipe1, ex1, replications=bad)


class TestDummyOutcome:
    def test_passes_on_correct_pipeline(self, pipes2, ex2):
        r = refute_dummy_outcome(pipes2["correct_adjust_none"], ex2, replications=30, seed=2)
        assert r.passed and abs(r.mean) < 0.2

    def test_constant_estimator_fails(self, fig1b, ex2):
        pipe = Pipeline(fig1b, "t", "y", "backdoor", method=constant_estimator)
        r = refute_dummy_outcome(pipe, ex2, replications=20, seed=0)
        assert not r.passed and r.p_value < 0.01

    def test_zero_variance_outcome(self, fig1b):
        d = Dataset({"t": [0, 1, 0, 1, 1, 0.0], "y": np.full(6, 4.0), "m": [0, 1, 1, 0, 1, 0.0]})
        r = refute_dummy_outcome(Pipeline(fig1b, "t", "y", "backdoor"), d, replications=5, seed=0)
        assert np.allclose(r.refuted_ates, 0.0, atol=1e-9)
        assert r.passed


class TestSimulatedOutcome:
    @pytest.mark.parametrize("effect", [0.0, 5.0, 10.0])
    def test_recovers_effect(self, pipe1, ex1, effect):
        r = refute_simulated_outcome(pipe1, ex1, true_effect=effect, replications=20, seed=3)
        assert abs(r.mean - effect) < 0.5
        assert r.passed and r.target == effect

    def test_iv_pipeline(self, fig1a, ex1):
        pipe = Pipeline(fig1a, "t", "y", "iv", method="iv_wald")
        r = refute_simulated_outcome(pipe, ex1, true_effect=5.0, replications=10, seed=0)
        assert abs(r.mean - 5.0) < 1.5

    def test_frontdoor_rejected(self, fig1b, ex2):
        pipe = Pipeline(fig1b, "t", "y", "frontdoor", method="frontdoor_two_stage",
                        method_params={"n_bootstrap": 5})
        with pytest.raises(RefutationError):
            refute_simulated_outcome(pipe, ex2, replications=2)


class TestRandomCommonCause:
    def test_passes_and_augments_graph(self, pipe1, ex1):
        r = refute_random_common_cause(pipe1, ex1, replications=30, seed=4)
        assert r.passed and r.category == "model-perturbation"
        spread = np.std(r.refuted_ates, ddof=1)
        assert abs(r.mean - r.original_ate) < 2 * spread / np.sqrt(30) + 1e-12
        assert r.params["column"] == "random_cause"

    def test_planted_averaging_bug_fails(self, fig1a, ex1):
        pipe = Pipeline(fig1a, "t", "y", "backdoor", method=average_coefficients)
        r = refute_random_common_cause(pipe, ex1, replications=20, seed=0)
        assert not r.passed

    def test_name_clash_avoided(self, pipe1, ex1):
        d = ex1.with_column("random_cause", np.zeros(ex1.row_count))
        r = refute_random_common_cause(pipe1, d, replications=2, seed=0)
        assert r.params["column"] == "random_cause1"

    def test_pinned_estimand(self, pipe1, ex1):
        pinned = pipe1.pinned(Estimand("backdoor", "t", "y", adjustment_set=("w",)))
        r = refute_random_common_cause(pinned, ex1, replications=5, seed=0)
        assert r.passed

    def test_requires_backdoor(self, fig1a, ex1):
        with pytest.raises(RefutationError):
            refute_random_common_cause(Pipeline(fig1a, "t", "y", "iv", method="iv_wald"), ex1)

    def test_zero_replications(self, pipe1, ex1):
        with pytest.raises(ValueError):
            refute_random_common_cause(pipe1, ex1, replications=0)


class TestStability:
    def test_full_subset_reproduces_original(self, pipe1, ex1):
        r = refute_data_subset(pipe1, ex1, fraction=1.0, replications=5, seed=0)
        assert all(a == r.original_ate for a in r.refuted_ates)
        assert r.passed and r.category == "unit"

    @pytest.mark.parametrize("fraction", [0.0, 1.2])
    def test_fraction_validated(self, pipe1, ex1, fraction):
        with pytest.raises(ValueError):
            refute_data_subset(pipe1, ex1, fraction=fraction)

    def test_subset_passes(self, pipe1, ex1):
        assert refute_data_subset(pipe1, ex1, replications=40, seed=5).passed

    def test_bootstrap_ci(self, pipes2, ex2):
        r = refute_bootstrap(pipes2["correct_adjust_none"], ex2, replications=60, seed=6)
        lo, hi = r.ci
        assert r.passed and lo < 9.0 < hi

    def test_single_row_bootstrap(self, fig1b):
        pipe = Pipeline(fig1b, "t", "y", "backdoor", method=lambda d, e, s: float(d["y"].mean()))
        r = refute_bootstrap(pipe, Dataset({"t": [1.0], "y": [2.5], "m": [0.0]}), replications=4, seed=0)
        assert r.ci == (2.5, 2.5) and r.passed

    def test_negative_result_on_mediator_adjustment(self, pipes2, ex2):
        # adjusting for the mediator gives a precise, stable, wrong answer
        faulty = pipes2["faulty_adjust_m"]
        sub = refute_data_subset(faulty, ex2, replications=40, seed=7)
        boot = refute_bootstrap(faulty, ex2, replications=40, seed=7)
        assert abs(boot.original_ate) < 0.2
        assert sub.passed and boot.passed
        assert not boot.ci[0] <= 9.0 <= boot.ci[1]


@pytest.fixture(scope="module")
def surface(pipe1, ex1):
    return sensitivity_unobserved_confounder(pipe1, ex1, seed=8)


class TestSensitivity:

    def test_origin_matches_original(self, surface):
        c = surface.cell(0.0, 0.0)
        assert abs(c.adjusted_ate - surface.original_ate) <= 2 * c.std_error

    def test_outcome_only_confounder_does_not_shift(self, surface):
        for ky in (1.0, 2.0, 5.0):
            c = surface.cell(0.0, ky)
            assert abs(c.adjusted_ate - surface.original_ate) <= 3 * c.std_error + 0.05

    def test_monotone_in_outcome_strength(self, surface):
        ates = [surface.cell(1.0, ky).adjusted_ate for ky in (0.0, 1.0, 2.0, 5.0)]
        assert ates == sorted(ates)
        assert ates[-1] - surface.original_ate > 1.0

    def test_grid_shape_and_json(self, surface):
        assert len(surface.cells) == 12 and surface.category == "model-perturbation"
        json.dumps(surface.to_dict())

    @pytest.mark.parametrize("kt, ky", [((), (0.0,)), ((0.5,), (0.0,)), ((0.0, np.inf), (0.0,))])
    def test_grid_errors(self, pipe1, ex1, kt, ky):
        with pytest.raises(ValueError):
            sensitivity_unobserved_confounder(pipe1, ex1, kt, ky)


class TestInvariants:
    def test_input_unchanged(self, pipe1, ex1):
        before = ex1.to_csv()
        for name, fn in REFUTERS.items():
            if name == "unobserved_common_cause":
                fn(pipe1, ex1, (0.0,), (0.0, 1.0), replications=2)
            else:
                fn(pipe1, ex1, replications=2)
        assert ex1.to_csv() == before

    def test_reproducible(self, pipe1, ex1):
        a = refute_bootstrap(pipe1, ex1, replications=5, seed=9)
        b = refute_bootstrap(pipe1, ex1, replications=5, seed=9)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
        c = refute_bootstrap(pipe1, ex1, replications=5, seed=10)
        assert c.refuted_ates != a.refuted_ates

    def test_parallel_matches_serial(self, pipe1, ex1):
        a = refute_placebo_treatment(pipe1, ex1, replications=4, seed=1)
        b = refute_placebo_treatment(pipe1, ex1, replications=4, seed=1, n_jobs=2)
        assert a == b

    def test_taxonomy(self, pipe1, ex1):
        cats = {}
        for name, fn in REFUTERS.items():
            if name == "unobserved_common_cause":
                cats[name] = fn(pipe1, ex1, (0.0,), (0.0,), replications=2).category
            else:
                cats[name] = fn(pipe1, ex1, replications=2).category
        assert cats == {"placebo_treatment": "integration", "dummy_outcome": "integration",
                        "simulated_outcome": "integration", "data_subset": "unit", "bootstrap": "unit",
                        "random_common_cause": "model-perturbation",
                        "unobserved_common_cause": "model-perturbation"}

    def test_model_refute_infers_estimator(self, ex1):
        model = CausalModel(ex1, simulate.EXAMPLE1_DOT, "t", "y")
        e = model.identify_effect()[1]
        est = model.estimate_effect(e, "iv_wald")
        r = model.refute_estimate(e, est, "data_subset", replications=3)
        assert r.method == "iv.wald" and r.original_ate == est.ate
