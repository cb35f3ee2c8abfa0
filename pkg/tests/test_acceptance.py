"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` to see the verdict lines; they are
printed with output capture disabled so they land in the log.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from causalcheck import simulate
from causalcheck.data import RandomSeed
from causalcheck.estimate import IVWald, logistic_fit, logistic_gradient, logistic_loglik, ols_fit
from causalcheck.graph import d_separated
from causalcheck.identify import Estimand, find_backdoor_sets
from causalcheck.pipeline import Pipeline
from causalcheck.refute import (refute_bootstrap, refute_data_subset, refute_dummy_outcome,
                                refute_placebo_treatment, refute_simulated_outcome,
                                sensitivity_unobserved_confounder)

from oracles import d_separated_oracle, minimal_backdoor_sets_oracle, random_dag, random_query


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def test_criterion_1_instrument_example_figure(verdict):
    start = time.perf_counter()
    summary = simulate.figure_summary(simulate.replicate_figure1(1, 100, 10000, seed=0), 1)
    elapsed = time.perf_counter() - start
    correct = summary["estimators"]["correct_adjust_w"]
    ratio = summary["std_ratio_faulty_to_correct"]
    ok = 9.5 <= correct["mean"] <= 10.5 and ratio >= 2.0 and elapsed < 60
    verdict(1, ok, f"correct mean={correct['mean']:.3f} std ratio={ratio:.2f} time={elapsed:.1f}s")


def test_criterion_2_mediator_example_figure(verdict):
    start = time.perf_counter()
    summary = simulate.figure_summary(simulate.replicate_figure1(2, 100, 10000, seed=0), 2)
    elapsed = time.perf_counter() - start
    correct = summary["estimators"]["correct_adjust_none"]["mean"]
    faulty = summary["estimators"]["faulty_adjust_m"]["mean"]
    ok = abs(faulty) < 0.1 and 8.8 <= correct <= 9.2 and elapsed < 30
    verdict(2, ok, f"correct mean={correct:.3f} faulty mean={faulty:.4f} time={elapsed:.1f}s")


def test_criterion_3_identification_oracles(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(31337)
    graphs = mismatches = 0
    while graphs < 500:
        g, order = random_dag(rng, max_nodes=8)
        q = random_query(rng, g, order)
        if q is None:
            continue
        t, y = q
        if find_backdoor_sets(g, t, y) != minimal_backdoor_sets_oracle(g, t, y):
            mismatches += 1
        nodes = list(g.nodes)
        for _ in range(5):
            roles = rng.integers(0, 4, len(nodes))
            xs, ys, zs = ([n for n, r in zip(nodes, roles) if r == k] for k in range(3))
            if d_separated(g, xs, ys, zs) != d_separated_oracle(g, xs, ys, zs):
                mismatches += 1
        graphs += 1
    elapsed = time.perf_counter() - start
    verdict(3, mismatches == 0 and elapsed < 120,
            f"{graphs} graphs, {mismatches} mismatches, time={elapsed:.1f}s")


def test_criterion_4_numerical_kernels(verdict):
    rng = np.random.default_rng(4)
    worst_ols = worst_grad = 0.0
    for _ in range(20):
        n, p = int(rng.integers(30, 400)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, p))
        y = X @ rng.normal(size=p) + rng.normal() + rng.normal(size=n)
        A = np.column_stack([X, np.ones(n)])
        beta = np.linalg.solve(A.T @ A, A.T @ y)
        got = ols_fit(X, y).coefficients
        worst_ols = max(worst_ols, float(np.max(np.abs(got - beta) / np.abs(beta))))

        t = (rng.random(n) < 0.5).astype(float)
        b = rng.normal(size=p + 1)
        h = 1e-6
        fd = np.array([(logistic_loglik(A, t, b + h * e) - logistic_loglik(A, t, b - h * e)) / (2 * h)
                       for e in np.eye(p + 1)])
        g = logistic_gradient(A, t, b)
        worst_grad = max(worst_grad, float(np.linalg.norm(g - fd) / np.linalg.norm(g)))

    monotone = 0
    for _ in range(100):
        n, p = int(rng.integers(20, 500)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, p)) * rng.uniform(0.2, 5.0)
        t = (rng.random(n) < 1 / (1 + np.exp(-X @ rng.normal(size=p)))).astype(float)
        t[:2] = (0.0, 1.0)
        path = np.asarray(logistic_fit(X, t).loglik_path)
        monotone += bool(np.all(np.diff(path) >= 0))
    ok = worst_ols < 1e-8 and worst_grad < 1e-4 and monotone == 100
    verdict(4, ok, f"ols rel err={worst_ols:.1e} grad rel err={worst_grad:.1e} monotone={monotone}/100")


@pytest.mark.slow
def test_criterion_5_iv_consistency(verdict):
    d, _ = simulate.dgp_example1(10**6, 5)
    ate = IVWald(Estimand("iv", "t", "y", instrument_set=("z",))).fit(d).ate_
    verdict(5, 9.8 <= ate <= 10.2, f"Wald ate at n=1e6: {ate:.4f}")


@pytest.mark.slow
def test_criterion_6_refuter_calibration(verdict):
    g1 = simulate.figure_pipelines(1)["correct_adjust_w"]
    g2 = simulate.figure_pipelines(2)["correct_adjust_none"]
    placebo_pass = dummy_pass = 0
    for s in range(100):
        d1, _ = simulate.dgp_example1(10000, RandomSeed(1000 + s))
        d2, _ = simulate.dgp_example2(10000, RandomSeed(2000 + s))
        placebo_pass += refute_placebo_treatment(g1, d1, 100, seed=s).passed
        dummy_pass += refute_dummy_outcome(g2, d2, 100, seed=s).passed

    d1, _ = simulate.dgp_example1(10000, 7)
    d2, _ = simulate.dgp_example2(10000, 7)
    buggy1 = Pipeline(g1.graph, "t", "y", "backdoor", method=lambda d, e, s: 2.0)
    buggy2 = Pipeline(g2.graph, "t", "y", "backdoor", method=lambda d, e, s: 2.0)
    bug_p = (refute_placebo_treatment(buggy1, d1, 100, seed=0).p_value,
             refute_dummy_outcome(buggy2, d2, 100, seed=0).p_value)

    recovered = {e: refute_simulated_outcome(g1, d1, e, 100, seed=1).mean for e in (0.0, 5.0, 10.0)}
    ok = (placebo_pass >= 90 and dummy_pass >= 90 and max(bug_p) < 0.01
          and all(abs(v - e) <= 0.5 for e, v in recovered.items()))
    shown = ", ".join(f"{e:g}->{v:.3f}" for e, v in recovered.items())
    verdict(6, ok, f"placebo {placebo_pass}/100, dummy {dummy_pass}/100, bug p={max(bug_p):.1e}, "
                   f"simulated {shown}")


def test_criterion_7_negative_result(verdict):
    d, truth = simulate.dgp_example2(10000, 70)
    faulty = simulate.figure_pipelines(2)["faulty_adjust_m"]
    boot = refute_bootstrap(faulty, d, 100, seed=1)
    sub = refute_data_subset(faulty, d, 0.8, 100, seed=2)
    lo, hi = boot.ci
    ok = boot.passed and sub.passed and abs(boot.original_ate) < 0.1 and not lo <= truth <= hi
    verdict(7, ok, f"faulty ate={boot.original_ate:.4f} (truth {truth:g}), bootstrap CI=[{lo:.3f}, {hi:.3f}], "
                   f"bootstrap passed={boot.passed}, subset passed={sub.passed}")


def test_criterion_8_sensitivity_surface(verdict):
    d, _ = simulate.dgp_example1(10000, 80)
    pipe = simulate.figure_pipelines(1)["correct_adjust_w"]
    surf = sensitivity_unobserved_confounder(pipe, d, (0.0, 1.0), (0.0, 1.0, 2.0, 5.0), seed=8,
                                             replications=20)
    origin = surf.cell(0.0, 0.0)
    gap = abs(origin.adjusted_ate - surf.original_ate)
    path = [surf.cell(1.0, ky).adjusted_ate for ky in (0.0, 1.0, 2.0, 5.0)]
    ok = gap <= 2 * origin.std_error and all(a < b for a, b in zip(path, path[1:]))
    verdict(8, ok, f"(0,0) gap={gap:.4f} vs 2se={2 * origin.std_error:.4f}; "
                   f"kappa_t=1 path={[round(v, 3) for v in path]}")


def test_criterion_9_cli_determinism(verdict, tmp_path):
    d, _ = simulate.dgp_example1(10000, 90)
    d.to_csv(tmp_path / "data.csv")
    (tmp_path / "graph.dot").write_text(simulate.EXAMPLE1_DOT)
    refuters = ["placebo_treatment", "dummy_outcome", "simulated_outcome:true_effect=5",
                "random_common_cause", "unobserved_common_cause", "data_subset", "bootstrap"]
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run / "report.json"
        cmd = [sys.executable, "-m", "causalcheck", "refute", "--data", str(tmp_path / "data.csv"),
               "--graph", str(tmp_path / "graph.dot"), "--treatment", "t", "--outcome", "y",
               "--estimand", "backdoor:0", "--estimator", "regression", "--seed", "42",
               "--output", str(out)]
        for r in refuters:
            cmd += ["--refuter", r]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    reports = json.loads(outputs[0])["refutations"]
    ok = outputs[0] == outputs[1] and len(reports) == 7
    verdict(9, ok, f"{len(reports)} refuters, {len(outputs[0])} bytes, identical={outputs[0] == outputs[1]}")
