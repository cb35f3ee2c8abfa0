import numpy as np
import pytest
from scipy.stats import norm

from causalcheck import simulate
from causalcheck.graph import parse_graph, topological_order
from causalcheck.identify import identify_effect


def test_example1_threshold_rows():
    d, truth = simulate.dgp_example1(50000, 0)
    assert truth == 10.0 and d.columns == ["t", "y", "z", "w"]
    t, z, w = d["t"], d["z"], d["w"]
    np.testing.assert_array_equal(t, (2 * z - 1 + w >= 0).astype(float))
    # rows like (z=1, w=0.5) are treated, (z=0, w=0.5) are not
    assert np.all(t[(z == 1) & (w >= 0.5)] == 1)
    assert np.all(t[(z == 0) & (w < 1)] == 0)


@pytest.mark.slow
def test_example1_first_stage_probabilities():
    n = 10**6
    d, _ = simulate.dgp_example1(n, 1)
    t, z = d["t"], d["z"] == 1
    expected = norm.cdf(1 / np.sqrt(0.4))
    assert abs(expected - 0.943) < 1e-3
    for mask, p in ((z, expected), (~z, 1 - expected)):
        k = mask.sum()
        assert abs(t[mask].mean() - p) < 5 * np.sqrt(p * (1 - p) / k)


def test_example1_std_scale():
    d, _ = simulate.dgp_example1(200000, 2, scale="std")
    assert d["w"].std() == pytest.approx(0.4, rel=0.01)
    d, _ = simulate.dgp_example1(200000, 2)
    assert d["w"].std() == pytest.approx(np.sqrt(0.4), rel=0.01)
    with pytest.raises(ValueError):
        simulate.dgp_example1(10, 0, scale="log")


@pytest.mark.slow
def test_example2_moments():
    d, truth = simulate.dgp_example2(10**6, 3)
    assert truth == 9.0
    t = d["t"] == 1
    assert abs(d["m"][t].mean() - 0.95) < 0.001
    assert abs(d["y"][t].mean() - d["y"][~t].mean() - 9.0) < 0.05


def test_deterministic():
    a, _ = simulate.dgp_example2(100, 7)
    b, _ = simulate.dgp_example2(100, 7)
    c, _ = simulate.dgp_example2(100, 8)
    assert a == b and a != c


@pytest.mark.parametrize("n", [0, -1, 2.5])
def test_bad_n(n):
    with pytest.raises(ValueError):
        simulate.dgp_example1(n, 0)


class TestLinearDgp:
    def test_columns_and_graph_agree(self):
        cfg = simulate.LinearDgpConfig(n=50, num_confounders=2, num_instruments=3, include_mediator=True)
        d, g, truth = simulate.generate_linear_dgp(cfg)
        assert d.columns == ["t", "y", "w0", "w1", "z0", "z1", "z2", "m"]
        assert set(g.nodes) == set(d.columns) and truth == 10.0
        topological_order(g)

    def test_single_row(self):
        d, _, _ = simulate.generate_linear_dgp(simulate.LinearDgpConfig(n=1))
        assert d.row_count == 1

    def test_zero_effect_recovered(self):
        from causalcheck.estimate import BackdoorRegression
        cfg = simulate.LinearDgpConfig(n=20000, num_confounders=3, effect=0.0, seed=5)
        d, g, truth = simulate.generate_linear_dgp(cfg)
        est = BackdoorRegression(identify_effect(g, "t", "y")[0]).fit(d).estimate_
        assert abs(est.ate - truth) < 4 * est.std_error

    def test_mediator_graph_identifies_frontdoor(self):
        cfg = simulate.LinearDgpConfig(n=10, num_confounders=0, num_instruments=0, include_mediator=True)
        _, g, _ = simulate.generate_linear_dgp(cfg)
        assert "frontdoor" in [e.kind for e in identify_effect(g, "t", "y")]

    @pytest.mark.parametrize("kw", [dict(n=0), dict(noise_variance=-1.0), dict(num_confounders=-1)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            simulate.LinearDgpConfig(**kw)


class TestFigure:
    def test_example_graphs(self):
        for dot in (simulate.EXAMPLE1_DOT, simulate.EXAMPLE1_FAULTY_DOT, simulate.EXAMPLE2_DOT,
                    simulate.EXAMPLE2_FAULTY_DOT):
            parse_graph(dot)
        assert list(simulate.figure_pipelines(1)) == ["correct_adjust_w", "faulty_adjust_w_z"]

    def test_single_dataset_table(self):
        table = simulate.replicate_figure1(1, n_datasets=1, n=500)
        assert list(table.columns) == ["dataset_index", "estimator", "ate"] and len(table) == 2
        summary = simulate.figure_summary(table, 1)
        assert summary["true_ate"] == 10.0
        assert all(s["std"] == 0.0 for s in summary["estimators"].values())

    def test_small_variant2(self):
        summary = simulate.figure_summary(simulate.replicate_figure1(2, n_datasets=5, n=2000), 2)
        est = summary["estimators"]
        assert abs(est["correct_adjust_none"]["mean"] - 9.0) < 0.3
        assert abs(est["faulty_adjust_m"]["mean"]) < 0.3

    @pytest.mark.parametrize("variant", [0, 3])
    def test_bad_variant(self, variant):
        with pytest.raises(ValueError):
            simulate.replicate_figure1(variant, 1)

    def test_reproducible(self):
        a = simulate.replicate_figure1(1, n_datasets=2, n=300, seed=4)
        b = simulate.replicate_figure1(1, n_datasets=2, n=300, seed=4)
        assert a.equals(b)
