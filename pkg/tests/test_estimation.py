import math

import numpy as np
import pandas as pd
import pytest
from scipy.special import logit

from collabnet.estimation import (DegeneracyError, FitResult, McmleConfig, ci_excludes_zero, exact_mle_small,
                                  fit_mcmle, fit_mple, fit_tergm_bootstrap, fit_valued_mple, logistic_newton,
                                  separation_direction, significance_stars, temporal_model, tergm_design,
                                  vif_diagnostics)
from collabnet.graph import AttributePanel, BinaryNetwork, ValuedNetwork
from collabnet.sampler import SamplerConfig, sample_binary, sample_valued
from collabnet.terms import ModelSpec, TermSpec, bind

EDGES = ModelSpec((TermSpec("edges"),))


def _random_binary(n, p, seed):
    rng = np.random.default_rng(seed)
    A = np.triu(rng.random((n, n)) < p, 1)
    return BinaryNetwork(tuple(range(n)), A | A.T)


def test_edges_mple_is_logit_density():
    net = _random_binary(25, 0.2, 0)
    fit = fit_mple(EDGES, net)
    p = net.edge_count / 300
    assert fit.coefficients[0] == pytest.approx(logit(p), abs=1e-8)
    assert fit.converged
    assert fit.se[0] == pytest.approx(1 / math.sqrt(300 * p * (1 - p)), rel=1e-6)


def test_empty_graph_is_separated():
    net = BinaryNetwork(tuple(range(5)), np.zeros((5, 5), bool))
    fit = fit_mple(EDGES, net)
    assert not fit.converged
    assert fit.diagnostics["separation"]
    exact = exact_mle_small(bind(EDGES, 5), net.adjacency)
    assert not exact.converged and exact.diagnostics["boundary"]


def test_separation_direction():
    X = np.array([[1.0, -1.0], [1.0, 1.0], [1.0, 2.0]])
    y = np.array([0, 1, 1])
    d = separation_direction(X, y)
    assert d is not None
    assert np.all((2 * y - 1) * (X @ d) >= -1e-9)
    assert separation_direction(X, np.array([0, 1, 0])) is None


def test_weighted_newton_equals_duplicated_rows():
    rng = np.random.default_rng(1)
    X = np.column_stack([np.ones(50), rng.normal(size=50)])
    y = (rng.random(50) < 0.4).astype(float)
    w = rng.integers(0, 3, 50).astype(float)
    a = logistic_newton(X, y, w).theta
    b = logistic_newton(np.repeat(X, w.astype(int), axis=0), np.repeat(y, w.astype(int))).theta
    assert np.allclose(a, b, atol=1e-8)


def test_dyad_independent_mple_equals_exact_mle():
    rng = np.random.default_rng(3)
    spec = ModelSpec((TermSpec("edges"), TermSpec("nodecov", "x")))
    A = np.array([[0, 1, 1, 0, 0], [1, 0, 0, 1, 0], [1, 0, 0, 0, 0], [0, 1, 0, 0, 1], [0, 0, 0, 1, 0]])
    b = bind(spec, 5, {"x": rng.normal(size=5)})
    exact = exact_mle_small(b, A)
    mple = fit_mple(spec, BinaryNetwork(tuple(range(5)), A.astype(bool)), bound=b)
    assert exact.converged
    assert np.allclose(mple.coefficients, exact.coefficients, atol=1e-6)


def test_valued_mple_sum_only_closed_form():
    rng = np.random.default_rng(2)
    n, m = 12, 4
    Y = np.triu(rng.binomial(m, 0.3, (n, n)), 1)
    Y = Y + Y.T
    b = bind(ModelSpec((TermSpec("sum"),), "valued", m), n)
    fit = fit_valued_mple(b, Y)
    mean = Y[np.triu_indices(n, 1)].mean()
    assert fit.coefficients[0] == pytest.approx(logit(mean / m), abs=1e-7)


def test_mcmle_edges_only_recovers_logit():
    net = _random_binary(20, 0.3, 5)
    b = bind(EDGES, 20)
    fit = fit_mcmle(b, net.adjacency, McmleConfig(samples=2000, interval=50, burn_in=5000, seed=1))
    assert fit.converged
    target = logit(net.edge_count / 190)
    assert abs(fit.coefficients[0] - target) < 3 * fit.se[0]
    assert np.all(np.abs(fit.diagnostics["t_ratios"]) < 0.1)


def test_mcmle_valued_matches_exact_on_tiny_space():
    spec = ModelSpec((TermSpec("sum"), TermSpec("nonzero")), "valued", 2)
    b = bind(spec, 4)
    Y = np.array([[0, 1, 2, 0], [1, 0, 0, 1], [2, 0, 0, 2], [0, 1, 2, 0]])
    exact = exact_mle_small(b, Y)
    fit = fit_mcmle(b, Y, McmleConfig(samples=20000, interval=10, burn_in=1000, seed=4))
    assert exact.converged and fit.converged
    assert np.all(np.abs(fit.coefficients - exact.coefficients) < 3 * fit.se)


def test_degenerate_valued_model_raises():
    # every dyad at the maximum: no finite parameter reproduces these statistics
    n, m = 8, 3
    Y = np.full((n, n), m) - m * np.eye(n, dtype=np.int64)
    b = bind(ModelSpec((TermSpec("sum"), TermSpec("nonzero")), "valued", m), n)
    with pytest.raises(DegeneracyError):
        fit_mcmle(b, Y, McmleConfig(samples=200, interval=10, burn_in=100, max_iter=3, doublings=0, seed=0))


def test_vif_independent_and_singular():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(5000, 3))
    assert np.allclose(vif_diagnostics(Z)["vif"], 1.0, atol=0.05)
    Z2 = np.column_stack([Z, Z[:, 0] + Z[:, 1]])
    out = vif_diagnostics(Z2, labels=["a", "b", "c", "d"])
    assert out.set_index("term").loc["d", "singular"]
    assert np.isinf(out.set_index("term").loc["a", "vif"])
    with pytest.raises(ValueError):
        vif_diagnostics(Z[:2])


@pytest.mark.parametrize("p, stars", [(0.0005, "***"), (0.005, "**"), (0.03, "*"), (0.2, "")])
def test_significance_stars(p, stars):
    assert significance_stars(p) == stars


def test_fit_result_table_and_json(tmp_path):
    fit = FitResult(["a", "b"], np.array([1.0, -0.2]), se=np.array([0.1, 0.5]),
                    p_values=np.array([1e-5, 0.7]), converged=True, iterations=3, method="mple")
    assert fit.table()["estimate"].tolist() == ["1.000*** (0.100)", "-0.200 (0.500)"]
    fit.dump(tmp_path / "f.json")
    assert '"stars"' in (tmp_path / "f.json").read_text()
    with pytest.raises(ValueError):
        FitResult(["a"], np.array([1.0, 2.0]))


def _temporal_fixture(n=15, periods=4, seed=0):
    spec = ModelSpec((TermSpec("edges"), TermSpec("memory_lag")))
    rng = np.random.default_rng(seed)
    prev = np.triu((rng.random((n, n)) < 0.2).astype(np.int64), 1)
    prev = prev + prev.T
    nets = [BinaryNetwork(tuple(map(str, range(n))), prev.astype(bool), 2000)]
    for t in range(1, periods):
        b = bind(spec, n, {}, {"memory": prev.astype(float)})
        prev = sample_binary(b, [-1.5, 2.0], SamplerConfig(burn_in=5000, interval=1, sample_count=1,
                                                           seed=t)).final_states[0]
        nets.append(BinaryNetwork(nets[0].nodes, prev.astype(bool), 2000 + t))
    return spec, nets


def test_tergm_design_uses_previous_slice_and_one_based_time():
    spec, nets = _temporal_fixture()
    Xs, ys, labels = tergm_design(nets, temporal_model(spec, memory=False), None)
    assert labels == ["edges", "memory", "timecov"]
    iu = np.triu_indices(nets[0].n, 1)
    for k, X in enumerate(Xs):
        assert np.array_equal(X[:, 1], nets[k].adjacency[iu].astype(float))
        assert np.all(X[:, 2] == k + 1)


def test_bootstrap_flags_follow_ci_rule_and_are_seeded():
    spec, nets = _temporal_fixture(periods=5)
    a = fit_tergm_bootstrap(nets, spec, R=60, seed=3)
    b = fit_tergm_bootstrap(nets, spec, R=60, seed=3)
    assert np.array_equal(a.replicates, b.replicates)
    assert np.array_equal(a.significant, ci_excludes_zero(a.ci_low, a.ci_high))
    assert a.R + a.dropped == 60
    assert (a.ci_low <= a.ci_high).all()
    assert a.as_fit().method == "tergm-bootstrap"


def test_bootstrap_threads_match_serial():
    spec, nets = _temporal_fixture(periods=4)
    a = fit_tergm_bootstrap(nets, spec, R=30, seed=1)
    b = fit_tergm_bootstrap(nets, spec, R=30, seed=1, threads=2)
    assert np.allclose(a.replicates, b.replicates)


def test_valued_mple_flags_boundary_observation():
    n, m = 6, 2
    Y = np.full((n, n), m) - m * np.eye(n, dtype=np.int64)
    b = bind(ModelSpec((TermSpec("sum"), TermSpec("nonzero")), "valued", m), n)
    fit = fit_valued_mple(b, Y)
    assert not fit.converged
    assert fit.diagnostics["separation"]
