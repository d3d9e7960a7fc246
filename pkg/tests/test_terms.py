import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _strategies import adjacency, weights
from collabnet.terms import (ModelSpec, TermSpec, bind, change_matrix_binary, change_statistic_binary,
                             change_table_valued, delta_valued, eval_statistics, evaluate, expand_factor_levels,
                             factor_levels, gw_weights, reference_level)


def _triangle():
    A = np.ones((3, 3), np.int64) - np.eye(3, dtype=np.int64)
    return A


def test_gw_statistics_on_triangle():
    d = 0.7
    spec = ModelSpec((TermSpec("edges"), TermSpec("gwesp", decay=d), TermSpec("gwdegree", decay=d)))
    g = eval_statistics(spec, _triangle())
    r = 1 - math.exp(-d)
    # every edge has one shared partner; every node has degree two
    assert g[0] == 3
    assert g[1] == pytest.approx(3 * math.exp(d) * (1 - r))
    assert g[2] == pytest.approx(3 * math.exp(d) * (1 - r ** 2))


def test_gw_weights_limit():
    w = gw_weights(0.5, 4)
    assert w[0] == 0.0
    assert np.all(np.diff(w) > 0)


def test_node_terms_by_hand():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    spec = ModelSpec((TermSpec("nodecov", "x"), TermSpec("absdiff", "x"), TermSpec("nodematch", "g")))
    g = eval_statistics(spec, A, {"x": np.array([1.0, 2.0, 4.0]), "g": np.array(["a", "a", "b"])})
    assert g.tolist() == pytest.approx([3 + 6, 1 + 2, 1])


def test_valued_terms_by_hand():
    Y = np.array([[0, 2, 1], [2, 0, 0], [1, 0, 0]])
    spec = ModelSpec((TermSpec("sum"), TermSpec("nonzero"), TermSpec("nodesqrtcovar"),
                      TermSpec("transitiveweights")), "valued", 3)
    g = eval_statistics(spec, Y)
    s2, s1 = math.sqrt(2), 1.0
    # node 0 has sqrt-values (sqrt2, 1); nodesqrtcovar sums over pairs of a node's incident sqrt weights
    assert g[0] == 3 and g[1] == 2
    assert g[2] == pytest.approx(s2 * s1)
    assert g[3] == 0.0


@given(adjacency(min_n=3, max_n=8), st.data())
def test_binary_change_matches_recount(A, data):
    n = len(A)
    i, j = sorted(data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True)))
    x = np.linspace(-1, 1, n)
    spec = ModelSpec((TermSpec("edges"), TermSpec("absdiff", "x"), TermSpec("gwesp", decay=0.4),
                      TermSpec("gwdegree", decay=1.1)))
    b = bind(spec, n, {"x": x})
    on, off = A.astype(np.int64), A.astype(np.int64)
    on[i, j] = on[j, i] = 1
    off[i, j] = off[j, i] = 0
    assert np.allclose(change_statistic_binary(b, A, i, j), evaluate(b, on) - evaluate(b, off), atol=1e-10)


@given(weights(min_n=3, max_n=7, max_w=4), st.data())
def test_valued_delta_matches_recount(W, data):
    n = len(W)
    i, j = sorted(data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True)))
    v = data.draw(st.integers(0, 4))
    spec = ModelSpec((TermSpec("sum"), TermSpec("nonzero"), TermSpec("nodesqrtcovar"),
                      TermSpec("transitiveweights")), "valued", 4)
    b = bind(spec, n)
    after = W.copy()
    after[i, j] = after[j, i] = v
    assert np.allclose(delta_valued(b, W, i, j, v), evaluate(b, after) - evaluate(b, W), atol=1e-10)


def test_design_tables_match_single_dyad_calls():
    rng = np.random.default_rng(0)
    n = 6
    W = np.triu(rng.integers(0, 3, (n, n)), 1)
    W = W + W.T
    vb = bind(ModelSpec((TermSpec("sum"), TermSpec("transitiveweights")), "valued", 2), n)
    table = change_table_valued(vb, W)
    Y0 = W.copy()
    Y0[0, 1] = Y0[1, 0] = 0
    assert np.allclose(table[0, 2], delta_valued(vb, Y0, 0, 1, 2))
    bb = bind(ModelSpec((TermSpec("edges"), TermSpec("gwesp", decay=0.5))), n)
    X = change_matrix_binary(bb, W > 0)
    assert np.allclose(X[3], change_statistic_binary(bb, W > 0, 0, 4))
    assert W.flags.writeable  # inputs are not modified
    assert (W == W.T).all()


def test_reference_level_most_frequent_then_lexicographic():
    assert reference_level(["b", "a", "b", "c"]) == "b"
    assert reference_level(["b", "a", "c", "c", "a"]) == "a"
    ref, others = factor_levels(["x", "y", "z", "z"])
    assert ref == "z" and others == ["x", "y"]


def test_nodefactor_labels_and_single_level_warning():
    spec = ModelSpec((TermSpec("edges"), TermSpec("nodefactor", "c")))
    assert expand_factor_levels(spec, levels={"c": ["1", "2", "2", "3"]}) == ["edges", "nodefactor.c.1",
                                                                           "nodefactor.c.3"]
    with pytest.warns(UserWarning):
        assert expand_factor_levels(spec, levels={"c": ["1", "1"]}) == ["edges"]


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec((TermSpec("sum"),))  # valued term in a binary model
    with pytest.raises(ValueError):
        ModelSpec((TermSpec("gwesp", decay=0.5),), "valued", 3)
    with pytest.raises(ValueError):
        ModelSpec((TermSpec("sum"),), "valued", 0)
    with pytest.raises(ValueError):
        TermSpec("gwesp")
    with pytest.raises(ValueError):
        TermSpec("absdiff")
    with pytest.raises(ValueError):
        TermSpec("triangles")


def test_model_spec_json_roundtrip(tmp_path):
    spec = ModelSpec((TermSpec("sum"), TermSpec("absdiff", "libdem"), TermSpec("nodefactor", "region", level="R1")),
                     "valued", 5)
    spec.dump(tmp_path / "m.json")
    assert ModelSpec.load(tmp_path / "m.json") == spec
    assert json.loads((tmp_path / "m.json").read_text())["m"] == 5


def test_bind_rejects_missing_inputs():
    spec = ModelSpec((TermSpec("edgecov", "dist"),))
    with pytest.raises((KeyError, ValueError)):
        bind(spec, 4)
    with pytest.raises(ValueError):
        bind(ModelSpec((TermSpec("nodecov", "x"),)), 3, {"x": np.array([1.0, np.nan, 2.0])})


def test_temporal_labels():
    spec = ModelSpec((TermSpec("edges"), TermSpec("memory_lag"), TermSpec("time_trend")))
    b = bind(spec, 3, {}, {"memory": np.zeros((3, 3)), "time": np.ones((3, 3))})
    assert b.labels == ["edges", "memory", "timecov"]
