import numpy as np
import pandas as pd
import pytest
from hypothesis import given

from _strategies import weights
from collabnet.graph import (AttributePanel, BinaryNetwork, EdgeCovariateMatrix, NetworkSeries, ValuedNetwork,
                             align_node_sets, binarize, build_network, read_adjacency_csv, read_edge_list_csv,
                             reindex, write_adjacency_csv, write_edge_list_csv)


def test_build_network_sums_repeats():
    net = build_network(3, [(0, 1, 2), (1, 0, 3), (1, 2, 1)], nodes=("a", "b", "c"), year=2010)
    assert net.weights[0, 1] == net.weights[1, 0] == 5
    assert net.strength(1) == 6
    assert net.year == 2010


@pytest.mark.parametrize("edge, err", [((0, 0, 1), ValueError), ((0, 1, -1), ValueError), ((0, 5, 1), IndexError)])
def test_build_network_rejects_bad_edges(edge, err):
    with pytest.raises(err):
        build_network(3, [edge])


def test_valued_network_validation():
    with pytest.raises(ValueError):
        ValuedNetwork((0, 1), np.array([[0, 1], [2, 0]]))
    with pytest.raises(ValueError):
        ValuedNetwork((0, 1), np.array([[1, 0], [0, 0]]))
    with pytest.raises(ValueError):
        ValuedNetwork((0, 1), np.array([[0, -1], [-1, 0]]))


def test_networks_are_immutable():
    net = build_network(2, [(0, 1, 1)])
    with pytest.raises(ValueError):
        net.weights[0, 1] = 4


def test_binarize_threshold():
    net = build_network(3, [(0, 1, 1), (1, 2, 3)])
    assert binarize(net, 1).edge_count == 2
    assert binarize(net, 2).edge_count == 1
    with pytest.raises(ValueError):
        binarize(net, 0)


def test_reindex_adds_isolates_and_drops_extras():
    net = build_network(3, [(0, 1, 4), (1, 2, 1)], nodes=("a", "b", "c"))
    out = reindex(net, ("b", "a", "z"))
    assert out.nodes == ("b", "a", "z")
    assert out.weights[0, 1] == 4
    assert out.weights[2].sum() == 0


def _panel(nodes, years, missing=()):
    rows = []
    for y in years:
        for k, c in enumerate(nodes):
            lib = np.nan if (c, y) in missing else 0.1 * k
            rows.append(dict(node=c, year=y, libdem=lib, ln_gdp_pc=1.0, ln_population=2.0,
                             urbanization=50.0, ln_authors=3.0, region="r"))
    return AttributePanel(pd.DataFrame(rows))


def test_align_drops_incomplete_nodes_and_fills_missing_years():
    nets = {2000: build_network(3, [(0, 1, 1)], ("a", "b", "c"), 2000),
            2001: build_network(4, [(0, 3, 2)], ("a", "b", "c", "d"), 2001)}
    panel = _panel(["a", "b", "c", "d"], [2000, 2001], missing={("c", 2000)})
    series = align_node_sets(nets, panel, 2001)
    assert series.nodes == ("a", "b", "d")
    assert series.by_year(2000).weights[0, 1] == 1
    assert series.by_year(2000).weights[2].sum() == 0  # d absent in 2000
    assert series.by_year(2001).weights[0, 2] == 2


def test_align_empty_intersection_raises():
    nets = [build_network(2, [(0, 1, 1)], ("a", "b"), 2000)]
    with pytest.raises(ValueError):
        align_node_sets(nets, _panel(["x"], [2000]), 2000)


def test_series_requires_shared_nodes_and_increasing_years():
    a = build_network(2, [], ("a", "b"), 2000)
    with pytest.raises(ValueError):
        NetworkSeries((a, build_network(2, [], ("a", "c"), 2001)))
    with pytest.raises(ValueError):
        NetworkSeries((a, build_network(2, [], ("a", "b"), 2000)))


def test_panel_rejects_out_of_range_democracy():
    with pytest.raises(ValueError):
        AttributePanel(pd.DataFrame({"node": ["a"], "year": [2000], "libdem": [1.2]}))


def test_edge_covariate_reindex():
    cov = EdgeCovariateMatrix(("a", "b", "c"), np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], float), "d")
    sub = cov.reindex(("c", "a"))
    assert sub.values[0, 1] == 2


@given(weights())
def test_adjacency_csv_roundtrip(tmp_path_factory, W):
    path = tmp_path_factory.mktemp("adj") / "a.csv"
    net = ValuedNetwork(tuple(f"n{k}" for k in range(len(W))), W, None)
    write_adjacency_csv(net, path)
    assert read_adjacency_csv(path) == net


@given(weights(min_n=3))
def test_edge_list_roundtrip(tmp_path_factory, W):
    path = tmp_path_factory.mktemp("el") / "e.csv"
    nodes = tuple(f"n{k}" for k in range(len(W)))
    net = ValuedNetwork(nodes, W, 2005)
    write_edge_list_csv([net], path)
    if W.sum() == 0:
        return
    back = read_edge_list_csv(path, nodes)[2005]
    assert back == net


def test_binary_network_as_valued():
    A = np.array([[0, 1], [1, 0]], bool)
    b = BinaryNetwork(("a", "b"), A)
    assert b.as_valued().weights[0, 1] == 1
    assert b.edges().tolist() == [[0, 1]]
