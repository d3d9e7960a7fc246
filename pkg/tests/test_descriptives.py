from itertools import combinations

import numpy as np
import pandas as pd
import pytest
from hypothesis import given

from _strategies import adjacency, bfs_distances
from collabnet.descriptives import (closed_triads, components_and_isolates, degree_centralization,
                                    democracy_summary, density, possible_triads, summarize, summary_table)
from collabnet.graph import AttributePanel, BinaryNetwork, build_network


def _b(A):
    return BinaryNetwork(tuple(range(len(A))), A)


@given(adjacency(min_n=3))
def test_closed_triads_match_brute_force(A):
    brute = sum(A[i, j] and A[j, k] and A[i, k] for i, j, k in combinations(range(len(A)), 3))
    assert closed_triads(_b(A)) == brute


@given(adjacency(min_n=1))
def test_components_match_bfs(A):
    dist = bfs_distances(A)
    labels = {tuple(np.flatnonzero(row >= 0)) for row in dist}
    comps, iso = components_and_isolates(_b(A))
    assert comps == len(labels)
    assert iso == int((A.sum(axis=1) == 0).sum())


@pytest.mark.parametrize("n, expected", [(3, 1), (4, 4), (10, 120), (170, 804_440)])
def test_possible_triads(n, expected):
    assert possible_triads(n) == expected


def test_centralization_extremes():
    n = 6
    star = np.zeros((n, n), bool)
    star[0, 1:] = star[1:, 0] = True
    assert degree_centralization(_b(star)) == pytest.approx(1.0)
    full = ~np.eye(n, dtype=bool)
    assert degree_centralization(_b(full)) == 0.0
    assert density(_b(full)) == 1.0


@given(adjacency(min_n=3))
def test_centralization_in_unit_interval(A):
    c = degree_centralization(_b(A))
    assert 0.0 <= c <= 1.0


def test_summarize_and_table():
    net = build_network(4, [(0, 1, 3), (1, 2, 1), (0, 2, 7)], year=2011)
    s = summarize(net)
    assert (s.nodes, s.isolates, s.total_edges, s.total_weight, s.max_weight) == (4, 1, 3, 11, 7)
    assert s.components == 2
    assert s.closed_triads == 1
    assert s.density == pytest.approx(0.5)
    table = summary_table([net])
    assert list(table.columns) == ["2011"]
    assert table.loc["closed_triads", "2011"] == 1


def test_democracy_summary_sorts_and_flags():
    df = pd.DataFrame({"node": ["a", "a", "b", "b", "c"], "year": [2000, 2001, 2000, 2001, 2001],
                       "libdem": [0.2, 0.4, 0.9, 0.7, 0.5]})
    out = democracy_summary(AttributePanel(df, required=("libdem",)))
    assert out.table["node"].tolist() == ["b", "c", "a"]
    assert out.table.set_index("node").loc["a", "diff"] == pytest.approx(0.2)
    assert out.flagged == ("c",)
