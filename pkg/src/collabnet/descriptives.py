"""Whole-network descriptive statistics and democracy summaries."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import AttributePanel, BinaryNetwork, ValuedNetwork, binarize


@dataclass(frozen=True)
class NetworkSummary:
    nodes: int
    isolates: int
    total_edges: int
    total_weight: int
    max_weight: int
    components: int
    density: float
    centralization: float
    closed_triads: int

    def as_dict(self) -> dict:
        return asdict(self)


def density(net: BinaryNetwork) -> float:
    n = net.n
    if n < 2:
        raise ValueError("density needs at least 2 nodes")
    return 2.0 * net.edge_count / (n * (n - 1))


def degree_centralization(net: BinaryNetwork) -> float:
    """Freeman degree centralization on the unweighted graph."""
    n = net.n
    if n < 3:
        raise ValueError("centralization needs at least 3 nodes")
    d = net.degrees()
    return float((d.max() - d).sum()) / ((n - 1) * (n - 2))


def possible_triads(n: int) -> int:
    if n < 3:
        raise ValueError("triads need at least 3 nodes")
    return math.comb(n, 3)


def closed_triads(net: BinaryNetwork) -> int:
    """Number of node triples with all three ties present."""
    if net.n < 3:
        raise ValueError("triads need at least 3 nodes")
    a = net.adjacency.astype(np.int64)
    # trace(A^3) / 6 without forming A^3
    return int(((a @ a) * a).sum()) // 6


def components_and_isolates(net: BinaryNetwork) -> tuple[int, int]:
    if net.n < 1:
        raise ValueError("empty node set")
    ncomp, _ = connected_components(csr_matrix(net.adjacency), directed=False)
    isolates = int((net.degrees() == 0).sum())
    return int(ncomp), isolates


def summarize(net: ValuedNetwork, threshold: int = 1) -> NetworkSummary:
    b = binarize(net, threshold)
    comps, iso = components_and_isolates(b)
    n = net.n
    return NetworkSummary(
        nodes=n,
        isolates=iso,
        total_edges=b.edge_count,
        total_weight=int(np.triu(net.weights, 1).sum()),
        max_weight=int(net.weights.max()) if n else 0,
        components=comps,
        density=density(b) if n >= 2 else 0.0,
        centralization=degree_centralization(b) if n >= 3 else 0.0,
        closed_triads=closed_triads(b) if n >= 3 else 0,
    )


def summary_table(networks: Sequence[ValuedNetwork], threshold: int = 1) -> pd.DataFrame:
    """Statistics as rows, years as columns."""
    cols = {}
    for net in networks:
        cols[str(net.year)] = summarize(net, threshold).as_dict()
    df = pd.DataFrame(cols)
    df.index.name = "statistic"
    return df


@dataclass(frozen=True)
class DemocracySummary:
    table: pd.DataFrame  # node, mean, diff, first_year, last_year
    flagged: tuple  # nodes observed in a single year


def democracy_summary(panel: AttributePanel, variable: str = "libdem") -> DemocracySummary:
    """Per-node mean over years and last-minus-first difference, sorted by mean descending."""
    df = panel.frame[["node", "year", variable]].dropna()
    if df["year"].nunique() < 2:
        raise ValueError("democracy summary needs at least two years")
    rows, flagged = [], []
    for node, grp in df.sort_values("year").groupby("node", sort=True):
        vals = grp[variable].to_numpy(dtype=float)
        if len(vals) < 2:
            flagged.append(node)
            diff = float("nan")
        else:
            diff = float(vals[-1] - vals[0])
        rows.append((node, float(vals.mean()), diff, int(grp["year"].iloc[0]), int(grp["year"].iloc[-1])))
    table = pd.DataFrame(rows, columns=["node", "mean", "diff", "first_year", "last_year"])
    table = table.sort_values(["mean", "node"], ascending=[False, True], kind="mergesort").reset_index(drop=True)
    return DemocracySummary(table, tuple(flagged))
