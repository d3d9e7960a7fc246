"""Undirected valued networks, binary views, covariate containers and node alignment."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

PANEL_COLUMNS = ("libdem", "ln_gdp_pc", "ln_population", "urbanization", "ln_authors", "region")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ValuedNetwork:
    """Symmetric non-negative integer weight matrix over an ordered node list."""

    nodes: tuple
    weights: np.ndarray
    year: int | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.int64, copy=True)
        n = len(self.nodes)
        if w.shape != (n, n):
            raise ValueError(f"weights shape {w.shape} does not match {n} nodes")
        if (w < 0).any():
            raise ValueError("weights must be non-negative")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.diagonal(w).any():
            raise ValueError("weights must have a zero diagonal")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n(self) -> int:
        return len(self.nodes)

    def strength(self, i: int) -> int:
        _check_index(i, self.n)
        return int(self.weights[i].sum())

    def binary(self, threshold: int = 1) -> "BinaryNetwork":
        return binarize(self, threshold)

    def upper(self) -> np.ndarray:
        """Dyad values in row-major upper-triangle order."""
        iu = np.triu_indices(self.n, 1)
        return self.weights[iu]

    def __eq__(self, other):
        if not isinstance(other, ValuedNetwork):
            return NotImplemented
        return (self.nodes == other.nodes and self.year == other.year
                and np.array_equal(self.weights, other.weights))


@dataclass(frozen=True, eq=False)
class BinaryNetwork:
    nodes: tuple
    adjacency: np.ndarray
    year: int | None = None

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=bool, copy=True)
        n = len(self.nodes)
        if a.shape != (n, n):
            raise ValueError(f"adjacency shape {a.shape} does not match {n} nodes")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.diagonal(a).any():
            raise ValueError("adjacency must have a zero diagonal")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "adjacency", _frozen(a))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def degree(self, i: int) -> int:
        _check_index(i, self.n)
        return int(self.adjacency[i].sum())

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)

    def edges(self) -> np.ndarray:
        """(E, 2) array of i < j endpoints."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([i, j])

    def as_valued(self) -> ValuedNetwork:
        return ValuedNetwork(self.nodes, self.adjacency.astype(np.int64), self.year)

    def __eq__(self, other):
        if not isinstance(other, BinaryNetwork):
            return NotImplemented
        return self.nodes == other.nodes and np.array_equal(self.adjacency, other.adjacency)


@dataclass(frozen=True, eq=False)
class EdgeCovariateMatrix:
    nodes: tuple
    values: np.ndarray
    label: str = "edgecov"

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        n = len(self.nodes)
        if v.shape != (n, n):
            raise ValueError(f"covariate shape {v.shape} does not match {n} nodes")
        if not np.isfinite(v).all():
            raise ValueError(f"edge covariate {self.label!r} has non-finite entries")
        if not np.allclose(v, v.T):
            raise ValueError(f"edge covariate {self.label!r} is not symmetric")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "values", _frozen(v))

    def reindex(self, nodes: Sequence) -> "EdgeCovariateMatrix":
        pos = {c: k for k, c in enumerate(self.nodes)}
        missing = [c for c in nodes if c not in pos]
        if missing:
            raise KeyError(f"edge covariate {self.label!r} lacks nodes {missing}")
        idx = np.array([pos[c] for c in nodes], dtype=np.int64)
        return EdgeCovariateMatrix(tuple(nodes), self.values[np.ix_(idx, idx)], self.label)


@dataclass(frozen=True)
class NetworkSeries:
    """Consecutive yearly networks sharing one node ordering."""

    networks: tuple

    def __post_init__(self):
        nets = tuple(self.networks)
        if not nets:
            raise ValueError("empty network series")
        first = nets[0].nodes
        for net in nets[1:]:
            if net.nodes != first:
                raise ValueError("all networks in a series must share the node ordering")
        years = [net.year for net in nets]
        if any(y is None for y in years) or any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError(f"years must be strictly increasing, got {years}")
        object.__setattr__(self, "networks", nets)

    @property
    def nodes(self) -> tuple:
        return self.networks[0].nodes

    @property
    def years(self) -> list[int]:
        return [net.year for net in self.networks]

    def __len__(self):
        return len(self.networks)

    def __iter__(self):
        return iter(self.networks)

    def __getitem__(self, k):
        return self.networks[k]

    def by_year(self, year: int) -> ValuedNetwork:
        for net in self.networks:
            if net.year == year:
                return net
        raise KeyError(year)


@dataclass
class AttributePanel:
    """Per (node, year) covariates.

    ``frame`` has columns ``node``, ``year`` and any subset of
    :data:`PANEL_COLUMNS` (plus extras); ``region`` is categorical,
    everything else numeric.
    """

    frame: pd.DataFrame
    required: tuple = PANEL_COLUMNS
    _index: dict = field(init=False, repr=False, default=None)

    def __post_init__(self):
        df = self.frame.copy()
        if not {"node", "year"} <= set(df.columns):
            raise ValueError("panel needs 'node' and 'year' columns")
        df["node"] = df["node"].astype(str)
        df["year"] = df["year"].astype(int)
        if df.duplicated(["node", "year"]).any():
            raise ValueError("duplicate (node, year) rows in panel")
        if "libdem" in df:
            vals = df["libdem"].dropna()
            if ((vals < 0) | (vals > 1)).any():
                raise ValueError("libdem must lie in [0, 1]")
        self.frame = df.sort_values(["year", "node"]).reset_index(drop=True)

    @property
    def years(self) -> list[int]:
        return sorted(self.frame["year"].unique().tolist())

    @property
    def variables(self) -> list[str]:
        return [c for c in self.frame.columns if c not in ("node", "year")]

    def complete_nodes(self, years: Iterable[int] | None = None,
                       variables: Iterable[str] | None = None) -> set:
        """Nodes with a complete row for every requested year."""
        years = list(self.years if years is None else years)
        variables = list(self.required if variables is None else variables)
        variables = [v for v in variables if v in self.frame.columns]
        df = self.frame[self.frame["year"].isin(years)]
        ok = df.dropna(subset=variables)
        counts = ok.groupby("node")["year"].nunique()
        return set(counts[counts == len(set(years))].index)

    def attribute(self, name: str, year: int, nodes: Sequence) -> np.ndarray:
        df = self.frame[self.frame["year"] == year].set_index("node")
        if name not in df.columns:
            raise KeyError(f"panel has no attribute {name!r}")
        missing = [c for c in nodes if c not in df.index]
        if missing:
            raise KeyError(f"panel lacks {name!r} rows for {missing[:5]} in {year}")
        col = df.loc[list(nodes), name]
        if col.isna().any():
            bad = list(col[col.isna()].index[:5])
            raise ValueError(f"missing {name!r} for {bad} in {year}")
        return col.to_numpy()

    def node_attributes(self, year: int, nodes: Sequence) -> dict:
        return {v: self.attribute(v, year, nodes) for v in self.variables}

    def pooled_levels(self, name: str) -> pd.Series:
        return self.frame[name].dropna().astype(str)


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise IndexError(f"node index {i} out of range for n={n}")


def build_network(n: int, edges: Iterable[tuple], nodes: Sequence | None = None,
                  year: int | None = None) -> ValuedNetwork:
    """Build a valued network from ``(i, j, weight)`` triples; repeats are summed."""
    w = np.zeros((n, n), dtype=np.int64)
    for i, j, weight in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise ValueError(f"self-loop at node {i}")
        if weight < 0:
            raise ValueError(f"negative weight {weight} on ({i}, {j})")
        w[i, j] += weight
        w[j, i] += weight
    if nodes is None:
        nodes = tuple(range(n))
    return ValuedNetwork(tuple(nodes), w, year)


def binarize(net: ValuedNetwork, threshold: int = 1) -> BinaryNetwork:
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    return BinaryNetwork(net.nodes, net.weights >= threshold, net.year)


def degree(net: BinaryNetwork, i: int) -> int:
    return net.degree(i)


def strength(net: ValuedNetwork, i: int) -> int:
    return net.strength(i)


def reindex(net: ValuedNetwork, nodes: Sequence) -> ValuedNetwork:
    """Place ``net`` on a new node list; unknown nodes become isolates, extra nodes are dropped."""
    n = len(nodes)
    pos = {c: k for k, c in enumerate(net.nodes)}
    src = np.array([pos.get(c, -1) for c in nodes], dtype=np.int64)
    w = np.zeros((n, n), dtype=np.int64)
    keep = np.nonzero(src >= 0)[0]
    w[np.ix_(keep, keep)] = net.weights[np.ix_(src[keep], src[keep])]
    return ValuedNetwork(tuple(nodes), w, net.year)


def align_node_sets(networks: Mapping[int, ValuedNetwork] | Sequence[ValuedNetwork],
                    panel: AttributePanel | None, reference_year: int,
                    variables: Iterable[str] | None = None) -> NetworkSeries:
    """Reindex every yearly network onto the reference year's node list.

    Nodes without complete attributes in any analysed year are removed from
    all years; nodes missing from a non-reference year appear as isolates.
    """
    if not isinstance(networks, Mapping):
        networks = {net.year: net for net in networks}
    if reference_year not in networks:
        raise KeyError(f"reference year {reference_year} not among {sorted(networks)}")
    years = sorted(networks)
    keep = set(networks[reference_year].nodes)
    if panel is not None:
        keep &= panel.complete_nodes(years, variables)
    if not keep:
        raise ValueError("node sets do not intersect")
    nodes = tuple(sorted(keep))
    return NetworkSeries(tuple(reindex(networks[y], nodes) for y in years))


def read_adjacency_csv(path, year: int | None = None) -> ValuedNetwork:
    """Adjacency CSV: header of node codes then n rows of n integers."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    nodes = tuple(df.columns)
    w = df.to_numpy().astype(np.int64)
    return ValuedNetwork(nodes, w, year)


def write_adjacency_csv(net: ValuedNetwork | BinaryNetwork, path) -> None:
    mat = net.weights if isinstance(net, ValuedNetwork) else net.adjacency.astype(np.int64)
    pd.DataFrame(mat, columns=list(net.nodes)).to_csv(path, index=False, lineterminator="\n")


def read_edge_list_csv(path, nodes: Sequence | None = None) -> dict[int, ValuedNetwork]:
    """Edge-list CSV with columns ``year,i,j,weight`` (i, j are node codes)."""
    df = pd.read_csv(path, dtype={"i": str, "j": str})
    if nodes is None:
        nodes = sorted(set(df["i"]) | set(df["j"]))
    pos = {c: k for k, c in enumerate(nodes)}
    out = {}
    for year, grp in df.groupby("year", sort=True):
        triples = [(pos[a], pos[b], int(w)) for a, b, w in zip(grp["i"], grp["j"], grp["weight"])]
        out[int(year)] = build_network(len(nodes), triples, nodes, int(year))
    return out


def write_edge_list_csv(series: Iterable[ValuedNetwork], path) -> None:
    rows = []
    for net in series:
        i, j = np.nonzero(np.triu(net.weights, 1))
        rows.extend((net.year, net.nodes[a], net.nodes[b], int(net.weights[a, b])) for a, b in zip(i, j))
    pd.DataFrame(rows, columns=["year", "i", "j", "weight"]).to_csv(path, index=False, lineterminator="\n")
