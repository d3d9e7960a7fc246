"""Data preparation: publication ingestion, weight quantization, covariate
imputation and the distance edge covariate."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .graph import AttributePanel, EdgeCovariateMatrix, ValuedNetwork, build_network

log = logging.getLogger(__name__)

RAW_PANEL_COLUMNS = ("libdem", "gdp_pc", "population", "urbanization", "authors", "region")
IMPUTATION_METHODS = ("manual_value", "carry_forward", "variable_mean", "copy_from_node")


@dataclass(frozen=True)
class PublicationRecord:
    year: int
    paper_id: str
    countries: frozenset

    def __post_init__(self):
        object.__setattr__(self, "countries", frozenset(self.countries))
        if not self.countries:
            raise ValueError(f"paper {self.paper_id} lists no country")


@dataclass
class PipelineConfig:
    first_year: int = 2008
    last_year: int = 2013
    reference_year: int | None = None  # default: last_year
    m: int = 5
    distance_transform: str = "log1p"
    trim_levels: tuple = (0.5, 0.25, 0.05)
    seed: int = 0
    n_nodes: int = 60
    bootstrap_reps: int = 200
    vergm_samples: int = 2000
    gof_simulations: int = 100
    threads: int = 1
    aliases: dict = field(default_factory=dict)
    drop_nodes: tuple = ()

    def __post_init__(self):
        if self.last_year < self.first_year:
            raise ValueError("last_year precedes first_year")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.reference_year is None:
            self.reference_year = self.last_year
        self.trim_levels = tuple(self.trim_levels)
        self.drop_nodes = tuple(self.drop_nodes)

    @property
    def years(self) -> list[int]:
        return list(range(self.first_year, self.last_year + 1))

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            return cls(**json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# publications -> networks


def read_publications(path) -> list[PublicationRecord]:
    """CSV with columns year, paper_id, countries (';'-separated codes)."""
    df = pd.read_csv(path, dtype={"paper_id": str, "countries": str}, keep_default_na=False)
    return [PublicationRecord(int(y), pid, frozenset(c.strip() for c in codes.split(";") if c.strip()))
            for y, pid, codes in zip(df["year"], df["paper_id"], df["countries"])]


def write_publications(records: Iterable[PublicationRecord], path) -> None:
    rows = [(r.year, r.paper_id, ";".join(sorted(r.countries))) for r in records]
    pd.DataFrame(rows, columns=["year", "paper_id", "countries"]).to_csv(path, index=False, lineterminator="\n")


@dataclass
class IngestResult:
    networks: dict  # year -> ValuedNetwork over the countries seen that year
    rejects: pd.DataFrame  # year, paper_id, code


def ingest_publications(records: Iterable[PublicationRecord], valid_codes: Iterable[str] | None = None,
                        aliases: Mapping[str, str] | None = None,
                        years: Sequence[int] | None = None) -> IngestResult:
    """Full counting: every pair of countries on a paper gains +1 in that year.

    Unknown codes (not in ``valid_codes`` after alias resolution) are
    reported in ``rejects`` and left out of the paper's country set.
    """
    aliases = dict(aliases or {})
    valid = None if valid_codes is None else set(valid_codes)
    year_set = None if years is None else set(years)
    pairs: dict[int, dict] = {}
    seen: dict[int, set] = {}
    rejects = []
    for rec in records:
        if year_set is not None and rec.year not in year_set:
            continue
        codes = set()
        for raw in rec.countries:
            code = aliases.get(raw, raw)
            if valid is not None and code not in valid:
                rejects.append((rec.year, rec.paper_id, raw))
                continue
            codes.add(code)
        if not codes:
            continue
        seen.setdefault(rec.year, set()).update(codes)
        counts = pairs.setdefault(rec.year, {})
        for a, b in combinations(sorted(codes), 2):
            counts[(a, b)] = counts.get((a, b), 0) + 1
    networks = {}
    for year in sorted(seen):
        nodes = tuple(sorted(seen[year]))
        pos = {c: k for k, c in enumerate(nodes)}
        triples = [(pos[a], pos[b], w) for (a, b), w in sorted(pairs.get(year, {}).items())]
        networks[year] = build_network(len(nodes), triples, nodes, year)
    rej = pd.DataFrame(sorted(rejects), columns=["year", "paper_id", "code"])
    return IngestResult(networks, rej)


# ---------------------------------------------------------------------------
# quantization


def quantize_weights(net: ValuedNetwork, m: int = 5) -> ValuedNetwork:
    """Map raw counts to levels 0..m.

    Zeros stay 0. Nonzero weights go through ln(w + 1) and are cut into m
    equal-frequency bins over the nonzero dyads; equal weights always share a
    level, so with heavy ties some levels may be empty.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    iu = np.triu_indices(net.n, 1)
    w = net.weights[iu]
    nz = w > 0
    levels = np.zeros_like(w)
    if nz.any():
        x = np.log(w[nz] + 1.0)
        if len(np.unique(x)) < m:
            log.warning("only %d distinct nonzero weights for %d levels; some levels stay empty",
                        len(np.unique(x)), m)
        rank = rankdata(x, method="min") - 1  # ties share the lowest rank
        levels[nz] = np.floor(rank * m / nz.sum()).astype(np.int64) + 1
    Q = np.zeros_like(net.weights)
    Q[iu] = levels
    Q.T[iu] = levels
    return ValuedNetwork(net.nodes, Q, net.year)


# ---------------------------------------------------------------------------
# covariates and imputation


@dataclass(frozen=True)
class ImputationRule:
    node: str
    variable: str
    method: str
    years: tuple | None = None  # inclusive (first, last); None = every year
    value: float | str | None = None
    source: str | None = None

    def __post_init__(self):
        if self.method not in IMPUTATION_METHODS:
            raise ValueError(f"unknown imputation method {self.method!r}")
        if self.method == "manual_value" and self.value is None:
            raise ValueError("manual_value needs a value")
        if self.method == "copy_from_node" and not self.source:
            raise ValueError("copy_from_node needs a source node")
        if self.years is not None:
            object.__setattr__(self, "years", tuple(self.years))

    def covers(self, year: int) -> bool:
        return self.years is None or self.years[0] <= year <= self.years[1]

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items() if v is not None}


def load_rules(path) -> list[ImputationRule]:
    with open(path) as fh:
        return [ImputationRule(**r) for r in json.load(fh)]


def dump_rules(rules: Sequence[ImputationRule], path) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in rules], fh, indent=2)
        fh.write("\n")


def read_raw_panel(path) -> pd.DataFrame:
    """Panel CSV: node, year, libdem, gdp_pc, population, urbanization, authors, region.

    Zero author counts are treated as missing.
    """
    return zero_authors_missing(pd.read_csv(path, dtype={"node": str, "region": str}))


def zero_authors_missing(frame: pd.DataFrame) -> pd.DataFrame:
    df = frame.copy()
    if "authors" in df:
        df["authors"] = df["authors"].astype(float)
        df.loc[df["authors"] == 0, "authors"] = np.nan
    return df


class UncoveredGapError(ValueError):
    def __init__(self, gaps):
        self.gaps = gaps
        listing = ", ".join(f"({n}, {v}, {y})" for n, v, y in gaps[:20])
        more = f" and {len(gaps) - 20} more" if len(gaps) > 20 else ""
        super().__init__(f"missing values not covered by any imputation rule: {listing}{more}")


@dataclass
class ImputationResult:
    frame: pd.DataFrame
    audit: pd.DataFrame  # node, variable, year, method, old, new


def apply_imputation(frame: pd.DataFrame, rules: Sequence[ImputationRule],
                     variables: Sequence[str] = RAW_PANEL_COLUMNS) -> ImputationResult:
    """Fill panel gaps in rule order and check nothing required is left missing.

    Only ``manual_value`` may overwrite an observed value; the other methods
    touch missing cells only. Zero author counts count as missing.
    """
    df = zero_authors_missing(frame).sort_values(["node", "year"]).reset_index(drop=True)
    original = df.copy()
    audit = []

    def cells(rule):
        mask = (df["node"] == rule.node) & df["year"].map(rule.covers)
        if rule.variable not in df.columns:
            raise KeyError(f"rule targets unknown variable {rule.variable!r}")
        return df.index[mask]

    for rule in rules:
        idx = cells(rule)
        col = rule.variable
        for k in idx:
            old = df.at[k, col]
            missing = pd.isna(old)
            new = None
            if rule.method == "manual_value":
                new = rule.value
            elif not missing:
                continue
            elif rule.method == "carry_forward":
                prior = df[(df["node"] == rule.node) & (df["year"] < df.at[k, "year"])].sort_values("year")[col].dropna()
                if len(prior):
                    new = prior.iloc[-1]
            elif rule.method == "variable_mean":
                existing = original.loc[original["node"] == rule.node, col].dropna()
                if len(existing):
                    new = float(existing.astype(float).mean())
            elif rule.method == "copy_from_node":
                src = df[(df["node"] == rule.source) & (df["year"] == df.at[k, "year"])][col]
                if len(src) and not pd.isna(src.iloc[0]):
                    new = src.iloc[0]
            if new is None:
                continue
            df.at[k, col] = new
            audit.append((rule.node, col, int(df.at[k, "year"]), rule.method,
                          None if missing else old, new))
    required = [v for v in variables if v in df.columns]
    gaps = [(r["node"], v, int(r["year"])) for _, r in df.iterrows() for v in required if pd.isna(r[v])]
    if gaps:
        raise UncoveredGapError(gaps)
    audit_df = pd.DataFrame(audit, columns=["node", "variable", "year", "method", "old", "new"])
    return ImputationResult(df.sort_values(["year", "node"]).reset_index(drop=True), audit_df)


def derive_panel(frame: pd.DataFrame) -> AttributePanel:
    """Log-transform the raw controls into the modelling panel."""
    out = pd.DataFrame({
        "node": frame["node"].astype(str),
        "year": frame["year"].astype(int),
        "libdem": frame["libdem"].astype(float),
        "ln_gdp_pc": np.log(frame["gdp_pc"].astype(float)),
        "ln_population": np.log(frame["population"].astype(float)),
        "urbanization": frame["urbanization"].astype(float),
        "ln_authors": np.log(frame["authors"].astype(float)),
        "region": frame["region"].astype(str),
    })
    return AttributePanel(out)


def read_distance_matrix(path) -> pd.DataFrame:
    """Square distance matrix CSV with a header row of node codes."""
    df = pd.read_csv(path, dtype=float)
    df.index = list(df.columns)
    return df


def apply_distance_rules(dist: pd.DataFrame, rules: Sequence[ImputationRule]) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Apply ``copy_from_node`` rules whose variable is ``distance``: the target
    row and column become copies of the source's."""
    d = dist.copy()
    audit = []
    for rule in rules:
        if rule.variable != "distance":
            continue
        if rule.method != "copy_from_node":
            raise ValueError("distance rows only support copy_from_node")
        if rule.source not in d.index:
            raise KeyError(f"distance source {rule.source!r} missing")
        if rule.node not in d.index:
            d.loc[rule.node] = np.nan
            d[rule.node] = np.nan
        d.loc[rule.node, :] = d.loc[rule.source, :].to_numpy()
        d.loc[:, rule.node] = d.loc[:, rule.source].to_numpy()
        d.loc[rule.node, rule.node] = 0.0
        audit.append((rule.node, "distance", None, rule.method, None, rule.source))
    return d, pd.DataFrame(audit, columns=["node", "variable", "year", "method", "old", "new"])


DISTANCE_TRANSFORMS = {
    "log1p": np.log1p,
    "raw": lambda x: x,
}


def build_distance_covariate(dist: pd.DataFrame, transform: str = "log1p",
                             nodes: Sequence[str] | None = None, label: str = "distance") -> EdgeCovariateMatrix:
    if transform not in DISTANCE_TRANSFORMS:
        raise ValueError(f"unknown distance transform {transform!r}")
    if nodes is not None:
        missing = [c for c in nodes if c not in dist.index]
        if missing:
            raise KeyError(f"distance matrix lacks {missing}")
        dist = dist.loc[list(nodes), list(nodes)]
    v = dist.to_numpy(dtype=float)
    if (v < 0).any() or not np.isfinite(v).all():
        raise ValueError("distances must be finite and non-negative")
    if not np.allclose(v, v.T):
        raise ValueError("distance matrix is not symmetric")
    v = DISTANCE_TRANSFORMS[transform](v.copy())
    np.fill_diagonal(v, 0.0)
    return EdgeCovariateMatrix(tuple(dist.index), v, label)


def homophily_share(adjacency: np.ndarray, values: np.ndarray, bins: int = 4) -> tuple[float, float]:
    """Share of ties joining nodes in the same quantile bin of ``values``,
    and the share expected if ties ignored the attribute."""
    cuts = np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1])
    g = np.searchsorted(cuts, values, side="right")
    iu = np.triu_indices(len(values), 1)
    same = (g[iu[0]] == g[iu[1]])
    ties = adjacency[iu] > 0
    observed = float(same[ties].mean()) if ties.any() else math.nan
    return observed, float(same.mean())
