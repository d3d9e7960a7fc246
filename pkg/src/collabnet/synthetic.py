"""Synthetic fixtures: a country panel, a distance matrix and a yearly
collaboration series sampled from a temporal tie model, plus the raw
publication/panel files (with gaps and imputation rules) that reproduce it."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import expit

from .graph import AttributePanel, BinaryNetwork, EdgeCovariateMatrix, NetworkSeries, ValuedNetwork, align_node_sets
from .pipeline import (ImputationRule, PublicationRecord, apply_distance_rules, apply_imputation,
                       build_distance_covariate, derive_panel, dump_rules, ingest_publications,
                       write_publications)
from .sampler import SamplerConfig, sample_binary
from .terms import MEMORY_KEY, ModelSpec, TermSpec, bind, change_matrix_binary, dyads

log = logging.getLogger(__name__)

REGIONS = tuple(f"R{k}" for k in range(10))
DANGLING = "XNP"  # in publications and distances, absent from the panel
ALIAS = ("XQA", "N001")  # spelling variant resolved through the alias table
UNKNOWN = "ZZZ"  # never valid; ends up in the rejects report

DEFAULT_TERMS = (
    (TermSpec("nodecov", "libdem"), 0.8),
    (TermSpec("absdiff", "libdem"), -1.0),
    (TermSpec("nodecov", "ln_authors"), 0.25),
    (TermSpec("edgecov", "distance"), -0.15),
    (TermSpec("memory_lag"), 2.0),
)


@dataclass
class SynthConfig:
    n_nodes: int = 60
    first_year: int = 2008
    periods: int = 6
    density_start: float = 0.38
    density_end: float = 0.70
    terms: tuple = DEFAULT_TERMS  # (TermSpec, coefficient) pairs; edges is calibrated
    weight_scale: float = 1.0  # log-scale location of tie weights
    weight_spread: float = 1.2  # log-scale spread; larger means heavier tails
    triangle_rate: float = 0.05  # chance a closed triad carries a three-country paper
    with_gaps: bool = True
    burn_in_sweeps: int = 10

    def __post_init__(self):
        if self.n_nodes < 8:
            raise ValueError("need at least 8 nodes")
        if self.periods < 1:
            raise ValueError("need at least one period")
        for d in (self.density_start, self.density_end):
            if not 0 < d < 1:
                raise ValueError("target densities must lie in (0, 1)")
        self.terms = tuple((t if isinstance(t, TermSpec) else TermSpec(**t), float(c)) for t, c in self.terms)

    @property
    def years(self) -> list[int]:
        return list(range(self.first_year, self.first_year + self.periods))

    @property
    def model(self) -> ModelSpec:
        return ModelSpec((TermSpec("edges"),) + tuple(t for t, _ in self.terms))

    def targets(self) -> np.ndarray:
        return np.linspace(self.density_start, self.density_end, self.periods)


@dataclass
class SyntheticData:
    series: NetworkSeries  # weighted networks on the analysed node set
    panel: AttributePanel  # after imputation and log transforms
    distance: EdgeCovariateMatrix
    binary: list  # true tie networks (BinaryNetwork) per year
    theta: np.ndarray  # (periods, p) coefficients actually used, edges calibrated per year
    labels: list
    publications: list = field(default_factory=list)
    raw_panel: pd.DataFrame | None = None
    raw_distance: pd.DataFrame | None = None
    rules: list = field(default_factory=list)
    aliases: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.series, self.panel, self.distance))

    @property
    def valid_codes(self) -> list[str]:
        return sorted(set(self.raw_distance.index) | {r.node for r in self.rules if r.variable == "distance"})

    def write(self, directory) -> dict:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"publications": d / "publications.csv", "panel": d / "panel.csv",
                 "distance": d / "distance.csv", "rules": d / "imputation.json"}
        write_publications(self.publications, paths["publications"])
        self.raw_panel.to_csv(paths["panel"], index=False, lineterminator="\n")
        self.raw_distance.to_csv(paths["distance"], index=False, lineterminator="\n")
        dump_rules(self.rules, paths["rules"])
        return paths


def calibrate_edges(offset: np.ndarray, target: float) -> float:
    """Edges coefficient giving expected density ``target`` when each dyad's
    tie log-odds is ``edges + offset``."""
    f = lambda a: float(expit(a + offset).mean()) - target
    lo, hi = -60.0, 60.0
    return brentq(f, lo, hi, xtol=1e-12)


def _node_codes(n: int) -> list[str]:
    return [f"N{k:03d}" for k in range(n)]


def _raw_panel(rng, codes, years) -> pd.DataFrame:
    n, T = len(codes), len(years)
    libdem0 = rng.beta(2.0, 2.0, n)
    ln_gdp0 = rng.normal(9.0, 1.2, n)
    ln_pop = rng.normal(16.0, 1.5, n)
    urban0 = rng.uniform(20.0, 90.0, n)
    ln_auth0 = np.maximum(rng.normal(6.0, 2.0, n), 0.5)
    region = rng.integers(0, len(REGIONS), n)
    rows = []
    for t, year in enumerate(years):
        lib = np.clip(libdem0 + rng.normal(0, 0.02, n), 0.0, 1.0)
        rows.append(pd.DataFrame({
            "node": codes, "year": year,
            "libdem": np.round(lib, 4),
            "gdp_pc": np.round(np.exp(ln_gdp0 + 0.02 * t + rng.normal(0, 0.03, n)), 2),
            "population": np.round(np.exp(ln_pop + 0.01 * t)),
            "urbanization": np.round(np.minimum(urban0 + 0.3 * t, 100.0), 2),
            "authors": np.round(np.exp(ln_auth0 + 0.05 * t + rng.normal(0, 0.05, n))) + 1,
            "region": [REGIONS[r] for r in region],
        }))
    return pd.concat(rows, ignore_index=True)


def _punch_gaps(raw: pd.DataFrame, codes, years) -> tuple[pd.DataFrame, list]:
    """Knock out cells the way real sources do and write the rules that repair them."""
    raw = raw.copy()
    rules = []
    if len(years) >= 3:
        a, b = years[1], years[-1]
        raw.loc[(raw["node"] == codes[2]) & raw["year"].between(a, b), "urbanization"] = np.nan
        rules.append(ImputationRule(codes[2], "urbanization", "carry_forward", (a, b)))
    gap_years = years[: max(1, len(years) // 3)]
    raw.loc[(raw["node"] == codes[3]) & raw["year"].isin(gap_years), "gdp_pc"] = np.nan
    if len(gap_years) < len(years):
        rules.append(ImputationRule(codes[3], "gdp_pc", "variable_mean"))
    else:
        rules.append(ImputationRule(codes[3], "gdp_pc", "manual_value", value=5000.0))
    raw.loc[(raw["node"] == codes[4]), "gdp_pc"] = np.nan
    rules.append(ImputationRule(codes[4], "gdp_pc", "manual_value", value=1500.0))
    raw.loc[(raw["node"] == codes[5]) & (raw["year"] == years[0]), "authors"] = 0
    if len(years) > 1:
        rules.append(ImputationRule(codes[5], "authors", "variable_mean"))
    else:
        rules.append(ImputationRule(codes[5], "authors", "manual_value", value=10.0))
    return raw, rules


def _distance_km(rng, codes) -> pd.DataFrame:
    n = len(codes)
    xy = np.column_stack([rng.uniform(0, 20000, n), rng.uniform(0, 10000, n)])
    radius = rng.uniform(0, 800, n)
    d = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(-1))
    d = np.maximum(d - radius[:, None] - radius[None, :], 0.0)
    np.fill_diagonal(d, 0.0)
    return pd.DataFrame(np.round(d, 1), index=codes, columns=codes)


def _weights(rng, A: np.ndarray, ln_authors: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    n = A.shape[0]
    iu = np.triu_indices(n, 1)
    z = ln_authors - ln_authors.mean()
    mu = cfg.weight_scale + 0.35 * (z[iu[0]] + z[iu[1]])
    w = np.maximum(np.round(np.exp(mu + cfg.weight_spread * rng.normal(size=len(mu)))), 1.0).astype(np.int64)
    W = np.zeros((n, n), np.int64)
    W[iu] = w * (A[iu] > 0)
    return W + W.T


def _papers(rng, W: np.ndarray, codes, year: int, cfg: SynthConfig, start: int) -> list[PublicationRecord]:
    """Decompose a weight matrix into papers: some closed triads become
    three-country papers, the rest of each weight becomes bilateral papers,
    and every country gets one domestic paper so it appears in the year."""
    n = W.shape[0]
    R = W.copy()
    recs = []
    k = start

    def add(countries):
        nonlocal k
        recs.append(PublicationRecord(year, f"P{k:07d}", frozenset(countries)))
        k += 1

    A = W > 0
    for i in range(n):
        for j in np.flatnonzero(A[i, i + 1:]) + i + 1:
            for l in np.flatnonzero(A[i, j + 1:] & A[j, j + 1:]) + j + 1:
                if rng.random() < cfg.triangle_rate and min(R[i, j], R[i, l], R[j, l]) >= 1:
                    for a, b in ((i, j), (i, l), (j, l)):
                        R[a, b] -= 1
                        R[b, a] -= 1
                    add((codes[i], codes[j], codes[l]))
    iu = np.triu_indices(n, 1)
    for i, j, w in zip(iu[0], iu[1], R[iu]):
        for _ in range(int(w)):
            add((codes[i], codes[j]))
    for c in codes:
        add((c,))
    return recs


def generate_synthetic(config: SynthConfig = SynthConfig(), seed: int = 0) -> SyntheticData:
    """Draw a full fixture; identical seeds give identical outputs."""
    ss = np.random.SeedSequence(seed)
    rng_attr, rng_net, rng_w, rng_pub = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(4))
    years = config.years
    codes = _node_codes(config.n_nodes)

    raw = _raw_panel(rng_attr, codes, years)
    km = _distance_km(rng_attr, codes + [DANGLING])
    if config.with_gaps:
        raw, rules = _punch_gaps(raw, codes, years)
        # the last country's distance row is missing; a neighbour's row stands in
        src = codes[-2]
        km.loc[codes[-1], :] = km.loc[src, :].to_numpy()
        km.loc[:, codes[-1]] = km.loc[:, src].to_numpy()
        km.loc[codes[-1], codes[-1]] = 0.0
        raw_km = km.drop(index=codes[-1], columns=codes[-1])
        rules.append(ImputationRule(codes[-1], "distance", "copy_from_node", source=src))
    else:
        rules, raw_km = [], km
    panel_rules = [r for r in rules if r.variable != "distance"]
    panel = derive_panel(apply_imputation(raw, panel_rules).frame)
    km_full, _ = apply_distance_rules(raw_km, rules)
    distance = build_distance_covariate(km_full, "log1p", nodes=codes)

    model = config.model
    coefs = np.array([0.0] + [c for _, c in config.terms])
    n, D = config.n_nodes, config.n_nodes * (config.n_nodes - 1) // 2
    targets = config.targets()
    prev = np.zeros((n, n), np.int64)
    binaries, thetas, flags = [], [], []
    pubs: list[PublicationRecord] = []
    for t, year in enumerate(years):
        attrs = panel.node_attributes(year, codes)
        covs = {"distance": distance.values, MEMORY_KEY: prev.astype(float), "time": np.full((n, n), t + 1.0)}
        bound = bind(model, n, attrs, covs)
        X = change_matrix_binary(bound, np.zeros((n, n), np.int64))
        theta = coefs.copy()
        theta[0] = calibrate_edges(X[:, 1:] @ coefs[1:], targets[t])
        cfg = SamplerConfig(burn_in=config.burn_in_sweeps * D, interval=1, sample_count=1,
                            seed=int(rng_net.integers(2**31)))
        A = sample_binary(bound, theta, cfg, init=prev).final_states[0]
        dens = A[np.triu_indices(n, 1)].mean()
        if dens < 0.01 or dens > 0.99:
            flags.append(f"{year}: degenerate density {dens:.3f}")
            log.warning("synthetic %d network is degenerate (density %.3f)", year, dens)
        W = _weights(rng_w, A, attrs["ln_authors"], config)
        pubs += _papers(rng_pub, W, codes, year, config, len(pubs))
        binaries.append(BinaryNetwork(tuple(codes), A.astype(bool), year))
        thetas.append(theta)
        prev = A

    # a few codes that exercise alias resolution, rejection and alignment
    extra = []
    for year in years:
        extra.append(PublicationRecord(year, f"X{year}a", frozenset({ALIAS[0]})))
        extra.append(PublicationRecord(year, f"X{year}b", frozenset({UNKNOWN, codes[1]})))
        extra.append(PublicationRecord(year, f"X{year}c", frozenset({DANGLING, codes[0]})))
    pubs += extra
    aliases = {ALIAS[0]: ALIAS[1]}
    ing = ingest_publications(pubs, valid_codes=list(km.index), aliases=aliases)
    series = align_node_sets(ing.networks, panel, years[-1])
    return SyntheticData(series=series, panel=panel, distance=distance.reindex(series.nodes),
                         binary=binaries, theta=np.array(thetas), labels=list(bound.labels),
                         publications=pubs, raw_panel=raw, raw_distance=raw_km, rules=rules,
                         aliases=aliases, flags=flags)
