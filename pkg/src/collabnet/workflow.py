"""End-to-end runs: raw files -> aligned series -> fits -> report."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .backbone import extract_backbone, trim_report
from .estimation import (DegeneracyError, McmleConfig, bind_network, fit_tergm_bootstrap,
                         fit_vergm_mcmle, temporal_model, vif_diagnostics)
from .gof import gof_binary
from .graph import AttributePanel, EdgeCovariateMatrix, NetworkSeries, align_node_sets, write_edge_list_csv
from .pipeline import (PipelineConfig, apply_distance_rules, apply_imputation, build_distance_covariate,
                       derive_panel, ingest_publications, load_rules, quantize_weights, read_distance_matrix,
                       read_publications, read_raw_panel)
from .report import ReportInputs, render_report
from .sampler import SamplerConfig, sample
from .synthetic import SynthConfig, generate_synthetic
from .terms import MEMORY_KEY, TIME_KEY, ModelSpec, TermSpec

log = logging.getLogger(__name__)

TERGM_TERMS = (
    TermSpec("edges"),
    TermSpec("nodecov", "libdem"),
    TermSpec("absdiff", "libdem"),
    TermSpec("nodecov", "ln_authors"),
    TermSpec("edgecov", "distance"),
)
VERGM_TERMS = (
    TermSpec("sum"),
    TermSpec("nonzero"),
    TermSpec("nodecov", "libdem"),
    TermSpec("absdiff", "libdem"),
)


@dataclass
class PreparedData:
    series: NetworkSeries
    panel: AttributePanel
    distance: EdgeCovariateMatrix
    rejects: pd.DataFrame
    audit: pd.DataFrame


def prepare_inputs(publications, panel, distance, rules, config: PipelineConfig) -> PreparedData:
    """Read the four raw inputs and produce the aligned series with covariates."""
    rule_list = load_rules(rules) if rules else []
    km = read_distance_matrix(distance)
    km, dist_audit = apply_distance_rules(km, rule_list)
    valid = set(km.index)
    ing = ingest_publications(read_publications(publications), valid_codes=valid,
                              aliases=config.aliases, years=config.years)
    if ing.rejects.shape[0]:
        log.warning("%d country codes rejected", ing.rejects.shape[0])
    raw = read_raw_panel(panel)
    raw = raw[~raw["node"].isin(config.drop_nodes) & raw["year"].isin(config.years)]
    imputed = apply_imputation(raw, [r for r in rule_list if r.variable != "distance"])
    attr = derive_panel(imputed.frame)
    nets = {y: net for y, net in ing.networks.items() if net.nodes}
    missing = [y for y in config.years if y not in nets]
    if missing:
        raise ValueError(f"no publications for years {missing}")
    series = align_node_sets(nets, attr, config.reference_year)
    cov = build_distance_covariate(km, config.distance_transform, nodes=series.nodes)
    audit = pd.concat([imputed.audit, dist_audit], ignore_index=True) if len(dist_audit) else imputed.audit
    return PreparedData(series, attr, cov, ing.rejects, audit)


def tergm_fit(data: PreparedData, config: PipelineConfig, terms=TERGM_TERMS):
    model = temporal_model(ModelSpec(tuple(terms)))
    return model, fit_tergm_bootstrap(data.series, model, data.panel, {"distance": data.distance},
                                      R=config.bootstrap_reps, seed=config.seed, threads=config.threads)


def vergm_fit(data: PreparedData, config: PipelineConfig, terms=VERGM_TERMS, year: int | None = None):
    year = config.reference_year if year is None else year
    net = quantize_weights(data.series.by_year(year), config.m)
    model = ModelSpec(tuple(terms), "valued", config.m)
    bound = bind_network(model, net, data.panel, {"distance": data.distance})
    cfg = McmleConfig(samples=config.vergm_samples, seed=config.seed, threads=config.threads)
    fit = fit_vergm_mcmle(model, net, config=cfg, bound=bound)
    return bound, net, fit


def last_transition_gof(data: PreparedData, model: ModelSpec, theta, config: PipelineConfig):
    """Envelopes for the final year, conditioning on the previous year's ties."""
    nets = [net.binary() for net in data.series]
    last, prev = nets[-1], nets[-2]
    extra = {MEMORY_KEY: prev.adjacency.astype(float),
             TIME_KEY: np.full((last.n, last.n), float(len(nets) - 1))}
    bound = bind_network(model, last, data.panel, {"distance": data.distance}, extra)
    return gof_binary(theta, bound, last, S=config.gof_simulations, seed=config.seed)


def run_pipeline(config: PipelineConfig, out_dir, data_dir=None) -> dict:
    """Run every stage and write all artifacts under ``out_dir``.

    Without ``data_dir`` a synthetic fixture is generated first (seeded by
    ``config.seed``) and written to ``out_dir/data``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if data_dir is None:
        synth = generate_synthetic(SynthConfig(n_nodes=config.n_nodes, first_year=config.first_year,
                                               periods=len(config.years)), seed=config.seed)
        paths = synth.write(out / "data")
        config = replace(config, aliases={**synth.aliases, **config.aliases})
    else:
        d = Path(data_dir)
        paths = {"publications": d / "publications.csv", "panel": d / "panel.csv",
                 "distance": d / "distance.csv", "rules": d / "imputation.json"}
        if not paths["rules"].exists():
            paths["rules"] = None
    with open(out / "pipeline.json", "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    data = prepare_inputs(paths["publications"], paths["panel"], paths["distance"], paths["rules"], config)
    data.rejects.to_csv(out / "rejects.csv", index=False, lineterminator="\n")
    data.audit.to_csv(out / "imputation_audit.csv", index=False, lineterminator="\n")
    write_edge_list_csv(data.series, out / "networks.csv")

    trims, backbones = [], {}
    for net in data.series:
        trims.append(trim_report(net, config.trim_levels))
        backbones[net.year] = extract_backbone(net, min(config.trim_levels))
    trim = pd.concat(trims, ignore_index=True)

    model, boot = tergm_fit(data, config)
    with open(out / "tergm_fit.json", "w") as fh:
        json.dump(boot.as_fit().to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    vfit = vif = None
    try:
        bound, qnet, vfit = vergm_fit(data, config)
        vfit.dump(out / "vergm_fit.json")
        draws = sample(bound, vfit.coefficients, SamplerConfig(
            burn_in=10 * qnet.n ** 2, interval=max(qnet.n ** 2 // 8, 1), sample_count=500, seed=config.seed))
        vif = vif_diagnostics(draws)
    except DegeneracyError as err:
        log.warning("valued model not estimable: %s", err)

    gof = last_transition_gof(data, model, boot.point_estimate, config)
    result = render_report(ReportInputs(series=data.series, panel=data.panel, backbones=backbones, trim=trim,
                                        tergm=boot, vergm=vfit, gof=gof, vif=vif,
                                        layout_seed=config.seed), out)
    return {"out_dir": str(out), "files": sorted(result.files), "notices": result.notices,
            "nodes": len(data.series.nodes), "years": data.series.years}
