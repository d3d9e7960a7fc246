"""Command-line interface: ``collabnet <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from .backbone import extract_backbone, trim_report
from .descriptives import democracy_summary, summary_table
from .estimation import bind_network, temporal_model
from .graph import NetworkSeries, read_edge_list_csv, write_edge_list_csv
from .layout import layout_fr
from .pipeline import PipelineConfig
from .report import gof_svg, network_svg
from .sampler import SamplerConfig, sample
from .synthetic import SynthConfig, generate_synthetic
from .terms import ModelSpec
from .workflow import (TERGM_TERMS, VERGM_TERMS, PreparedData, last_transition_gof, prepare_inputs,
                       run_pipeline, tergm_fit, vergm_fit)

log = logging.getLogger("collabnet")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    return cfg


def _out(args) -> Path:
    p = Path(args.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _prepared(args, cfg) -> PreparedData:
    d = Path(args.data)
    rules = d / "imputation.json"
    return prepare_inputs(d / "publications.csv", d / "panel.csv", d / "distance.csv",
                          rules if rules.exists() else None, cfg)


def _series(args, cfg) -> NetworkSeries:
    if getattr(args, "networks", None):
        return NetworkSeries(tuple(read_edge_list_csv(args.networks).values()))
    if getattr(args, "data", None):
        return _prepared(args, cfg).series
    raise SystemExit("need --networks or --data")


def _dump(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(args, cfg):
    out = _out(args)
    synth = generate_synthetic(SynthConfig(n_nodes=args.nodes or cfg.n_nodes, first_year=cfg.first_year,
                                           periods=len(cfg.years)), seed=cfg.seed)
    paths = synth.write(out)
    _dump(replace(cfg, aliases={**synth.aliases, **cfg.aliases}).to_dict(), out / "pipeline.json")
    for flag in synth.flags:
        log.warning(flag)
    print(f"wrote {', '.join(sorted(p.name for p in paths.values()))} and pipeline.json to {out}")


def cmd_ingest(args, cfg):
    out = _out(args)
    data = _prepared(args, cfg)
    write_edge_list_csv(data.series, out / "networks.csv")
    data.panel.frame.to_csv(out / "panel_clean.csv", index=False, lineterminator="\n")
    pd.DataFrame(data.distance.values, columns=list(data.distance.nodes)).to_csv(
        out / "distance_clean.csv", index=False, lineterminator="\n")
    data.rejects.to_csv(out / "rejects.csv", index=False, lineterminator="\n")
    data.audit.to_csv(out / "imputation_audit.csv", index=False, lineterminator="\n")
    print(f"{len(data.series.nodes)} nodes over {data.series.years}; "
          f"{len(data.rejects)} rejected codes; {len(data.audit)} imputed cells")


def cmd_describe(args, cfg):
    out = _out(args)
    series = _series(args, cfg)
    table = summary_table(list(series), threshold=args.threshold)
    table.to_csv(out / "table1_descriptives.csv", lineterminator="\n")
    if args.data:
        dem = democracy_summary(_prepared(args, cfg).panel)
        dem.table.to_csv(out / "fig1_democracy.csv", index=False, lineterminator="\n")
    print(table.to_string())


def cmd_backbone(args, cfg):
    out = _out(args)
    series = _series(args, cfg)
    levels = tuple(args.levels) if args.levels else cfg.trim_levels
    report = pd.concat([trim_report(net, levels) for net in series], ignore_index=True)
    report.to_csv(out / "trim_report.csv", index=False, lineterminator="\n")
    rows = []
    for net in series:
        bb = extract_backbone(net, min(levels))
        rows += [(net.year, bb.nodes[i], bb.nodes[j]) for i, j in bb.edges()]
    pd.DataFrame(rows, columns=["year", "i", "j"]).to_csv(out / "backbone_edges.csv", index=False,
                                                          lineterminator="\n")
    print(report.to_string(index=False))


def cmd_simulate(args, cfg):
    out = _out(args)
    data = _prepared(args, cfg)
    model = ModelSpec.load(args.model)
    theta = np.array([float(x) for x in args.theta.split(",")])
    net = data.series.by_year(args.year or cfg.reference_year)
    bound = bind_network(model, net, data.panel, {"distance": data.distance})
    D = net.n * (net.n - 1) // 2
    batch = sample(bound, theta, SamplerConfig(burn_in=10 * D, interval=max(D // 4, 1),
                                               sample_count=args.samples, seed=cfg.seed, threads=cfg.threads))
    pd.DataFrame(batch.stats, columns=bound.labels).to_csv(out / "simulated_stats.csv", index=False,
                                                           lineterminator="\n")
    print(f"acceptance rate {batch.acceptance_rate:.3f}; means {np.round(batch.mean, 3).tolist()}")


def cmd_fit_tergm(args, cfg):
    out = _out(args)
    if args.reps:
        cfg = replace(cfg, bootstrap_reps=args.reps)
    data = _prepared(args, cfg)
    terms = ModelSpec.load(args.model).terms if args.model else TERGM_TERMS
    _, boot = tergm_fit(data, cfg, terms)
    _dump(boot.as_fit().to_dict(), out / "tergm_fit.json")
    table = pd.DataFrame({"term": boot.labels, "estimate": boot.mean, "point": boot.point_estimate,
                          "ci_low": boot.ci_low, "ci_high": boot.ci_high, "significant": boot.significant})
    table.to_csv(out / "table2_tergm.csv", index=False, lineterminator="\n", float_format="%.10g")
    print(boot.table().to_string(index=False))


def cmd_fit_vergm(args, cfg):
    out = _out(args)
    if args.m:
        cfg = replace(cfg, m=args.m)
    if args.samples:
        cfg = replace(cfg, vergm_samples=args.samples)
    data = _prepared(args, cfg)
    terms = ModelSpec.load(args.model).terms if args.model else VERGM_TERMS
    _, _, fit = vergm_fit(data, cfg, terms, args.year)
    fit.dump(out / "vergm_fit.json")
    print(fit.table().to_string(index=False))
    if not fit.converged:
        log.warning("MC-MLE did not converge; estimates are provisional")


def cmd_gof(args, cfg):
    out = _out(args)
    data = _prepared(args, cfg)
    if args.simulations:
        cfg = replace(cfg, gof_simulations=args.simulations)
    terms = ModelSpec.load(args.model).terms if args.model else TERGM_TERMS
    model = temporal_model(ModelSpec(tuple(terms)))
    if args.fit:
        with open(args.fit) as fh:
            saved = json.load(fh)
        theta = np.array(saved["diagnostics"].get("point_estimate") or saved["estimates"], dtype=float)
    else:
        _, boot = tergm_fit(data, replace(cfg, bootstrap_reps=1), terms)
        theta = boot.point_estimate
    report = last_transition_gof(data, model, theta, cfg)
    report.to_csv(out / "fig4_gof.csv")
    (out / "fig4_gof.svg").write_text(gof_svg(report), encoding="utf-8")
    for fam in report.families:
        print(f"{fam}: {report.coverage(fam):.2%} of bins inside the 90% envelope")


def cmd_layout(args, cfg):
    out = _out(args)
    series = _series(args, cfg)
    net = series.by_year(args.year or series.years[-1])
    b = net.binary()
    lay = layout_fr(b, cfg.seed, args.iterations)
    pd.DataFrame({"node": lay.nodes, "x": lay.xy[:, 0], "y": lay.xy[:, 1]}).to_csv(
        out / f"layout_{net.year}.csv", index=False, lineterminator="\n", float_format="%.10g")
    colors = {}
    if args.data:
        panel = _prepared(args, cfg).panel.frame
        rows = panel[panel["year"] == net.year]
        colors = dict(zip(rows["node"], rows["libdem"]))
    (out / f"layout_{net.year}.svg").write_text(network_svg(b, lay, colors, f"Collaboration {net.year}"),
                                                encoding="utf-8")
    print(f"laid out {len(lay.nodes)} of {net.n} nodes (isolates excluded)")


def cmd_report(args, cfg):
    result = run_pipeline(cfg, _out(args), args.data)
    for notice in result["notices"]:
        print(notice)
    print(f"wrote {len(result['files'])} report files to {result['out_dir']}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline.json with PipelineConfig fields")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out-dir", default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, help="worker threads for sampling and bootstrap")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="collabnet", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    def data_arg(sp, required=True):
        sp.add_argument("--data", required=required,
                        help="directory with publications.csv, panel.csv, distance.csv [, imputation.json]")

    sp = add("synth", cmd_synth, "write a synthetic input fixture")
    sp.add_argument("--nodes", type=int)

    sp = add("ingest", cmd_ingest, "build aligned yearly networks and covariates")
    data_arg(sp)

    sp = add("describe", cmd_describe, "yearly descriptive statistics")
    data_arg(sp, required=False)
    sp.add_argument("--networks", help="edge-list CSV (year,i,j,weight)")
    sp.add_argument("--threshold", type=int, default=1)

    sp = add("backbone", cmd_backbone, "disparity-filter backbones")
    data_arg(sp, required=False)
    sp.add_argument("--networks")
    sp.add_argument("--levels", type=float, nargs="+")

    sp = add("simulate", cmd_simulate, "sample statistics from a model")
    data_arg(sp)
    sp.add_argument("--model", required=True, help="model JSON")
    sp.add_argument("--theta", required=True, help="comma-separated coefficients")
    sp.add_argument("--year", type=int)
    sp.add_argument("--samples", type=int, default=1000)

    sp = add("fit-tergm", cmd_fit_tergm, "pooled temporal MPLE with time-slice bootstrap")
    data_arg(sp)
    sp.add_argument("--model")
    sp.add_argument("--reps", type=int)

    sp = add("fit-vergm", cmd_fit_vergm, "valued model by Monte-Carlo MLE")
    data_arg(sp)
    sp.add_argument("--model")
    sp.add_argument("--year", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--samples", type=int)

    sp = add("gof", cmd_gof, "goodness-of-fit envelopes for the temporal model")
    data_arg(sp)
    sp.add_argument("--model")
    sp.add_argument("--fit", help="tergm_fit.json from fit-tergm")
    sp.add_argument("--simulations", type=int)

    sp = add("layout", cmd_layout, "Fruchterman-Reingold layout and SVG")
    data_arg(sp, required=False)
    sp.add_argument("--networks")
    sp.add_argument("--year", type=int)
    sp.add_argument("--iterations", type=int, default=300)

    sp = add("report", cmd_report, "run everything and render tables and figures")
    data_arg(sp, required=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(args)
    args.func(args, cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
