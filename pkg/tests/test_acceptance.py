"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, and by ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import filecmp
import math
import time
from pathlib import Path

import numpy as np
import pytest

from collabnet.backbone import disparity_alpha, extract_backbone
from collabnet.descriptives import density, possible_triads
from collabnet.estimation import (McmleConfig, exact_mle_small, fit_mcmle, fit_mple, fit_tergm_bootstrap,
                                  vif_diagnostics)
from collabnet.gof import gof_binary
from collabnet.graph import AttributePanel, BinaryNetwork, ValuedNetwork
from collabnet.pipeline import PipelineConfig
from collabnet.sampler import SamplerConfig, batch_means_se, enumerate_exact, sample_binary, sample_valued
from collabnet.terms import (ModelSpec, TermSpec, bind, change_statistic_binary, delta_valued, evaluate)
from collabnet.workflow import run_pipeline

RESULTS: list[str] = []


def record(cid: int, name: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {cid:>2} {name}: {detail}")


def _graph_with_edges(n: int, m: int) -> BinaryNetwork:
    A = np.zeros((n, n), bool)
    iu = np.triu_indices(n, 1)
    A[iu[0][:m], iu[1][:m]] = True
    return BinaryNetwork(tuple(range(n)), A | A.T)


def test_c01_density_arithmetic():
    t0 = time.perf_counter()
    d1 = density(_graph_with_edges(170, 5475))
    d2 = density(_graph_with_edges(170, 10100))
    dt = time.perf_counter() - t0
    ok = abs(d1 - 0.381) <= 5e-4 and abs(d2 - 0.703) <= 5e-4 and dt < 1.0
    record(1, "density arithmetic", ok, f"density {d1:.4f} and {d2:.4f} in {dt:.2f}s")
    assert ok


def test_c02_triad_budget():
    t0 = time.perf_counter()
    value = possible_triads(170)
    dt = time.perf_counter() - t0
    ok = value == 804_440 and dt < 0.1
    record(2, "triad budget", ok, f"possible_triads(170) = {value:,}")
    assert ok


BINARY_TERMS = [TermSpec("edges"), TermSpec("nodecov", "x"), TermSpec("absdiff", "x"),
                TermSpec("nodematch", "g"), TermSpec("nodefactor", "g"), TermSpec("edgecov", "z"),
                TermSpec("gwdegree", decay=0.7), TermSpec("gwesp", decay=0.25), TermSpec("gwesp", decay=1.3),
                TermSpec("memory_lag"), TermSpec("time_trend")]
VALUED_TERMS = [TermSpec("sum"), TermSpec("nonzero"), TermSpec("nodecov", "x"), TermSpec("absdiff", "x"),
                TermSpec("nodematch", "g"), TermSpec("nodefactor", "g"), TermSpec("edgecov", "z"),
                TermSpec("nodesqrtcovar"), TermSpec("transitiveweights"), TermSpec("memory_lag")]


def _covariates(rng, n):
    z = rng.normal(size=(n, n))
    mem = (rng.random((n, n)) < 0.4).astype(float)
    return ({"x": rng.normal(size=n), "g": rng.choice(["a", "b", "c"], n)},
            {"z": (z + z.T) / 2, "memory": np.triu(mem, 1) + np.triu(mem, 1).T, "time": np.full((n, n), 3.0)})


@pytest.mark.filterwarnings("ignore:factor")
def test_c03_change_statistic_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for case in range(1000):
        n = int(rng.integers(3, 13))
        attrs, covs = _covariates(rng, n)
        i, j = sorted(rng.choice(n, 2, replace=False))
        if case % 2 == 0:
            bound = bind(ModelSpec(tuple(BINARY_TERMS)), n, attrs, covs)
            A = np.triu((rng.random((n, n)) < rng.uniform(0.1, 0.9)).astype(np.int64), 1)
            A = A + A.T
            on, off = A.copy(), A.copy()
            on[i, j] = on[j, i] = 1
            off[i, j] = off[j, i] = 0
            diff = np.abs(change_statistic_binary(bound, A, i, j) - (evaluate(bound, on) - evaluate(bound, off)))
        else:
            m = int(rng.integers(1, 6))
            bound = bind(ModelSpec(tuple(VALUED_TERMS), "valued", m), n, attrs, covs)
            Y = np.triu(rng.integers(0, m + 1, (n, n)) * (rng.random((n, n)) < 0.6), 1)
            Y = Y + Y.T
            v = int(rng.integers(0, m + 1))
            after = Y.copy()
            after[i, j] = after[j, i] = v
            diff = np.abs(delta_valued(bound, Y, i, j, v) - (evaluate(bound, after) - evaluate(bound, Y)))
        worst = max(worst, float(diff.max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 30
    record(3, "change-statistic oracle", ok, f"max |incremental - full| = {worst:.2e} over 1000 cases in {dt:.1f}s")
    assert ok


def test_c04_mple_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    n = 40
    A = np.triu((rng.random((n, n)) < 0.3), 1)
    net = BinaryNetwork(tuple(range(n)), A | A.T)
    fit = fit_mple(ModelSpec((TermSpec("edges"),)), net)
    p = density(net)
    err_logit = abs(fit.coefficients[0] - math.log(p / (1 - p)))

    spec = ModelSpec((TermSpec("edges"), TermSpec("nodecov", "x"), TermSpec("absdiff", "x"), TermSpec("edgecov", "z")))
    errs, tried = [], 0
    while len(errs) < 5:
        tried += 1
        x = rng.normal(size=5)
        z = rng.normal(size=(5, 5))
        b = bind(spec, 5, {"x": x}, {"z": (z + z.T) / 2})
        A5 = np.triu((rng.random((5, 5)) < 0.5).astype(np.int64), 1)
        A5 = A5 + A5.T
        exact = exact_mle_small(b, A5)
        if not exact.converged:  # MLE does not exist for this draw
            continue
        mple = fit_mple(spec, BinaryNetwork(tuple(range(5)), A5.astype(bool)), bound=b)
        errs.append(float(np.max(np.abs(mple.coefficients - exact.coefficients))))
    dt = time.perf_counter() - t0
    ok = err_logit <= 1e-6 and max(errs) <= 1e-4 and dt < 30
    record(4, "MPLE correctness", ok, f"|edges - logit(density)| = {err_logit:.1e}; "
                                      f"max |MPLE - exact MLE| = {max(errs):.1e} on 5 networks in {dt:.1f}s")
    assert ok


def test_c05_sampler_calibration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    checks = 0
    x5 = rng.normal(size=5)
    bspec = ModelSpec((TermSpec("edges"), TermSpec("absdiff", "x"), TermSpec("gwesp", decay=0.5),
                       TermSpec("gwdegree", decay=0.5)))
    bb = bind(bspec, 5, {"x": x5})
    x4 = rng.normal(size=4)
    vspec = ModelSpec((TermSpec("sum"), TermSpec("nonzero"), TermSpec("absdiff", "x"),
                       TermSpec("nodesqrtcovar"), TermSpec("transitiveweights")), "valued", 2)
    vb = bind(vspec, 4, {"x": x4})
    for k in range(10):
        theta = rng.uniform(-1, 1, bb.p)
        exact = enumerate_exact(bb, theta)
        batch = sample_binary(bb, theta, SamplerConfig(burn_in=5000, interval=10, sample_count=20000, seed=k))
        z = np.abs(batch.mean - exact.mean) / batch_means_se(batch.stats)
        worst, checks = max(worst, float(z.max())), checks + len(z)
    for k in range(10):
        theta = rng.uniform(-0.8, 0.8, vb.p)
        exact = enumerate_exact(vb, theta)
        batch = sample_valued(vb, theta, SamplerConfig(burn_in=5000, interval=10, sample_count=20000, seed=100 + k))
        z = np.abs(batch.mean - exact.mean) / batch_means_se(batch.stats)
        worst, checks = max(worst, float(z.max())), checks + len(z)
    dt = time.perf_counter() - t0
    ok = worst <= 3.0 and dt < 120
    record(5, "sampler calibration", ok, f"largest deviation {worst:.2f} MC SE over {checks} means in {dt:.1f}s")
    assert ok


VERGM_TRUTH = np.array([-1.0, 0.5, -0.5, 0.02])


@pytest.mark.slow
def test_c06_vergm_recovery():
    t0 = time.perf_counter()
    n = 30
    spec = ModelSpec((TermSpec("sum"), TermSpec("nonzero"), TermSpec("absdiff", "x"), TermSpec("nodesqrtcovar")),
                     "valued", 5)
    hits = []
    for r in range(20):
        x = np.random.default_rng(100 + r).normal(size=n)
        b = bind(spec, n, {"x": x})
        Y = sample_valued(b, VERGM_TRUTH, SamplerConfig(burn_in=200_000, interval=1, sample_count=1,
                                                        seed=r)).final_states[0]
        fit = fit_mcmle(b, Y, McmleConfig(samples=4000, interval=100, burn_in=20_000, seed=r, max_iter=30))
        hits.append(bool(np.all(np.abs(fit.coefficients - VERGM_TRUTH) <= 3 * fit.se)))
    dt = time.perf_counter() - t0
    rate = float(np.mean(hits))
    ok = rate >= 0.9 and dt < 300
    record(6, "VERGM recovery", ok, f"all coefficients within 3 SE in {rate:.0%} of 20 runs in {dt:.0f}s")
    assert ok


TERGM_TRUTH = np.array([-2.0, -0.5, 1.5])


def tergm_experiment(r: int, n: int = 30, periods: int = 6, R: int = 200):
    spec = ModelSpec((TermSpec("edges"), TermSpec("absdiff", "x"), TermSpec("memory_lag")))
    rng = np.random.default_rng(500 + r)
    x = rng.normal(size=n)
    prev = np.triu((rng.random((n, n)) < 0.15).astype(np.int64), 1)
    prev = prev + prev.T
    codes = tuple(str(i) for i in range(n))
    nets = [BinaryNetwork(codes, prev.astype(bool), 2000)]
    for t in range(1, periods):
        b = bind(spec, n, {"x": x}, {"memory": prev.astype(float)})
        prev = sample_binary(b, TERGM_TRUTH, SamplerConfig(burn_in=20 * n * n, interval=1, sample_count=1,
                                                           seed=r * 100 + t)).final_states[0]
        nets.append(BinaryNetwork(codes, prev.astype(bool), 2000 + t))
    import pandas as pd
    panel = AttributePanel(pd.DataFrame({"node": list(codes) * periods,
                                         "year": np.repeat(np.arange(2000, 2000 + periods), n),
                                         "x": np.tile(x, periods)}), required=("x",))
    return fit_tergm_bootstrap(nets, spec, panel, R=R, seed=r)


@pytest.mark.slow
def test_c07_tergm_recovery():
    t0 = time.perf_counter()
    covered, flags_ok = [], True
    for r in range(20):
        res = tergm_experiment(r)
        covered.append((res.ci_low <= TERGM_TRUTH) & (TERGM_TRUTH <= res.ci_high))
        flags_ok &= bool(np.array_equal(res.significant, (res.ci_low > 0) | (res.ci_high < 0)))
    dt = time.perf_counter() - t0
    covered = np.array(covered)
    rate = float(covered.mean())
    per_term = ", ".join(f"{c:.0%}" for c in covered.mean(axis=0))
    ok = rate >= 0.9 and flags_ok and dt < 300
    record(7, "TERGM recovery", ok, f"CI coverage {rate:.0%} (per term {per_term}); flags follow CI rule: "
                                    f"{flags_ok}; {dt:.0f}s")
    assert ok


def _mc_alpha(rng, p: float, k: int, draws: int = 1_000_000) -> float:
    """P(share >= p) when a unit is split uniformly at random over k ties:
    a share is distributed as the smallest of k-1 uniforms."""
    hits = 0
    chunk = 250_000
    for start in range(0, draws, chunk):
        m = min(chunk, draws - start)
        share = rng.random((m, k - 1)).min(axis=1)
        hits += int((share >= p).sum())
    return hits / draws


def test_c08_disparity_filter():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 9))
        w = rng.integers(1, 30, k)
        n = k + 1
        W = np.zeros((n, n), np.int64)
        W[0, 1:] = w
        W[1:, 0] = w
        alpha = disparity_alpha(ValuedNetwork(tuple(range(n)), W))
        e = int(rng.integers(1, n))
        mc = _mc_alpha(rng, w[e - 1] / w.sum(), k)
        worst = max(worst, abs(alpha[0, e] - mc))

    n = 170
    ws = np.triu(np.ceil(rng.pareto(1.2, (n, n)) * 2).astype(np.int64) * (rng.random((n, n)) < 0.4), 1)
    net = ValuedNetwork(tuple(range(n)), ws + ws.T)
    levels = [0.5, 0.25, 0.1, 0.05, 0.01]
    kept = [extract_backbone(net, lv).adjacency for lv in levels]
    monotone = all((kept[a] <= kept[a - 1]).all() for a in range(1, len(kept)))
    total = int((ws > 0).sum())
    removed = 1 - kept[levels.index(0.05)].sum() / 2 / total
    dt = time.perf_counter() - t0
    ok = worst <= 0.005 and monotone and removed > 0.5 and dt < 60
    record(8, "disparity filter", ok, f"max |closed form - MC| = {worst:.4f}; monotone {monotone}; "
                                      f"level 0.05 removes {removed:.0%} of edges; {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_c09_gof_self_consistency():
    t0 = time.perf_counter()
    n = 30
    spec = ModelSpec((TermSpec("edges"), TermSpec("absdiff", "x"), TermSpec("gwesp", decay=0.25)))
    truth = np.array([-2.5, -0.5, 0.5])
    cov = []
    for r in range(20):
        x = np.random.default_rng(900 + r).normal(size=n)
        b = bind(spec, n, {"x": x})
        A = sample_binary(b, truth, SamplerConfig(burn_in=50_000, interval=1, sample_count=1, seed=r)).final_states[0]
        fit = fit_mple(spec, BinaryNetwork(tuple(range(n)), A.astype(bool)), bound=b)
        cov.append(gof_binary(fit, b, A, S=100, seed=r).coverage())
    dt = time.perf_counter() - t0
    mean = float(np.mean(cov))
    ok = mean >= 0.9 and dt < 180
    record(9, "GOF self-consistency", ok, f"mean envelope coverage {mean:.1%} over 20 repeats in {dt:.0f}s")
    assert ok


def test_c10_vif():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    S = 20_000
    indep = vif_diagnostics(rng.normal(size=(S, 4)))["vif"].to_numpy()
    a = rng.normal(size=S)
    b = 0.9 * a + math.sqrt(1 - 0.81) * rng.normal(size=S)
    pair = vif_diagnostics(np.column_stack([a, b]))["vif"].to_numpy()
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.abs(indep - 1) <= 0.1) and np.all(np.abs(pair - 5.26) <= 0.5) and dt < 30)
    record(10, "VIF", ok, f"independent {np.round(indep, 3).tolist()}; rho=0.9 pair {np.round(pair, 2).tolist()}")
    assert ok


@pytest.mark.slow
def test_c11_pipeline_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = PipelineConfig(seed=21)
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(cfg, tmp_path / "b")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    same = [filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in files]
    other = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    dt = time.perf_counter() - t0
    ok = files == other and all(same) and len(files) > 10 and dt < 600
    record(11, "pipeline determinism", ok, f"{sum(same)}/{len(files)} files byte-identical across two runs; {dt:.0f}s")
    assert ok


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
            print(RESULTS[-1], flush=True)
