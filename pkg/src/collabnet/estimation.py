"""Parameter estimation for binary, temporal and valued ERGMs.

* :func:`fit_mple` - maximum pseudolikelihood (logistic regression on change statistics).
* :func:`fit_tergm_bootstrap` - pooled MPLE over yearly transitions with a
  time-slice bootstrap for percentile confidence intervals.
* :func:`fit_vergm_mcmle` - Monte-Carlo MLE for binomial-reference valued models.
* :func:`vif_diagnostics` - variance inflation from sampled statistics.
* :func:`exact_mle_small` - exact MLE by state-space enumeration (test oracle).
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import stats as sps
from scipy.optimize import linprog
from scipy.special import expit, logsumexp

from .graph import AttributePanel, BinaryNetwork, EdgeCovariateMatrix, NetworkSeries, ValuedNetwork, binarize
from .sampler import (SampleBatch, SamplerConfig, enumerate_states, exact_moments, log_binom_coef,
                      sample)
from .terms import (MEMORY_KEY, TIME_KEY, BoundModel, ModelSpec, TermSpec, bind, change_matrix_binary,
                    change_table_valued, evaluate)

log = logging.getLogger(__name__)


class DegeneracyError(RuntimeError):
    """The observed statistics fall outside what the model can generate near the current estimate."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


@dataclass
class FitResult:
    labels: list
    coefficients: np.ndarray
    se: np.ndarray | None = None
    p_values: np.ndarray | None = None
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None
    converged: bool = True
    iterations: int = 0
    method: str = "mple"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        p = len(self.labels)
        for name in ("coefficients", "se", "p_values", "ci_low", "ci_high"):
            val = getattr(self, name)
            if val is not None and len(val) != p:
                raise ValueError(f"{name} has length {len(val)}, expected {p}")
        if self.ci_low is not None and (np.asarray(self.ci_low) > np.asarray(self.ci_high)).any():
            raise ValueError("confidence intervals must satisfy low <= high")

    @property
    def theta(self) -> np.ndarray:
        return self.coefficients

    def stars(self) -> list[str]:
        if self.p_values is None:
            return [""] * len(self.labels)
        return [significance_stars(p) for p in self.p_values]

    def table(self, digits: int = 3) -> pd.DataFrame:
        rows = []
        for k, label in enumerate(self.labels):
            est = f"{self.coefficients[k]:.{digits}f}"
            if self.se is not None:
                cell = f"{est}{self.stars()[k]} ({self.se[k]:.{digits}f})"
            elif self.ci_low is not None:
                cell = f"{est} [{self.ci_low[k]:.{digits}f}, {self.ci_high[k]:.{digits}f}]"
            else:
                cell = est
            rows.append((label, cell))
        return pd.DataFrame(rows, columns=["term", "estimate"])

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(x) for x in a]
        return {
            "method": self.method, "labels": list(self.labels),
            "estimates": arr(self.coefficients), "se": arr(self.se), "p_values": arr(self.p_values),
            "ci_low": arr(self.ci_low), "ci_high": arr(self.ci_high),
            "stars": self.stars(), "converged": bool(self.converged), "iterations": int(self.iterations),
            "diagnostics": _jsonable(self.diagnostics),
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def wald_p_values(theta, se) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(np.asarray(theta) / np.asarray(se))
    return np.where(np.isfinite(z), 2 * sps.norm.sf(z), 1.0)


# ---------------------------------------------------------------------------
# covariate plumbing


def model_inputs(panel: AttributePanel | None, year, nodes: Sequence,
                 covariates: Mapping | None = None) -> tuple[dict, dict]:
    """Node attributes for ``year`` and edge covariates reindexed to ``nodes``."""
    node_attrs = panel.node_attributes(year, nodes) if panel is not None else {}
    edge_covs = {}
    for name, cov in (covariates or {}).items():
        if isinstance(cov, EdgeCovariateMatrix):
            edge_covs[name] = cov.reindex(nodes).values
        else:
            edge_covs[name] = np.asarray(cov, dtype=float)
    return node_attrs, edge_covs


def factor_pool(model: ModelSpec, panel: AttributePanel | None) -> dict:
    if panel is None:
        return {}
    return {t.attribute: panel.pooled_levels(t.attribute).tolist()
            for t in model.terms if t.kind == "nodefactor"}


def bind_network(model: ModelSpec, net, panel=None, covariates=None, extra_covs=None) -> BoundModel:
    node_attrs, edge_covs = model_inputs(panel, net.year, net.nodes, covariates)
    edge_covs.update(extra_covs or {})
    return bind(model, net.n, node_attrs, edge_covs, factor_pool(model, panel))


# ---------------------------------------------------------------------------
# logistic pseudolikelihood


@dataclass
class _NewtonResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    hessian: np.ndarray
    loglik: float
    ridge: bool
    grad_norm: float


def _logistic_loglik(X, y, w, theta):
    eta = X @ theta
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def logistic_newton(X, y, w=None, theta0=None, tol=1e-8, max_iter=100, strict=False) -> _NewtonResult:
    """Newton-Raphson with step halving for weighted logistic regression.

    A singular Hessian gets a small ridge (flagged) unless ``strict``, in
    which case ``LinAlgError`` is raised.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    p = X.shape[1]
    theta = np.zeros(p) if theta0 is None else np.array(theta0, dtype=float)
    ridge = False
    ll = _logistic_loglik(X, y, w, theta)
    converged = False
    it = 0
    H = np.eye(p)
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        mu = expit(X @ theta)
        grad = X.T @ (w * (y - mu))
        H = (X * (w * mu * (1 - mu))[:, None]).T @ X
        gnorm = float(np.max(np.abs(grad))) if p else 0.0
        if gnorm < tol:
            converged = True
            break
        try:
            if np.linalg.cond(H) > 1e14:
                raise np.linalg.LinAlgError("singular Hessian")
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            if strict:
                raise
            ridge = True
            step = np.linalg.solve(H + 1e-6 * max(1.0, np.trace(H) / p) * np.eye(p), grad)
        t = 1.0
        while True:
            cand = theta + t * step
            ll_new = _logistic_loglik(X, y, w, cand)
            if ll_new >= ll - 1e-12 or t < 1e-10:
                break
            t *= 0.5
        theta, ll = cand, ll_new
    return _NewtonResult(theta, converged, it, H, ll, ridge, gnorm)


def separation_direction(X, y, w=None, tol=1e-7) -> np.ndarray | None:
    """A direction d with (2y-1) x.d >= 0 on every row and > 0 on some, if one exists."""
    X = np.asarray(X, dtype=float)
    keep = np.ones(len(y), bool) if w is None else np.asarray(w) > 0
    Z = (2 * np.asarray(y, dtype=float)[keep] - 1)[:, None] * X[keep]
    return _nonnegative_direction(Z, tol)


def _nonnegative_direction(Z, tol=1e-7) -> np.ndarray | None:
    """Maximize sum(Z d) subject to Z d >= 0 and |d| <= 1; return d if the optimum is positive."""
    Z = np.unique(np.round(Z, 12), axis=0)
    p = Z.shape[1]
    res = linprog(-Z.sum(axis=0), A_ub=-Z, b_ub=np.zeros(len(Z)), bounds=[(-1, 1)] * p, method="highs")
    if res.status == 0 and -res.fun > tol * max(1.0, np.abs(Z).max()):
        return res.x
    return None


def _mple_from_design(X, y, labels, w=None, theta0=None, method="mple", check_separation=True) -> FitResult:
    nr = logistic_newton(X, y, w, theta0)
    diag = {"grad_norm": nr.grad_norm, "ridge": nr.ridge, "loglik": nr.loglik}
    converged = nr.converged
    if check_separation and (not converged or np.max(np.abs(nr.theta), initial=0) > 10):
        d = separation_direction(X, y, w)
        if d is not None:
            converged = False
            diag["separation"] = True
            diag["separation_direction"] = d
            log.warning("perfect or quasi-complete separation; MPLE does not exist")
    if nr.ridge:
        diag["singular_hessian"] = True
    try:
        cov = np.linalg.inv(nr.hessian)
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(len(labels), np.inf)
    return FitResult(list(labels), nr.theta, se=se, p_values=wald_p_values(nr.theta, se),
                     converged=converged, iterations=nr.iterations, method=method, diagnostics=diag)


def _to_binary(net) -> BinaryNetwork:
    if isinstance(net, BinaryNetwork):
        return net
    if isinstance(net, ValuedNetwork):
        return binarize(net, 1)
    raise TypeError(f"expected a network, got {type(net).__name__}")


def fit_mple(model: ModelSpec, net, panel: AttributePanel | None = None,
             covariates: Mapping | None = None, bound: BoundModel | None = None) -> FitResult:
    """Maximum pseudolikelihood estimate for a binary ERGM.

    Converges when the gradient sup-norm drops below 1e-8 (at most 100 Newton
    steps). Separation leaves ``converged`` False with a diagnostic.
    """
    if model.mode != "binary":
        raise ValueError("fit_mple needs a binary model; use fit_vergm_mcmle for valued models")
    b = _to_binary(net)
    bound = bound or bind_network(model, b, panel, covariates)
    A = b.adjacency.astype(np.int64)
    X = change_matrix_binary(bound, A)
    y = A[np.triu_indices(b.n, 1)]
    return _mple_from_design(X, y, bound.labels)


# ---------------------------------------------------------------------------
# temporal ERGM with time-slice bootstrap


@dataclass
class BootstrapResult:
    labels: list
    point_estimate: np.ndarray  # pooled MPLE over all transitions
    replicates: np.ndarray  # (R_kept, p)
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    significant: np.ndarray
    dropped: int = 0
    separated: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.replicates) < 1:
            raise ValueError("bootstrap produced no usable replicate")

    @property
    def R(self) -> int:
        return len(self.replicates)

    def as_fit(self) -> FitResult:
        """Bootstrap mean with percentile CI, the form reported for temporal models."""
        return FitResult(list(self.labels), self.mean, ci_low=self.ci_low, ci_high=self.ci_high,
                         converged=not self.diagnostics.get("point_separation", False),
                         iterations=int(self.diagnostics.get("iterations", 0)), method="tergm-bootstrap",
                         diagnostics={"point_estimate": self.point_estimate, "replications": self.R,
                                      "dropped": self.dropped, "separated": self.separated,
                                      "significant": self.significant, **self.diagnostics})

    def table(self, digits: int = 3) -> pd.DataFrame:
        cells = []
        for k, label in enumerate(self.labels):
            star = "*" if self.significant[k] else ""
            cells.append((label, f"{self.mean[k]:.{digits}f} [{self.ci_low[k]:.{digits}f}, "
                                 f"{self.ci_high[k]:.{digits}f}]{star}"))
        return pd.DataFrame(cells, columns=["term", "estimate"])


def ci_excludes_zero(low, high) -> np.ndarray:
    low, high = np.asarray(low), np.asarray(high)
    return (low > 0) | (high < 0)


def binarize_series(series: NetworkSeries, threshold: int | None = 1,
                    level: float | None = None) -> list[BinaryNetwork]:
    """Binary view of each year: weight >= threshold, or a disparity backbone at ``level``."""
    from .backbone import extract_backbone

    if level is not None:
        return [extract_backbone(net, level) for net in series]
    return [binarize(net, threshold or 1) for net in series]


def temporal_model(model: ModelSpec, memory: bool = True, time_trend: bool = True) -> ModelSpec:
    """Append memory-lag and linear time-trend terms unless already present."""
    kinds = {t.kind for t in model.terms}
    extra = []
    if memory and "memory_lag" not in kinds:
        extra.append(TermSpec("memory_lag"))
    if time_trend and "time_trend" not in kinds:
        extra.append(TermSpec("time_trend"))
    return model.with_terms(extra)


def tergm_design(networks: Sequence[BinaryNetwork], model: ModelSpec, panel=None,
                 covariates=None) -> tuple[list, list, list]:
    """Per-transition change-statistic matrices and responses for t = 2..T.

    The memory covariate of slice t is the binary network at t-1; the time
    covariate is the 1-based index of the modelled slice.
    """
    if len(networks) < 2:
        raise ValueError("temporal fitting needs at least two networks")
    pool = factor_pool(model, panel)
    Xs, ys, labels = [], [], None
    for k in range(1, len(networks)):
        net, prev = networks[k], networks[k - 1]
        node_attrs, edge_covs = model_inputs(panel, net.year, net.nodes, covariates)
        edge_covs[MEMORY_KEY] = prev.adjacency.astype(float)
        edge_covs[TIME_KEY] = np.full((net.n, net.n), float(k))
        bound = bind(model, net.n, node_attrs, edge_covs, pool)
        A = net.adjacency.astype(np.int64)
        Xs.append(change_matrix_binary(bound, A))
        ys.append(A[np.triu_indices(net.n, 1)].astype(float))
        labels = bound.labels
    return Xs, ys, labels


def fit_tergm_bootstrap(series, model: ModelSpec, panel: AttributePanel | None = None,
                        covariates: Mapping | None = None, R: int = 1500, seed: int = 0,
                        threshold: int | None = 1, level: float | None = None,
                        ci: float = 0.95, threads: int = 1) -> BootstrapResult:
    """Pooled MPLE over yearly transitions with percentile bootstrap over time slices.

    ``series`` is a :class:`NetworkSeries` (binarized with ``threshold`` or a
    disparity backbone at ``level``) or a list of :class:`BinaryNetwork`.
    """
    if R < 1:
        raise ValueError("need at least one bootstrap replication")
    if isinstance(series, NetworkSeries):
        networks = binarize_series(series, threshold, level)
    else:
        networks = [_to_binary(net) for net in series]
    Xs, ys, labels = tergm_design(networks, model, panel, covariates)
    X = np.concatenate(Xs)
    y = np.concatenate(ys)
    sizes = [len(v) for v in ys]
    point = _mple_from_design(X, y, labels, method="tergm-mple")
    T = len(Xs)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    draws = [rng.multinomial(T, np.full(T, 1.0 / T)) for _ in range(R)]

    def refit(counts):
        w = np.repeat(counts.astype(float), sizes)
        try:
            nr = logistic_newton(X, y, w, point.coefficients, strict=True)
        except np.linalg.LinAlgError:
            return None, False
        if not np.isfinite(nr.theta).all():
            return None, False
        sep = not nr.converged or np.max(np.abs(nr.theta), initial=0) > 10
        return nr.theta, sep

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(refit, draws))
    else:
        results = [refit(c) for c in draws]
    reps = np.array([th for th, _ in results if th is not None]).reshape(-1, len(labels))
    dropped = sum(th is None for th, _ in results)
    separated = sum(bool(sep) for th, sep in results if th is not None)
    if dropped:
        log.info("dropped %d degenerate bootstrap replicates", dropped)
    alpha = (1 - ci) / 2
    low = np.percentile(reps, 100 * alpha, axis=0) if len(reps) else np.full(len(labels), np.nan)
    high = np.percentile(reps, 100 * (1 - alpha), axis=0) if len(reps) else np.full(len(labels), np.nan)
    return BootstrapResult(
        labels=list(labels), point_estimate=point.coefficients, replicates=reps,
        mean=reps.mean(axis=0) if len(reps) else np.full(len(labels), np.nan),
        ci_low=low, ci_high=high, significant=ci_excludes_zero(low, high),
        dropped=dropped, separated=separated,
        diagnostics={"transitions": T, "point_converged": point.converged,
                     "point_separation": bool(point.diagnostics.get("separation", False)),
                     "point_se": point.se, "iterations": point.iterations, "ci": ci},
    )


# ---------------------------------------------------------------------------
# valued models


def _valued_pl(theta, table, obs_idx, logc):
    eta = table @ theta + logc[None, :]  # (D, m+1)
    lz = logsumexp(eta, axis=1)
    D = len(obs_idx)
    ll = float(np.sum(eta[np.arange(D), obs_idx] - lz))
    prob = np.exp(eta - lz[:, None])
    mean = np.einsum("dv,dvp->dp", prob, table)
    grad = (table[np.arange(D), obs_idx] - mean).sum(axis=0)
    centered = table - mean[:, None, :]
    H = np.einsum("dv,dvp,dvq->pq", prob, centered, centered)
    return ll, grad, H


def fit_valued_mple(bound: BoundModel, net, tol=1e-8, max_iter=100) -> FitResult:
    """Pseudolikelihood for valued models: each dyad's value given the rest.

    The conditional law of y_ij is proportional to C(m, v) exp(theta . Delta_ij(v)),
    a multinomial logit over 0..m; linear terms reduce it to a binomial GLM.
    """
    Y = np.asarray(getattr(net, "weights", net), dtype=np.int64)
    table = change_table_valued(bound, Y)
    obs = Y[np.triu_indices(bound.n, 1)]
    logc = log_binom_coef(bound.m)
    theta = np.zeros(bound.p)
    ll, grad, H = _valued_pl(theta, table, obs, logc)
    converged = False
    it = 0
    ridge = False
    for it in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        try:
            if np.linalg.cond(H) > 1e14:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            ridge = True
            step = np.linalg.solve(H + 1e-6 * max(1.0, np.trace(H) / bound.p) * np.eye(bound.p), grad)
        t = 1.0
        while True:
            cand = theta + t * step
            ll_new, g_new, H_new = _valued_pl(cand, table, obs, logc)
            if ll_new >= ll - 1e-12 or t < 1e-10:
                break
            t *= 0.5
        theta, ll, grad, H = cand, ll_new, g_new, H_new
    diag = {"ridge": ridge, "loglik": ll}
    if not converged or np.max(np.abs(theta), initial=0) > 10:
        # the pseudolikelihood has no maximizer when some direction never lowers
        # any observed value's score relative to an alternative value
        D = len(obs)
        rows = (table[np.arange(D), obs][:, None, :] - table).reshape(-1, bound.p)
        d = _nonnegative_direction(rows[np.any(rows != 0, axis=1)]) if rows.any() else None
        if d is not None:
            converged = False
            diag["separation"] = True
            diag["separation_direction"] = d
            log.warning("valued pseudolikelihood has no finite maximizer")
    try:
        se = np.sqrt(np.clip(np.diag(np.linalg.inv(H)), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(bound.p, np.inf)
    return FitResult(list(bound.labels), theta, se=se, p_values=wald_p_values(theta, se),
                     converged=converged, iterations=it, method="valued-mple", diagnostics=diag)


@dataclass(frozen=True)
class McmleConfig:
    samples: int = 15000
    interval: int | None = None  # default: number of dyads // 4
    burn_in: int | None = None  # default: 10 * number of dyads
    max_iter: int = 60
    t_tol: float = 0.1
    step_max: float = 0.5
    min_ess: float = 0.1  # fraction of samples
    doublings: int = 4
    seed: int = 0
    chains: int = 1
    threads: int = 1


def _in_hull(Z: np.ndarray, target: np.ndarray) -> bool:
    S = len(Z)
    A_eq = np.vstack([Z.T, np.ones(S)])
    b_eq = np.concatenate([target, [1.0]])
    res = linprog(np.zeros(S), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def _ess(logw: np.ndarray) -> float:
    w = np.exp(logw - logw.max())
    return float(w.sum() ** 2 / (w ** 2).sum())


def _mcmle_step(Z: np.ndarray, obs: np.ndarray, step_max: float, min_ess: float) -> tuple[np.ndarray, dict]:
    """Increment maximizing the importance-sampling log-likelihood ratio.

    Maximizes -log mean_s exp(d . (Z_s - obs)) by damped Newton from the
    log-normal (Fisher scoring) step, within a Euclidean ball of radius
    ``step_max``; the step is then halved until the importance weights keep an
    effective sample size of at least ``min_ess * S``.
    """
    S, p = Z.shape
    Zc = Z - obs
    cov = np.cov(Z, rowvar=False).reshape(p, p)
    try:
        d = np.linalg.solve(cov, obs - Z.mean(axis=0))
    except np.linalg.LinAlgError:
        d = np.linalg.lstsq(cov, obs - Z.mean(axis=0), rcond=None)[0]
    norm = np.linalg.norm(d)
    if norm > step_max:
        d *= step_max / norm

    def f(delta):
        return float(logsumexp(Zc @ delta))

    for _ in range(50):
        lw = Zc @ d
        w = np.exp(lw - lw.max())
        w /= w.sum()
        g = w @ Zc
        if np.max(np.abs(g) / (Z.std(axis=0) + 1e-12)) < 1e-8:
            break
        C = (Zc * w[:, None]).T @ Zc - np.outer(g, g)
        try:
            nstep = -np.linalg.solve(C + 1e-10 * np.eye(p), g)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        f0 = f(d)
        while f(d + t * nstep) > f0 and t > 1e-6:
            t *= 0.5
        cand = d + t * nstep
        if np.linalg.norm(cand) > step_max:
            d = cand * step_max / np.linalg.norm(cand)
            break
        if np.linalg.norm(cand - d) < 1e-12:
            d = cand
            break
        d = cand
    halvings = 0
    while _ess(Z @ d) < min_ess * S and halvings < 30:
        d *= 0.5
        halvings += 1
    return d, {"ess": _ess(Z @ d), "halvings": halvings}


def _t_ratios(Z: np.ndarray, obs: np.ndarray) -> np.ndarray:
    mu = Z.mean(axis=0)
    sd = Z.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (mu - obs) / sd
    return np.where(sd > 0, t, np.where(np.isclose(mu, obs), 0.0, np.inf))


def fit_mcmle(bound: BoundModel, net, config: McmleConfig = McmleConfig(),
              theta0=None) -> FitResult:
    """Monte-Carlo MLE (Geyer-Thompson iterations) for binary or valued models.

    Stops when every statistic's t-ratio (sample mean minus observed, over
    sample sd) is below ``t_tol`` in absolute value. Standard errors come
    from the inverse sample covariance of the statistics at the estimate.
    """
    Y = np.asarray(getattr(net, "weights", getattr(net, "adjacency", net)), dtype=np.int64)
    obs = evaluate(bound, Y)
    D = bound.n * (bound.n - 1) // 2
    interval = config.interval or max(1, D // 4)
    burn_in = config.burn_in if config.burn_in is not None else 10 * D
    if theta0 is None:
        init_fit = fit_valued_mple(bound, Y) if bound.mode == "valued" else _mple_from_design(
            change_matrix_binary(bound, Y), Y[np.triu_indices(bound.n, 1)], bound.labels, check_separation=False)
        theta = init_fit.coefficients.copy()
    else:
        theta = np.asarray(theta0, dtype=float).copy()
    seeds = np.random.SeedSequence(config.seed).generate_state(config.max_iter * (config.doublings + 1) + 1)
    state = [Y.copy() for _ in range(config.chains)]
    history = []
    S = config.samples
    converged = False
    total_it = 0
    batch = None
    t = np.full(bound.p, np.inf)
    for doubling in range(config.doublings + 1):
        for it in range(config.max_iter):
            scfg = SamplerConfig(burn_in=burn_in, interval=interval, sample_count=S,
                                 seed=int(seeds[total_it]), chains=config.chains, threads=config.threads)
            batch = sample(bound, theta, scfg, init=state)
            state = batch.final_states
            total_it += 1
            Z = batch.stats
            t = _t_ratios(Z, obs)
            in_range = bool(((Z.min(axis=0) <= obs) & (obs <= Z.max(axis=0))).all())
            history.append({"iteration": total_it, "theta": theta.copy(), "t": t.copy(),
                            "samples": S, "in_range": in_range})
            if not np.isfinite(Z.std(axis=0)).all() or (Z.std(axis=0) == 0).any():
                const = [bound.labels[k] for k in np.nonzero(Z.std(axis=0) == 0)[0]]
                fit = _mcmle_result(bound, theta, Z, t, False, total_it, history, batch)
                raise DegeneracyError(f"sampled statistics {const} are constant in the sample; the model is degenerate here", fit)
            if np.all(np.abs(t) < config.t_tol):
                converged = True
                break
            step, info = _mcmle_step(Z, obs, config.step_max, config.min_ess)
            history[-1].update(info)
            theta = theta + step
        if converged:
            break
        S *= 2
        log.info("MC-MLE not converged; doubling sample size to %d", S)
    fit = _mcmle_result(bound, theta, batch.stats, t, converged, total_it, history, batch)
    if not converged and not _in_hull(batch.stats, obs):
        raise DegeneracyError("observed statistics lie outside the convex hull of sampled statistics", fit)
    return fit


def _mcmle_result(bound, theta, Z, t, converged, iterations, history, batch) -> FitResult:
    cov = np.cov(Z, rowvar=False).reshape(bound.p, bound.p)
    try:
        inv = np.linalg.inv(cov)
        se = np.sqrt(np.clip(np.diag(inv), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(bound.p, np.inf)
    return FitResult(list(bound.labels), theta.copy(), se=se, p_values=wald_p_values(theta, se),
                     converged=converged, iterations=iterations, method="mcmle",
                     diagnostics={"t_ratios": t, "acceptance_rate": batch.acceptance_rate,
                                  "final_samples": len(Z), "history": history,
                                  "sample_mean": Z.mean(axis=0), "sample_cov": cov})


def fit_vergm_mcmle(model: ModelSpec, net: ValuedNetwork, m: int | None = None,
                    config: McmleConfig = McmleConfig(), seed: int | None = None,
                    panel: AttributePanel | None = None, covariates: Mapping | None = None,
                    bound: BoundModel | None = None) -> FitResult:
    """Valued ERGM with binomial reference on {0..m} counts, fitted by MC-MLE."""
    if model.mode != "valued":
        raise ValueError("fit_vergm_mcmle needs a valued model")
    if m is not None and m != model.m:
        model = ModelSpec(model.terms, "valued", m)
    W = np.asarray(net.weights if hasattr(net, "weights") else net)
    if W.min() < 0 or W.max() > model.m:
        raise ValueError(f"weights must lie in 0..{model.m}; quantize first")
    if seed is not None:
        config = replace(config, seed=seed)
    if bound is None:
        bound = bind_network(model, net, panel, covariates)
    return fit_mcmle(bound, W, config)


# ---------------------------------------------------------------------------
# diagnostics and exact oracle


def vif_diagnostics(samples: SampleBatch | np.ndarray, labels: Sequence | None = None,
                    tol: float = 1e-10) -> pd.DataFrame:
    """VIF_k = 1 / (1 - R^2_k) from regressing statistic k on the others.

    Equals the k-th diagonal of the inverse correlation matrix when that
    exists; exact linear dependence gives ``inf``.
    """
    Z = samples.stats if isinstance(samples, SampleBatch) else np.asarray(samples, dtype=float)
    if labels is None:
        labels = getattr(samples, "labels", None) or [f"stat{k}" for k in range(Z.shape[1])]
    S, p = Z.shape
    if S <= p:
        raise ValueError(f"need more samples ({S}) than statistics ({p})")
    sd = Z.std(axis=0)
    Zs = np.zeros_like(Z)
    ok = sd > 0
    Zs[:, ok] = (Z[:, ok] - Z[:, ok].mean(axis=0)) / sd[ok]
    out = np.empty(p)
    singular = np.zeros(p, bool)
    for k in range(p):
        if not ok[k]:
            out[k], singular[k] = np.inf, True
            continue
        others = [j for j in range(p) if j != k and ok[j]]
        if not others:
            out[k] = 1.0
            continue
        coef, *_ = np.linalg.lstsq(Zs[:, others], Zs[:, k], rcond=None)
        resid = Zs[:, k] - Zs[:, others] @ coef
        one_minus_r2 = float(resid @ resid) / float(Zs[:, k] @ Zs[:, k])
        if one_minus_r2 < tol:
            out[k], singular[k] = np.inf, True
        else:
            out[k] = 1.0 / one_minus_r2
    return pd.DataFrame({"term": list(labels), "vif": out, "singular": singular})


def exact_mle_small(bound: BoundModel, net, tol=1e-10, max_iter=200, bound_theta=30.0) -> FitResult:
    """Exact MLE by Newton on the enumerated log-likelihood (binary n <= 6 or small valued spaces)."""
    Y = np.asarray(getattr(net, "weights", getattr(net, "adjacency", net)), dtype=np.int64)
    space = enumerate_states(bound)
    obs = evaluate(bound, Y)
    theta = np.zeros(bound.p)
    converged = False
    it = 0
    mom = exact_moments(space, theta)
    for it in range(1, max_iter + 1):
        grad = obs - mom.mean
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        try:
            step = np.linalg.solve(mom.cov, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(mom.cov, grad, rcond=None)[0]
        ll0 = theta @ obs - mom.log_z
        t = 1.0
        while True:
            cand = theta + t * step
            m2 = exact_moments(space, cand)
            if cand @ obs - m2.log_z >= ll0 - 1e-12 or t < 1e-10:
                break
            t *= 0.5
        theta, mom = cand, m2
        if np.max(np.abs(theta)) > bound_theta:
            break
    # the MLE exists iff the observed statistic lies in the relative interior of the support's hull
    boundary = _nonnegative_direction(obs[None, :] - space.stats) is not None
    divergent = boundary or not converged or np.max(np.abs(theta)) > bound_theta
    try:
        se = np.sqrt(np.clip(np.diag(np.linalg.inv(mom.cov)), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(bound.p, np.inf)
    return FitResult(list(bound.labels), theta, se=se, p_values=wald_p_values(theta, se),
                     converged=not divergent, iterations=it, method="exact-mle",
                     diagnostics={"divergent": divergent, "boundary": boundary, "log_z": mom.log_z})
