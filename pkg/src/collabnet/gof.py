"""Goodness of fit: observed degree / edgewise-shared-partner / geodesic distributions
against quantile envelopes from networks simulated at the fitted parameters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .estimation import FitResult
from .sampler import SamplerConfig, sample_binary
from .terms import BoundModel

FAMILIES = ("degree", "esp", "distance")
QUANTILES = (0.05, 0.5, 0.95)


class UnsupportedModeError(ValueError):
    pass


def degree_histogram(A: np.ndarray) -> np.ndarray:
    """Counts of nodes with degree 0..n-1."""
    n = A.shape[0]
    return np.bincount(A.sum(axis=1).astype(np.int64), minlength=n)[:n]


def esp_histogram(A: np.ndarray) -> np.ndarray:
    """Counts of edges with 0..n-2 shared partners."""
    n = A.shape[0]
    A = A.astype(np.int64)
    iu = np.triu_indices(n, 1)
    present = A[iu] == 1
    sp = (A @ A)[iu][present]
    return np.bincount(sp, minlength=max(n - 1, 1))[: max(n - 1, 1)]


def geodesic_histogram(A: np.ndarray) -> np.ndarray:
    """Counts of dyads at distance 1..n-1, with unreachable dyads in the last bin."""
    n = A.shape[0]
    dist = shortest_path(csr_matrix(A.astype(np.int8)), method="D", unweighted=True, directed=False)
    d = dist[np.triu_indices(n, 1)]
    finite = np.isfinite(d)
    out = np.zeros(n, dtype=np.int64)  # bins 1..n-1 at 0..n-2, unreachable at n-1
    if finite.any():
        out[: n - 1] = np.bincount(d[finite].astype(np.int64) - 1, minlength=n - 1)[: n - 1]
    out[n - 1] = int((~finite).sum())
    return out


def auxiliary_statistics(net) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = np.asarray(getattr(net, "adjacency", net)).astype(np.int64)
    return degree_histogram(A), esp_histogram(A), geodesic_histogram(A)


def bin_labels(family: str, n: int) -> list[str]:
    if family == "degree":
        return [str(k) for k in range(n)]
    if family == "esp":
        return [str(k) for k in range(max(n - 1, 1))]
    return [str(k) for k in range(1, n)] + ["NR"]


@dataclass
class GofFamily:
    observed: np.ndarray
    simulated: np.ndarray  # (S, bins)
    q05: np.ndarray
    q50: np.ndarray
    q95: np.ndarray
    labels: list

    @property
    def covered(self) -> np.ndarray:
        return (self.q05 <= self.observed) & (self.observed <= self.q95)

    def frame(self, family: str) -> pd.DataFrame:
        return pd.DataFrame({"family": family, "bin": self.labels, "observed": self.observed,
                             "q05": self.q05, "q50": self.q50, "q95": self.q95,
                             "covered": self.covered})


@dataclass
class GofReport:
    families: dict = field(default_factory=dict)
    simulations: int = 0
    acceptance_rate: float = float("nan")

    def coverage(self, family: str | None = None) -> float:
        fams = [family] if family else list(self.families)
        flags = np.concatenate([self.families[f].covered for f in fams])
        return float(flags.mean())

    def frame(self) -> pd.DataFrame:
        return pd.concat([fam.frame(name) for name, fam in self.families.items()], ignore_index=True)

    def to_csv(self, path) -> None:
        self.frame().to_csv(path, index=False, lineterminator="\n")


def envelope(observed: np.ndarray, simulated: np.ndarray, labels: list) -> GofFamily:
    q = np.quantile(simulated, QUANTILES, axis=0)
    return GofFamily(observed, simulated, q[0], q[1], q[2], labels)


def gof_binary(fit: FitResult | np.ndarray, bound: BoundModel, net, S: int = 100, seed: int = 0,
               config: SamplerConfig | None = None, allow_unconverged: bool = False) -> GofReport:
    """Simulate ``S`` networks at the fitted parameters and build 5/50/95% envelopes."""
    if bound.mode != "binary":
        raise UnsupportedModeError("goodness of fit is only implemented for binary models")
    if S < 20:
        raise ValueError("need at least 20 simulations")
    if isinstance(fit, FitResult):
        if not fit.converged and not allow_unconverged:
            raise ValueError("refusing goodness of fit for a non-converged fit (pass allow_unconverged=True)")
        theta = fit.coefficients
    else:
        theta = np.asarray(fit, dtype=float)
    A = np.asarray(getattr(net, "adjacency", net)).astype(np.int64)
    n = A.shape[0]
    D = n * (n - 1) // 2
    if config is None:
        config = SamplerConfig(burn_in=20 * D, interval=max(D // 2, 1), sample_count=S, seed=seed)
    else:
        config = SamplerConfig(burn_in=config.burn_in, interval=config.interval, sample_count=S,
                               seed=seed, proposal=config.proposal, chains=config.chains,
                               threads=config.threads)
    batch = sample_binary(bound, theta, config, init=A, keep_networks=True)
    obs = auxiliary_statistics(A)
    sims = [np.array([fn(Ys) for Ys in batch.networks]) for fn in (degree_histogram, esp_histogram, geodesic_histogram)]
    report = GofReport(simulations=S, acceptance_rate=batch.acceptance_rate)
    for name, o, s in zip(FAMILIES, obs, sims):
        report.families[name] = envelope(o, s, bin_labels(name, n))
    return report


def gof_valued(*_args, **_kwargs):
    raise UnsupportedModeError("no goodness-of-fit procedure exists for valued models")
