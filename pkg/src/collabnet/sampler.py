"""Metropolis-Hastings samplers for binary and count-valued ERGMs, and exact enumeration.

Random numbers come from a numpy ``Generator`` (PCG64) seeded by
``SeedSequence(seed)``; chain ``c`` uses the ``c``-th spawned child, so a
``(seed, chains)`` pair fixes every draw. Uniforms are generated in blocks and
handed to the compiled kernels, which keeps results independent of numba's own
RNG state.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _kernels as K
from .terms import BoundModel, dyads, evaluate

BINARY_PROPOSALS = ("tie_no_tie", "uniform_dyad")
VALUED_PROPOSALS = ("uniform_value", "plus_minus_one")


@dataclass(frozen=True)
class SamplerConfig:
    burn_in: int = 10_000
    interval: int = 100
    sample_count: int = 1000
    seed: int = 0
    proposal: str | None = None  # None -> tie_no_tie / uniform_value
    chains: int = 1
    threads: int = 1
    resync_every: int = 100_000

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.resync_every < 1:
            raise ValueError("resync_every must be >= 1")


@dataclass
class SampleBatch:
    stats: np.ndarray  # (sample_count, p)
    acceptance_rate: float
    networks: np.ndarray | None = None  # (sample_count, n, n) when requested
    final_states: list = field(default_factory=list, repr=False)
    max_drift: float = 0.0  # largest tracked-vs-recomputed discrepancy seen at resyncs
    labels: list = field(default_factory=list)

    @property
    def mean(self) -> np.ndarray:
        return self.stats.mean(axis=0)


def log_binom_coef(m: int) -> np.ndarray:
    k = np.arange(m + 1)
    return gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)


def _chain_rngs(seed: int, chains: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(chains)]


def _check_theta(bound: BoundModel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (bound.p,):
        raise ValueError(f"theta has length {theta.size}, model has {bound.p} statistics")
    if not np.isfinite(theta).all():
        raise ValueError("theta must be finite")
    return theta


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (c < extra) for c in range(parts)]


class _BinaryChain:
    def __init__(self, bound: BoundModel, A0: np.ndarray):
        n = bound.n
        self.bound = bound
        self.A = np.ascontiguousarray(A0, dtype=np.int64).copy()
        self.track_sp = bound.has_gwesp
        self.SP = self.A @ self.A if self.track_sp else np.zeros((1, 1), np.int64)
        self.deg = self.A.sum(axis=1)
        D = n * (n - 1) // 2
        self.ei = np.zeros(D, np.int64)
        self.ej = np.zeros(D, np.int64)
        self.epos = -np.ones((n, n), np.int64)
        iu, ju = np.nonzero(np.triu(self.A, 1))
        self.ei[: len(iu)] = iu
        self.ej[: len(iu)] = ju
        self.epos[iu, ju] = np.arange(len(iu))
        self.epos[ju, iu] = np.arange(len(iu))
        self.nE = np.array([len(iu)], np.int64)
        self.stats = evaluate(bound, self.A)
        self.di, self.dj = dyads(n)

    def run(self, theta, u, tnt, interval, out_stats, out_nets, save):
        return K.run_binary(*self.bound.arrays(), theta, self.A, self.SP, self.deg,
                            self.ei, self.ej, self.epos, self.nE, self.stats,
                            self.di, self.dj, u, tnt, self.track_sp, interval,
                            out_stats, out_nets, save)

    def resync(self) -> float:
        full = evaluate(self.bound, self.A)
        drift = float(np.max(np.abs(full - self.stats))) if full.size else 0.0
        self.stats[:] = full
        return drift

    def state(self):
        return self.A.copy()


class _ValuedChain:
    def __init__(self, bound: BoundModel, Y0: np.ndarray):
        self.bound = bound
        self.Y = np.ascontiguousarray(Y0, dtype=np.int64).copy()
        self.Ssq = np.sqrt(self.Y.astype(float)).sum(axis=1)
        self.stats = evaluate(bound, self.Y)
        self.di, self.dj = dyads(bound.n)
        self.logc = log_binom_coef(bound.m)

    def run(self, theta, u, plus_minus, interval, out_stats, out_nets, save):
        return K.run_valued(*self.bound.arrays(), theta, self.Y, self.Ssq, self.stats,
                            self.di, self.dj, self.logc, int(self.bound.m), u, plus_minus,
                            interval, out_stats, out_nets, save)

    def resync(self) -> float:
        full = evaluate(self.bound, self.Y)
        drift = float(np.max(np.abs(full - self.stats))) if full.size else 0.0
        self.stats[:] = full
        self.Ssq[:] = np.sqrt(self.Y.astype(float)).sum(axis=1)
        return drift

    def state(self):
        return self.Y.copy()


def _drive(chain, theta, flag, rng, config: SamplerConfig, count: int, keep_networks: bool):
    """Burn in, then record ``count`` states spaced ``interval`` steps apart."""
    n = chain.bound.n
    p = chain.bound.p
    out = np.empty((count, p))
    nets = np.empty((count, n, n), np.int64) if keep_networks else np.empty((0, 1, 1), np.int64)
    block = config.resync_every
    accepted = 0
    steps = 0
    drift = 0.0
    dummy_stats = np.empty((0, p))
    dummy_nets = np.empty((0, 1, 1), np.int64)

    remaining = config.burn_in
    while remaining > 0:
        k = min(block, remaining)
        u = rng.random((k, 3))
        accepted += chain.run(theta, u, flag, 1, dummy_stats, dummy_nets, False)
        steps += k
        remaining -= k
        drift = max(drift, chain.resync())

    per_block = max(1, block // config.interval)
    done = 0
    while done < count:
        k = min(per_block, count - done)
        u = rng.random((k * config.interval, 3))
        sub_nets = nets[done: done + k] if keep_networks else dummy_nets
        accepted += chain.run(theta, u, flag, config.interval, out[done: done + k], sub_nets, keep_networks)
        steps += k * config.interval
        done += k
        drift = max(drift, chain.resync())
    return out, (nets if keep_networks else None), accepted, steps, drift, chain.state()


def _sample(bound: BoundModel, theta, config: SamplerConfig, init, keep_networks: bool, make_chain, flag):
    theta = _check_theta(bound, theta)
    counts = _split(config.sample_count, config.chains)
    rngs = _chain_rngs(config.seed, config.chains)
    inits = init if isinstance(init, list) else [init] * config.chains

    def work(c):
        if counts[c] == 0:
            return None
        return _drive(make_chain(inits[c]), theta, flag, rngs[c], config, counts[c], keep_networks)

    if config.threads > 1 and config.chains > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            results = list(pool.map(work, range(config.chains)))
    else:
        results = [work(c) for c in range(config.chains)]
    results = [r for r in results if r is not None]
    stats = np.concatenate([r[0] for r in results])
    nets = np.concatenate([r[1] for r in results]) if keep_networks else None
    acc = sum(r[2] for r in results)
    steps = sum(r[3] for r in results)
    return SampleBatch(stats=stats, acceptance_rate=acc / steps if steps else 0.0, networks=nets,
                       final_states=[r[5] for r in results], max_drift=max(r[4] for r in results),
                       labels=list(bound.labels))


def sample_binary(bound: BoundModel, theta, config: SamplerConfig = SamplerConfig(),
                  init=None, keep_networks: bool = False) -> SampleBatch:
    """Sample simple graphs from exp(theta . g(y)).

    ``init`` is a starting adjacency matrix (or one per chain); default empty.
    """
    if bound.mode != "binary":
        raise ValueError("sample_binary needs a binary-mode model")
    proposal = config.proposal or "tie_no_tie"
    if proposal not in BINARY_PROPOSALS:
        raise ValueError(f"unknown binary proposal {proposal!r}")
    if init is None:
        init = np.zeros((bound.n, bound.n), np.int64)
    return _sample(bound, theta, config, init, keep_networks,
                   lambda A0: _BinaryChain(bound, A0), proposal == "tie_no_tie")


def sample_valued(bound: BoundModel, theta, config: SamplerConfig = SamplerConfig(),
                  init=None, keep_networks: bool = False) -> SampleBatch:
    """Sample {0..m}-valued networks from h(y) exp(theta . g(y)), h(y) = prod C(m, y_ij)."""
    if bound.mode != "valued":
        raise ValueError("sample_valued needs a valued-mode model")
    if bound.m is None or bound.m < 1:
        raise ValueError("m must be >= 1")
    proposal = config.proposal or "uniform_value"
    if proposal not in VALUED_PROPOSALS:
        raise ValueError(f"unknown valued proposal {proposal!r}")
    if init is None:
        init = np.zeros((bound.n, bound.n), np.int64)
    return _sample(bound, theta, config, init, keep_networks,
                   lambda Y0: _ValuedChain(bound, Y0), proposal == "plus_minus_one")


def sample(bound: BoundModel, theta, config: SamplerConfig = SamplerConfig(), init=None,
           keep_networks: bool = False) -> SampleBatch:
    if bound.mode == "binary":
        return sample_binary(bound, theta, config, init, keep_networks)
    return sample_valued(bound, theta, config, init, keep_networks)


@dataclass
class StateSpace:
    """Every network on n nodes with its statistics and log reference weight."""

    states: np.ndarray  # (S, D) dyad values in upper-triangle order
    stats: np.ndarray  # (S, p)
    log_h: np.ndarray  # (S,)
    n: int


BINARY_LIMIT = 6
VALUED_LIMIT = 10 ** 7


def enumerate_states(bound: BoundModel) -> StateSpace:
    n = bound.n
    D = n * (n - 1) // 2
    if bound.mode == "binary":
        if n > BINARY_LIMIT:
            raise ValueError(f"binary enumeration limited to n <= {BINARY_LIMIT}")
        values = 2
    else:
        values = bound.m + 1
        if values ** D > VALUED_LIMIT:
            raise ValueError(f"state space {values}^{D} exceeds {VALUED_LIMIT}")
    states = np.array(list(itertools.product(range(values), repeat=D)), dtype=np.int64).reshape(-1, D)
    iu = np.triu_indices(n, 1)
    stats = np.empty((len(states), bound.p))
    Y = np.zeros((n, n), np.int64)
    for s, row in enumerate(states):
        Y[iu] = row
        Y.T[iu] = row
        stats[s] = evaluate(bound, Y)
    if bound.mode == "valued":
        log_h = log_binom_coef(bound.m)[states].sum(axis=1)
    else:
        log_h = np.zeros(len(states))
    return StateSpace(states, stats, log_h, n)


@dataclass
class ExactMoments:
    mean: np.ndarray
    cov: np.ndarray
    log_z: float
    probabilities: np.ndarray


def exact_moments(space: StateSpace, theta) -> ExactMoments:
    theta = np.asarray(theta, dtype=float)
    logw = space.log_h + space.stats @ theta
    log_z = float(logsumexp(logw))
    prob = np.exp(logw - log_z)
    mean = prob @ space.stats
    centered = space.stats - mean
    cov = (centered * prob[:, None]).T @ centered
    return ExactMoments(mean, cov, log_z, prob)


def enumerate_exact(bound: BoundModel, theta) -> ExactMoments:
    """Exact E[g(Y)] and log normalizing constant by full state-space summation."""
    return exact_moments(enumerate_states(bound), _check_theta(bound, theta))


def batch_means_se(x: np.ndarray, batches: int = 25) -> np.ndarray:
    """Monte-Carlo standard error of column means using non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    S = x.shape[0]
    b = max(2, min(batches, S))
    size = S // b
    trimmed = x[: size * b].reshape(b, size, -1).mean(axis=1)
    return trimmed.std(axis=0, ddof=1) / math.sqrt(b)


def with_seed(config: SamplerConfig, seed: int) -> SamplerConfig:
    return replace(config, seed=seed)
