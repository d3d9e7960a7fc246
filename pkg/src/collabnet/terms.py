"""Model terms: specification, binding to covariates, full evaluation and change statistics.

A :class:`ModelSpec` is an ordered list of :class:`TermSpec`. Binding it to a
node set with covariates gives a :class:`BoundModel`, whose arrays drive both
the pure-numpy evaluator here and the compiled kernels in ``_kernels``.
"""
from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K

BINARY_KINDS = {"edges", "gwdegree", "gwesp"}
VALUED_KINDS = {"sum", "nonzero", "nodesqrtcovar", "transitiveweights"}
SHARED_KINDS = {"nodecov", "absdiff", "nodematch", "nodefactor", "edgecov", "memory_lag", "time_trend"}
KINDS = BINARY_KINDS | VALUED_KINDS | SHARED_KINDS
NODE_KINDS = {"nodecov", "absdiff", "nodematch", "nodefactor"}
DECAY_KINDS = {"gwdegree", "gwesp"}

# edge-covariate keys injected by the temporal fitter
MEMORY_KEY = "memory"
TIME_KEY = "time"

_CODES = {
    "edges": K.EDGES, "nodecov": K.NODECOV, "absdiff": K.ABSDIFF,
    "nodematch": K.NODEMATCH, "nodefactor": K.NODEFACTOR, "edgecov": K.EDGECOV,
    "memory_lag": K.EDGECOV, "time_trend": K.EDGECOV,
    "gwdegree": K.GWDEGREE, "gwesp": K.GWESP, "sum": K.SUM, "nonzero": K.NONZERO,
    "nodesqrtcovar": K.NODESQRTCOVAR, "transitiveweights": K.TRANSITIVEWEIGHTS,
}


@dataclass(frozen=True)
class TermSpec:
    kind: str
    attribute: str | None = None  # node attribute, or edge covariate name for edgecov
    decay: float | None = None
    level: str | None = None  # reference level for nodefactor
    label: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind in DECAY_KINDS:
            if self.decay is None or not self.decay > 0:
                raise ValueError(f"{self.kind} needs a decay > 0, got {self.decay}")
        if (self.kind in NODE_KINDS or self.kind == "edgecov") and not self.attribute:
            raise ValueError(f"{self.kind} needs an attribute")

    @property
    def covariate(self) -> str | None:
        if self.kind == "edgecov":
            return self.attribute
        if self.kind == "memory_lag":
            return MEMORY_KEY
        if self.kind == "time_trend":
            return TIME_KEY
        return None

    def base_label(self) -> str:
        if self.label:
            return self.label
        if self.kind in DECAY_KINDS:
            return f"{self.kind}.{self.decay:g}"
        if self.kind == "memory_lag":
            return "memory"
        if self.kind == "time_trend":
            return "timecov"
        if self.attribute:
            return f"{self.kind}.{self.attribute}"
        return self.kind

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ModelSpec:
    terms: tuple
    mode: str = "binary"
    m: int | None = None

    def __post_init__(self):
        terms = tuple(t if isinstance(t, TermSpec) else TermSpec(**t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if self.mode not in ("binary", "valued"):
            raise ValueError(f"mode must be 'binary' or 'valued', got {self.mode!r}")
        if self.mode == "valued":
            if self.m is None or self.m < 1:
                raise ValueError("valued models need m >= 1")
            bad = [t.kind for t in terms if t.kind in BINARY_KINDS]
        else:
            bad = [t.kind for t in terms if t.kind in VALUED_KINDS]
        if bad:
            raise ValueError(f"terms {bad} are not available in {self.mode} mode")
        if not terms:
            raise ValueError("model has no terms")

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        return cls(tuple(TermSpec(**t) for t in d["terms"]), d.get("mode", "binary"), d.get("m"))

    @classmethod
    def load(cls, path) -> "ModelSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "terms": [t.to_dict() for t in self.terms]}
        if self.m is not None:
            d["m"] = self.m
        return d

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def with_terms(self, extra: Sequence[TermSpec]) -> "ModelSpec":
        return ModelSpec(self.terms + tuple(extra), self.mode, self.m)


def reference_level(values: Sequence) -> str:
    """Most frequent level, ties broken lexicographically."""
    counts = Counter(str(v) for v in values)
    return min(counts, key=lambda lvl: (-counts[lvl], lvl))


def factor_levels(values: Sequence, reference: str | None = None) -> tuple[str, list[str]]:
    """(reference level, sorted non-reference levels)."""
    levels = sorted({str(v) for v in values})
    ref = reference if reference is not None else reference_level(values)
    if ref not in levels:
        raise ValueError(f"reference level {ref!r} not among {levels}")
    return ref, [lvl for lvl in levels if lvl != ref]


def expand_factor_levels(model: ModelSpec, panel=None, levels: Mapping | None = None) -> list[str]:
    """Expanded statistic labels; nodefactor gets one per non-reference level."""
    labels = []
    for term in model.terms:
        if term.kind != "nodefactor":
            labels.append(term.base_label())
            continue
        if levels is not None and term.attribute in levels:
            values = levels[term.attribute]
        elif panel is not None:
            values = panel.pooled_levels(term.attribute).tolist()
        else:
            raise ValueError(f"no level information for {term.attribute!r}")
        _, others = factor_levels(values, term.level)
        if not others:
            warnings.warn(f"factor {term.attribute!r} has a single level; no statistic emitted")
        labels.extend(f"{term.base_label()}.{lvl}" for lvl in others)
    return labels


@dataclass(eq=False)
class BoundModel:
    """A model spec resolved against concrete covariates for n nodes."""

    spec: ModelSpec
    n: int
    labels: list
    codes: np.ndarray
    xnum: np.ndarray
    xcat: np.ndarray
    level: np.ndarray
    ecov: np.ndarray
    eidx: np.ndarray
    decay: np.ndarray
    node_attrs: dict = field(repr=False, default_factory=dict)
    edge_covs: dict = field(repr=False, default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.labels)

    @property
    def mode(self) -> str:
        return self.spec.mode

    @property
    def m(self) -> int | None:
        return self.spec.m

    @property
    def has_gwesp(self) -> bool:
        return bool((self.codes == K.GWESP).any())

    def arrays(self) -> tuple:
        return (self.codes, self.xnum, self.xcat, self.level, self.ecov, self.eidx, self.decay)


def bind(model: ModelSpec, n: int, node_attrs: Mapping | None = None,
         edge_covs: Mapping | None = None, levels: Mapping | None = None) -> BoundModel:
    """Resolve terms against node attribute vectors and n x n edge covariates.

    ``levels`` maps categorical attribute names to the pooled values used to
    pick the reference level and enumerate factor levels, so that several
    years of data expand to identical statistics.
    """
    node_attrs = dict(node_attrs or {})
    edge_covs = {k: np.asarray(v, dtype=float) for k, v in (edge_covs or {}).items()}
    labels, codes, xnum, xcat, lvl, eidx, decay = [], [], [], [], [], [], []
    ekeys: list[str] = []
    zeros_f = np.zeros(n)
    zeros_i = np.zeros(n, dtype=np.int64)

    def need_attr(name):
        if name not in node_attrs:
            raise KeyError(f"missing node attribute {name!r}")
        vals = np.asarray(node_attrs[name])
        if vals.shape != (n,):
            raise ValueError(f"attribute {name!r} has shape {vals.shape}, expected ({n},)")
        return vals

    for term in model.terms:
        code = _CODES[term.kind]
        base = term.base_label()
        if term.kind == "nodefactor":
            vals = need_attr(term.attribute).astype(str)
            pool = levels[term.attribute] if levels and term.attribute in levels else vals
            ref, others = factor_levels(pool, term.level)
            all_levels = sorted(set(map(str, pool)) | set(vals))
            cat = np.array([all_levels.index(v) for v in vals], dtype=np.int64)
            if not others:
                warnings.warn(f"factor {term.attribute!r} has a single level; no statistic emitted")
            for other in others:
                labels.append(f"{base}.{other}")
                codes.append(code)
                xnum.append(zeros_f)
                xcat.append(cat)
                lvl.append(all_levels.index(other))
                eidx.append(-1)
                decay.append(0.0)
            continue
        x, c, e = zeros_f, zeros_i, -1
        if term.kind in ("nodecov", "absdiff"):
            x = need_attr(term.attribute).astype(float)
            if not np.isfinite(x).all():
                raise ValueError(f"attribute {term.attribute!r} has missing values")
        elif term.kind == "nodematch":
            raw = need_attr(term.attribute).astype(str)
            _, c = np.unique(raw, return_inverse=True)
            c = c.astype(np.int64)
        elif term.covariate is not None:
            key = term.covariate
            if key not in edge_covs:
                raise KeyError(f"missing edge covariate {key!r}")
            if edge_covs[key].shape != (n, n):
                raise ValueError(f"edge covariate {key!r} has shape {edge_covs[key].shape}")
            if key not in ekeys:
                ekeys.append(key)
            e = ekeys.index(key)
        labels.append(base)
        codes.append(code)
        xnum.append(x)
        xcat.append(c)
        lvl.append(-1)
        eidx.append(e)
        decay.append(float(term.decay or 0.0))

    ecov = np.stack([edge_covs[k] for k in ekeys]) if ekeys else np.zeros((1, n, n))
    p = len(labels)
    return BoundModel(
        spec=model, n=n, labels=labels,
        codes=np.array(codes, dtype=np.int64),
        xnum=np.array(xnum, dtype=float).reshape(p, n),
        xcat=np.array(xcat, dtype=np.int64).reshape(p, n),
        level=np.array(lvl, dtype=np.int64),
        ecov=np.ascontiguousarray(ecov, dtype=float),
        eidx=np.array(eidx, dtype=np.int64),
        decay=np.array(decay, dtype=float),
        node_attrs=node_attrs, edge_covs=edge_covs,
    )


def _as_matrix(net) -> np.ndarray:
    if hasattr(net, "weights"):
        return np.asarray(net.weights, dtype=np.int64)
    if hasattr(net, "adjacency"):
        return np.asarray(net.adjacency, dtype=np.int64)
    return np.asarray(net, dtype=np.int64)


def gw_weights(decay: float, kmax: int) -> np.ndarray:
    """e^d * (1 - (1 - e^-d)^k) for k = 0..kmax."""
    k = np.arange(kmax + 1)
    return math.exp(decay) * (1.0 - (1.0 - math.exp(-decay)) ** k)


def evaluate(bound: BoundModel, net) -> np.ndarray:
    """Full evaluation of g(y) from the term definitions."""
    Y = _as_matrix(net)
    n = bound.n
    if Y.shape != (n, n):
        raise ValueError(f"network has {Y.shape[0]} nodes, model is bound to {n}")
    if bound.mode == "binary" and ((Y != 0) & (Y != 1)).any():
        raise ValueError("binary model evaluated on a valued network")
    if bound.mode == "valued" and (Y > bound.m).any():
        raise ValueError(f"network values exceed m={bound.m}")
    iu = np.triu_indices(n, 1)
    y = Y[iu].astype(float)
    out = np.empty(bound.p)
    A = (Y > 0).astype(np.int64)
    deg = A.sum(axis=1)
    sp = None
    for s, code in enumerate(bound.codes):
        xi, xj = bound.xnum[s][iu[0]], bound.xnum[s][iu[1]]
        ci, cj = bound.xcat[s][iu[0]], bound.xcat[s][iu[1]]
        if code in (K.EDGES, K.SUM):
            out[s] = y.sum()
        elif code == K.NONZERO:
            out[s] = (y > 0).sum()
        elif code == K.NODECOV:
            out[s] = (y * (xi + xj)).sum()
        elif code == K.ABSDIFF:
            out[s] = (y * np.abs(xi - xj)).sum()
        elif code == K.NODEMATCH:
            out[s] = (y * (ci == cj)).sum()
        elif code == K.NODEFACTOR:
            out[s] = (y * ((ci == bound.level[s]).astype(float) + (cj == bound.level[s]))).sum()
        elif code == K.EDGECOV:
            out[s] = (y * bound.ecov[bound.eidx[s]][iu]).sum()
        elif code == K.GWDEGREE:
            hist = np.bincount(deg, minlength=n)
            out[s] = float(gw_weights(bound.decay[s], n - 1)[1:] @ hist[1:n])
        elif code == K.GWESP:
            if sp is None:
                sp = A @ A
            esp = sp[iu][A[iu] == 1]
            hist = np.bincount(esp, minlength=max(n - 1, 1))
            out[s] = float(gw_weights(bound.decay[s], len(hist) - 1) @ hist) if len(esp) else 0.0
        elif code == K.NODESQRTCOVAR:
            R = np.sqrt(Y.astype(float))
            rs = R.sum(axis=1)
            out[s] = 0.5 * float((rs ** 2 - (R ** 2).sum(axis=1)).sum())
        elif code == K.TRANSITIVEWEIGHTS:
            # path[a, b] = max_k min(Y[a, k], Y[k, b])
            path = np.minimum(Y[:, :, None], Y[None, :, :]).max(axis=1)
            out[s] = float(np.minimum(Y, path)[iu].sum())
        else:
            raise ValueError(f"unknown code {code}")
    return out


def eval_statistics(model: ModelSpec, net, node_attrs=None, edge_covs=None, levels=None) -> np.ndarray:
    return evaluate(bind(model, _as_matrix(net).shape[0], node_attrs, edge_covs, levels), net)


def change_statistic_binary(bound: BoundModel, net, i: int, j: int) -> np.ndarray:
    """g(y with y_ij = 1) - g(y with y_ij = 0)."""
    A = _as_matrix(net).copy()
    n = bound.n
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid dyad ({i}, {j})")
    SP = A @ A
    deg = A.sum(axis=1)
    out = np.empty(bound.p)
    K.change_binary(*bound.arrays(), A, SP, deg, i, j, out)
    return out


def delta_valued(bound: BoundModel, net, i: int, j: int, v: int) -> np.ndarray:
    """g(y with y_ij = v) - g(y)."""
    Y = _as_matrix(net).copy()
    n = bound.n
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid dyad ({i}, {j})")
    if not 0 <= v <= bound.m:
        raise ValueError(f"value {v} outside 0..{bound.m}")
    Ssq = np.sqrt(Y.astype(float)).sum(axis=1)
    out = np.empty(bound.p)
    K.delta_valued(*bound.arrays(), Y, Ssq, i, j, int(v), out)
    return out


def dyads(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, 1)
    return i.astype(np.int64), j.astype(np.int64)


def change_matrix_binary(bound: BoundModel, net) -> np.ndarray:
    """Change statistics for every dyad (rows in upper-triangle order)."""
    A = np.array(_as_matrix(net), order="C")
    di, dj = dyads(bound.n)
    return K.mple_design_binary(*bound.arrays(), A, di, dj)


def change_table_valued(bound: BoundModel, net) -> np.ndarray:
    """(D, m+1, p) array of g(y with y_d = v) - g(y with y_d = 0)."""
    Y = np.array(_as_matrix(net), order="C")  # the kernel toggles dyads in place
    di, dj = dyads(bound.n)
    return K.mple_design_valued(*bound.arrays(), Y, di, dj, int(bound.m))
