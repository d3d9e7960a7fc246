"""Disparity-filter edge significance and backbone extraction."""
from __future__ import annotations

from typing import Sequence

import numpy as np
import pandas as pd

from .graph import BinaryNetwork, ValuedNetwork


def disparity_alpha(net: ValuedNetwork) -> np.ndarray:
    """Endpoint-specific significance of every tie.

    ``alpha[i, j] = (1 - w_ij / s_i) ** (k_i - 1)``, the probability that a
    uniform random split of node i's strength over its k_i ties gives edge j
    a share at least as large as observed. Rows are not symmetric. Entries
    for absent ties, and for nodes of degree one, are 1.
    """
    w = net.weights.astype(float)
    k = (net.weights > 0).sum(axis=1)
    s = w.sum(axis=1)
    alpha = np.ones_like(w)
    rows = s > 0
    p = np.zeros_like(w)
    p[rows] = w[rows] / s[rows, None]
    expo = np.maximum(k - 1, 0)[:, None]
    mask = w > 0
    alpha[mask] = np.power(1.0 - p, expo * np.ones_like(w))[mask]
    return np.clip(alpha, 0.0, 1.0)


def extract_backbone(net: ValuedNetwork, level: float, alpha: np.ndarray | None = None) -> BinaryNetwork:
    """Keep tie {i, j} when it is significant from at least one endpoint."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"significance level must lie in (0, 1), got {level}")
    if alpha is None:
        alpha = disparity_alpha(net)
    keep = (np.minimum(alpha, alpha.T) < level) & (net.weights > 0)
    return BinaryNetwork(net.nodes, keep, net.year)


def trim_report(net: ValuedNetwork, levels: Sequence[float]) -> pd.DataFrame:
    if not levels:
        raise ValueError("need at least one level")
    alpha = disparity_alpha(net)
    total = int((np.triu(net.weights, 1) > 0).sum())
    rows = []
    for level in levels:
        kept = extract_backbone(net, level, alpha).edge_count
        removed = 1.0 - kept / total if total else 0.0
        rows.append({"year": net.year, "level": level, "edges": total,
                     "retained": kept, "fraction_removed": removed})
    return pd.DataFrame(rows)
