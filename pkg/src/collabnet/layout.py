"""Fruchterman-Reingold force-directed layout."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import BinaryNetwork


@dataclass(frozen=True)
class Layout:
    nodes: tuple  # laid-out nodes (isolates excluded)
    xy: np.ndarray  # (len(nodes), 2), centred on the origin
    k: float  # equilibrium edge length used

    def as_dict(self) -> dict:
        return {c: (float(x), float(y)) for c, (x, y) in zip(self.nodes, self.xy)}


def layout_fr(net: BinaryNetwork, seed: int = 0, iterations: int = 500, k: float | None = None,
              drop_isolates: bool = True) -> Layout:
    """Attractive force d^2/k along edges, repulsive k^2/d between all pairs,
    displacement capped by a temperature that cools linearly to zero.

    Two connected nodes balance at distance k.
    """
    A = np.asarray(net.adjacency, dtype=bool)
    idx = np.arange(A.shape[0])
    if drop_isolates and A.shape[0] > 1:
        idx = idx[A.any(axis=1)]
    nodes = tuple(net.nodes[i] for i in idx)
    n = len(idx)
    if k is None:
        k = 1.0 / np.sqrt(max(n, 1))
    if n <= 1:
        return Layout(nodes, np.zeros((n, 2)), float(k))
    A = A[np.ix_(idx, idx)].astype(float)
    rng = np.random.Generator(np.random.PCG64(seed))
    pos = rng.random((n, 2))
    t0 = 0.1 * max(np.ptp(pos, axis=0).max(), k)
    for it in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(-1))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-9)
        force = k * k / dist ** 2 - A * dist / k  # signed magnitude / distance
        np.fill_diagonal(force, 0.0)
        disp = (delta * force[:, :, None]).sum(axis=1)
        length = np.maximum(np.sqrt((disp ** 2).sum(-1)), 1e-12)
        temp = t0 * (1.0 - it / iterations)
        pos += disp / length[:, None] * np.minimum(length, temp)[:, None]
    pos -= pos.mean(axis=0)
    return Layout(nodes, pos, float(k))
