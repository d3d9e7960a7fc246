"""Compiled change-statistic and Metropolis-Hastings kernels.

Statistics are dispatched on integer codes so that one kernel serves every
model. Arrays passed in are the fields of :class:`collabnet.terms.BoundModel`.
"""
import math

import numpy as np
from numba import njit

EDGES = 0
NODECOV = 1
ABSDIFF = 2
NODEMATCH = 3
NODEFACTOR = 4
EDGECOV = 5
GWDEGREE = 6
GWESP = 7
SUM = 8
NONZERO = 9
NODESQRTCOVAR = 10
TRANSITIVEWEIGHTS = 11


@njit(cache=True, nogil=True)
def change_binary(codes, xnum, xcat, level, ecov, eidx, decay, A, SP, deg, i, j, out):
    """g(y with y_ij = 1) - g(y with y_ij = 0); ``SP`` and ``deg`` describe the current y."""
    n = A.shape[0]
    aij = A[i, j]
    for s in range(codes.shape[0]):
        c = codes[s]
        if c == EDGES:
            out[s] = 1.0
        elif c == NODECOV:
            out[s] = xnum[s, i] + xnum[s, j]
        elif c == ABSDIFF:
            out[s] = abs(xnum[s, i] - xnum[s, j])
        elif c == NODEMATCH:
            out[s] = 1.0 if xcat[s, i] == xcat[s, j] else 0.0
        elif c == NODEFACTOR:
            v = 0.0
            if xcat[s, i] == level[s]:
                v += 1.0
            if xcat[s, j] == level[s]:
                v += 1.0
            out[s] = v
        elif c == EDGECOV:
            out[s] = ecov[eidx[s], i, j]
        elif c == GWDEGREE:
            r = 1.0 - math.exp(-decay[s])
            out[s] = r ** (deg[i] - aij) + r ** (deg[j] - aij)
        elif c == GWESP:
            r = 1.0 - math.exp(-decay[s])
            v = math.exp(decay[s]) * (1.0 - r ** SP[i, j])
            for k in range(n):
                if A[i, k] and A[j, k]:
                    v += r ** (SP[i, k] - aij) + r ** (SP[j, k] - aij)
            out[s] = v
        else:
            out[s] = np.nan


@njit(cache=True, nogil=True)
def _tw_pair(Y, a, b):
    n = Y.shape[0]
    best = 0
    for l in range(n):
        m = min(Y[a, l], Y[l, b])
        if m > best:
            best = m
    return min(Y[a, b], best)


@njit(cache=True, nogil=True)
def _tw_local(Y, i, j):
    n = Y.shape[0]
    tot = _tw_pair(Y, i, j)
    for k in range(n):
        if k != i and k != j:
            tot += _tw_pair(Y, i, k) + _tw_pair(Y, j, k)
    return tot


@njit(cache=True, nogil=True)
def delta_valued(codes, xnum, xcat, level, ecov, eidx, decay, Y, Ssq, i, j, v, out):
    """g(y with y_ij = v) - g(y); ``Ssq[i]`` is the row sum of sqrt(y)."""
    w = Y[i, j]
    d = float(v - w)
    sv = math.sqrt(v)
    sw = math.sqrt(w)
    for s in range(codes.shape[0]):
        c = codes[s]
        if c == SUM or c == EDGES:
            out[s] = d
        elif c == NONZERO:
            out[s] = (1.0 if v > 0 else 0.0) - (1.0 if w > 0 else 0.0)
        elif c == NODECOV:
            out[s] = d * (xnum[s, i] + xnum[s, j])
        elif c == ABSDIFF:
            out[s] = d * abs(xnum[s, i] - xnum[s, j])
        elif c == NODEMATCH:
            out[s] = d if xcat[s, i] == xcat[s, j] else 0.0
        elif c == NODEFACTOR:
            k = 0.0
            if xcat[s, i] == level[s]:
                k += 1.0
            if xcat[s, j] == level[s]:
                k += 1.0
            out[s] = d * k
        elif c == EDGECOV:
            out[s] = d * ecov[eidx[s], i, j]
        elif c == NODESQRTCOVAR:
            out[s] = (sv - sw) * ((Ssq[i] - sw) + (Ssq[j] - sw))
        elif c == TRANSITIVEWEIGHTS:
            if v == w:
                out[s] = 0.0
            else:
                before = _tw_local(Y, i, j)
                Y[i, j] = v
                Y[j, i] = v
                after = _tw_local(Y, i, j)
                Y[i, j] = w
                Y[j, i] = w
                out[s] = float(after - before)
        else:
            out[s] = np.nan


@njit(cache=True, nogil=True)
def mple_design_binary(codes, xnum, xcat, level, ecov, eidx, decay, A, di, dj):
    n = A.shape[0]
    p = codes.shape[0]
    D = di.shape[0]
    deg = np.zeros(n, np.int64)
    for a in range(n):
        for b in range(n):
            deg[a] += A[a, b]
    SP = np.zeros((n, n), np.int64)
    if np.any(codes == GWESP):
        for a in range(n):
            for b in range(n):
                acc = 0
                for k in range(n):
                    acc += A[a, k] * A[k, b]
                SP[a, b] = acc
    X = np.empty((D, p))
    row = np.empty(p)
    for d in range(D):
        change_binary(codes, xnum, xcat, level, ecov, eidx, decay, A, SP, deg, di[d], dj[d], row)
        X[d, :] = row
    return X


@njit(cache=True, nogil=True)
def mple_design_valued(codes, xnum, xcat, level, ecov, eidx, decay, Y, di, dj, m):
    """Delta[d, v, :] = g(y with y_d = v) - g(y with y_d = 0)."""
    n = Y.shape[0]
    p = codes.shape[0]
    D = di.shape[0]
    Ssq = np.zeros(n)
    for a in range(n):
        for b in range(n):
            Ssq[a] += math.sqrt(Y[a, b])
    out = np.empty((D, m + 1, p))
    row = np.empty(p)
    zero = np.empty(p)
    for d in range(D):
        i = di[d]
        j = dj[d]
        delta_valued(codes, xnum, xcat, level, ecov, eidx, decay, Y, Ssq, i, j, 0, zero)
        for v in range(m + 1):
            delta_valued(codes, xnum, xcat, level, ecov, eidx, decay, Y, Ssq, i, j, v, row)
            for s in range(p):
                out[d, v, s] = row[s] - zero[s]
    return out


@njit(cache=True, nogil=True)
def _tnt_q(present, nE, D):
    if nE == 0:
        return 1.0 / D
    q = 0.5 / D
    if present:
        q += 0.5 / nE
    return q


@njit(cache=True, nogil=True)
def run_binary(codes, xnum, xcat, level, ecov, eidx, decay, theta,
               A, SP, deg, ei, ej, epos, nE, stats, dyad_i, dyad_j,
               u, tnt, track_sp, interval, out_stats, out_nets, save_nets):
    """Advance the chain ``u.shape[0]`` steps; record every ``interval`` steps.

    Mutates A, SP, deg, the edge list (ei, ej, epos, nE[0]) and stats in place.
    Returns the number of accepted proposals.
    """
    n = A.shape[0]
    p = codes.shape[0]
    D = dyad_i.shape[0]
    delta = np.empty(p)
    accepted = 0
    rec = 0
    nrec = out_stats.shape[0]
    for t in range(u.shape[0]):
        ne = nE[0]
        if tnt and ne > 0 and u[t, 0] < 0.5:
            e = min(int(u[t, 1] * ne), ne - 1)
            i = ei[e]
            j = ej[e]
        else:
            d = min(int(u[t, 1] * D), D - 1)
            i = dyad_i[d]
            j = dyad_j[d]
        present = A[i, j] == 1
        change_binary(codes, xnum, xcat, level, ecov, eidx, decay, A, SP, deg, i, j, delta)
        lr = 0.0
        for s in range(p):
            lr += theta[s] * delta[s]
        if present:
            lr = -lr
        if tnt:
            ne2 = ne - 1 if present else ne + 1
            lr += math.log(_tnt_q(not present, ne2, D)) - math.log(_tnt_q(present, ne, D))
        if math.log(u[t, 2]) < lr:
            accepted += 1
            sign = -1.0 if present else 1.0
            for s in range(p):
                stats[s] += sign * delta[s]
            if present:
                A[i, j] = 0
                A[j, i] = 0
                deg[i] -= 1
                deg[j] -= 1
                if track_sp:
                    for k in range(n):
                        if A[j, k]:
                            SP[i, k] -= 1
                            SP[k, i] -= 1
                        if A[i, k]:
                            SP[j, k] -= 1
                            SP[k, j] -= 1
                pos = epos[i, j]
                last = nE[0] - 1
                li = ei[last]
                lj = ej[last]
                ei[pos] = li
                ej[pos] = lj
                epos[li, lj] = pos
                epos[lj, li] = pos
                epos[i, j] = -1
                epos[j, i] = -1
                nE[0] = last
            else:
                if track_sp:
                    for k in range(n):
                        if A[j, k]:
                            SP[i, k] += 1
                            SP[k, i] += 1
                        if A[i, k]:
                            SP[j, k] += 1
                            SP[k, j] += 1
                A[i, j] = 1
                A[j, i] = 1
                deg[i] += 1
                deg[j] += 1
                pos = nE[0]
                ei[pos] = i
                ej[pos] = j
                epos[i, j] = pos
                epos[j, i] = pos
                nE[0] = pos + 1
        if (t + 1) % interval == 0 and rec < nrec:
            for s in range(p):
                out_stats[rec, s] = stats[s]
            if save_nets:
                for a in range(n):
                    for b in range(n):
                        out_nets[rec, a, b] = A[a, b]
            rec += 1
    return accepted


@njit(cache=True, nogil=True)
def run_valued(codes, xnum, xcat, level, ecov, eidx, decay, theta,
               Y, Ssq, stats, dyad_i, dyad_j, logc, m, u, plus_minus,
               interval, out_stats, out_nets, save_nets):
    n = Y.shape[0]
    p = codes.shape[0]
    D = dyad_i.shape[0]
    delta = np.empty(p)
    accepted = 0
    rec = 0
    nrec = out_stats.shape[0]
    for t in range(u.shape[0]):
        d = min(int(u[t, 0] * D), D - 1)
        i = dyad_i[d]
        j = dyad_j[d]
        w = Y[i, j]
        valid = True
        if plus_minus:
            v = w + 1 if u[t, 1] < 0.5 else w - 1
            if v < 0 or v > m:
                valid = False
        else:
            v = min(int(u[t, 1] * m), m - 1)
            if v >= w:
                v += 1
        if valid:
            delta_valued(codes, xnum, xcat, level, ecov, eidx, decay, Y, Ssq, i, j, v, delta)
            lr = logc[v] - logc[w]
            for s in range(p):
                lr += theta[s] * delta[s]
            if math.log(u[t, 2]) < lr:
                accepted += 1
                for s in range(p):
                    stats[s] += delta[s]
                dq = math.sqrt(v) - math.sqrt(w)
                Ssq[i] += dq
                Ssq[j] += dq
                Y[i, j] = v
                Y[j, i] = v
        if (t + 1) % interval == 0 and rec < nrec:
            for s in range(p):
                out_stats[rec, s] = stats[s]
            if save_nets:
                for a in range(n):
                    for b in range(n):
                        out_nets[rec, a, b] = Y[a, b]
            rec += 1
    return accepted
