"""Hot inner loops, each in a numba and a pure-numpy flavour.

``TILDELAB_NUMBA=0`` in the environment selects the numpy path; so does a
missing numba install.  Both flavours are importable by name so tests and the
benchmark can compare them directly.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("TILDELAB_NUMBA", "1") not in ("0", "false", "no")


def _jit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------- partial trace

def index_table(dims, keep_bits):
    """Full computational index for every (kept, traced) digit pair.

    Party k (0-based) corresponds to bit k of ``keep_bits``; party 0 is the most
    significant digit of the full index.
    """
    n = len(dims)
    keep = [k for k in range(n) if keep_bits >> k & 1]
    drop = [k for k in range(n) if not keep_bits >> k & 1]
    full = np.arange(int(np.prod(dims))).reshape(dims)
    table = full.transpose(keep + drop)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.ascontiguousarray(table.reshape(dk, -1))


def partial_trace_numpy(mat, dims, keep_bits):
    n = len(dims)
    keep = [k for k in range(n) if keep_bits >> k & 1]
    t = mat.reshape(tuple(dims) * 2)
    row = list(range(n))
    col = [k if k not in keep else n + k for k in range(n)]
    out = [k for k in keep] + [n + k for k in keep]
    red = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[k] for k in keep]))
    return red.reshape(dk, dk)


@_jit
def _partial_trace_loops(mat, table):
    da, db = table.shape
    out = np.zeros((da, da), dtype=mat.dtype)
    for b in range(db):
        for a in range(da):
            i = table[a, b]
            for c in range(da):
                out[a, c] += mat[i, table[c, b]]
    return out


def partial_trace_numba(mat, dims, keep_bits):
    table = index_table(dims, keep_bits)
    return _partial_trace_loops(np.ascontiguousarray(mat, dtype=np.complex128), table)


# ------------------------------------------------------------ monotone margins

def mon3_margins_numpy(w, dvals):
    """(sum_jk w_jk D_j)^2 - sum_jk w_jk D_j D_k for a batch of (w, D)."""
    s = np.einsum("bjk,bj->b", w, dvals)
    a = np.einsum("bjk,bj,bk->b", w, dvals, dvals)
    return s * s - a


@_jit
def mon3_margins_loops(w, dvals):
    nb, r = dvals.shape
    out = np.empty(nb)
    for t in range(nb):
        s = 0.0
        a = 0.0
        for j in range(r):
            for k in range(r):
                x = w[t, j, k] * dvals[t, j]
                s += x
                a += x * dvals[t, k]
        out[t] = s * s - a
    return out


def search_margins_numpy(fbar, lam, dvals, square):
    """Normalized monotone margins for many (lambda, D) draws on one fixed F-bar.

    With w_jk proportional to lambda_j lambda_k Fbar_jk the C_D margin is
    (sum w D)^2 - sum w D D and the C_D^2 margin is 1 - a/p1 - b/p2.  A
    vanishing weight sum gives margin 0; a zero-probability branch adds 0.
    """
    w = lam[:, :, None] * lam[:, None, :] * fbar[None]
    tot = w.sum(axis=(1, 2))
    ok = tot > 0
    safe = np.where(ok, tot, 1.0)
    a = np.einsum("bjk,bj,bk->b", w, dvals, dvals) / safe
    if not square:
        s = np.einsum("bjk,bj->b", w, dvals) / safe
        m = s * s - a
    else:
        e = 1.0 - dvals
        b = np.einsum("bjk,bj,bk->b", w, e, e) / safe
        p1 = np.einsum("bj,bj->b", lam, dvals)
        p2 = 1.0 - p1
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(p1 > 0, a / np.where(p1 > 0, p1, 1.0), 0.0)
            t2 = np.where(p2 > 0, b / np.where(p2 > 0, p2, 1.0), 0.0)
        m = 1.0 - t1 - t2
    return np.where(ok, m, 0.0)


@_jit
def search_margins_loops(fbar, lam, dvals, square):
    nb, r = lam.shape
    out = np.empty(nb)
    for t in range(nb):
        tot = 0.0
        s = 0.0
        a = 0.0
        b = 0.0
        p1 = 0.0
        for j in range(r):
            p1 += lam[t, j] * dvals[t, j]
            for k in range(r):
                x = lam[t, j] * lam[t, k] * fbar[j, k]
                tot += x
                s += x * dvals[t, j]
                a += x * dvals[t, j] * dvals[t, k]
                b += x * (1.0 - dvals[t, j]) * (1.0 - dvals[t, k])
        if tot <= 0.0:
            out[t] = 0.0
            continue
        a /= tot
        if not square:
            s /= tot
            out[t] = s * s - a
        else:
            b /= tot
            p2 = 1.0 - p1
            m = 1.0
            if p1 > 0.0:
                m -= a / p1
            if p2 > 0.0:
                m -= b / p2
            out[t] = m
    return out


if USE_NUMBA:
    partial_trace = partial_trace_numba
    mon3_margins = mon3_margins_loops
    search_margins = search_margins_loops
else:
    partial_trace = partial_trace_numpy
    mon3_margins = mon3_margins_numpy
    search_margins = search_margins_numpy
