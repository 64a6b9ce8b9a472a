"""Dense two-phase tableau simplex for the package's small structured LPs.

Solves  min c.x  s.t.  A x (<=|=) b,  x >= 0.

The LPs here are tiny (tens to a few hundred rows) but arrive in very large
numbers, so per-call overhead matters more than asymptotics; a jitted dense
tableau beats calling out to a general-purpose solver by orders of magnitude.
Pivoting is Dantzig with a Bland fallback after a run of degenerate steps,
and ratio-test ties break toward the smallest basis index.

Statuses: 0 optimal, 1 infeasible, 2 iteration limit, 3 unbounded.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PIVOT_TOL = 1e-11


@njit(cache=True)
def _pivot(T, basis, pr, pc):
    piv = T[pr, pc]
    T[pr, :] /= piv
    for i in range(T.shape[0]):
        if i != pr:
            f = T[i, pc]
            if f != 0.0:
                T[i, :] -= f * T[pr, :]
                T[i, pc] = 0.0
    basis[pr] = pc


@njit(cache=True)
def _optimize(T, basis, allow, max_iter):
    """Minimize the objective row T[-1]; returns 0 optimal, 2 limit, 3 unbounded."""
    r = T.shape[0] - 1
    degen_run = 0
    bland = False
    for _ in range(max_iter):
        pc = -1
        if bland:
            for j in range(allow.shape[0]):
                if allow[j] and T[r, j] < -PIVOT_TOL:
                    pc = j
                    break
        else:
            best = -PIVOT_TOL
            for j in range(allow.shape[0]):
                if allow[j] and T[r, j] < best:
                    best = T[r, j]
                    pc = j
        if pc < 0:
            return 0
        pr = -1
        best_ratio = np.inf
        for i in range(r):
            a = T[i, pc]
            if a > PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best_ratio - 1e-12:
                    best_ratio = ratio
                    pr = i
                elif ratio < best_ratio + 1e-12 and pr >= 0 and basis[i] < basis[pr]:
                    pr = i
        if pr < 0:
            return 3
        if best_ratio < 1e-12:
            degen_run += 1
            if degen_run > 50:
                bland = True
        else:
            degen_run = 0
            bland = False
        _pivot(T, basis, pr, pc)
    return 2


@njit(cache=True)
def solve_lp_kernel(A, b, kinds, c, max_iter):
    """Two-phase simplex. kinds[i]: 0 for <=, 1 for =. Returns (status, x, obj)."""
    r, nv = A.shape
    # normalize to b >= 0; a flipped <= becomes >=
    sign = np.ones(r)
    geq = np.zeros(r, np.bool_)
    for i in range(r):
        if b[i] < 0.0:
            sign[i] = -1.0
        if kinds[i] == 0 and b[i] < 0.0:
            geq[i] = True

    n_slack = 0
    for i in range(r):
        if kinds[i] == 0:
            n_slack += 1
    n_art = 0
    for i in range(r):
        if kinds[i] == 1 or geq[i]:
            n_art += 1

    ncols = nv + n_slack + n_art
    T = np.zeros((r + 1, ncols + 1))
    basis = np.empty(r, np.int64)
    s_at = nv
    a_at = nv + n_slack
    for i in range(r):
        T[i, :nv] = sign[i] * A[i]
        T[i, ncols] = sign[i] * b[i]
        if kinds[i] == 0:
            T[i, s_at] = sign[i]  # slack for <=, surplus for flipped rows
            if geq[i]:
                T[i, a_at] = 1.0
                basis[i] = a_at
                a_at += 1
            else:
                basis[i] = s_at
            s_at += 1
        else:
            T[i, a_at] = 1.0
            basis[i] = a_at
            a_at += 1

    allow = np.ones(ncols, np.bool_)

    if n_art > 0:
        # phase 1: minimize sum of artificials
        for j in range(nv + n_slack, ncols):
            T[r, j] = 1.0
        for i in range(r):
            if basis[i] >= nv + n_slack:
                T[r, :] -= T[i, :]
        status = _optimize(T, basis, allow, max_iter)
        if status != 0:
            return status, np.zeros(nv), 0.0
        if -T[r, ncols] > 1e-9:
            return 1, np.zeros(nv), -T[r, ncols]
        # drive remaining artificials out of the basis where possible
        for j in range(nv + n_slack, ncols):
            allow[j] = False
        for i in range(r):
            if basis[i] >= nv + n_slack:
                for j in range(nv + n_slack):
                    if abs(T[i, j]) > PIVOT_TOL:
                        _pivot(T, basis, i, j)
                        break

    # phase 2
    T[r, :] = 0.0
    for j in range(nv):
        T[r, j] = c[j]
    for i in range(r):
        bj = basis[i]
        if bj < nv and c[bj] != 0.0:
            T[r, :] -= c[bj] * T[i, :]
    status = _optimize(T, basis, allow, max_iter)
    x = np.zeros(nv)
    for i in range(r):
        if basis[i] < nv:
            x[basis[i]] = T[i, ncols]
    obj = 0.0
    for j in range(nv):
        obj += c[j] * x[j]
    return status, x, obj
