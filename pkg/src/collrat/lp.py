"""Thin interface over the LP backends.

The default backend is the in-repo jitted simplex (fast for this package's
many tiny LPs); `backend="scipy"` routes through scipy.optimize.linprog and
is used in tests as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._simplex import solve_lp_kernel
from .errors import SolverError

DEFAULT_BACKEND = "simplex"


@dataclass(frozen=True)
class LpResult:
    status: int  # 0 optimal, 1 infeasible, 2 iteration limit, 3 unbounded
    x: np.ndarray
    obj: float

    @property
    def optimal(self) -> bool:
        return self.status == 0


def solve(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    backend: str = DEFAULT_BACKEND,
    max_iter: int | None = None,
) -> LpResult:
    """Solve min c.x s.t. A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""
    c = np.ascontiguousarray(c, dtype=float)
    blocks = []
    kinds = []
    if A_ub is not None and len(b_ub):
        blocks.append((np.asarray(A_ub, float), np.asarray(b_ub, float), 0))
    if A_eq is not None and len(b_eq):
        blocks.append((np.asarray(A_eq, float), np.asarray(b_eq, float), 1))
    if not blocks:
        raise SolverError("no constraints given")
    A = np.ascontiguousarray(np.vstack([blk[0] for blk in blocks]))
    b = np.ascontiguousarray(np.concatenate([blk[1] for blk in blocks]))
    kinds = np.ascontiguousarray(
        np.concatenate([np.full(len(blk[1]), blk[2], dtype=np.int8) for blk in blocks])
    )
    if backend == "simplex":
        if max_iter is None:
            max_iter = 500 + 50 * (A.shape[0] + A.shape[1])
        status, x, obj = solve_lp_kernel(A, b, kinds, c, max_iter)
        return LpResult(int(status), x, float(obj))
    if backend == "scipy":
        from scipy.optimize import linprog

        ub = [blk for blk in blocks if blk[2] == 0]
        eq = [blk for blk in blocks if blk[2] == 1]
        res = linprog(
            c,
            A_ub=np.vstack([u[0] for u in ub]) if ub else None,
            b_ub=np.concatenate([u[1] for u in ub]) if ub else None,
            A_eq=np.vstack([e[0] for e in eq]) if eq else None,
            b_eq=np.concatenate([e[1] for e in eq]) if eq else None,
            bounds=(0, None),
            method="highs",
        )
        status = {0: 0, 2: 1, 3: 3}.get(res.status, 2)
        x = res.x if res.x is not None else np.zeros(len(c))
        obj = float(res.fun) if res.fun is not None else 0.0
        return LpResult(status, x, obj)
    raise SolverError(f"unknown LP backend {backend!r}")


def require_optimal(res: LpResult, context: str) -> LpResult:
    if res.status == 2:
        raise SolverError(f"{context}: simplex hit its iteration limit")
    if res.status == 3:
        raise SolverError(f"{context}: LP unbounded (malformed problem)")
    return res
