"""Extreme-point enumeration on the {0, 1/2, 1} grid and model-nesting verification.

Every vertex of the individual rationalizable polytopes has entries in
{0, 1/2, 1}, so a hull-generating set for each model is found by filtering
the 3^m grid through the model's closed per-order conditions with exact
integer arithmetic (values stored doubled: {0, 1, 2}). The sets are
hull-generating supersets of the true extreme points, not guaranteed
minimal, which is all the convex-hull machinery downstream needs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import _pair_list, deterministic_matrix, enumerate_orders
from .errors import ArgumentError, ResourceLimitError
from . import lp

DEFAULT_GRID_CAP = 5

MODEL_ALIASES = {
    "ss": "ss",
    "css": "ss",
    "mu": "mu",
    "cmu": "mu",
    "wu": "wu",
    "cwu": "wu",
    "ru": "ru",
}


@dataclass(frozen=True)
class VertexSet:
    """Grid points (doubled integer scale) generating a model's convex hull."""

    model: str
    n: int
    points_doubled: np.ndarray  # K x m int8, entries in {0,1,2}; sorted, deduplicated

    def __post_init__(self):
        pts = np.asarray(self.points_doubled, dtype=np.int8)
        object.__setattr__(self, "points_doubled", pts)

    def __len__(self) -> int:
        return self.points_doubled.shape[0]

    def to_float(self) -> np.ndarray:
        return self.points_doubled.astype(float) / 2.0

    def contains_point(self, doubled_row) -> bool:
        """Exact set membership of one doubled grid point (lexicographic bisection)."""
        row = np.asarray(doubled_row, dtype=np.int8)
        pts = self.points_doubled
        lo, hi = 0, len(pts)
        key = tuple(int(v) for v in row)
        while lo < hi:
            mid = (lo + hi) // 2
            probe = tuple(int(v) for v in pts[mid])
            if probe < key:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(pts) and tuple(int(v) for v in pts[lo]) == key

    def to_json(self) -> str:
        names = {0: "0", 1: "1/2", 2: "1"}
        return json.dumps(
            {
                "model": self.model,
                "n": self.n,
                "points": [[names[int(v)] for v in row] for row in self.points_doubled],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "VertexSet":
        d = json.loads(text)
        back = {"0": 0, "1/2": 1, "1": 2}
        pts = np.array([[back[v] for v in row] for row in d["points"]], dtype=np.int8)
        return cls(d["model"], d["n"], pts)


def _grid(m: int) -> np.ndarray:
    """All 3^m grid points on the doubled scale, lexicographically sorted."""
    digits = np.arange(3 ** m, dtype=np.int64)
    out = np.empty((3 ** m, m), dtype=np.int8)
    for t in range(m - 1, -1, -1):
        out[:, t] = digits % 3
        digits //= 3
    return out


def _order_mask(grid: np.ndarray, n: int, model: str, ranked0: list[int]) -> np.ndarray:
    """Which grid rows satisfy the model's closed conditions for one order."""
    pairs = _pair_list(n)
    pidx = {p: t for t, p in enumerate(pairs)}

    def oriented(a: int, b: int) -> np.ndarray:
        if a < b:
            return grid[:, pidx[(a, b)]].astype(np.int16)
        return (2 - grid[:, pidx[(b, a)]]).astype(np.int16)

    ok = np.ones(grid.shape[0], dtype=bool)
    for r1 in range(n):
        for r2 in range(r1 + 1, n):
            ok &= oriented(ranked0[r1], ranked0[r2]) >= 1
    if model != "wu":
        for r1, r2, r3 in itertools.combinations(range(n), 3):
            ab = oriented(ranked0[r1], ranked0[r2])
            bc = oriented(ranked0[r2], ranked0[r3])
            ac = oriented(ranked0[r1], ranked0[r3])
            bound = np.maximum(ab, bc) if model == "ss" else np.minimum(ab, bc)
            ok &= ac >= bound
    return ok


def enumerate_vertices(
    model: str,
    n: int,
    cap: int = DEFAULT_GRID_CAP,
    allow_large: bool = False,
    order=None,
) -> VertexSet:
    """Hull-generating vertex set of a model on the {0, 1/2, 1}^m grid.

    For "ru" this is the n! deterministic vectors. Collective model names
    (css/cmu/cwu) alias their individual counterparts, since the collective
    set is the hull of the same points. With ``order`` given, only the grid
    points of that single order's polytope(s) are returned.

    The 3^m scan is capped at n <= cap (default 5); pass allow_large=True
    for n = 6 (3^15 candidates, noticeably slower).
    """
    key = model.lower()
    if key not in MODEL_ALIASES:
        raise ArgumentError(f"unknown model {model!r}")
    base = MODEL_ALIASES[key]
    if base == "ru":
        if order is not None:
            raise ArgumentError("deterministic vertices are not order-restricted")
        pts = (2 * deterministic_matrix(n)).astype(np.int8)
        pts = np.unique(pts, axis=0)
        return VertexSet(model, n, pts)
    if n > cap and not allow_large:
        raise ResourceLimitError(
            f"grid enumeration is 3^{n * (n - 1) // 2} candidates; capped at n <= {cap} "
            "(pass allow_large=True to override)"
        )
    grid = _grid(n * (n - 1) // 2)
    if order is not None:
        ranked0 = [o - 1 for o in order.ranked_options()]
        mask = _order_mask(grid, n, base, ranked0)
    else:
        mask = np.zeros(grid.shape[0], dtype=bool)
        for o in enumerate_orders(n):
            ranked0 = [opt - 1 for opt in o.ranked_options()]
            mask |= _order_mask(grid, n, base, ranked0)
    return VertexSet(model, n, grid[mask])


@lru_cache(maxsize=None)
def cached_vertices(model: str, n: int) -> VertexSet:
    return enumerate_vertices(model, n)


def hull_contains(
    vertex_set: VertexSet | np.ndarray,
    point,
    tol: float = 1e-9,
    backend: str = lp.DEFAULT_BACKEND,
) -> tuple[bool, np.ndarray | None]:
    """LP decision of point-in-convex-hull, returning convex weights when inside.

    Minimizes the L1 residual || V'w - p ||_1 over the weight simplex and
    accepts iff the verified sup-norm residual of the solution is <= tol.
    """
    V = vertex_set.to_float() if isinstance(vertex_set, VertexSet) else np.asarray(vertex_set, float)
    point = np.asarray(point, dtype=float)
    K, m = V.shape
    # vars: w (K), u (m), v (m); rows: V'w + u - v = p ; sum w = 1
    A_eq = np.zeros((m + 1, K + 2 * m))
    A_eq[:m, :K] = V.T
    A_eq[:m, K : K + m] = np.eye(m)
    A_eq[:m, K + m :] = -np.eye(m)
    A_eq[m, :K] = 1.0
    b_eq = np.concatenate([point, [1.0]])
    c = np.concatenate([np.zeros(K), np.ones(2 * m)])
    res = lp.require_optimal(lp.solve(c, A_eq=A_eq, b_eq=b_eq, backend=backend), "hull membership")
    w = res.x[:K]
    residual = float(np.max(np.abs(V.T @ w - point)))
    if residual <= tol and abs(w.sum() - 1.0) <= tol and w.min() >= -tol:
        return True, w
    return False, None


@dataclass(frozen=True)
class ContainmentResult:
    contained: bool
    lp_checked: int
    exact_lookups: int
    witness: tuple | None  # first vertex (doubled ints) found outside, if any


@dataclass(frozen=True)
class NestingReport:
    n: int
    containments: dict
    conv_ss_eq_conv_mu: bool
    ru_subset_css: bool

    def summary(self) -> str:
        lines = [f"nesting report for n = {self.n}"]
        for (a, b), res in self.containments.items():
            mark = "yes" if res.contained else "NO "
            extra = f" (LP checks: {res.lp_checked}, exact: {res.exact_lookups})"
            if res.witness is not None:
                extra += f" witness (doubled): {res.witness}"
            lines.append(f"  {a} within conv({b}): {mark}{extra}")
        lines.append(f"  conv(P_SS) == conv(P_MU): {self.conv_ss_eq_conv_mu}")
        lines.append(f"  deterministic set within conv(P_SS): {self.ru_subset_css}")
        return "\n".join(lines)


def _containment(
    first: VertexSet,
    second: VertexSet,
    tol: float,
    lp_column_cap: int,
    stop_at_witness: bool,
) -> ContainmentResult:
    """Is every vertex of ``first`` inside conv(``second``)?

    Each containment is decided by the hull LP; when the second set is wider
    than ``lp_column_cap`` columns, vertices that are literally elements of
    the second set are resolved by exact lookup instead (weight 1 on
    themselves), and only the remainder goes through the LP.
    """
    V2 = second.to_float()
    use_lookup = len(second) > lp_column_cap
    second_keys = {tuple(int(v) for v in row) for row in second.points_doubled} if use_lookup else None
    lp_checked = 0
    exact = 0
    witness = None
    contained = True
    for row in first.points_doubled:
        if use_lookup and tuple(int(v) for v in row) in second_keys:
            exact += 1
            continue
        inside, _ = hull_contains(V2, row.astype(float) / 2.0, tol=tol)
        lp_checked += 1
        if not inside:
            contained = False
            if witness is None:
                witness = tuple(int(v) for v in row)
            if stop_at_witness:
                break
    return ContainmentResult(contained, lp_checked, exact, witness)


def verify_nesting(
    n: int,
    tol: float = 1e-9,
    lp_column_cap: int = 6000,
    stop_at_witness: bool = True,
) -> NestingReport:
    """Pairwise hull containments between RU/SS/MU/WU vertex sets at this n.

    Expected picture for n <= 5: the deterministic (RU) set and P_SS generate
    the same hull as P_MU, all strictly inside conv(P_WU).
    """
    if n > 5:
        raise ResourceLimitError("nesting verification supported for n <= 5")
    sets = {name: cached_vertices(name, n) for name in ("ru", "ss", "mu", "wu")}
    pairs = [
        ("ru", "ss"),
        ("ss", "mu"),
        ("mu", "ss"),
        ("ss", "ru"),
        ("mu", "ru"),
        ("mu", "wu"),
        ("wu", "mu"),
        ("wu", "ss"),
    ]
    containments = {}
    for a, b in pairs:
        containments[(a, b)] = _containment(
            sets[a], sets[b], tol, lp_column_cap, stop_at_witness
        )
    report = NestingReport(
        n=n,
        containments=containments,
        conv_ss_eq_conv_mu=containments[("ss", "mu")].contained
        and containments[("mu", "ss")].contained,
        ru_subset_css=containments[("ru", "ss")].contained,
    )
    return report
