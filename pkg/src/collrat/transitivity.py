"""Stochastic transitivity checks and half-space polytopes of individual rationalizability.

Three nested conditions are checked on a choice vector (x, y, z range over
ordered triples of distinct options; the hypothesis is min{rho(x,y),
rho(y,z)} >= 1/2):

* strong:   rho(x,z) >= max{rho(x,y), rho(y,z)}
* moderate: rho(x,z) >  min{rho(x,y), rho(y,z)}  or  all three equal
* weak:     rho(x,z) >= 1/2

All comparisons are closed (weak inequalities with a small tolerance): the
rationalizable sets are used through their closures everywhere, so boundary
ties count as satisfied wherever a closed version of the condition holds.

The same conditions are also materialized as explicit H-polytopes
{rho : A rho <= b}, one per preference order (and per magnitude ordering
for the moderate model, whose region within a cube is a union of simplexes).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ChoiceVector,
    DeterministicChoiceVector,
    LinearOrder,
    PairIndexer,
    _pair_index0,
    _pair_list,
    deterministic_vector,
    enumerate_orders,
)
from .errors import ArgumentError, ResourceLimitError

TOL = 1e-9

MODELS_INDIVIDUAL = ("ss", "mu", "wu")

DEFAULT_MU_COUNT_CAP = 5
DEFAULT_MU_BUILD_CAP = 4


@dataclass(frozen=True)
class Violation:
    """One failed transitivity condition on the ordered triple (x, y, z)."""

    triple: tuple[int, int, int]
    condition: str


@dataclass(frozen=True)
class TransitivityReport:
    satisfied: bool
    violations: tuple[Violation, ...]

    def __post_init__(self):
        assert self.satisfied == (len(self.violations) == 0)


def _triple_scan(rho: ChoiceVector, level: str, tol: float) -> TransitivityReport:
    n = rho.n
    violations = []
    for x, y, z in itertools.permutations(range(1, n + 1), 3):
        rxy = rho.prob(x, y)
        ryz = rho.prob(y, z)
        rxz = rho.prob(x, z)
        if min(rxy, ryz) < 0.5 - tol:
            continue
        lo = min(rxy, ryz)
        hi = max(rxy, ryz)
        if level == "wu":
            if rxz < 0.5 - tol:
                violations.append(
                    Violation((x, y, z), f"rho(x{x},x{z}) = {rxz:.6g} < 1/2")
                )
        elif level == "ss":
            if rxz < hi - tol:
                violations.append(
                    Violation(
                        (x, y, z),
                        f"rho(x{x},x{z}) = {rxz:.6g} < max = {hi:.6g}",
                    )
                )
        elif level == "mu":
            all_equal = abs(rxz - rxy) <= tol and abs(rxz - ryz) <= tol
            if not (rxz > lo - tol) and not all_equal:
                violations.append(
                    Violation(
                        (x, y, z),
                        f"rho(x{x},x{z}) = {rxz:.6g} <= min = {lo:.6g} and not all equal",
                    )
                )
        else:
            raise ArgumentError(f"unknown transitivity level {level!r}")
    return TransitivityReport(not violations, tuple(violations))


def check_wst(rho: ChoiceVector, tol: float = TOL) -> TransitivityReport:
    """Weak stochastic transitivity: the majority preference has no cycles."""
    return _triple_scan(rho, "wu", tol)


def check_mst(rho: ChoiceVector, tol: float = TOL) -> TransitivityReport:
    """Moderate stochastic transitivity (the exact disjunction with an equality arm)."""
    return _triple_scan(rho, "mu", tol)


def check_sst(rho: ChoiceVector, tol: float = TOL) -> TransitivityReport:
    """Strong stochastic transitivity, closed form: rho(x,z) >= max of the chain."""
    return _triple_scan(rho, "ss", tol)


def check(rho: ChoiceVector, model: str, tol: float = TOL) -> TransitivityReport:
    model = model.lower()
    if model == "ss":
        return check_sst(rho, tol)
    if model == "mu":
        return check_mst(rho, tol)
    if model == "wu":
        return check_wst(rho, tol)
    raise ArgumentError(f"unknown individual model {model!r}")


# ---------------------------------------------------------------------------
# H-polytopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HPolytope:
    """Closed polytope {rho in R^m : A rho <= b}, contained in [0,1]^m."""

    A: np.ndarray
    b: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ArgumentError("A and b are dimensionally inconsistent")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ArgumentError("polytope rows must be finite")

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def contains(self, point: np.ndarray, tol: float = TOL) -> bool:
        return bool(np.all(self.A @ np.asarray(point, float) <= self.b + tol))

    def to_json(self) -> str:
        return json.dumps(
            {"A": self.A.tolist(), "b": self.b.tolist(), "label": self.label}
        )

    @classmethod
    def from_json(cls, text: str) -> "HPolytope":
        d = json.loads(text)
        return cls(np.array(d["A"]), np.array(d["b"]), d.get("label", {}))


def _orient(i0: int, j0: int, n: int) -> tuple[int, float, float]:
    """(column, sign, offset) with rho(x_i, x_j) = sign * rho[col] + offset, 0-based."""
    if i0 < j0:
        return _pair_index0(i0, j0, n), 1.0, 0.0
    return _pair_index0(j0, i0, n), -1.0, 1.0


def _leq_row(n: int, left: tuple[int, int], right: tuple[int, int]):
    """Row (a, c) encoding rho(left) <= rho(right) over the canonical vector.

    This realizes the sign/offset case table for oriented differences: each
    side is rewritten as sign * rho[col] + offset before moving everything
    to the standard form a . rho <= c.
    """
    a = np.zeros(n * (n - 1) // 2)
    c1, s1, o1 = _orient(left[0], left[1], n)
    c2, s2, o2 = _orient(right[0], right[1], n)
    a[c1] += s1
    a[c2] -= s2
    return a, o2 - o1


def _cube_rows(det: DeterministicChoiceVector) -> tuple[np.ndarray, np.ndarray]:
    """2m rows for |rho_t - rho*_t| <= 1/2 intersected with the [0,1]^m box."""
    vals = det.values
    m = len(vals)
    A = np.zeros((2 * m, m))
    b = np.zeros(2 * m)
    for t in range(m):
        lower = max(0.0, vals[t] - 0.5)
        upper = min(1.0, vals[t] + 0.5)
        A[2 * t, t] = 1.0
        b[2 * t] = upper
        A[2 * t + 1, t] = -1.0
        b[2 * t + 1] = -lower
    return A, b


def build_cube(det: DeterministicChoiceVector, order_index: int | None = None) -> HPolytope:
    """Hypercube of choice vectors inheriting the transitive ordering of ``det``."""
    A, b = _cube_rows(det)
    label = {"model": "WU", "n": det.n}
    if order_index is not None:
        label["k"] = order_index
    return HPolytope(A, b, label)


def build_ss_polytope(order: LinearOrder, order_index: int | None = None) -> HPolytope:
    """Cube rows plus, per ranked triple a > b > c, rho(a,b) <= rho(a,c) and rho(b,c) <= rho(a,c)."""
    n = order.n
    det = deterministic_vector(order)
    A_cube, b_cube = _cube_rows(det)
    ranked = [o - 1 for o in order.ranked_options()]
    rows = []
    rhs = []
    for u, v, w in itertools.combinations(range(n), 3):
        a, b_, c = ranked[u], ranked[v], ranked[w]
        for left, right in (((a, b_), (a, c)), ((b_, c), (a, c))):
            row, cval = _leq_row(n, left, right)
            rows.append(row)
            rhs.append(cval)
    A = np.vstack([A_cube, np.array(rows)])
    b = np.concatenate([b_cube, np.array(rhs)])
    label = {"model": "SS", "n": n}
    if order_index is not None:
        label["k"] = order_index
    return HPolytope(A, b, label)


def mu_orderings(n: int, cap: int = DEFAULT_MU_COUNT_CAP) -> list[tuple[int, ...]]:
    """Magnitude orderings (ascending chains of canonical pair ids) surviving the MU filter.

    A chain tau lists pair ids from smallest to largest choice-rate magnitude.
    It survives iff for every option triple i < j < k the pair (i, k) does not
    precede both (i, j) and (j, k): position(i,k) >= min of the other two.
    Enumeration is a depth-first backtracking with that pruning rule, so the
    output order is deterministic.
    """
    if n < 2:
        raise ArgumentError("need n >= 2")
    if n > cap:
        raise ResourceLimitError(
            f"MU magnitude-ordering enumeration capped at n <= {cap} (m! growth)"
        )
    pairs = _pair_list(n)
    m = len(pairs)
    pidx = {p: t for t, p in enumerate(pairs)}
    # for each "long" pair (i,k): the (i,j)/(j,k) pairs of its middles
    mids: list[list[tuple[int, int]]] = []
    for (i, k) in pairs:
        mids.append([(pidx[(i, j)], pidx[(j, k)]) for j in range(i + 1, k)])
    placed = [False] * m
    chain: list[int] = []
    out: list[tuple[int, ...]] = []

    def rec():
        if len(chain) == m:
            out.append(tuple(chain))
            return
        for t in range(m):
            if placed[t]:
                continue
            if any(not (placed[ab] or placed[bc]) for ab, bc in mids[t]):
                continue
            placed[t] = True
            chain.append(t)
            rec()
            chain.pop()
            placed[t] = False

    rec()
    return out


def mu_ordering_count(n: int, cap: int = DEFAULT_MU_COUNT_CAP) -> int:
    """Number L of magnitude orderings per cube that satisfy the MU filter."""
    if n == 2:
        return 1
    return len(mu_orderings(n, cap=cap))


def build_mu_simplexes(
    order: LinearOrder,
    order_index: int | None = None,
    cap: int = DEFAULT_MU_BUILD_CAP,
) -> list[HPolytope]:
    """One simplex polytope per surviving magnitude ordering, inside the order's cube.

    Within the cube of a preference order all relabeled rates are >= 1/2, so a
    magnitude chain becomes a chain of plain inequalities between re-oriented
    coordinates. Materializing n!.L polytopes explodes quickly; the default
    cap keeps n <= 4 (L(4) = 176), raise ``cap`` explicitly for more.
    """
    n = order.n
    if n > cap:
        raise ResourceLimitError(
            f"building MU simplexes is capped at n <= {cap}; raise `cap` explicitly"
        )
    det = deterministic_vector(order)
    A_cube, b_cube = _cube_rows(det)
    ranked = [o - 1 for o in order.ranked_options()]
    pairs = _pair_list(n)
    out = []
    for ell, chain in enumerate(mu_orderings(n, cap=max(cap, DEFAULT_MU_COUNT_CAP))):
        rows = []
        rhs = []
        for t in range(len(chain) - 1):
            r1, r2 = pairs[chain[t]]
            s1, s2 = pairs[chain[t + 1]]
            left = (ranked[r1], ranked[r2])
            right = (ranked[s1], ranked[s2])
            row, cval = _leq_row(n, left, right)
            rows.append(row)
            rhs.append(cval)
        A = np.vstack([A_cube, np.array(rows)])
        b = np.concatenate([b_cube, np.array(rhs)])
        label = {"model": "MU", "n": n, "l": ell}
        if order_index is not None:
            label["k"] = order_index
        out.append(HPolytope(A, b, label))
    return out


def all_polytopes(model: str, n: int, cap: int = DEFAULT_MU_BUILD_CAP) -> list[HPolytope]:
    """Every polytope of the model's rationalizable union, over all n! orders."""
    model = model.lower()
    out = []
    for k, order in enumerate(enumerate_orders(n)):
        if model == "wu":
            out.append(build_cube(deterministic_vector(order), order_index=k))
        elif model == "ss":
            out.append(build_ss_polytope(order, order_index=k))
        elif model == "mu":
            out.extend(build_mu_simplexes(order, order_index=k, cap=cap))
        else:
            raise ArgumentError(f"unknown individual model {model!r}")
    return out


# ---------------------------------------------------------------------------
# Vectorized membership in the closed rationalizable unions
# ---------------------------------------------------------------------------


def _canonicalize(P: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Copeland canonicalization of a batch of choice vectors.

    Returns (acyclic, Q): ``acyclic[b]`` flags a strict-majority digraph that
    is a transitive tournament (distinct win counts), in which case row b of
    Q holds the rates relabeled to the induced order, all >= 1/2. Only valid
    for points with no rate exactly 1/2 (ties make other orders admissible).
    """
    pairs = _pair_list(n)
    B = P.shape[0]
    R = np.zeros((B, n, n))
    for t, (i, j) in enumerate(pairs):
        R[:, i, j] = P[:, t]
        R[:, j, i] = 1.0 - P[:, t]
    wins = (R > 0.5).sum(axis=2)
    acyclic = np.all(np.sort(wins, axis=1) == np.arange(n), axis=1)
    inv = np.argsort(-wins, axis=1, kind="stable")  # option at each rank
    Q = np.empty((B, len(pairs)))
    rows = np.arange(B)
    for t, (r1, r2) in enumerate(pairs):
        Q[:, t] = R[rows, inv[:, r1], inv[:, r2]]
    return acyclic, Q


def _member_single(point: np.ndarray, n: int, model: str, tol: float) -> bool:
    """Exact per-order membership in the closed union (handles 1/2 ties)."""
    pairs = _pair_list(n)
    for order in enumerate_orders(n):
        ranked = [o - 1 for o in order.ranked_options()]

        def oc(r1, r2):
            c, s, o = _orient(ranked[r1], ranked[r2], n)
            return s * point[c] + o

        if any(oc(r1, r2) < 0.5 - tol for r1, r2 in pairs):
            continue
        ok = True
        if model != "wu":
            for r1, r2, r3 in itertools.combinations(range(n), 3):
                ab, bc, ac = oc(r1, r2), oc(r2, r3), oc(r1, r3)
                bound = max(ab, bc) if model == "ss" else min(ab, bc)
                if ac < bound - tol:
                    ok = False
                    break
        if ok:
            return True
    return False


def rationalizable_mask(P: np.ndarray, n: int, model: str, tol: float = TOL) -> np.ndarray:
    """Membership of each row of P in the closed rationalizable set of a model.

    Fast path: canonicalize by the majority order and check the chain
    conditions there. Rows containing a rate within ``tol`` of 1/2 fall back
    to an exact scan over all orders, since several cubes may contain them.
    """
    model = model.lower()
    if model not in MODELS_INDIVIDUAL:
        raise ArgumentError(f"unknown individual model {model!r}")
    P = np.asarray(P, dtype=float)
    ties = np.any(np.abs(P - 0.5) <= tol, axis=1)
    acyclic, Q = _canonicalize(P, n)
    result = acyclic.copy()
    if model != "wu":
        pairs = _pair_list(n)
        pidx = {p: t for t, p in enumerate(pairs)}
        for r1, r2, r3 in itertools.combinations(range(n), 3):
            ab = Q[:, pidx[(r1, r2)]]
            bc = Q[:, pidx[(r2, r3)]]
            ac = Q[:, pidx[(r1, r3)]]
            bound = np.maximum(ab, bc) if model == "ss" else np.minimum(ab, bc)
            result &= ac >= bound - tol
    for b in np.nonzero(ties)[0]:
        result[b] = _member_single(P[b], n, model, tol)
    return result
