"""Collective rationalizability: membership tests, projections, and n=3 closed forms.

A choice vector is collectively rationalizable by a model iff it lies in the
convex hull of the model's individual rationalizable set. Membership is
decided two independent ways:

* ``membership_balas`` - feasibility of the lifted linear system with one
  scaled copy of each individual polytope and simplex weights;
* ``membership_vertex`` - convex weights over the {0, 1/2, 1} vertex set.

For n = 3 the hulls have closed facet descriptions (a cyclic triple sum
bounded on both sides), exposed as ``facet_check_n3``; for the SS/MU hulls
the same triple-sum description extends to n <= 5, which powers the
vectorized fast paths used by the volume and scan machinery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lp
from .core import ChoiceVector, _pair_index0, _pair_list, enumerate_orders
from .errors import ArgumentError, ResourceLimitError, SolverError
from .transitivity import (
    HPolytope,
    all_polytopes,
    build_cube,
    build_mu_simplexes,
    build_ss_polytope,
)
from .vertices import cached_vertices, hull_contains
from .core import deterministic_vector

TOL = 1e-9

MODELS_COLLECTIVE = ("css", "cmu", "cwu")

# the SS/MU hulls coincide for n <= 5 and share the triple-sum facets there
TRIANGLE_FACET_RANGE = {"css": 5, "cmu": 5, "cwu": 3}


def _canon_model(model: str) -> str:
    key = model.lower()
    if key not in MODELS_COLLECTIVE:
        raise ArgumentError(f"unknown collective model {model!r} (expected css/cmu/cwu)")
    return key


# ---------------------------------------------------------------------------
# Facet descriptions (triangle slabs) and closed n=3 checks
# ---------------------------------------------------------------------------


def _triangle_slabs(n: int, model: str) -> list[tuple[np.ndarray, float, float, str]]:
    """(g, lo, hi, name) per option triple: lo <= g . rho <= hi.

    The directed cyclic sum rho(i,j) + rho(j,k) + rho(k,i) lies in [1, 2]
    for the SS/MU hull and [1/2, 5/2] for the WU hull; folding the constant
    from rho(k,i) = 1 - rho(i,k) gives the slab on canonical coordinates.
    """
    m = n * (n - 1) // 2
    lo, hi = (0.0, 1.0) if model in ("css", "cmu") else (-0.5, 1.5)
    out = []
    for i, j, k in itertools.combinations(range(n), 3):
        g = np.zeros(m)
        g[_pair_index0(i, j, n)] = 1.0
        g[_pair_index0(j, k, n)] = 1.0
        g[_pair_index0(i, k, n)] = -1.0
        out.append((g, lo, hi, f"triple(x{i + 1},x{j + 1},x{k + 1})"))
    return out


def facet_polytope(model: str, n: int) -> HPolytope:
    """H-representation (box + triangle slabs) of the collective hull, where known."""
    model = _canon_model(model)
    if n > TRIANGLE_FACET_RANGE[model]:
        raise ArgumentError(
            f"no closed facet description for {model} at n = {n}"
        )
    m = n * (n - 1) // 2
    rows = [np.eye(m), -np.eye(m)]
    rhs = [np.ones(m), np.zeros(m)]
    for g, lo, hi, _ in _triangle_slabs(n, model):
        rows.append(g[None, :])
        rhs.append(np.array([hi]))
        rows.append(-g[None, :])
        rhs.append(np.array([-lo]))
    return HPolytope(np.vstack(rows), np.concatenate(rhs), {"model": model.upper(), "n": n})


def facet_check_n3(rho: ChoiceVector, model: str, tol: float = TOL) -> bool:
    """Closed-form membership for n = 3: box plus the cyclic sum bound.

    CSS/CMU: 1 <= rho(x1,x2) + rho(x2,x3) + rho(x3,x1) <= 2;
    CWU:   1/2 <= same sum <= 5/2.
    """
    model = _canon_model(model)
    if rho.n != 3:
        raise ArgumentError(f"facet_check_n3 needs n = 3, got n = {rho.n}")
    v = rho.values
    if v.min() < -tol or v.max() > 1 + tol:
        return False
    s = v[0] + v[2] + (1.0 - v[1])
    lo, hi = (1.0, 2.0) if model in ("css", "cmu") else (0.5, 2.5)
    return bool(lo - tol <= s <= hi + tol)


def triangle_membership_mask(
    P: np.ndarray, n: int, model: str, tol: float = TOL
) -> np.ndarray:
    """Vectorized hull membership via the triangle facets (valid range only)."""
    model = _canon_model(model)
    if n > TRIANGLE_FACET_RANGE[model]:
        raise ArgumentError(f"triangle facets unavailable for {model} at n = {n}")
    P = np.asarray(P, dtype=float)
    ok = np.all((P >= -tol) & (P <= 1 + tol), axis=1)
    for g, lo, hi, _ in _triangle_slabs(n, model):
        s = P @ g
        ok &= (s >= lo - tol) & (s <= hi + tol)
    return ok


# ---------------------------------------------------------------------------
# Balas lift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityWitness:
    """Solution of the lifted system: per-order blocks rho_k and weights x.

    Interpreted as a population: order k contributes a type with weight x_k
    and individual choice rule rho_k / x_k whenever x_k is non-negligible.
    """

    model: str
    n: int
    block_rho: np.ndarray  # B x m
    weights: np.ndarray  # B
    block_labels: tuple

    def population(self, min_weight: float = 1e-9) -> list[tuple[float, np.ndarray, dict]]:
        out = []
        for k in range(len(self.weights)):
            w = float(self.weights[k])
            if w > min_weight:
                out.append((w, self.block_rho[k] / w, dict(self.block_labels[k])))
        return out


@dataclass(frozen=True)
class _BalasSystem:
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    c: np.ndarray
    n_blocks: int
    m: int
    blocks: tuple  # (A_k, b_k, label) per block


@lru_cache(maxsize=None)
def _balas_system(model: str, n: int) -> _BalasSystem:
    model = _canon_model(model)
    if model == "cmu" and n > 4:
        raise ResourceLimitError(
            "the MU lift materializes n! * L simplex blocks; capped at n <= 4 "
            "(the vertex route gives identical answers)"
        )
    if model == "css":
        polys = [build_ss_polytope(o, k) for k, o in enumerate(enumerate_orders(n))]
    elif model == "cwu":
        polys = [build_cube(deterministic_vector(o), k) for k, o in enumerate(enumerate_orders(n))]
    else:
        polys = all_polytopes("mu", n)
    m = n * (n - 1) // 2
    B = len(polys)
    nv = B * m + B + 2 * m
    total_rows = sum(p.A.shape[0] for p in polys)
    A_ub = np.zeros((total_rows, nv))
    b_ub = np.zeros(total_rows)
    at = 0
    for k, p in enumerate(polys):
        r = p.A.shape[0]
        A_ub[at : at + r, k * m : (k + 1) * m] = p.A
        A_ub[at : at + r, B * m + k] = -p.b
        at += r
    A_eq = np.zeros((m + 1, nv))
    for k in range(B):
        A_eq[:m, k * m : (k + 1) * m] = np.eye(m)
    A_eq[:m, B * m + B : B * m + B + m] = np.eye(m)
    A_eq[:m, B * m + B + m :] = -np.eye(m)
    A_eq[m, B * m : B * m + B] = 1.0
    c = np.zeros(nv)
    c[B * m + B :] = 1.0
    return _BalasSystem(
        A_ub, b_ub, A_eq, c, B, m, tuple((p.A, p.b, tuple(p.label.items())) for p in polys)
    )


def _verify_witness(
    sys_: _BalasSystem, rho: np.ndarray, block_rho: np.ndarray, x: np.ndarray, tol: float
) -> bool:
    if abs(x.sum() - 1.0) > tol or x.min() < -tol:
        return False
    if np.max(np.abs(block_rho.sum(axis=0) - rho)) > tol:
        return False
    for k, (A_k, b_k, _) in enumerate(sys_.blocks):
        rk = block_rho[k]
        if rk.min() < -tol or rk.max() > x[k] + tol:
            return False
        if np.max(A_k @ rk - x[k] * b_k) > tol:
            return False
    return True


def membership_balas(
    rho: ChoiceVector,
    model: str,
    tol: float = TOL,
    backend: str = lp.DEFAULT_BACKEND,
) -> tuple[bool, FeasibilityWitness | None]:
    """Hull membership via feasibility of the disjunction lift.

    The lift is solved with L1 slack on the coupling equations, so the LP is
    always feasible; membership holds iff the optimal slack vanishes and the
    recovered witness verifies against every lifted inequality at ``tol``.
    """
    model = _canon_model(model)
    sys_ = _balas_system(model, rho.n)
    b_eq = np.concatenate([rho.values, [1.0]])
    res = lp.require_optimal(
        lp.solve(sys_.c, sys_.A_ub, sys_.b_ub, sys_.A_eq, b_eq, backend=backend),
        "balas membership",
    )
    B, m = sys_.n_blocks, sys_.m
    block_rho = res.x[: B * m].reshape(B, m)
    x = res.x[B * m : B * m + B]
    if res.obj > m * tol:
        return False, None
    if not _verify_witness(sys_, rho.values, block_rho, x, max(tol, 1e-8)):
        return False, None
    labels = tuple(lbl for _, _, lbl in sys_.blocks)
    return True, FeasibilityWitness(model, rho.n, block_rho, x, labels)


def membership_vertex(
    rho: ChoiceVector,
    model: str,
    tol: float = TOL,
    backend: str = lp.DEFAULT_BACKEND,
) -> tuple[bool, np.ndarray | None]:
    """Hull membership via convex weights over the model's vertex set."""
    model = _canon_model(model)
    vs = cached_vertices(model, rho.n)
    return hull_contains(vs, rho.values, tol=tol, backend=backend)


def ru_membership(
    rho: ChoiceVector,
    tol: float = TOL,
    backend: str = lp.DEFAULT_BACKEND,
) -> tuple[bool, dict | None]:
    """Random-utility membership: convex weights over deterministic rules.

    Returns the mixing distribution keyed by preference tuples (best to
    worst, 1-based) when feasible. Capped at n <= 7 (n! columns).
    """
    n = rho.n
    if n > 7:
        raise ResourceLimitError("random-utility membership capped at n <= 7 (n! columns)")
    vs = cached_vertices("ru", n)
    inside, w = hull_contains(vs, rho.values, tol=tol, backend=backend)
    if not inside:
        return False, None
    orders = enumerate_orders(n)
    dets = np.array([deterministic_vector(o).values for o in orders])
    # map the vertex rows back to orders (vertex set is sorted/deduped)
    nu: dict[tuple, float] = {}
    pts = vs.to_float()
    for idx, weight in enumerate(w):
        if weight <= 1e-12:
            continue
        hits = np.where(np.all(np.abs(dets - pts[idx]) < 1e-12, axis=1))[0]
        key = orders[hits[0]].ranked_options()
        nu[key] = nu.get(key, 0.0) + float(weight)
    return True, nu


def membership(
    rho: ChoiceVector,
    model: str,
    method: str = "auto",
    tol: float = TOL,
) -> tuple[bool, object]:
    """Membership dispatcher: 'balas', 'vertex', 'facet', or 'auto'."""
    model = _canon_model(model)
    if method == "facet" or (
        method == "auto" and rho.n == 3
    ):
        if rho.n != 3:
            raise ArgumentError("facet method only available at n = 3")
        return facet_check_n3(rho, model, tol), None
    if method == "balas":
        return membership_balas(rho, model, tol)
    if method == "vertex" or method == "auto":
        return membership_vertex(rho, model, tol)
    raise ArgumentError(f"unknown membership method {method!r}")


# ---------------------------------------------------------------------------
# Projection (minimum-norm point in the hull)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionResult:
    projected: np.ndarray
    distance: float
    active: tuple
    method: str


def _dykstra(P: np.ndarray, n: int, model: str, tol: float = 1e-12, max_cycles: int = 20000):
    """Batch projection onto box-and-slabs hulls by Dykstra's alternating scheme."""
    slabs = _triangle_slabs(n, model)
    X = np.array(P, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    pieces = len(slabs) + 1
    corr = [np.zeros_like(X) for _ in range(pieces)]
    prev = None
    for _ in range(max_cycles):
        for s_i in range(pieces):
            Y = X + corr[s_i]
            if s_i == 0:
                Z = np.clip(Y, 0.0, 1.0)
            else:
                g, lo, hi, _ = slabs[s_i - 1]
                val = Y @ g
                shift = (np.clip(val, lo, hi) - val) / (g @ g)
                Z = Y + shift[:, None] * g
            corr[s_i] = Y - Z
            X = Z
        if prev is not None and np.max(np.abs(X - prev)) < tol:
            break
        prev = X.copy()
    return X


def _minnorm_frank_wolfe(
    V: np.ndarray, p: np.ndarray, gap_tol: float = 1e-10, max_iter: int = 100000
):
    """Away-step Frank-Wolfe for min ||x - p||^2 over conv(V) with exact line search."""
    K = V.shape[0]
    lam = np.zeros(K)
    start = int(np.argmin(((V - p) ** 2).sum(axis=1)))
    lam[start] = 1.0
    x = V[start].copy()
    for _ in range(max_iter):
        grad = 2.0 * (x - p)
        scores = V @ grad
        s = int(np.argmin(scores))
        fw_gap = float(grad @ x - scores[s])
        if fw_gap <= gap_tol:
            break
        support = np.nonzero(lam > 1e-15)[0]
        a = int(support[np.argmax(scores[support])])
        away_gap = float(scores[a] - grad @ x)
        if fw_gap >= away_gap:
            d = V[s] - x
            gamma_max = 1.0
            step_target = s
            away_from = None
        else:
            d = x - V[a]
            gamma_max = lam[a] / (1.0 - lam[a]) if lam[a] < 1.0 else 1.0
            step_target = None
            away_from = a
        denom = float(d @ d)
        if denom <= 0.0:
            break
        gamma = min(max(-(grad @ d) / (2.0 * denom), 0.0), gamma_max)
        if gamma <= 0.0:
            break
        x = x + gamma * d
        if away_from is None:
            lam *= 1.0 - gamma
            lam[step_target] += gamma
        else:
            lam *= 1.0 + gamma
            lam[away_from] -= gamma
            lam[away_from] = max(lam[away_from], 0.0)
    return x, lam


def project(
    rho: ChoiceVector,
    model: str,
    method: str = "auto",
    gap_tol: float = 1e-10,
) -> ProjectionResult:
    """Euclidean projection onto the collective hull (identity weighting).

    ``method='facet'`` uses Dykstra on the closed facet description (SS/MU
    hulls for n <= 5, WU hull for n = 3); ``method='vertex'`` runs away-step
    Frank-Wolfe over the vertex set; ``'auto'`` prefers facets when known.
    """
    model = _canon_model(model)
    n = rho.n
    if method == "auto":
        method = "facet" if n <= TRIANGLE_FACET_RANGE[model] else "vertex"
    p = rho.values
    if method == "facet":
        X = _dykstra(p[None, :], n, model)[0]
        dist = float(np.linalg.norm(p - X))
        active = tuple(
            name
            for g, lo, hi, name in _triangle_slabs(n, model)
            if min(X @ g - lo, hi - X @ g) < 1e-7
        )
        return ProjectionResult(X, dist, active, "facet")
    if method == "vertex":
        V = cached_vertices(model, n).to_float()
        x, lam = _minnorm_frank_wolfe(V, p, gap_tol=gap_tol)
        dist = float(np.linalg.norm(p - x))
        support = np.nonzero(lam > 1e-9)[0]
        active = tuple((int(i), float(lam[i])) for i in support)
        return ProjectionResult(x, dist, active, "vertex")
    raise ArgumentError(f"unknown projection method {method!r}")


def distance_batch(P: np.ndarray, n: int, model: str) -> np.ndarray:
    """Distances of many points to the collective hull (facet route required)."""
    model = _canon_model(model)
    if n > TRIANGLE_FACET_RANGE[model]:
        raise ResourceLimitError(
            f"batch projection needs the facet description ({model}, n = {n} unsupported)"
        )
    P = np.asarray(P, dtype=float)
    X = _dykstra(P, n, model)
    return np.linalg.norm(P - X, axis=1)


def phi(point: np.ndarray, n: int, model: str) -> float:
    """Distance transform used by the test statistic."""
    return float(distance_batch(np.asarray(point, float)[None, :], n, model)[0])
