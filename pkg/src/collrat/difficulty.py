"""Comparison-difficulty ranking machinery over loops of binary choices.

A loop visits options x_1 -> x_2 -> ... -> x_m -> x_1; its data are the
directed rates rho_j = rho(x_j, x_{j+1}). Whether a single agent can
rationalize the loop under a *given* ordinal ranking of per-pair comparison
difficulty reduces to a combinatorial condition: the positive-preference
index set must not ranking-dominate the negative one (nor vice versa) with
respect to the magnitude ranking and the difficulty ranking.

For n = 3 the loop covers all pairs, and the collective (heterogeneous
population, common difficulty ranking) version has a closed facet form: a
weighted cyclic sum with weight 2 on the hardest pair, bounded in [1, 3].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import ChoiceVector
from .errors import ArgumentError

TOL = 1e-9


@dataclass(frozen=True)
class RankingFunction:
    """Competition ranks of a value sequence: largest value ranks 1, ties share."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        m = len(self.ranks)
        if not all(1 <= r <= m for r in self.ranks):
            raise ArgumentError(f"ranks must lie in 1..{m}")

    @property
    def m(self) -> int:
        return len(self.ranks)

    def __call__(self, j: int) -> int:
        """Rank of 1-based index j."""
        return self.ranks[j - 1]


def ranking_function(values) -> RankingFunction:
    """rank(j) = #{k : values[j] < values[k]} + 1."""
    vals = list(values)
    if not vals:
        raise ArgumentError("cannot rank an empty sequence")
    ranks = tuple(sum(1 for other in vals if v < other) + 1 for v in vals)
    return RankingFunction(ranks)


def _dominance_counts(A, B, sigma: RankingFunction, pi: RankingFunction):
    """Cumulative count difference D[s, t] = #A - #B over rank boxes (<= s, <= t)."""
    m = sigma.m
    D = np.zeros((m + 1, m + 1), dtype=int)
    for j in A:
        D[sigma(j):, pi(j):] += 1
    for j in B:
        D[sigma(j):, pi(j):] -= 1
    return D[1:, 1:]


def ranking_dominates(A, B, sigma: RankingFunction, pi: RankingFunction) -> bool:
    """A ranking-dominates B: every top-left rank box holds at least as many
    A-indices as B-indices, strictly for some box."""
    if sigma.m != pi.m:
        raise ArgumentError("the two ranking functions must cover the same index set")
    D = _dominance_counts(set(A), set(B), sigma, pi)
    return bool(np.all(D >= 0) and np.any(D > 0))


def dominance_witness(A, B, sigma: RankingFunction, pi: RankingFunction):
    """A strict box (s, t) when A dominates B, else None."""
    if not ranking_dominates(A, B, sigma, pi):
        return None
    D = _dominance_counts(set(A), set(B), sigma, pi)
    s, t = np.argwhere(D > 0)[0]
    return (int(s) + 1, int(t) + 1)


@dataclass(frozen=True)
class LoopChoice:
    """Directed rates around a loop with their magnitudes and sign partition."""

    rates: tuple[float, ...]

    def __post_init__(self):
        if len(self.rates) < 3:
            raise ArgumentError("a loop needs at least three pairs")
        if min(self.rates) < 0.0 or max(self.rates) > 1.0:
            raise ArgumentError("loop rates must lie in [0, 1]")

    @property
    def m(self) -> int:
        return len(self.rates)

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(abs(r - 0.5) for r in self.rates)

    def sign_sets(self, tol: float = TOL):
        """(J+, J-, J0) as 1-based index sets."""
        plus, minus, zero = set(), set(), set()
        for j, r in enumerate(self.rates, start=1):
            if r > 0.5 + tol:
                plus.add(j)
            elif r < 0.5 - tol:
                minus.add(j)
            else:
                zero.add(j)
        return plus, minus, zero


@dataclass(frozen=True)
class LoopRankingVerdict:
    rationalizable: bool
    dominating: str | None  # "J+" or "J-" when rejected
    witness_box: tuple[int, int] | None
    j_plus: tuple[int, ...]
    j_minus: tuple[int, ...]
    j_zero: tuple[int, ...]
    magnitude_ranks: tuple[int, ...]
    necessity_assumption_violated: bool

    def to_dict(self) -> dict:
        return {
            "rationalizable": self.rationalizable,
            "dominating": self.dominating,
            "witness_box": list(self.witness_box) if self.witness_box else None,
            "j_plus": sorted(self.j_plus),
            "j_minus": sorted(self.j_minus),
            "j_zero": sorted(self.j_zero),
            "magnitude_ranks": list(self.magnitude_ranks),
            "necessity_assumption_violated": self.necessity_assumption_violated,
        }


def wu_loop_with_ranking(loop: LoopChoice, pi: RankingFunction, tol: float = TOL) -> LoopRankingVerdict:
    """Can a single agent rationalize the loop with difficulty ranking ``pi``?

    Yes iff neither sign set ranking-dominates the other with respect to
    (magnitude ranking, pi). Ties at 1/2 are excluded from the sign sets;
    when present the verdict is the sufficiency direction only, flagged via
    ``necessity_assumption_violated``.
    """
    if pi.m != loop.m:
        raise ArgumentError("difficulty ranking must cover every loop pair")
    sigma = ranking_function(loop.magnitudes)
    plus, minus, zero = loop.sign_sets(tol)
    plus_dom = ranking_dominates(plus, minus, sigma, pi)
    minus_dom = ranking_dominates(minus, plus, sigma, pi)
    rationalizable = not plus_dom and not minus_dom
    dominating = "J+" if plus_dom else ("J-" if minus_dom else None)
    witness = (
        dominance_witness(plus, minus, sigma, pi)
        if plus_dom
        else (dominance_witness(minus, plus, sigma, pi) if minus_dom else None)
    )
    return LoopRankingVerdict(
        rationalizable,
        dominating,
        witness,
        tuple(sorted(plus)),
        tuple(sorted(minus)),
        tuple(sorted(zero)),
        sigma.ranks,
        necessity_assumption_violated=bool(zero),
    )


# ---------------------------------------------------------------------------
# n = 3: collective version with a common difficulty ranking
# ---------------------------------------------------------------------------

_N3_PAIRS = {(1, 2): 0, (2, 3): 1, (1, 3): 2}


def _directed_triple(rho: ChoiceVector) -> np.ndarray:
    """Directed loop rates (rho(x1,x2), rho(x2,x3), rho(x3,x1))."""
    if rho.n != 3:
        raise ArgumentError(f"this operation needs n = 3, got n = {rho.n}")
    return np.array([rho.prob(1, 2), rho.prob(2, 3), rho.prob(3, 1)])


def _hardest_slot(hardest: tuple[int, int]) -> int:
    key = tuple(sorted(hardest))
    if key not in _N3_PAIRS:
        raise ArgumentError(f"{hardest!r} is not a pair over three options")
    return _N3_PAIRS[key]


def collective_wu_common_ranking_n3(
    rho: ChoiceVector, hardest: tuple[int, int], tol: float = TOL
) -> bool:
    """Membership in the collective WU hull when everyone shares a difficulty
    ranking whose hardest pair is ``hardest``.

    For hardest = (x1, x2): 1 <= 2 rho(x1,x2) + rho(x2,x3) + rho(x3,x1) <= 3,
    plus the box; the other two pairs re-index the weight-2 slot cyclically.
    """
    d = _directed_triple(rho)
    slot = _hardest_slot(hardest)
    s = d.sum() + d[slot]
    return bool(1.0 - tol <= s <= 3.0 + tol)


def identify_max_difficulty_pair_n3(
    rho: ChoiceVector, tol: float = TOL
) -> tuple[int, int] | None:
    """The pair exclusively identified as hardest, when one exists.

    For a candidate pair with directed rate h (others r, s), exclusivity
    holds iff one of the two systems is satisfied:

        (A) 2h + r + s <= 3,  h + 2r + s >= 3,  h + r + 2s >= 3
        (B) 2h + r + s >= 1,  h + 2r + s <= 1,  h + r + 2s <= 1
    """
    d = _directed_triple(rho)
    total = d.sum()
    hits = []
    for pair, slot in _N3_PAIRS.items():
        weighted = total + d  # weighted[q] = total + d[q] = cyclic sum with 2 on q
        own = weighted[slot]
        others = [weighted[q] for q in range(3) if q != slot]
        system_a = own <= 3.0 + tol and all(o >= 3.0 - tol for o in others)
        system_b = own >= 1.0 - tol and all(o <= 1.0 + tol for o in others)
        if system_a or system_b:
            hits.append(pair)
    if len(hits) == 1:
        return hits[0]
    return None


# ---------------------------------------------------------------------------
# Loops inside a full pairing
# ---------------------------------------------------------------------------


def _simple_cycles(n: int, max_len: int):
    """Simple cycles (as option tuples, 1-based) up to rotation and reflection."""
    for length in range(3, min(max_len, n) + 1):
        for combo in itertools.combinations(range(1, n + 1), length):
            first = combo[0]
            rest = combo[1:]
            for perm in itertools.permutations(rest):
                if length > 2 and perm[0] > perm[-1]:
                    continue  # fix reflection
                yield (first,) + perm


def scan_loops(
    rho: ChoiceVector,
    difficulty_rank_of_pair,
    max_len: int = 4,
) -> list[dict]:
    """Necessary-condition failures over all simple loops up to ``max_len``.

    ``difficulty_rank_of_pair`` maps an unordered 1-based pair (i, j), i < j,
    to a comparable difficulty score (higher = harder); only its ordinal
    content is used. Each failing loop is reported with its verdict; loops
    passing the condition are omitted (the loop test is only necessary for
    full-pairing rationalizability).
    """
    failures = []
    for cycle in _simple_cycles(rho.n, max_len):
        rates = []
        scores = []
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            rates.append(rho.prob(a, b))
            scores.append(difficulty_rank_of_pair(min(a, b), max(a, b)))
        pi = ranking_function(scores)
        verdict = wu_loop_with_ranking(LoopChoice(tuple(rates)), pi)
        if not verdict.rationalizable:
            failures.append({"loop": list(cycle), "verdict": verdict.to_dict()})
    return failures
