"""Option sets, canonical pair indexing, and choice-vector arithmetic.

Options are numbered 1..n (written x_1..x_n) in a fixed order. A binary
stochastic choice rule over n options is a vector in [0,1]^m, m = n(n-1)/2,
whose entry for the pair (i, j), i < j, is the probability that x_i is
chosen over x_j. Pairs are arranged lexicographically:

    n = 4:  (1,2) (1,3) (1,4) (2,3) (2,4) (3,4)  ->  t = 0..5

Every module of the package indexes pairs through this single convention;
reversed orientations are always handled via rho(j, i) = 1 - rho(i, j).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ResourceLimitError

DEFAULT_ORDER_CAP = 7


def _pair_list(n: int) -> list[tuple[int, int]]:
    """0-based lexicographic pair list [(0,1), (0,2), ..., (n-2,n-1)]."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _pair_index0(i: int, j: int, n: int) -> int:
    """0-based pair index of 0-based options i < j."""
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def _orient_tables(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lookup tables for oriented access rho(a, b) = sign * v[col] + offset.

    Returns (col, sign, offset), each an n x n array over 0-based options;
    the diagonal is unused.
    """
    col = np.zeros((n, n), dtype=np.int64)
    sign = np.zeros((n, n))
    offset = np.zeros((n, n))
    for t, (i, j) in enumerate(_pair_list(n)):
        col[i, j] = t
        sign[i, j] = 1.0
        col[j, i] = t
        sign[j, i] = -1.0
        offset[j, i] = 1.0
    return col, sign, offset


def pair_index(i: int, j: int, n: int) -> int:
    """Canonical index t of the pair (x_i, x_j), 1 <= i < j <= n.

    Inverse of :func:`pair_of`.
    """
    if not (1 <= i < j <= n):
        raise ArgumentError(f"need 1 <= i < j <= n, got (i, j) = ({i}, {j}) with n = {n}")
    return _pair_index0(i - 1, j - 1, n)


def pair_of(t: int, n: int) -> tuple[int, int]:
    """The 1-based pair (i, j) stored at canonical index t."""
    m = n * (n - 1) // 2
    if not (0 <= t < m):
        raise ArgumentError(f"pair index {t} out of range for n = {n} (m = {m})")
    for i in range(n - 1):
        block = n - 1 - i
        if t < block:
            return (i + 1, i + 2 + t)
        t -= block
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class OptionSet:
    """A fixed, ordered set of distinct option labels defining x_1..x_n."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ArgumentError("an option set needs at least two options")
        if len(set(self.labels)) != len(self.labels):
            raise ArgumentError("option labels must be distinct")

    @classmethod
    def sorted_from(cls, labels) -> "OptionSet":
        """Build an option set with labels sorted (case-sensitively).

        Dataset ingestion uses this so that x_1..x_n is reproducible across
        runs regardless of row order in the file.
        """
        return cls(tuple(sorted(set(labels))))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        n = self.n
        return n * (n - 1) // 2

    def index_of(self, label: str) -> int:
        """1-based position of a label."""
        try:
            return self.labels.index(label) + 1
        except ValueError:
            raise ArgumentError(f"unknown option label {label!r}") from None


@dataclass(frozen=True)
class PairIndexer:
    """Bijection between pair index t in {0..m-1} and 1-based pairs (i, j), i < j."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("need n >= 2")

    @property
    def m(self) -> int:
        return self.n * (self.n - 1) // 2

    def index(self, i: int, j: int) -> int:
        return pair_index(i, j, self.n)

    def pair_of(self, t: int) -> tuple[int, int]:
        return pair_of(t, self.n)

    def pairs(self) -> list[tuple[int, int]]:
        """All pairs in canonical order, 1-based."""
        return [(i + 1, j + 1) for i, j in _pair_list(self.n)]


@dataclass(frozen=True)
class ChoiceVector:
    """Point in [0,1]^m holding pairwise choice probabilities.

    ``values[t]`` is rho(x_i, x_j) for the t-th canonical pair; the reversed
    orientation is available through :meth:`prob`, which enforces
    rho(x, y) + rho(y, x) = 1.
    """

    values: np.ndarray
    indexer: PairIndexer

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.indexer.m,):
            raise ArgumentError(
                f"expected {self.indexer.m} pair probabilities, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("choice probabilities must be finite")
        if vals.min() < -1e-12 or vals.max() > 1 + 1e-12:
            raise ArgumentError("choice probabilities must lie in [0, 1]")

    @classmethod
    def from_values(cls, values, n: int | None = None) -> "ChoiceVector":
        values = np.asarray(values, dtype=float)
        if n is None:
            n = int(round((1 + math.isqrt(1 + 8 * len(values))) / 2))
        return cls(values, PairIndexer(n))

    @property
    def n(self) -> int:
        return self.indexer.n

    def prob(self, i: int, j: int) -> float:
        """rho(x_i, x_j) for any orientation of a 1-based pair."""
        if i == j:
            raise ArgumentError("a binary menu needs two distinct options")
        if i < j:
            return float(self.values[self.indexer.index(i, j)])
        return float(1.0 - self.values[self.indexer.index(j, i)])

    def restrict(self, option_ids: "list[int] | tuple[int, ...]") -> "ChoiceVector":
        """Choice vector over a subset of options (1-based ids, kept in order)."""
        ids = list(option_ids)
        if sorted(set(ids)) != sorted(ids):
            raise ArgumentError("option subset must not repeat options")
        sub = PairIndexer(len(ids))
        vals = np.array([self.prob(ids[a - 1], ids[b - 1]) for a, b in sub.pairs()])
        return ChoiceVector(vals, sub)


@dataclass(frozen=True)
class LinearOrder:
    """Strict preference order given by a permutation: x_i > x_j iff sigma(i) < sigma(j).

    ``ranks`` stores (sigma(1), ..., sigma(n)) with ranks 1..n, rank 1 best.
    """

    ranks: tuple[int, ...]

    def __post_init__(self):
        n = len(self.ranks)
        if sorted(self.ranks) != list(range(1, n + 1)):
            raise ArgumentError(f"ranks must be a permutation of 1..{n}, got {self.ranks}")

    @classmethod
    def from_preference(cls, best_to_worst) -> "LinearOrder":
        """Order from a 1-based option sequence listed best first."""
        seq = list(best_to_worst)
        n = len(seq)
        ranks = [0] * n
        for pos, opt in enumerate(seq, start=1):
            ranks[opt - 1] = pos
        return cls(tuple(ranks))

    @property
    def n(self) -> int:
        return len(self.ranks)

    def prefers(self, i: int, j: int) -> bool:
        """True iff x_i > x_j under this order (1-based)."""
        return self.ranks[i - 1] < self.ranks[j - 1]

    def ranked_options(self) -> tuple[int, ...]:
        """Options listed best to worst, 1-based."""
        n = self.n
        out = [0] * n
        for opt0, rank in enumerate(self.ranks):
            out[rank - 1] = opt0 + 1
        return tuple(out)


@dataclass(frozen=True)
class DeterministicChoiceVector:
    """{0,1} choice vector induced by a linear order (a transitive tournament)."""

    values: np.ndarray
    order: LinearOrder = field(compare=False)

    @property
    def n(self) -> int:
        return self.order.n

    def as_choice_vector(self) -> ChoiceVector:
        return ChoiceVector(self.values.astype(float), PairIndexer(self.n))


def deterministic_vector(order: LinearOrder) -> DeterministicChoiceVector:
    """Deterministic rule of an order: entry for (i, j) is 1 iff sigma(i) < sigma(j)."""
    n = order.n
    vals = np.array(
        [1.0 if order.prefers(i + 1, j + 1) else 0.0 for i, j in _pair_list(n)]
    )
    return DeterministicChoiceVector(vals, order)


def enumerate_orders(n: int, cap: int = DEFAULT_ORDER_CAP) -> list[LinearOrder]:
    """All n! linear orders in a deterministic enumeration order.

    Raises ResourceLimitError when n exceeds ``cap`` (default 7; 7! = 5040).
    """
    if n < 2:
        raise ArgumentError("need n >= 2")
    if n > cap:
        raise ResourceLimitError(
            f"enumerating {n}! orders exceeds the cap n <= {cap}; raise `cap` explicitly"
        )
    return [LinearOrder(perm) for perm in itertools.permutations(range(1, n + 1))]


def deterministic_matrix(n: int) -> np.ndarray:
    """n! x m array of all deterministic choice vectors, rows following enumerate_orders."""
    orders = enumerate_orders(n, cap=max(n, DEFAULT_ORDER_CAP))
    return np.array([deterministic_vector(o).values for o in orders])
