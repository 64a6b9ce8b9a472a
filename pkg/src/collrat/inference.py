"""Estimation from panel data and uniformly valid tests of collective rationalizability.

Data are subject-level: subject i faces pair j K_ij times (I_ij = 1 when
K_ij > 0) and its within-subject mean response is rho_bar_ij. The pooled
estimator averages subject means over the subjects who faced the pair:

    rho_hat_j = sum_i rho_bar_ij I_ij / sum_i I_ij

The test statistic is T_N = sqrt(N) * distance(rho_hat, hull). Its limit
law changes discontinuously across the hull boundary, so critical values
come from the numerical delta method: difference quotients of the distance
transform at step eps_N over subject-level bootstrap draws. Subsampling and
an anonymous-responses variant are provided as alternatives, plus a
likelihood-ratio screen for taste heterogeneity on repeated yes/no panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collective import TRIANGLE_FACET_RANGE, _canon_model, distance_batch, project
from .core import ChoiceVector, OptionSet, PairIndexer, _pair_list
from .errors import ArgumentError, DataError

DEFAULT_BOOT = 2000
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class ResponseRecord:
    """One canonical-orientation response: 1 means the lower-indexed option was chosen."""

    subject: str
    pair: int  # canonical pair index t
    repeat: int
    response: int

    def __post_init__(self):
        if self.response not in (0, 1):
            raise DataError(f"response must be 0/1, got {self.response!r}")


@dataclass(frozen=True)
class PanelDataset:
    """Subject-level panel: within-subject means and repeat counts per pair."""

    options: OptionSet
    subjects: tuple[str, ...]
    rho_bar: np.ndarray  # N x m, 0.0 where unobserved
    counts: np.ndarray  # N x m integer repeat counts

    def __post_init__(self):
        rb = np.asarray(self.rho_bar, dtype=float)
        ct = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "rho_bar", rb)
        object.__setattr__(self, "counts", ct)
        N, m = rb.shape
        if ct.shape != (N, m) or len(self.subjects) != N or m != self.options.m:
            raise DataError("panel arrays are dimensionally inconsistent")
        obs = ct > 0
        if np.any((rb < -1e-12) | (rb > 1 + 1e-12)):
            raise DataError("within-subject means must lie in [0, 1]")
        if np.any(rb[~obs] != 0.0):
            raise DataError("unobserved cells must hold 0")

    @property
    def n_subjects(self) -> int:
        return self.rho_bar.shape[0]

    @property
    def m(self) -> int:
        return self.rho_bar.shape[1]

    @property
    def n_options(self) -> int:
        return self.options.n

    @property
    def observed(self) -> np.ndarray:
        return self.counts > 0

    def unobserved_pairs(self) -> list[tuple[str, str]]:
        idxr = PairIndexer(self.options.n)
        missing = np.nonzero(self.observed.sum(axis=0) == 0)[0]
        out = []
        for t in missing:
            i, j = idxr.pair_of(int(t))
            out.append((self.options.labels[i - 1], self.options.labels[j - 1]))
        return out

    @classmethod
    def from_records(cls, records, options: OptionSet) -> "PanelDataset":
        subjects = sorted({r.subject for r in records})
        s_index = {s: i for i, s in enumerate(subjects)}
        N, m = len(subjects), options.m
        sums = np.zeros((N, m))
        counts = np.zeros((N, m), dtype=np.int64)
        seen = set()
        for r in records:
            key = (r.subject, r.pair, r.repeat)
            if key in seen:
                raise DataError(f"duplicate response for {key}")
            seen.add(key)
            i = s_index[r.subject]
            sums[i, r.pair] += r.response
            counts[i, r.pair] += 1
        with np.errstate(invalid="ignore"):
            rho_bar = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        return cls(options, tuple(subjects), rho_bar, counts)

    def restrict(self, option_ids) -> "PanelDataset":
        """Panel over a subset of options (1-based ids, ascending order kept)."""
        ids = sorted(option_ids)
        if len(set(ids)) < 3:
            raise ArgumentError("need at least three options to restrict to")
        labels = tuple(self.options.labels[i - 1] for i in ids)
        sub_pairs = [(ids[a - 1], ids[b - 1]) for a, b in PairIndexer(len(ids)).pairs()]
        idxr = PairIndexer(self.options.n)
        cols = [idxr.index(i, j) for i, j in sub_pairs]
        return PanelDataset(
            OptionSet(labels), self.subjects, self.rho_bar[:, cols], self.counts[:, cols]
        )

    def take_subjects(self, indices) -> "PanelDataset":
        idx = np.asarray(indices, dtype=int)
        return PanelDataset(
            self.options,
            tuple(self.subjects[i] for i in idx),
            self.rho_bar[idx],
            self.counts[idx],
        )

    def anonymize(self) -> "PanelDataset":
        """Explode every single response into its own one-row subject."""
        rows_rb = []
        rows_ct = []
        names = []
        obs = np.argwhere(self.counts > 0)
        k = 0
        for i, j in obs:
            c = int(self.counts[i, j])
            ones = int(round(self.rho_bar[i, j] * c))
            for bit in [1] * ones + [0] * (c - ones):
                rb = np.zeros(self.m)
                ct = np.zeros(self.m, dtype=np.int64)
                rb[j] = float(bit)
                ct[j] = 1
                rows_rb.append(rb)
                rows_ct.append(ct)
                names.append(f"anon{k:07d}")
                k += 1
        return PanelDataset(self.options, tuple(names), np.array(rows_rb), np.array(rows_ct))


@dataclass(frozen=True)
class EstimatedFrequencies:
    rho_hat: ChoiceVector
    subjects_per_pair: np.ndarray  # sum_i I_ij
    responses_per_pair: np.ndarray  # sum_i K_ij
    n_subjects: int


def aggregate(data: PanelDataset) -> EstimatedFrequencies:
    """Pooled choice frequencies: per pair, the mean of within-subject means."""
    I = data.observed
    denom = I.sum(axis=0)
    if np.any(denom == 0):
        raise DataError(f"pairs never observed: {data.unobserved_pairs()}")
    rho = (data.rho_bar * I).sum(axis=0) / denom
    return EstimatedFrequencies(
        ChoiceVector(rho, PairIndexer(data.options.n)),
        denom,
        data.counts.sum(axis=0),
        data.n_subjects,
    )


def _phi_batch(P: np.ndarray, n: int, model: str) -> np.ndarray:
    model = _canon_model(model)
    if n <= TRIANGLE_FACET_RANGE[model]:
        return distance_batch(P, n, model)
    out = np.empty(P.shape[0])
    for i, row in enumerate(P):
        out[i] = project(ChoiceVector.from_values(np.clip(row, 0, 1), n), model, "vertex").distance
    return out


def test_statistic(rho_hat: ChoiceVector, n_subjects: int, model: str) -> float:
    """T_N = sqrt(N) times the Euclidean distance to the collective hull."""
    d = _phi_batch(rho_hat.values[None, :], rho_hat.n, model)[0]
    return math.sqrt(n_subjects) * float(d)


@dataclass(frozen=True)
class TestResult:
    """Decision record of one rationalizability test (audit fields included)."""

    model: str
    statistic: float
    critical_value: float
    alpha: float
    eps: float
    n_boot: int
    reject: bool
    n_subjects: int
    seed: int
    mode: str
    bootstrap_draws: np.ndarray = field(repr=False)
    warnings: tuple[str, ...] = ()
    subsample_size: int | None = None

    def __post_init__(self):
        assert self.critical_value >= 0.0
        assert self.reject == (self.statistic > self.critical_value)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "eps": self.eps,
            "n_boot": self.n_boot,
            "reject": self.reject,
            "n_subjects": self.n_subjects,
            "seed": self.seed,
            "mode": self.mode,
            "subsample_size": self.subsample_size,
            "warnings": list(self.warnings),
            "bootstrap_draws": [float(v) for v in self.bootstrap_draws],
        }


def resolve_eps(rule, n_subjects: int) -> float:
    """Step size eps_N: 'n13' -> N^(-1/3), 'n16' -> N^(-1/6), or a literal float."""
    if isinstance(rule, (int, float)):
        eps = float(rule)
        if eps <= 0:
            raise ArgumentError("step size must be positive")
        return eps
    if rule == "n13":
        return n_subjects ** (-1.0 / 3.0)
    if rule == "n16":
        return n_subjects ** (-1.0 / 6.0)
    raise ArgumentError(f"unknown step rule {rule!r} (expected 'n13', 'n16', or a float)")


def _upper_quantile(draws: np.ndarray, level: float) -> float:
    """Conservative empirical quantile (the 'higher' order statistic)."""
    return float(np.quantile(draws, level, method="higher"))


def numerical_delta_test(
    data: PanelDataset,
    model: str = "css",
    alpha: float = DEFAULT_ALPHA,
    eps_rule="n13",
    n_boot: int = DEFAULT_BOOT,
    seed: int = 0,
) -> TestResult:
    """Bootstrap test of hull membership via the numerical delta method.

    Whole subjects are resampled with replacement; each draw s yields
    Z_s = sqrt(N) (rho_hat_b - rho_hat) and the difference quotient
    [phi(rho_hat + eps Z_s) - phi(rho_hat)] / eps. Rejects when T_N exceeds
    the empirical (1 - alpha) quantile of those quotients (clamped at 0,
    which never changes the decision since T_N >= 0 and member data give
    nonnegative quotients).
    """
    if data.n_subjects < 2:
        raise ArgumentError("need at least two subjects")
    if not (0 < alpha < 0.5):
        raise ArgumentError("alpha must lie in (0, 1/2)")
    model = _canon_model(model)
    warnings = []
    if n_boot < 100:
        warnings.append(f"n_boot = {n_boot} < 100: critical value is noisy")
    N = data.n_subjects
    est = aggregate(data)
    rho = est.rho_hat.values
    n = data.options.n
    t_stat = math.sqrt(N) * float(_phi_batch(rho[None, :], n, model)[0])
    eps = resolve_eps(eps_rule, N)

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x626F6F74)))
    weights = rng.multinomial(N, np.full(N, 1.0 / N), size=n_boot).astype(float)
    I = data.observed.astype(float)
    num = weights @ (data.rho_bar * I)
    den = weights @ I
    empty = den == 0
    if np.any(empty):
        warnings.append(
            f"{int(empty.sum())} bootstrap cells had no observation; pinned to rho_hat"
        )
    rho_b = np.where(empty, rho[None, :], num / np.where(empty, 1.0, den))
    Z = math.sqrt(N) * (rho_b - rho[None, :])
    phi0 = float(_phi_batch(rho[None, :], n, model)[0])
    quotients = (_phi_batch(rho[None, :] + eps * Z, n, model) - phi0) / eps
    c_hat = max(0.0, _upper_quantile(quotients, 1.0 - alpha))
    return TestResult(
        model=model,
        statistic=t_stat,
        critical_value=c_hat,
        alpha=alpha,
        eps=eps,
        n_boot=n_boot,
        reject=bool(t_stat > c_hat),
        n_subjects=N,
        seed=seed,
        mode="subject_bootstrap",
        bootstrap_draws=quotients,
        warnings=tuple(warnings),
    )


def subsample_test(
    data: PanelDataset,
    model: str = "css",
    alpha: float = DEFAULT_ALPHA,
    b: int | None = None,
    seed: int = 0,
    n_draws: int = 1000,
) -> TestResult:
    """Subsampling critical value: the (1-alpha) quantile of sqrt(b) phi over
    random size-b subject subsets (Monte Carlo over the N-choose-b law)."""
    model = _canon_model(model)
    N = data.n_subjects
    if b is None:
        b = max(2, int(N ** (2.0 / 3.0)))
    if not (1 < b < N):
        raise ArgumentError(f"subsample size must satisfy 1 < b < N, got b = {b}, N = {N}")
    if not (0 < alpha < 0.5):
        raise ArgumentError("alpha must lie in (0, 1/2)")
    est = aggregate(data)
    n = data.options.n
    t_stat = math.sqrt(N) * float(_phi_batch(est.rho_hat.values[None, :], n, model)[0])
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x737562)))
    I = data.observed.astype(float)
    S = data.rho_bar * I
    warnings = []
    skipped = 0
    stats = []
    for _ in range(n_draws):
        idx = rng.choice(N, size=b, replace=False)
        den = I[idx].sum(axis=0)
        if np.any(den == 0):
            skipped += 1
            continue
        rho_sub = S[idx].sum(axis=0) / den
        stats.append(math.sqrt(b) * float(_phi_batch(rho_sub[None, :], n, model)[0]))
    if skipped:
        warnings.append(f"{skipped} subsample draws skipped (unobserved pair)")
    if not stats:
        raise DataError("every subsample left some pair unobserved; increase b")
    stats = np.array(stats)
    g = max(0.0, _upper_quantile(stats, 1.0 - alpha))
    return TestResult(
        model=model,
        statistic=t_stat,
        critical_value=g,
        alpha=alpha,
        eps=0.0,
        n_boot=len(stats),
        reject=bool(t_stat > g),
        n_subjects=N,
        seed=seed,
        mode="subsample",
        bootstrap_draws=stats,
        warnings=tuple(warnings),
        subsample_size=b,
    )


def anonymous_aggregate_and_test(
    data: PanelDataset,
    model: str = "css",
    alpha: float = DEFAULT_ALPHA,
    eps_rule="n13",
    n_boot: int = DEFAULT_BOOT,
    seed: int = 0,
) -> TestResult:
    """Test without subject identities: every response becomes a singleton subject.

    Valid when each person answers each problem at most once and cross-problem
    covariances vanish (the caller asserts those conditions); then the
    singleton bootstrap has the same limit as the subject-level one.
    """
    exploded = data.anonymize()
    res = numerical_delta_test(exploded, model, alpha, eps_rule, n_boot, seed)
    return TestResult(
        model=res.model,
        statistic=res.statistic,
        critical_value=res.critical_value,
        alpha=res.alpha,
        eps=res.eps,
        n_boot=res.n_boot,
        reject=res.reject,
        n_subjects=res.n_subjects,
        seed=res.seed,
        mode="anonymous",
        bootstrap_draws=res.bootstrap_draws,
        warnings=res.warnings,
    )


# ---------------------------------------------------------------------------
# Likelihood-ratio screen for heterogeneous tastes
# ---------------------------------------------------------------------------


def _lgamma_series_P(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by power series (x < a + 1)."""
    term = 1.0 / a
    total = term
    k = a
    for _ in range(10000):
        k += 1.0
        term *= x / k
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _lgamma_contfrac_Q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_sf(a: float, x: float) -> float:
    """Q(a, x) = upper regularized incomplete gamma, relative error ~1e-12."""
    if a <= 0:
        raise ArgumentError("shape must be positive")
    if x < 0:
        raise ArgumentError("argument must be nonnegative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lgamma_series_P(a, x)
    return _lgamma_contfrac_Q(a, x)


def chi2_sf(x: float, df: float) -> float:
    """Survival function of the chi-square law with ``df`` degrees of freedom."""
    return gamma_sf(df / 2.0, x / 2.0)


@dataclass(frozen=True)
class LrHeterogeneityResult:
    lambda_lr: float
    df_bound: int
    p_bound: float
    signs: tuple[int, ...]  # favored sign per included pair column
    included_pairs: tuple[int, ...]
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "lambda_lr": self.lambda_lr,
            "df_bound": self.df_bound,
            "p_bound": self.p_bound,
            "signs": list(self.signs),
            "included_pairs": list(self.included_pairs),
            "warnings": list(self.warnings),
        }


def _bernoulli_loglik(p_hat: np.ndarray, p_model: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Sum over repeats of the Bernoulli log-likelihood at p_model given mean p_hat."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = p_hat * np.log(p_model) + (1.0 - p_hat) * np.log1p(-p_model)
    ll = np.where((p_hat == 0.0) & (p_model == 0.0), 0.0, ll)
    ll = np.where((p_hat == 1.0) & (p_model == 1.0), 0.0, ll)
    return k * ll


def lr_heterogeneity_test(data: PanelDataset) -> LrHeterogeneityResult:
    """Do all subjects share one sign pattern of preferences?

    Unrestricted MLE is the per-subject mean; the restricted MLE under a
    common sign pattern clamps each mean to the favorable side of 1/2. The
    sign of each menu is chosen independently (the penalty separates across
    menus), so the reported statistic is the minimum over all sign patterns.
    A chi-square bound with (#subjects x #menus) degrees of freedom gives a
    conservative p-value.
    """
    K = data.counts
    obs = K > 0
    included = np.nonzero(obs.any(axis=0))[0]
    excluded = [t for t in range(data.m) if t not in set(included.tolist())]
    warnings = []
    if excluded:
        warnings.append(f"pairs with zero repeats excluded: {excluded}")
    rb = data.rho_bar
    ll_unres = _bernoulli_loglik(rb, rb, K)
    half = np.full_like(rb, 0.5)
    # sign +1: clamp means below 1/2 up to 1/2; sign -1 mirrors
    mle_plus = np.maximum(rb, half)
    mle_minus = np.minimum(rb, half)
    pen_plus = (ll_unres - _bernoulli_loglik(rb, mle_plus, K))[:, included].sum(axis=0)
    pen_minus = (ll_unres - _bernoulli_loglik(rb, mle_minus, K))[:, included].sum(axis=0)
    per_menu = np.minimum(pen_plus, pen_minus)
    lam = 2.0 * float(per_menu.sum())
    signs = tuple(1 if pen_plus[c] <= pen_minus[c] else -1 for c in range(len(included)))
    df = data.n_subjects * len(included)
    return LrHeterogeneityResult(
        lambda_lr=lam,
        df_bound=df,
        p_bound=chi2_sf(lam, df),
        signs=signs,
        included_pairs=tuple(int(t) for t in included),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Sample splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSizeReport:
    size: int
    total_subsets: int
    flagged: int
    tested: int
    rejected: int
    details: tuple  # (option ids, TestResult) per flagged subset


@dataclass(frozen=True)
class SplitTestReport:
    model: str
    alpha: float
    split_fraction: float
    seed: int
    by_size: tuple[SplitSizeReport, ...]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "alpha": self.alpha,
            "split_fraction": self.split_fraction,
            "seed": self.seed,
            "by_size": [
                {
                    "size": r.size,
                    "total_subsets": r.total_subsets,
                    "flagged": r.flagged,
                    "tested": r.tested,
                    "rejected": r.rejected,
                    "subsets": [
                        {"options": list(ids), "reject": res.reject, "statistic": res.statistic}
                        for ids, res in r.details
                    ],
                }
                for r in self.by_size
            ],
        }


def sample_split_test(
    data: PanelDataset,
    model: str = "css",
    alpha: float = DEFAULT_ALPHA,
    sizes=(3, 4, 5),
    split_fraction: float = 0.5,
    seed: int = 0,
    eps_rule="n13",
    n_boot: int = DEFAULT_BOOT,
    subset_cap: int = 10**6,
) -> SplitTestReport:
    """Flag violating option subsets on one half, test them on the other.

    The first half decides membership deterministically (point estimate in
    or out of the hull); only flagged subsets are then tested on the held
    out half, so the reported rejection counts carry no selection bias from
    reusing the same observations.
    """
    import itertools as _it

    from .collective import triangle_membership_mask

    model = _canon_model(model)
    N = data.n_subjects
    if N < 4:
        raise ArgumentError("sample splitting needs at least four subjects")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x73706C69)))
    perm = rng.permutation(N)
    n_first = max(2, int(round(N * split_fraction)))
    n_first = min(n_first, N - 2)
    first = data.take_subjects(perm[:n_first])
    second = data.take_subjects(perm[n_first:])
    rho_first = aggregate(first).rho_hat
    n = data.options.n
    reports = []
    for size in sizes:
        if size > n:
            continue
        subsets = list(_it.combinations(range(1, n + 1), size))
        if len(subsets) > subset_cap:
            from .errors import ResourceLimitError

            raise ResourceLimitError(
                f"{len(subsets)} subsets of size {size} exceed the cap {subset_cap}"
            )
        pts = np.array([rho_first.restrict(ids).values for ids in subsets])
        member = triangle_membership_mask(pts, size, model)
        flagged = [ids for ids, ok in zip(subsets, member) if not ok]
        details = []
        rejected = 0
        for ids in flagged:
            res = numerical_delta_test(
                second.restrict(ids), model, alpha, eps_rule, n_boot, seed
            )
            details.append((ids, res))
            rejected += int(res.reject)
        reports.append(
            SplitSizeReport(size, len(subsets), len(flagged), len(details), rejected, tuple(details))
        )
    return SplitTestReport(model, alpha, split_fraction, seed, tuple(reports))
