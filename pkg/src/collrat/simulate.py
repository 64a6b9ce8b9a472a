"""Monte Carlo data generation and rationalizable-set volume estimation.

The benchmark design draws each subject's choice-probability vector from a
normal law around a population mean (clipped to the unit box), assigns the
subject 10 pair problems with replacement, and samples Bernoulli responses
whose within-subject repeats are either independent or exact copies of the
first encounter. The benchmark mean family sits on a ray through a facet of
the collective SS hull, so rejection rates trace out a power curve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .collective import TRIANGLE_FACET_RANGE, _canon_model, triangle_membership_mask
from .core import OptionSet, PairIndexer
from .errors import ArgumentError
from .inference import PanelDataset, numerical_delta_test
from .transitivity import mu_ordering_count, rationalizable_mask

logger = logging.getLogger(__name__)

# Repeat-correlation regimes:
#   independent           - every response is a fresh Bernoulli draw
#   replicate_first       - all of a subject's responses to a pair copy the
#                           first draw for that pair (perfect correlation)
#   replicate_presentation - the pair's two ordered presentations are separate
#                           problems; replication applies within each
#                           presentation, so a pair mixes up to two
#                           independent draws. This is the regime that
#                           reproduces published replicate-regime power
#                           tables; the literal per-pair copy gives less
#                           power (cf. tests).
REGIMES = ("independent", "replicate_first", "replicate_presentation")


@dataclass(frozen=True)
class DgpSpec:
    """Population design: mean, covariance, assignment law, repeat regime."""

    mu: np.ndarray
    sigma0: np.ndarray
    regime: str = "independent"
    draws_per_subject: int = 10
    label: str = ""

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sig = np.asarray(self.sigma0, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma0", sig)
        m = mu.shape[0]
        if mu.min() < 0 or mu.max() > 1:
            raise ArgumentError("population mean must lie in [0, 1]^m")
        if sig.shape != (m, m) or not np.allclose(sig, sig.T, atol=1e-12):
            raise ArgumentError("covariance must be symmetric m x m")
        if np.linalg.eigvalsh(sig).min() < -1e-10:
            raise ArgumentError("covariance must be positive semidefinite")
        if self.regime not in REGIMES:
            raise ArgumentError(f"unknown repeat regime {self.regime!r}")
        if self.draws_per_subject < 1:
            raise ArgumentError("each subject needs at least one assignment draw")

    @property
    def m(self) -> int:
        return self.mu.shape[0]

    @property
    def n(self) -> int:
        return int(round((1 + math.isqrt(1 + 8 * self.m)) / 2))


@dataclass(frozen=True)
class SimulationInfo:
    clipped_entries: int
    total_entries: int


def _sigma_factor(sigma0: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma0)
    except np.linalg.LinAlgError:
        # semidefinite input: eigenvalue floor at zero
        vals, vecs = np.linalg.eigh(sigma0)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def simulate_panel(
    spec: DgpSpec, n_subjects: int, seed, return_info: bool = False
):
    """Draw a panel of ``n_subjects`` subjects from the design.

    Individual probability vectors are clipped coordinatewise to [0, 1] (the
    clip count is logged; with the benchmark scale sigma = 0.1 it is rare).
    """
    rng = np.random.default_rng(seed)
    N, m = n_subjects, spec.m
    L = _sigma_factor(spec.sigma0)
    raw = spec.mu[None, :] + rng.standard_normal((N, m)) @ L.T
    clipped = int(np.sum((raw < 0) | (raw > 1)))
    if clipped:
        logger.info("clipped %d of %d individual probability entries", clipped, N * m)
    rho_i = np.clip(raw, 0.0, 1.0)

    if spec.regime == "replicate_presentation":
        assign = rng.integers(0, 2 * m, size=(N, spec.draws_per_subject))
        per_pres = np.zeros((N, 2 * m), dtype=np.int64)
        np.add.at(
            per_pres,
            (np.repeat(np.arange(N), spec.draws_per_subject), assign.ravel()),
            1,
        )
        bits = rng.binomial(1, np.repeat(rho_i, 2, axis=1)).astype(float)
        counts = per_pres[:, 0::2] + per_pres[:, 1::2]
        hits = per_pres[:, 0::2] * bits[:, 0::2] + per_pres[:, 1::2] * bits[:, 1::2]
        with np.errstate(invalid="ignore"):
            rho_bar = np.where(counts > 0, hits / np.maximum(counts, 1), 0.0)
    else:
        assign = rng.integers(0, m, size=(N, spec.draws_per_subject))
        counts = np.zeros((N, m), dtype=np.int64)
        np.add.at(
            counts, (np.repeat(np.arange(N), spec.draws_per_subject), assign.ravel()), 1
        )
        if spec.regime == "independent":
            successes = rng.binomial(counts, rho_i)
            with np.errstate(invalid="ignore"):
                rho_bar = np.where(counts > 0, successes / np.maximum(counts, 1), 0.0)
        else:
            first = rng.binomial(1, rho_i).astype(float)
            rho_bar = np.where(counts > 0, first, 0.0)

    options = OptionSet(tuple(f"o{k + 1:02d}" for k in range(spec.n)))
    subjects = tuple(f"s{i + 1:05d}" for i in range(N))
    panel = PanelDataset(options, subjects, rho_bar, counts)
    if return_info:
        return panel, SimulationInfo(clipped, N * m)
    return panel


BOUNDARY_MEAN = np.array([2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0])
FACET_NORMAL = np.array([1.0, -1.0, 1.0])
TABLE1_OFFSETS = {
    "mu4": -0.08,
    "mu3": -0.04,
    "mu2": -0.02,
    "mu1": -0.01,
    "mu0": 0.0,
    "mu1p": 0.01,
    "mu2p": 0.02,
    "mu3p": 0.04,
    "mu4p": 0.08,
}


def table1_means() -> dict[str, np.ndarray]:
    """The nine benchmark means mu0 + d [1, -1, 1], d in {0, +-.01, .02, .04, .08}.

    mu0 sits on the facet of the collective SS hull where the cyclic sum hits
    its upper bound; positive d moves outward along the facet normal. Values
    are constructed, not transcribed, so e.g. mu4p is (0.7467, 0.2533, 0.7467).
    """
    return {
        name: BOUNDARY_MEAN + d * FACET_NORMAL for name, d in TABLE1_OFFSETS.items()
    }


def benchmark_dgp(name: str, regime: str = "independent", scale: float = 0.01) -> DgpSpec:
    """DgpSpec for one of the benchmark means with covariance scale * I."""
    means = table1_means()
    if name not in means:
        raise ArgumentError(f"unknown benchmark mean {name!r}; choose from {sorted(means)}")
    return DgpSpec(means[name], scale * np.eye(3), regime=regime, label=name)


@dataclass(frozen=True)
class RejectionRateResult:
    rate: float
    ci_low: float
    ci_high: float
    replications: int
    rejections: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "replications": self.replications,
            "rejections": self.rejections,
            "config": self.config,
        }


def rejection_rate(
    spec: DgpSpec,
    n_subjects: int,
    replications: int,
    model: str = "css",
    alpha: float = 0.05,
    eps_rule="n13",
    n_boot: int = 2000,
    seed: int = 0,
) -> RejectionRateResult:
    """Fraction of independent replications in which the test rejects."""
    if replications < 100:
        raise ArgumentError("need at least 100 replications for a meaningful rate")
    rejections = 0
    for rep in range(replications):
        panel = simulate_panel(spec, n_subjects, seed=np.random.SeedSequence((seed, rep, 0x646770)))
        res = numerical_delta_test(panel, model, alpha, eps_rule, n_boot, seed=seed + rep)
        rejections += int(res.reject)
    rate = rejections / replications
    half = 1.96 * math.sqrt(max(rate * (1 - rate), 1e-12) / replications)
    return RejectionRateResult(
        rate,
        max(0.0, rate - half),
        min(1.0, rate + half),
        replications,
        rejections,
        config={
            "label": spec.label,
            "regime": spec.regime,
            "n_subjects": n_subjects,
            "alpha": alpha,
            "eps_rule": str(eps_rule),
            "n_boot": n_boot,
            "model": model,
            "seed": seed,
        },
    )


# ---------------------------------------------------------------------------
# Volumes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeEstimate:
    model: str
    n: int
    method: str  # "exact" | "monte_carlo"
    value: float
    se: float
    samples: int

    @property
    def half_width95(self) -> float:
        return 1.96 * self.se

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "method": self.method,
            "value": self.value,
            "se": self.se,
            "half_width95": self.half_width95,
            "samples": self.samples,
        }


def _exact_volume(model: str, n: int) -> float | None:
    m = n * (n - 1) // 2
    if model == "wu":
        return math.factorial(n) * 0.5**m
    if model == "mu" and n <= 5:
        L = mu_ordering_count(n)
        return math.factorial(n) * L * 0.5**m / math.factorial(m)
    if model == "ss" and n == 3:
        # within each cube the long pair must top both short ones: 1/3 of the cube
        return 0.25
    if model in ("css", "cmu") and n == 3:
        return 2.0 / 3.0
    if model == "cwu" and n == 3:
        # complement of two corner simplices of the cyclic-sum slab
        return 1.0 - 2.0 * (0.5**3) / 6.0
    return None


def _membership_mask(P: np.ndarray, n: int, model: str) -> np.ndarray:
    if model in ("ss", "mu", "wu"):
        return rationalizable_mask(P, n, model)
    model_c = _canon_model(model)
    if n <= TRIANGLE_FACET_RANGE[model_c]:
        return triangle_membership_mask(P, n, model_c)
    raise ArgumentError(f"no Monte Carlo membership routine for {model} at n = {n}")


def volume(
    model: str,
    n: int,
    method: str = "auto",
    samples: int = 10**7,
    seed: int = 0,
    chunk: int = 10**6,
) -> VolumeEstimate:
    """Relative volume of a rationalizable set in [0,1]^m.

    Exact where a closed form exists (weak/moderate counting formulas, the
    n=3 models); otherwise uniform Monte Carlo with the binomial standard
    error reported.
    """
    model = model.lower()
    if model not in ("ss", "mu", "wu", "css", "cmu", "cwu"):
        raise ArgumentError(f"unknown model {model!r}")
    exact = _exact_volume(model, n)
    if method == "auto":
        method = "exact" if exact is not None else "monte_carlo"
    if method == "exact":
        if exact is None:
            raise ArgumentError(f"no exact volume available for {model} at n = {n}")
        return VolumeEstimate(model, n, "exact", exact, 0.0, 0)
    if method != "monte_carlo":
        raise ArgumentError(f"unknown method {method!r}")
    m = n * (n - 1) // 2
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x766F6C)))
    hits = 0
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        P = rng.random((b, m))
        hits += int(_membership_mask(P, n, model).sum())
        done += b
    p = hits / samples
    se = math.sqrt(max(p * (1 - p), 1e-300) / samples)
    return VolumeEstimate(model, n, "monte_carlo", p, se, samples)


def volume_table(n_values=(3, 4, 5), samples: int = 10**6, seed: int = 0) -> list[VolumeEstimate]:
    """SS/MU/WU/CSS volumes for each n, exact where possible (report layout helper)."""
    out = []
    for n in n_values:
        for model in ("ss", "mu", "wu", "css"):
            exact = _exact_volume(model, n)
            if exact is not None:
                out.append(volume(model, n, "exact"))
            else:
                out.append(volume(model, n, "monte_carlo", samples=samples, seed=seed))
    return out
