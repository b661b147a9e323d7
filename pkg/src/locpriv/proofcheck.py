"""Numerical checks of the two-state indistinguishability machinery.

The asymptotic argument rests on a handful of concrete objects: a
shrinking width eps(m) that defines the crowd of users statistically
close to user 1, a concentration interval A(m) of half-width m*beta(m)
for their visit counts, the likelihood ratio Delta obtained by swapping
two such users' counts, and the posterior weights over the crowd which
must flatten as the crowd grows. Everything here evaluates those objects
at finite (n, m) so the limiting claims can be watched happening.

Restricted to the two-state model throughout; the r-state and Markov
results reduce to this case and are exercised by the sweep experiments
instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import adversary
from .anonymization import anonymize, sample_permutation
from .mobility import BOUNDARY_MARGIN, IidProfile, IidModel, sample_trajectory_iid

__all__ = [
    "DeltaUniformityRecord",
    "LemmaParams",
    "WeightUniformityResult",
    "critical_set",
    "delta_uniformity_experiment",
    "derive_lemma_params",
    "interval_event_prob",
    "kl_bernoulli",
    "kl_bernoulli_quadratic",
    "likelihood_ratio_delta",
    "weight_uniformity",
]

# Reported analytic envelope coefficient for max |ln Delta|. The
# first-order derivation behind it omits the 1/(p(1-p)) logit-derivative
# factor, so sampled maxima genuinely exceed this envelope near p = 1/2;
# see delta_uniformity_experiment, which reports both numbers.
DELTA_ENVELOPE_COEFF = 5.0


@dataclass(frozen=True)
class LemmaParams:
    """Exponent bookkeeping for the concentration argument.

    eps(m) = m^-(1/2+phi) is the crowd half-width, beta(m) = m^-(1/2-theta)
    the count-concentration half-width (as a fraction of m), and
    lambda = alpha/2 + alpha*phi - 2*phi the growth exponent of the crowd
    size when m = c * n^(2-alpha). lambda > 0 is enforced directly; the
    product m * beta(m) * eps(m) = m^(theta-phi) must vanish, which the
    ordering theta < phi guarantees.
    """

    alpha: float
    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < self.phi:
            raise ValueError("need 0 < theta < phi")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("need 0 < alpha < 2 so m(n) grows")
        if self.lam <= 0.0:
            raise ValueError(
                f"lambda = {self.lam:.6g} <= 0: crowd size would not grow"
            )

    @property
    def lam(self) -> float:
        return self.alpha / 2.0 + self.alpha * self.phi - 2.0 * self.phi

    def eps(self, m: float) -> float:
        return float(m) ** -(0.5 + self.phi)

    def beta(self, m: float) -> float:
        return float(m) ** -(0.5 - self.theta)


def derive_lemma_params(alpha: float, theta: float, phi: float) -> LemmaParams:
    """Validate the exponent choices and derive the dependent quantities."""
    return LemmaParams(alpha=alpha, theta=theta, phi=phi)


def critical_set(
    p_values: np.ndarray, p1_index: int, eps: float
) -> np.ndarray:
    """Indices of users whose state-1 probability lies within eps of the
    reference user's. Always contains the reference index."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    p_values = np.asarray(p_values, dtype=float)
    center = p_values[p1_index]
    return np.flatnonzero(np.abs(p_values - center) < eps)


def interval_event_prob(
    p_values: np.ndarray,
    p1: float,
    m: int,
    beta_m: float,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Empirical probability that every crowd member's state-1 count falls
    in A(m) = [m(p1-beta), m(p1+beta)]."""
    p_values = np.asarray(p_values, dtype=float)
    if p_values.size == 0:
        raise ValueError("crowd is empty")
    if trials < 1:
        raise ValueError("need at least one trial")
    lo = m * (p1 - beta_m)
    hi = m * (p1 + beta_m)
    counts = rng.binomial(m, p_values, size=(trials, p_values.size))
    inside = (counts >= lo) & (counts <= hi)
    return float(inside.all(axis=1).mean())


def likelihood_ratio_delta(
    p_i: float, p_j: float, a: float, b: float
) -> tuple[float, float]:
    """Delta = (p_i/p_j)^(a-b) * ((1-p_j)/(1-p_i))^(a-b), returned as
    (Delta, ln Delta). Swapping a and b inverts it exactly."""
    if not (0.0 < p_i < 1.0 and 0.0 < p_j < 1.0):
        raise ValueError("probabilities must lie in (0, 1)")
    log_delta = (a - b) * (
        math.log(p_i / p_j) + math.log((1.0 - p_j) / (1.0 - p_i))
    )
    return math.exp(log_delta), log_delta


@dataclass(frozen=True)
class DeltaUniformityRecord:
    m: int
    max_abs_log_delta: float
    envelope: float
    product_identity: float  # m * beta(m) * eps(m) as computed
    power_identity: float  # m^(theta - phi) closed form


def delta_uniformity_experiment(
    params: LemmaParams,
    m_grid,
    samples: int,
    rng: np.random.Generator,
    p1: float = 0.5,
) -> list[DeltaUniformityRecord]:
    """Sample crowd pairs and count pairs and track the worst |ln Delta|.

    For each m: p_i, p_j are uniform within eps(m) of p1, and a, b are
    uniform integers in A(m) clipped to [0, m]. The reported envelope is
    DELTA_ENVELOPE_COEFF * m * beta(m) * eps(m). Note the sampled maximum
    genuinely approaches 4*m*beta*eps / (p1*(1-p1)), which exceeds that
    envelope; both numbers are returned so the gap is visible.
    """
    records = []
    for m in m_grid:
        m = int(m)
        eps = params.eps(m)
        beta = params.beta(m)
        lo_p = max(BOUNDARY_MARGIN, p1 - eps)
        hi_p = min(1.0 - BOUNDARY_MARGIN, p1 + eps)
        a_lo = max(0, math.ceil(m * (p1 - beta)))
        a_hi = min(m, math.floor(m * (p1 + beta)))
        ps = rng.uniform(lo_p, hi_p, size=(samples, 2))
        ab = rng.integers(a_lo, a_hi + 1, size=(samples, 2))
        logit_gap = np.log(ps[:, 0] / ps[:, 1]) + np.log(
            (1.0 - ps[:, 1]) / (1.0 - ps[:, 0])
        )
        log_delta = (ab[:, 0] - ab[:, 1]) * logit_gap
        records.append(
            DeltaUniformityRecord(
                m=m,
                max_abs_log_delta=float(np.abs(log_delta).max()),
                envelope=DELTA_ENVELOPE_COEFF * m * beta * eps,
                product_identity=m * beta * eps,
                power_identity=float(m) ** (params.theta - params.phi),
            )
        )
    return records


@dataclass(frozen=True)
class WeightUniformityResult:
    """Per-trial max |N * W_j - 1| over the crowd's pseudonyms."""

    deviations: np.ndarray
    median: float
    degenerate_trials: int
    trials: int


def _draw_interior_uniform(rng: np.random.Generator) -> float:
    while True:
        p = rng.random()
        if BOUNDARY_MARGIN < p < 1.0 - BOUNDARY_MARGIN:
            return p


def weight_uniformity(
    params: LemmaParams,
    n: int,
    m: int,
    trials: int,
    rng: np.random.Generator,
    *,
    p1: float = 0.5,
    max_n: int = adversary.PERMANENT_FEASIBILITY_BOUND,
) -> WeightUniformityResult:
    """Watch the crowd's posterior weights flatten: N * W_j -> 1.

    Per trial: draw the other users' probabilities uniformly, form the
    crowd within eps(m) of p1, run the full attack, restrict the exact
    posterior to the crowd's pseudonyms and renormalize. Trials whose
    crowd has fewer than two members (or no posterior mass on the crowd)
    are reported as degenerate and excluded.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if n > max_n:
        raise ValueError(f"exact posterior infeasible for n = {n} > {max_n}")
    eps = params.eps(m)
    model = IidModel(r=2)
    devs = []
    degenerate = 0
    for _ in range(trials):
        ps = np.empty(n)
        ps[0] = p1
        for i in range(1, n):
            ps[i] = _draw_interior_uniform(rng)
        crowd = critical_set(ps, 0, eps)
        if n > 1 and crowd.size < 2:
            degenerate += 1
            continue
        profiles = [IidProfile([1.0 - p, p]) for p in ps]
        trajectories = [sample_trajectory_iid(pr, m, rng) for pr in profiles]
        perm = sample_permutation(n, rng)
        Y = anonymize(trajectories, perm)
        L = adversary.likelihood_matrix_iid(
            profiles, adversary.count_stats(Y, model.r)
        )
        post = adversary.posterior_pi1(L, max_n=max_n)
        crowd_pseudonyms = perm.forward[crowd]
        w = post.weights[crowd_pseudonyms]
        mass = float(w.sum())
        if mass <= 0.0:
            degenerate += 1
            continue
        w = w / mass
        devs.append(float(np.abs(crowd.size * w - 1.0).max()))
    if not devs:
        raise ValueError("every trial was degenerate; crowd never formed")
    deviations = np.asarray(devs)
    return WeightUniformityResult(
        deviations=deviations,
        median=float(np.median(deviations)),
        degenerate_trials=degenerate,
        trials=trials,
    )


def kl_bernoulli(p: float, q: float) -> float:
    """Exact KL divergence D(Bernoulli(p) || Bernoulli(q)) in bits."""
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise ValueError("KL arguments must lie in (0, 1)")
    return p * math.log2(p / q) + (1.0 - p) * math.log2((1.0 - p) / (1.0 - q))


def kl_bernoulli_quadratic(p: float, eps: float) -> float:
    """Leading quadratic term eps^2 / (2 p (1-p) ln 2), in bits.

    The ln 2 denominator is the dimensionally consistent one for a
    base-2 divergence; verified against kl_bernoulli numerically.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return eps * eps / (2.0 * p * (1.0 - p) * math.log(2.0))
