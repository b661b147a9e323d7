"""Privacy metrics over anonymized observations.

The headline quantity is the mutual information between user 1's
location at a chosen time and the whole anonymized observation matrix,
I = H(X_1(k)) - E[H(X_1(k) | Y)]. The marginal entropy is exact; the
conditional term is averaged over Monte Carlo trials, where each trial
regenerates the population, trajectories and pseudonym permutation and
evaluates the exact permanent-based posterior. De-anonymization accuracy
(did the MAP matching recover user 1's pseudonym / the whole
permutation) is the cheap large-n companion metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import adversary
from .anonymization import ObservationMatrix, anonymize, sample_permutation
from .markov import MarkovModel, TransitionMatrix, sample_trajectory_markov
from .mobility import IidModel, sample_trajectory_iid

__all__ = [
    "AccuracyResult",
    "AttackTrial",
    "MetricRecord",
    "MiEstimate",
    "conditional_location_distribution",
    "deanonymization_accuracy",
    "entropy",
    "marginal_location_distribution",
    "mutual_information_mc",
    "simulate_attack_trial",
]


@dataclass(frozen=True)
class MiEstimate:
    """Mutual-information estimate in bits."""

    value: float
    std_error: float
    trials: int
    method: str

    def __post_init__(self) -> None:
        if self.std_error < 0.0 or not math.isfinite(self.std_error):
            raise ValueError("std_error must be a finite nonnegative number")
        if not math.isfinite(self.value):
            raise ValueError("MI estimate must be finite")


@dataclass(frozen=True)
class AccuracyResult:
    pi1_accuracy: float
    full_perm_accuracy: float
    trials: int


@dataclass(frozen=True)
class MetricRecord:
    """One per-trial metric sample, flat for CSV emission."""

    metric: str
    n: int
    m: int
    beta: float
    trial: int
    value: float
    seed: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("metric values must be finite")


def entropy(p: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if p.min() < 0.0:
        raise ValueError("probabilities must be nonnegative")
    if abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1 within 1e-9")
    pos = p[p > 0.0]
    return float(-(pos * np.log2(pos)).sum())


def conditional_location_distribution(
    Y: ObservationMatrix, post: adversary.AssignmentPosterior, k: int, r: int
) -> np.ndarray:
    """P(X_1(k) = x | Y) = sum_j W_j * 1[column j is at x at time k]."""
    if not 1 <= k <= Y.m:
        raise ValueError(f"time index k={k} outside 1..{Y.m}")
    if post.n != Y.n:
        raise ValueError("posterior size must match the number of pseudonyms")
    q = np.zeros(r)
    np.add.at(q, Y.entries[k - 1], post.weights)
    return q


def marginal_location_distribution(
    model: IidModel | MarkovModel, profile, k: int
) -> np.ndarray:
    """Exact law of user 1's location at time k under their own profile."""
    if k < 1:
        raise ValueError("time index k must be >= 1")
    if isinstance(model, IidModel):
        return np.array(profile.probs, copy=True)
    if isinstance(model, MarkovModel):
        T: TransitionMatrix = profile
        return np.linalg.matrix_power(T.matrix, k - 1)[0].copy()
    raise TypeError(f"unknown model descriptor: {model!r}")


@dataclass(frozen=True)
class AttackTrial:
    """One simulated epoch: observations, truth, and adversary outputs."""

    Y: ObservationMatrix
    perm: object
    posterior: adversary.AssignmentPosterior | None
    map_perm: object | None


def _sample_trajectories(model, profiles, m, rng):
    if isinstance(model, IidModel):
        return [sample_trajectory_iid(p, m, rng) for p in profiles]
    return [sample_trajectory_markov(T, m, rng) for T in profiles]


def _likelihoods(model, profiles, Y):
    if isinstance(model, IidModel):
        return adversary.likelihood_matrix_iid(profiles, adversary.count_stats(Y, model.r))
    r = model.graph.r
    return adversary.likelihood_matrix_markov(
        profiles, adversary.transition_stats(Y, r)
    )


def simulate_attack_trial(
    model,
    profiles,
    m: int,
    rng: np.random.Generator,
    *,
    want_posterior: bool = True,
    want_map: bool = False,
    max_n: int = adversary.PERMANENT_FEASIBILITY_BOUND,
) -> AttackTrial:
    """Sample trajectories and a permutation, anonymize, and attack."""
    trajectories = _sample_trajectories(model, profiles, m, rng)
    perm = sample_permutation(len(profiles), rng)
    Y = anonymize(trajectories, perm)
    L = _likelihoods(model, profiles, Y)
    posterior = adversary.posterior_pi1(L, max_n=max_n) if want_posterior else None
    map_perm = adversary.map_assignment(L) if want_map else None
    return AttackTrial(Y=Y, perm=perm, posterior=posterior, map_perm=map_perm)


def _resolve_profiles(
    n: int,
    rng: np.random.Generator,
    profile_sampler: Callable[[np.random.Generator], object] | None,
    profile1,
    profiles,
):
    """Returns (fixed_profiles_or_None, profile1). Draws profile 1 from the
    sampler up front when not pinned explicitly."""
    if profiles is not None:
        profiles = list(profiles)
        if len(profiles) != n:
            raise ValueError("fixed profile list must have length n")
        return profiles, profiles[0]
    if profile_sampler is None:
        raise ValueError("need either fixed profiles or a profile sampler")
    if profile1 is None:
        profile1 = profile_sampler(rng)
    return None, profile1


def mutual_information_mc(
    model,
    n: int,
    m: int,
    k: int,
    trials: int,
    rng: np.random.Generator,
    *,
    profile_sampler: Callable[[np.random.Generator], object] | None = None,
    profile1=None,
    profiles=None,
    max_n: int = adversary.PERMANENT_FEASIBILITY_BOUND,
) -> MiEstimate:
    """Monte Carlo estimate of I(X_1(k); Y) in bits.

    User 1's profile stays fixed across trials; the rest of the
    population is redrawn from the prior every trial (pass ``profiles``
    to pin all of them instead). The permutation is redrawn every trial.
    """
    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    if n > max_n:
        raise ValueError(f"exact posterior infeasible for n = {n} > {max_n}")
    if not 1 <= k <= m:
        raise ValueError(f"time index k={k} outside 1..{m}")
    fixed, profile1 = _resolve_profiles(n, rng, profile_sampler, profile1, profiles)
    r = model.r if isinstance(model, IidModel) else model.graph.r
    h_marginal = entropy(marginal_location_distribution(model, profile1, k))
    cond = np.empty(trials)
    for t in range(trials):
        profs = fixed if fixed is not None else [profile1] + [
            profile_sampler(rng) for _ in range(n - 1)
        ]
        trial = simulate_attack_trial(model, profs, m, rng, max_n=max_n)
        q = conditional_location_distribution(trial.Y, trial.posterior, k, r)
        cond[t] = entropy(q)
    value = h_marginal - float(cond.mean())
    std_error = float(cond.std(ddof=1) / math.sqrt(trials))
    return MiEstimate(
        value=value, std_error=std_error, trials=trials, method="mc-permanent"
    )


def deanonymization_accuracy(
    model,
    n: int,
    m: int,
    trials: int,
    rng: np.random.Generator,
    *,
    profile_sampler: Callable[[np.random.Generator], object] | None = None,
    profile1=None,
    profiles=None,
) -> AccuracyResult:
    """Fraction of trials where MAP matching recovers user 1's pseudonym,
    and where it recovers the entire permutation."""
    if trials < 1:
        raise ValueError("need at least one trial")
    fixed, profile1 = _resolve_profiles(n, rng, profile_sampler, profile1, profiles)
    pi1_hits = 0
    full_hits = 0
    for _ in range(trials):
        profs = fixed if fixed is not None else [profile1] + [
            profile_sampler(rng) for _ in range(n - 1)
        ]
        trial = simulate_attack_trial(
            model, profs, m, rng, want_posterior=False, want_map=True
        )
        guess = trial.map_perm.forward
        truth = trial.perm.forward
        pi1_hits += int(guess[0] == truth[0])
        full_hits += int(np.array_equal(guess, truth))
    return AccuracyResult(
        pi1_accuracy=pi1_hits / trials,
        full_perm_accuracy=full_hits / trials,
        trials=trials,
    )
