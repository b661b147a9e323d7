"""Anonymization by uniform random pseudonym assignment.

Users are relabeled by a permutation drawn uniformly from the symmetric
group; the adversary sees the m x n observation matrix whose column j is
the trajectory of the user mapped to pseudonym j. The privacy thresholds
say how fast the per-pseudonym observation budget m(n) may grow with the
crowd size n before anonymity degrades: exponent 2/(r-1) for i.i.d.
mobility over r locations and 2/(|E|-r) for Markov mobility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .markov import MarkovModel
from .mobility import IidModel, Trajectory, _readonly

__all__ = [
    "ObservationMatrix",
    "ObservationSchedule",
    "Permutation",
    "anonymize",
    "sample_permutation",
    "schedule_observations",
    "threshold_exponent",
]


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..n-1}; forward maps user -> pseudonym."""

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward: Sequence[int]) -> "Permutation":
        forward = np.asarray(forward, dtype=np.int64)
        n = forward.size
        if sorted(forward.tolist()) != list(range(n)):
            raise ValueError("forward array is not a permutation of 0..n-1")
        inverse = np.empty(n, dtype=np.int64)
        inverse[forward] = np.arange(n)
        return cls(forward=_readonly(forward), inverse=_readonly(inverse))

    @property
    def n(self) -> int:
        return int(self.forward.size)


@dataclass(frozen=True)
class ObservationMatrix:
    """m x n matrix of anonymized observations; column j = pseudonym j."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.int64)
        if entries.ndim != 2:
            raise ValueError("observation matrix must be 2-D (time x pseudonym)")
        object.__setattr__(self, "entries", _readonly(entries))

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        return int(self.entries.shape[1])

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]


@dataclass(frozen=True)
class ObservationSchedule:
    """m(n) = max(1, round-half-up(c * n**beta))."""

    c: float
    beta: float

    def __post_init__(self) -> None:
        if self.c <= 0 or self.beta <= 0:
            raise ValueError("schedule needs c > 0 and beta > 0")


def sample_permutation(n: int, rng: np.random.Generator) -> Permutation:
    """Uniform draw over all n! permutations."""
    if n < 1:
        raise ValueError("need at least one user")
    return Permutation.from_forward(rng.permutation(n))


def anonymize(
    trajectories: Sequence[Trajectory], perm: Permutation
) -> ObservationMatrix:
    """Place user u's trajectory in column forward[u]."""
    n = len(trajectories)
    if n != perm.n:
        raise ValueError("permutation size must match the number of users")
    lengths = {len(t) for t in trajectories}
    if len(lengths) != 1:
        raise ValueError("all trajectories must have the same length")
    m = lengths.pop()
    Y = np.empty((m, n), dtype=np.int64)
    for u, traj in enumerate(trajectories):
        Y[:, perm.forward[u]] = traj.states
    return ObservationMatrix(entries=Y)


def schedule_observations(n: int, sched: ObservationSchedule) -> int:
    if n < 1:
        raise ValueError("need at least one user")
    return max(1, int(math.floor(sched.c * float(n) ** sched.beta + 0.5)))


def threshold_exponent(model: IidModel | MarkovModel) -> float:
    """Privacy-threshold exponent: 2/(r-1) i.i.d., 2/(|E|-r) Markov."""
    if isinstance(model, IidModel):
        return 2.0 / (model.r - 1)
    if isinstance(model, MarkovModel):
        d = model.graph.d
        if d < 1:
            raise ValueError(
                "threshold exponent undefined for d = 0 (all users share one law)"
            )
        return 2.0 / d
    raise TypeError(f"unknown model descriptor: {model!r}")
