"""User mobility profiles for the i.i.d. movement model.

A user is described by a probability vector over ``r`` locations (states
``0..r-1``). Profiles are drawn from a bounded prior density supported on
the open probability simplex; the density value is pinched between two
positive constants, which is all the privacy analysis needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "BOUNDARY_MARGIN",
    "IidModel",
    "IidProfile",
    "Population",
    "ProfileDensity",
    "Trajectory",
    "fit_iid_profile",
    "sample_profile",
    "sample_trajectory_iid",
]

# Profiles closer than this to the simplex boundary are rejected and
# resampled; keeps every profile strictly interior as the open-support
# prior requires.
BOUNDARY_MARGIN = 1e-9

_SUM_TOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class IidProfile:
    """Probability vector over the r locations; strictly interior."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise ValueError("profile needs at least two locations")
        if not np.all((probs > 0.0) & (probs < 1.0)):
            raise ValueError("profile entries must lie strictly in (0, 1)")
        if abs(float(probs.sum()) - 1.0) > _SUM_TOL:
            raise ValueError("profile entries must sum to 1 within 1e-12")
        object.__setattr__(self, "probs", _readonly(probs))

    @property
    def r(self) -> int:
        return int(self.probs.size)

    def log_probs(self) -> np.ndarray:
        return np.log(self.probs)


@dataclass(frozen=True)
class IidModel:
    """Model descriptor for i.i.d. mobility over r locations."""

    r: int

    def __post_init__(self) -> None:
        if self.r < 2:
            raise ValueError("i.i.d. model needs r >= 2 locations")


@dataclass(frozen=True)
class ProfileDensity:
    """Bounded prior over profiles on the open simplex.

    ``uniform-simplex`` is the flat density (value (r-1)! everywhere, so
    the lower and upper density bounds coincide). ``bounded-mixture``
    mixes the flat density with a symmetric Dirichlet bump and keeps both
    bounds explicit: the flat component guarantees the lower bound, the
    bump's mode value caps the upper one.
    """

    kind: str
    r: int
    bump_weight: float = 0.5
    bump_alpha: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in ("uniform-simplex", "bounded-mixture"):
            raise ValueError(f"unknown density kind: {self.kind!r}")
        if self.r < 2:
            raise ValueError("density needs r >= 2")
        if self.kind == "bounded-mixture":
            if not 0.0 < self.bump_weight < 1.0:
                raise ValueError("bump_weight must lie in (0, 1)")
            if self.bump_alpha <= 1.0:
                raise ValueError("bump_alpha must exceed 1 for a bounded bump")

    @property
    def bounds(self) -> tuple[float, float]:
        """(delta1, delta2): the density lies in [delta1, delta2] on its support."""
        flat = math.factorial(self.r - 1)
        if self.kind == "uniform-simplex":
            return (float(flat), float(flat))
        w, a = self.bump_weight, self.bump_alpha
        # Symmetric Dirichlet(a,...,a) peaks at the barycenter x_i = 1/r.
        log_peak = (
            math.lgamma(self.r * a)
            - self.r * math.lgamma(a)
            - self.r * (a - 1.0) * math.log(self.r)
        )
        peak = math.exp(log_peak)
        return ((1.0 - w) * flat, (1.0 - w) * flat + w * peak)


@dataclass(frozen=True)
class Trajectory:
    """A user's observed location sequence; time_base is the first time index."""

    states: np.ndarray
    time_base: int = 1

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=np.int64)
        if states.ndim != 1:
            raise ValueError("trajectory states must be a flat sequence")
        if states.size and states.min() < 0:
            raise ValueError("state ids must be nonnegative")
        object.__setattr__(self, "states", _readonly(states))

    def __len__(self) -> int:
        return int(self.states.size)


@dataclass(frozen=True)
class Population:
    """n users sharing one model kind; profiles are per-user laws."""

    model: object  # IidModel or markov.MarkovModel
    profiles: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.profiles) < 1:
            raise ValueError("population needs at least one user")
        object.__setattr__(self, "profiles", tuple(self.profiles))

    @property
    def n(self) -> int:
        return len(self.profiles)


def sample_profile(density: ProfileDensity, rng: np.random.Generator) -> IidProfile:
    """Draw one profile from the prior, rejecting near-boundary draws."""
    r = density.r
    while True:
        if density.kind == "uniform-simplex":
            probs = rng.dirichlet(np.ones(r))
        else:
            if rng.random() < density.bump_weight:
                probs = rng.dirichlet(np.full(r, density.bump_alpha))
            else:
                probs = rng.dirichlet(np.ones(r))
        if probs.min() >= BOUNDARY_MARGIN:
            return IidProfile(probs / probs.sum())


def sample_trajectory_iid(
    profile: IidProfile, m: int, rng: np.random.Generator
) -> Trajectory:
    """m independent draws from the profile."""
    if m < 0:
        raise ValueError("observation count must be nonnegative")
    states = rng.choice(profile.r, size=m, p=profile.probs)
    return Trajectory(states=states)


def fit_iid_profile(
    trace: Trajectory | Sequence[int], r: int, smoothing: float = 1.0
) -> IidProfile:
    """Laplace-smoothed visit-frequency estimate of a profile.

    probs[i] = (count_i + smoothing) / (m + r * smoothing). With
    smoothing 0 the trace must cover every state, otherwise the boundary
    profile is rejected.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    states = trace.states if isinstance(trace, Trajectory) else np.asarray(trace, dtype=np.int64)
    if states.size == 0 and smoothing == 0.0:
        raise ValueError("cannot fit a profile from an empty trace without smoothing")
    if states.size and states.max() >= r:
        raise ValueError(f"trace contains state >= r={r}")
    counts = np.bincount(states, minlength=r).astype(float)
    probs = (counts + smoothing) / (states.size + r * smoothing)
    return IidProfile(probs)
