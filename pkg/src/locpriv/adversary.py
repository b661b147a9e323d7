"""The strongest de-anonymization adversary the model admits.

Works from sufficient statistics only: per-pseudonym visit counts for
i.i.d. mobility, per-pseudonym transition-count matrices for Markov
mobility. Log-likelihoods are multinomial kernels with the combinatorial
coefficients dropped (they cancel in every posterior ratio). On top of
the likelihood matrix the adversary offers two attacks:

* ``map_assignment`` -- the MAP permutation via optimal assignment;
* ``posterior_pi1`` -- the exact posterior P(pseudonym of user 1 = j),
  a ratio of matrix permanents evaluated with Ryser's inclusion-
  exclusion in a max-factored scaled domain. All n row-0 minors come out
  of a single pass over column subsets (the permanent is multilinear, so
  each minor is the partial derivative of the full permanent with
  respect to a first-row entry).

Brute-force enumeration twins (`*_bruteforce`) are kept as independent
oracles for small n.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .anonymization import ObservationMatrix, Permutation
from .markov import MobilityGraph, TransitionMatrix
from .mobility import IidProfile, _readonly

__all__ = [
    "AssignmentPosterior",
    "CountStats",
    "TransitionStats",
    "count_stats",
    "likelihood_matrix_iid",
    "likelihood_matrix_markov",
    "log_likelihood_iid",
    "log_likelihood_markov",
    "log_likelihood_markov_free_edges",
    "map_assignment",
    "map_assignment_bruteforce",
    "permanent",
    "posterior_pi1",
    "posterior_pi1_bruteforce",
    "transition_stats",
]

# Stand-in for -inf cells handed to the assignment solver; any feasible
# permutation beats any total containing one of these.
_NEG_SENTINEL = -1e18
_SENTINEL_CUTOFF = _NEG_SENTINEL / 2

# Hard cap on exact-posterior size: Ryser is O(2^n * n^2).
PERMANENT_FEASIBILITY_BOUND = 20

_CHUNK_BITS = 16
_mask_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


@dataclass(frozen=True)
class CountStats:
    """Per-pseudonym visit counts: counts[j, i] = #times state i in column j."""

    counts: np.ndarray
    m: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValueError("counts must be (pseudonyms x states)")
        if np.any(counts.sum(axis=1) != self.m):
            raise ValueError("each pseudonym's counts must sum to m")
        object.__setattr__(self, "counts", _readonly(counts))

    @property
    def n(self) -> int:
        return int(self.counts.shape[0])


@dataclass(frozen=True)
class TransitionStats:
    """Per-pseudonym transition counts: matrices[j, i, k] over adjacent pairs."""

    matrices: np.ndarray
    m: int

    def __post_init__(self) -> None:
        matrices = np.asarray(self.matrices, dtype=np.int64)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise ValueError("matrices must be (pseudonyms x r x r)")
        if np.any(matrices.sum(axis=(1, 2)) != self.m - 1):
            raise ValueError("each pseudonym's transition counts must sum to m-1")
        object.__setattr__(self, "matrices", _readonly(matrices))

    @property
    def n(self) -> int:
        return int(self.matrices.shape[0])


@dataclass(frozen=True)
class AssignmentPosterior:
    """Posterior weights W_j = P(pseudonym of user 1 = j | statistics)."""

    weights: np.ndarray
    normalization_residual: float

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.min() < 0.0:
            raise ValueError("posterior weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-10:
            raise ValueError("posterior weights must sum to 1 within 1e-10")
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def n(self) -> int:
        return int(self.weights.size)


def count_stats(Y: ObservationMatrix, r: int) -> CountStats:
    """Exact per-state visit counts for every pseudonym column."""
    if Y.entries.size and Y.entries.max() >= r:
        raise ValueError(f"observation outside 0..{r - 1}")
    counts = np.empty((Y.n, r), dtype=np.int64)
    for j in range(Y.n):
        counts[j] = np.bincount(Y.entries[:, j], minlength=r)
    return CountStats(counts=counts, m=Y.m)


def transition_stats(Y: ObservationMatrix, r: int) -> TransitionStats:
    """Adjacent-pair transition counts for every pseudonym column."""
    if Y.m < 1:
        raise ValueError("need at least one observation")
    if Y.entries.size and Y.entries.max() >= r:
        raise ValueError(f"observation outside 0..{r - 1}")
    mats = np.zeros((Y.n, r, r), dtype=np.int64)
    for j in range(Y.n):
        col = Y.entries[:, j]
        np.add.at(mats[j], (col[:-1], col[1:]), 1)
    return TransitionStats(matrices=mats, m=Y.m)


def log_likelihood_iid(profile: IidProfile, counts: np.ndarray) -> float:
    """Multinomial kernel: sum_i counts[i] * ln p(i)."""
    counts = np.asarray(counts, dtype=float)
    if counts.size != profile.r:
        raise ValueError("counts length must equal the number of states")
    return float(counts @ np.log(profile.probs))


def log_likelihood_markov(T: TransitionMatrix, M: np.ndarray) -> float:
    """Markov kernel: sum_{i,k} M(i,k) * ln T(i,k); -inf if M puts mass on
    a zero-probability transition (this user cannot have produced it)."""
    M = np.asarray(M, dtype=float)
    mask = M > 0
    if np.any(T.matrix[mask] == 0.0):
        return float("-inf")
    return float(np.sum(M[mask] * np.log(T.matrix[mask])))


def log_likelihood_markov_free_edges(
    T: TransitionMatrix, M: np.ndarray, graph: MobilityGraph
) -> float:
    """Reduced-statistic variant using free-edge counts only.

    Experimental comparison point; the full-count kernel above is the
    exactly sufficient one.
    """
    M = np.asarray(M, dtype=float)
    total = 0.0
    for i, j in graph.free_edges:
        if M[i, j] > 0:
            if T.matrix[i, j] == 0.0:
                return float("-inf")
            total += M[i, j] * math.log(T.matrix[i, j])
    return total


def likelihood_matrix_iid(profiles, stats: CountStats) -> np.ndarray:
    """L[u, j] = log-likelihood that user u generated pseudonym j's counts."""
    logp = np.stack([p.log_probs() for p in profiles])
    return logp @ stats.counts.T.astype(float)


def likelihood_matrix_markov(chains, stats: TransitionStats) -> np.ndarray:
    """Markov analogue of likelihood_matrix_iid; -inf marks impossible pairs."""
    r = stats.matrices.shape[1]
    Tflat = np.stack([c.matrix.reshape(r * r) for c in chains])
    logT = np.where(Tflat > 0.0, np.log(np.where(Tflat > 0.0, Tflat, 1.0)), 0.0)
    Mflat = stats.matrices.reshape(stats.n, r * r).astype(float)
    L = logT @ Mflat.T
    forbidden = (Tflat == 0.0).astype(float) @ Mflat.T
    L[forbidden > 0] = -np.inf
    return L


def _subset_masks(nbits: int) -> tuple[np.ndarray, np.ndarray]:
    """All nonempty column subsets as 0/1 rows, plus subset sizes."""
    cached = _mask_cache.get(nbits)
    if cached is None:
        idx = np.arange(1, 2**nbits, dtype=np.int64)
        mask = ((idx[:, None] >> np.arange(nbits)[None, :]) & 1).astype(float)
        cached = (mask, mask.sum(axis=1))
        if nbits <= _CHUNK_BITS:
            _mask_cache[nbits] = cached
    return cached


def _subset_chunks(nbits: int):
    if nbits <= _CHUNK_BITS:
        yield _subset_masks(nbits)
        return
    cols = np.arange(nbits)[None, :]
    for start in range(1, 2**nbits, 2**_CHUNK_BITS):
        idx = np.arange(start, min(start + 2**_CHUNK_BITS, 2**nbits), dtype=np.int64)
        mask = ((idx[:, None] >> cols) & 1).astype(float)
        yield mask, mask.sum(axis=1)


def permanent(A: np.ndarray) -> float:
    """Ryser inclusion-exclusion permanent of a square matrix."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0
    if n > PERMANENT_FEASIBILITY_BOUND:
        raise ValueError(f"permanent limited to n <= {PERMANENT_FEASIBILITY_BOUND}")
    total = 0.0
    for mask, sizes in _subset_chunks(n):
        rowsums = mask @ A.T
        total += float(np.sum((-1.0) ** (n - sizes) * np.prod(rowsums, axis=1)))
    return total


def _ryser_row0_minors(A: np.ndarray) -> np.ndarray:
    """perm of A with row 0 and column j removed, for every j, in one pass.

    Uses d perm(A) / d A[0, j]: subsets containing column j, with the
    first-row factor dropped from the product.
    """
    n = A.shape[0]
    if n == 1:
        return np.ones(1)
    out = np.zeros(n)
    for mask, sizes in _subset_chunks(n):
        rowsums = mask @ A[1:].T
        v = (-1.0) ** (n - sizes) * np.prod(rowsums, axis=1)
        out += v @ mask
    return out


def map_assignment(L: np.ndarray) -> Permutation:
    """MAP user-to-pseudonym matching: argmax over permutations of the
    total log-likelihood, ties broken by lexicographically smallest
    forward array (totals within a small numeric tolerance count as tied).
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n) or n < 1:
        raise ValueError("likelihood matrix must be square and nonempty")
    if np.isnan(L).any():
        raise ValueError("likelihood matrix contains NaN")
    Lf = np.where(np.isfinite(L), L, _NEG_SENTINEL)
    rows, cols = linear_sum_assignment(Lf, maximize=True)
    if np.any(Lf[rows, cols] <= _SENTINEL_CUTOFF):
        raise ValueError("no feasible permutation: every matching hits -inf")
    best = float(Lf[rows, cols].sum())
    finite = Lf[Lf > _SENTINEL_CUTOFF]
    tol = 1e-9 * max(1.0, float(np.abs(finite).max()) if finite.size else 1.0)

    forward = np.empty(n, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    fixed = 0.0
    for u in range(n):
        free_cols = np.flatnonzero(~used)
        chosen = -1
        for j in free_cols:
            if Lf[u, j] <= _SENTINEL_CUTOFF:
                continue
            if u == n - 1:
                sub_opt = 0.0
            else:
                sub = Lf[np.ix_(np.arange(u + 1, n), free_cols[free_cols != j])]
                rr, cc = linear_sum_assignment(sub, maximize=True)
                sub_opt = float(sub[rr, cc].sum())
            if fixed + Lf[u, j] + sub_opt >= best - tol:
                chosen = int(j)
                break
        if chosen < 0:  # cannot happen once a feasible optimum exists
            raise ValueError("assignment refinement failed")
        forward[u] = chosen
        used[chosen] = True
        fixed += Lf[u, chosen]
    return Permutation.from_forward(forward)


def map_assignment_bruteforce(L: np.ndarray) -> Permutation:
    """Exhaustive argmax over all n! permutations (test oracle)."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    best_total = -np.inf
    best_perm: tuple[int, ...] | None = None
    for p in itertools.permutations(range(n)):
        total = 0.0
        feasible = True
        for u, j in enumerate(p):
            if not np.isfinite(L[u, j]):
                feasible = False
                break
            total += L[u, j]
        if feasible and (total > best_total):
            best_total = total
            best_perm = p
    if best_perm is None:
        raise ValueError("no feasible permutation: every matching hits -inf")
    return Permutation.from_forward(list(best_perm))


def _balance(L: np.ndarray) -> np.ndarray:
    """exp(L) rescaled by per-row and per-column factors toward a doubly
    stochastic matrix (Sinkhorn iterations in the scaled domain).

    Every permutation picks each row and column exactly once, so such
    scalings multiply all permutation weights by one common factor and
    cancel in posterior ratios. Balancing matters numerically: the
    permanent of a doubly stochastic matrix is at least n!/n^n, so Ryser
    cannot underflow, whereas plain row-max factoring can collapse to
    zero when several users' best-matching pseudonyms collide.
    """
    row_max = L.max(axis=1)
    if not np.all(np.isfinite(row_max)):
        raise ValueError("a user matches no pseudonym: all-(-inf) row")
    B = np.exp(L - row_max[:, None])
    for _ in range(100):
        rs = B.sum(axis=1)
        if not np.all(rs > 0.0):
            raise ValueError("degenerate posterior: a user's weights vanished")
        B = B / rs[:, None]
        cs = B.sum(axis=0)
        if not np.all(cs > 0.0):
            raise ValueError("degenerate posterior: a pseudonym's weights vanished")
        B = B / cs[None, :]
        if np.abs(cs - 1.0).max() < 1e-8 and np.abs(rs - 1.0).max() < 1e-8:
            break
    return B


def posterior_pi1(
    L: np.ndarray, *, max_n: int = PERMANENT_FEASIBILITY_BOUND
) -> AssignmentPosterior:
    """Exact posterior over user 1's pseudonym.

    W_j is proportional to exp(L[0, j]) times the permanent of exp(L)
    with row 0 and column j struck out. The computation runs on the
    Sinkhorn-balanced matrix (see _balance); the balancing factors are
    identical across j and cancel in the normalization.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n) or n < 1:
        raise ValueError("likelihood matrix must be square and nonempty")
    if n > max_n:
        raise ValueError(f"posterior limited to n <= {max_n} (got n = {n})")
    if np.isnan(L).any():
        raise ValueError("likelihood matrix contains NaN")
    B = _balance(L)
    minors = np.clip(_ryser_row0_minors(B), 0.0, None)
    w = B[0] * minors
    total = float(w.sum())
    if not (total > 0.0) or not np.isfinite(total):
        raise ValueError("degenerate posterior: permanent vanished or overflowed")
    w = w / total
    w = w / w.sum()
    return AssignmentPosterior(
        weights=w, normalization_residual=abs(float(w.sum()) - 1.0)
    )


def posterior_pi1_bruteforce(L: np.ndarray) -> AssignmentPosterior:
    """Posterior over user 1's pseudonym by enumerating all n! permutations
    (test oracle for small n)."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    totals = []
    firsts = []
    for p in itertools.permutations(range(n)):
        t = sum(L[u, j] for u, j in enumerate(p))
        if np.isfinite(t):
            totals.append(t)
            firsts.append(p[0])
    if not totals:
        raise ValueError("degenerate posterior: no feasible permutation")
    totals = np.asarray(totals)
    shift = totals.max()
    w = np.zeros(n)
    np.add.at(w, np.asarray(firsts), np.exp(totals - shift))
    w /= w.sum()
    return AssignmentPosterior(weights=w, normalization_residual=abs(float(w.sum()) - 1.0))
