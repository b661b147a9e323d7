"""Shared oracles for the test suite.

Everything here is deliberately brute-force and independent of the
library's computational paths: exhaustive enumeration over location
matrices and permutations, binomial tail sums, and the worked 3-state
graph used across the Markov tests.
"""
import itertools
import math

import numpy as np
from scipy.stats import binom

from locpriv.markov import MobilityGraph


def three_state_graph() -> MobilityGraph:
    return MobilityGraph(
        r=3,
        edges=[(0, 0), (0, 1), (0, 2), (1, 2), (2, 0), (2, 1)],
        free_edges=[(0, 0), (0, 1), (2, 1)],
    )


def entropy_bits(q) -> float:
    q = np.asarray(q, dtype=float)
    pos = q[q > 0]
    return float(-(pos * np.log2(pos)).sum())


def exact_mi_two_state(p_values, m: int, k: int) -> float:
    """I(X_1(k); Y) in bits by exhaustive enumeration.

    Sums over every location matrix in {0,1}^(m x n) and every
    permutation, weighting by the exact product-Bernoulli probability,
    then evaluates H(X_1(k)) - H(X_1(k) | Y) from the tabulated joint.
    """
    n = len(p_values)
    perms = list(itertools.permutations(range(n)))
    y_prob: dict = {}
    joint: dict = {}
    for flat in itertools.product((0, 1), repeat=m * n):
        X = np.array(flat, dtype=np.int64).reshape(m, n)
        pX = 1.0
        for u in range(n):
            ones = int(X[:, u].sum())
            pX *= p_values[u] ** ones * (1 - p_values[u]) ** (m - ones)
        x1k = int(X[k - 1, 0])
        for pi in perms:
            Y = np.empty_like(X)
            for u in range(n):
                Y[:, pi[u]] = X[:, u]
            key = Y.tobytes()
            w = pX / len(perms)
            y_prob[key] = y_prob.get(key, 0.0) + w
            joint[(key, x1k)] = joint.get((key, x1k), 0.0) + w
    h_marginal = entropy_bits([1 - p_values[0], p_values[0]])
    h_cond = 0.0
    for key, py in y_prob.items():
        q = np.array([joint.get((key, x), 0.0) for x in (0, 1)]) / py
        h_cond += py * entropy_bits(q)
    return h_marginal - h_cond


def exact_two_user_map_accuracy(p1: float, p2: float, m: int) -> float:
    """P(the MAP matching recovers user 1's pseudonym) for two two-state
    users, by summing binomial tails.

    The matching compares the two columns' state-1 counts: user 1 takes
    the column favored by (s_a - s_b)(logit p1 - logit p2), with exact
    ties resolved toward the identity matching (so half of them are
    correct under the uniform permutation).
    """
    s = np.arange(m + 1)
    pmf1 = binom.pmf(s, m, p1)
    cdf2 = binom.cdf(s, m, p2)
    pmf2 = binom.pmf(s, m, p2)
    if p1 == p2:
        return 0.5
    # orient so user 1 is the low-logit profile: correct iff S1 < S2
    if p1 > p2:
        p1, p2 = p2, p1
        pmf1 = binom.pmf(s, m, p1)
        cdf2 = binom.cdf(s, m, p2)
        pmf2 = binom.pmf(s, m, p2)
    p_tie = float((pmf1 * pmf2).sum())
    p_s1_ge_s2 = float((pmf1 * cdf2).sum())
    p_s1_gt_s2 = p_s1_ge_s2 - p_tie
    return 1.0 - p_s1_gt_s2 - 0.5 * p_tie


def mi_identical_profiles_shortcut(
    p: float, n: int, m: int, k: int, trials: int, rng
) -> tuple[float, float]:
    """MI Monte Carlo for an all-identical population via the symmetry
    identity: the posterior is uniform, so the conditional law of
    X_1(k) is the empirical state frequency at time k."""
    ones = rng.binomial(n, p, size=trials)
    h = np.array([entropy_bits([1 - c / n, c / n]) for c in ones])
    value = entropy_bits([1 - p, p]) - float(h.mean())
    return value, float(h.std(ddof=1) / math.sqrt(trials))
