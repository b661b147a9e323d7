"""locpriv: a simulation lab for anonymization-based location privacy.

Generates synthetic mobility (i.i.d. or Markov), anonymizes it with a
uniform random pseudonym permutation, attacks it with the exact Bayesian
adversary, and measures what leaked: mutual information, matching
accuracy, and the posterior-flatness quantities behind the privacy
thresholds m ~ n^(2/(r-1)) and m ~ n^(2/(|E|-r)).
"""
from . import adversary, anonymization, harness, markov, metrics, mobility, proofcheck

__all__ = [
    "adversary",
    "anonymization",
    "harness",
    "markov",
    "metrics",
    "mobility",
    "proofcheck",
]

__version__ = "0.1.0"
