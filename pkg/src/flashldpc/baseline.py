"""Bounded-distance block-code theory curve.

A hard-decision bounded-distance decoder fails exactly when more than t of
the n code bits are in error, so the frame error rate is a binomial tail.
"""

import math

import numpy as np
from scipy.special import gammaln, logsumexp


def bch_theory_fer(n: int, t: int, p: float) -> float:
    """P(more than t errors among n bits), each in error with probability p.

    Computed in the log domain so tiny tails near p -> 0 stay accurate.
    """
    if not 0 <= t < n:
        raise ValueError("need 0 <= t < n")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    i = np.arange(t + 1, n + 1, dtype=float)
    log_comb = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    log_terms = log_comb + i * math.log(p) + (n - i) * math.log1p(-p)
    tail = math.exp(logsumexp(log_terms))
    return min(max(tail, 0.0), 1.0)


def bch_t_for(n: int, k: int) -> int:
    """Correctable-error count inferred from (n, k).

    Assumes ceil(log2(n+1)) parity bits per corrected error, the usual
    binary BCH bookkeeping: t = (n - k) // ceil(log2(n + 1)).
    """
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    mbits = math.ceil(math.log2(n + 1))
    return (n - k) // mbits
