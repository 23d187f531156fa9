"""Entropy and derived operating-point curves.

Given a target code rate, finds the channel quality at which the quantized
mutual information per input bit just supports it, and the corresponding
maximum tolerable raw bit error probability.
"""

import math

import numpy as np

from .channel import gaussian_model, raw_bit_error_probability
from .quantizer import full_soft_mi, hard_decision_thresholds, optimize_thresholds

_SNR_LO_DB = -5.0
_SNR_HI_DB = 30.0
_SNR_TOL_DB = 1e-4


def entropy(p) -> float:
    """Shannon entropy -sum p_i log2 p_i in bits, with 0*log0 = 0.

    Accepts sub-normalized vectors; rejects negative entries and vectors
    whose mass exceeds 1.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < 0.0):
        raise ValueError("probability vector has a negative entry")
    if p.sum() > 1.0 + 1e-12:
        raise ValueError("probability mass exceeds 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return float(-plogp.sum())


def binary_entropy(p: float) -> float:
    """H2(p) in bits."""
    if p < 0.0 or p > 1.0:
        raise ValueError("p must be in [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _mmi_per_bit(num_levels: int, num_reads: int | None, snr_db: float) -> float:
    model = gaussian_model(num_levels, snr_db)
    if num_reads is None:
        mi = full_soft_mi(model)
    else:
        _, mi = optimize_thresholds(model, num_reads, symmetric=True)
    return mi / math.log2(num_levels)


def _validate_limit_args(num_levels: int, num_reads: int | None, rate: float) -> None:
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must be in (0, 1)")
    if num_reads is not None and num_reads < num_levels - 1:
        raise ValueError("need at least levels-1 reads to separate all levels")


def shannon_limit_snr(num_levels: int, num_reads: int | None, rate: float) -> float:
    """SNR (dB) at which the optimized quantization just supports ``rate``.

    ``num_reads=None`` uses the full soft-information channel.  Thresholds
    are re-optimized at every probe since the optimum moves with SNR.
    """
    _validate_limit_args(num_levels, num_reads, rate)
    lo, hi = _SNR_LO_DB, _SNR_HI_DB
    f_lo = _mmi_per_bit(num_levels, num_reads, lo) - rate
    f_hi = _mmi_per_bit(num_levels, num_reads, hi) - rate
    if f_hi < 0.0:
        raise ValueError(f"rate {rate} unachievable within the {hi:.0f} dB search range")
    if f_lo > 0.0:
        raise ValueError(f"rate {rate} already achieved at the {lo:.0f} dB search floor")
    while hi - lo > _SNR_TOL_DB:
        mid = 0.5 * (lo + hi)
        if _mmi_per_bit(num_levels, num_reads, mid) - rate < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def max_tolerable_raw_ber(num_levels: int, num_reads: int | None, rate: float) -> float:
    """Largest hard-decision raw bit error probability at which the quantized
    channel still carries ``rate`` bits per input bit.

    Evaluates the raw BER with pdf-crossing thresholds at the limiting SNR;
    nondecreasing in the number of reads.
    """
    snr_db = shannon_limit_snr(num_levels, num_reads, rate)
    model = gaussian_model(num_levels, snr_db)
    return raw_bit_error_probability(model, hard_decision_thresholds(model))
