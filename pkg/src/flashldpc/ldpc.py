"""Sparse binary parity-check codes.

Covers the alist interchange format, GF(2) encoding via bit-packed Gaussian
elimination, per-bit LLRs from a quantized channel, and a serial
(check-by-check) belief-propagation decoder with an optional scaled min-sum
check rule.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .quantizer import Dmc

#: LLR saturation applied to channel values and check-to-variable messages
LLR_MAX = 30.0

# tanh saturates to exactly 1.0 in double precision near 19.06; keep the
# product argument of atanh strictly inside (-1, 1)
_ATANH_GUARD_C = 1.0 - 2e-16


class AlistFormatError(ValueError):
    """Malformed alist text."""


@dataclass(eq=False)
class ParityCheckMatrix:
    """Sparse binary parity-check matrix in both row- and column-major form.

    ``row_ptr``/``row_cols`` give, per check, the sorted variable indices;
    ``col_ptr``/``col_rows`` the transpose.  Duplicate edges are rejected.
    """

    n: int
    m_rows: int
    row_ptr: np.ndarray
    row_cols: np.ndarray
    col_ptr: np.ndarray
    col_rows: np.ndarray
    _encoder: "Gf2Encoder | None" = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, m_rows: int, checks, variables) -> "ParityCheckMatrix":
        checks = np.asarray(checks, dtype=np.int64)
        variables = np.asarray(variables, dtype=np.int64)
        if checks.shape != variables.shape or checks.ndim != 1:
            raise ValueError("checks and variables must be 1-d arrays of equal length")
        if checks.size == 0:
            raise ValueError("a code needs at least one edge")
        if checks.min() < 0 or checks.max() >= m_rows:
            raise ValueError("check index out of range")
        if variables.min() < 0 or variables.max() >= n:
            raise ValueError("variable index out of range")
        key = checks * n + variables
        order = np.argsort(key, kind="stable")
        key = key[order]
        if np.any(np.diff(key) == 0):
            raise ValueError("duplicate edge in parity-check matrix")
        checks = checks[order]
        variables = variables[order]
        row_ptr = np.zeros(m_rows + 1, dtype=np.int64)
        np.add.at(row_ptr, checks + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        # column-major copy
        corder = np.argsort(variables * m_rows + checks, kind="stable")
        col_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(col_ptr, variables + 1, 1)
        np.cumsum(col_ptr, out=col_ptr)
        if np.any(np.diff(col_ptr) == 0):
            raise ValueError("every column must participate in at least one check")
        return cls(
            n=n,
            m_rows=m_rows,
            row_ptr=row_ptr,
            row_cols=variables.astype(np.int32),
            col_ptr=col_ptr,
            col_rows=checks[corder].astype(np.int32),
        )

    @classmethod
    def from_dense(cls, h) -> "ParityCheckMatrix":
        h = np.asarray(h)
        rows, cols = np.nonzero(h)
        return cls.from_edges(h.shape[1], h.shape[0], rows, cols)

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.m_rows, self.n), dtype=np.uint8)
        for c in range(self.m_rows):
            h[c, self.row_cols[self.row_ptr[c] : self.row_ptr[c + 1]]] = 1
        return h

    @property
    def num_edges(self) -> int:
        return int(self.row_cols.size)

    @property
    def column_degrees(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    @property
    def row_degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def rate(self) -> float:
        return 1.0 - self.m_rows / self.n


def load_alist(path: str | os.PathLike) -> ParityCheckMatrix:
    """Read an alist file (zero padding entries are accepted and ignored)."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.split() for ln in f.read().splitlines()]
    rows_of_ints = []
    for ln in lines:
        try:
            rows_of_ints.append([int(tok) for tok in ln])
        except ValueError as exc:
            raise AlistFormatError(f"non-integer token in alist: {exc}") from None
    rows_of_ints = [r for r in rows_of_ints if r]
    if len(rows_of_ints) < 4:
        raise AlistFormatError("alist header is incomplete")
    if len(rows_of_ints[0]) != 2:
        raise AlistFormatError("first line must hold exactly 'n m'")
    n, m = rows_of_ints[0]
    if n <= 0 or m <= 0:
        raise AlistFormatError("matrix dimensions must be positive")
    if len(rows_of_ints) < 4 + n + m:
        raise AlistFormatError(f"expected {4 + n + m} lines, found {len(rows_of_ints)}")
    col_degs = rows_of_ints[2]
    row_degs = rows_of_ints[3]
    if len(col_degs) != n:
        raise AlistFormatError("column-degree line length does not match n")
    if len(row_degs) != m:
        raise AlistFormatError("row-degree line length does not match m")
    checks: list[int] = []
    variables: list[int] = []
    for v in range(n):
        entries = [x for x in rows_of_ints[4 + v] if x != 0]
        if len(entries) != col_degs[v]:
            raise AlistFormatError(f"column {v}: {len(entries)} entries, declared {col_degs[v]}")
        for r in entries:
            if not 1 <= r <= m:
                raise AlistFormatError(f"column {v}: row index {r} out of range")
            checks.append(r - 1)
            variables.append(v)
    # cross-check the row section against the column section
    for c in range(m):
        entries = sorted(x for x in rows_of_ints[4 + n + c] if x != 0)
        if len(entries) != row_degs[c]:
            raise AlistFormatError(f"row {c}: {len(entries)} entries, declared {row_degs[c]}")
        expect = sorted(variables[i] + 1 for i in range(len(checks)) if checks[i] == c)
        if entries != expect:
            raise AlistFormatError(f"row {c}: row section disagrees with column section")
    try:
        return ParityCheckMatrix.from_edges(n, m, checks, variables)
    except ValueError as exc:
        raise AlistFormatError(str(exc)) from None


def save_alist(h: ParityCheckMatrix, path: str | os.PathLike) -> None:
    """Write the canonical (unpadded, sorted, 1-based) alist form."""
    col_degs = h.column_degrees
    row_degs = h.row_degrees
    out = [
        f"{h.n} {h.m_rows}",
        f"{int(col_degs.max())} {int(row_degs.max())}",
        " ".join(str(int(d)) for d in col_degs),
        " ".join(str(int(d)) for d in row_degs),
    ]
    for v in range(h.n):
        rows = h.col_rows[h.col_ptr[v] : h.col_ptr[v + 1]] + 1
        out.append(" ".join(str(int(r)) for r in rows))
    for c in range(h.m_rows):
        cols = h.row_cols[h.row_ptr[c] : h.row_ptr[c + 1]] + 1
        out.append(" ".join(str(int(x)) for x in cols))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(out) + "\n")


class Gf2Encoder:
    """Systematic GF(2) encoder derived from H by bit-packed elimination.

    Dependent rows are dropped, so the message length is ``n - rank(H)``.
    Message bits occupy the free columns (``info_positions``); parity bits
    fill the pivot columns.
    """

    def __init__(self, h: ParityCheckMatrix):
        n, m = h.n, h.m_rows
        words = (n + 63) // 64
        packed = np.zeros((m, words), dtype=np.uint64)
        one = np.uint64(1)
        for c in range(m):
            cols = h.row_cols[h.row_ptr[c] : h.row_ptr[c + 1]].astype(np.int64)
            np.bitwise_or.at(packed[c], cols >> 6, one << (cols & 63).astype(np.uint64))
        rank = 0
        pivots: list[int] = []
        for col in range(n):
            word, bit = col >> 6, np.uint64(col & 63)
            bits = (packed[rank:, word] >> bit) & one
            nz = np.nonzero(bits)[0]
            if nz.size == 0:
                continue
            pivot = rank + int(nz[0])
            if pivot != rank:
                packed[[rank, pivot]] = packed[[pivot, rank]]
            mask = (packed[:, word] >> bit) & one == one
            mask[rank] = False
            if mask.any():
                packed[mask] ^= packed[rank]
            pivots.append(col)
            rank += 1
            if rank == m:
                break
        self.n = n
        self.rank = rank
        self.k = n - rank
        self.pivot_cols = np.array(pivots, dtype=np.int64)
        free = np.ones(n, dtype=bool)
        free[self.pivot_cols] = False
        self.info_positions = np.nonzero(free)[0]
        # parity generator: per pivot row, its bits restricted to free columns
        bits = np.unpackbits(packed[:rank].view(np.uint8), axis=1, bitorder="little")[:, :n]
        self._parity_gen = np.packbits(bits[:, self.info_positions], axis=1, bitorder="little")

    def encode(self, message: np.ndarray) -> np.ndarray:
        message = np.asarray(message, dtype=np.uint8)
        if message.shape != (self.k,):
            raise ValueError(f"message length must be {self.k}, got {message.shape}")
        if np.any(message > 1):
            raise ValueError("message must be binary")
        mp = np.packbits(message, bitorder="little")
        parities = (np.bitwise_count(self._parity_gen & mp).sum(axis=1) & 1).astype(np.uint8)
        cw = np.zeros(self.n, dtype=np.uint8)
        cw[self.info_positions] = message
        cw[self.pivot_cols] = parities
        return cw


def encoder(h: ParityCheckMatrix) -> Gf2Encoder:
    """Encoder for ``h``, cached on the matrix object."""
    if h._encoder is None:
        h._encoder = Gf2Encoder(h)
    return h._encoder


def encode(h: ParityCheckMatrix, message) -> np.ndarray:
    """Encode ``message`` (length ``n - rank(H)``) into a codeword of ``h``."""
    return encoder(h).encode(np.asarray(message))


@dataclass(frozen=True, eq=False)
class LlrTable:
    """Log-likelihood ratios per (bit position within a cell, DMC output)."""

    table: np.ndarray  # (bits_per_level, num_outputs)

    @property
    def bits_per_level(self) -> int:
        return self.table.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.table.shape[1]


def llr_table(dmc: Dmc, labels, llr_max: float = LLR_MAX) -> LlrTable:
    """Per-bit LLR lookup for each channel output symbol.

    Entry (b, y) is log of the prior-weighted mass of levels whose label
    bit b is 0 over the mass with bit 1, clamped to +-llr_max.
    """
    labels = tuple(labels)
    if len(labels) != dmc.num_inputs:
        raise ValueError("one label per channel input level is required")
    bits = np.array([[int(ch) for ch in lab] for lab in labels])  # (L, B)
    joint = dmc.input_priors[:, None] * dmc.rows  # (L, S)
    col_mass = joint.sum(axis=0)
    if np.any(col_mass <= 0.0):
        dead = np.nonzero(col_mass <= 0.0)[0]
        raise ValueError(f"channel output symbols with zero mass under every level: {dead.tolist()}")
    B = bits.shape[1]
    table = np.empty((B, dmc.num_outputs))
    with np.errstate(divide="ignore"):
        for b in range(B):
            num = joint[bits[:, b] == 0].sum(axis=0)
            den = joint[bits[:, b] == 1].sum(axis=0)
            table[b] = np.clip(np.log(num) - np.log(den), -llr_max, llr_max)
    return LlrTable(table)


def channel_llrs(dmc: Dmc, labels, observed_symbols) -> np.ndarray:
    """Per-bit LLRs for a vector of observed DMC outputs.

    Output is cell-major: the LLRs of cell i occupy positions
    [i*B, (i+1)*B) where B is the label width.
    """
    syms = np.asarray(observed_symbols, dtype=np.int64)
    if syms.size and (syms.min() < 0 or syms.max() >= dmc.num_outputs):
        raise ValueError("observed symbol index out of range")
    t = llr_table(dmc, labels)
    return t.table[:, syms].T.reshape(-1)


@njit(cache=True, nogil=True)
def _serial_bp_kernel(row_ptr, row_cols, llr0, max_iters, llr_max, use_min_sum, ms_scale):
    m = row_ptr.size - 1
    n = llr0.size
    E = row_cols.size
    L = llr0.copy()
    R = np.zeros(E)
    maxdeg = 0
    for c in range(m):
        d = row_ptr[c + 1] - row_ptr[c]
        if d > maxdeg:
            maxdeg = d
    t = np.empty(maxdeg)
    pref = np.empty(maxdeg + 1)
    suff = np.empty(maxdeg + 1)
    hard = np.zeros(n, np.uint8)

    # a frame whose hard decisions already satisfy every check needs no pass
    ok = True
    for v in range(n):
        hard[v] = 1 if L[v] < 0.0 else 0
    for c in range(m):
        par = 0
        for j in range(row_ptr[c], row_ptr[c + 1]):
            par ^= hard[row_cols[j]]
        if par == 1:
            ok = False
            break
    if ok:
        return hard, True, 0

    for it in range(1, max_iters + 1):
        for c in range(m):
            s = row_ptr[c]
            e = row_ptr[c + 1]
            d = e - s
            for j in range(d):
                t[j] = L[row_cols[s + j]] - R[s + j]
            if use_min_sum:
                sgn = 1.0
                min1 = 1.0e300
                min2 = 1.0e300
                arg1 = -1
                for j in range(d):
                    x = t[j]
                    if x < 0.0:
                        sgn = -sgn
                    a = -x if x < 0.0 else x
                    if a < min1:
                        min2 = min1
                        min1 = a
                        arg1 = j
                    elif a < min2:
                        min2 = a
                for j in range(d):
                    x = t[j]
                    mag = min2 if j == arg1 else min1
                    r = ms_scale * mag
                    if r > llr_max:
                        r = llr_max
                    excl = sgn if x >= 0.0 else -sgn
                    if excl < 0.0:
                        r = -r
                    L[row_cols[s + j]] = x + r
                    R[s + j] = r
            else:
                pref[0] = 1.0
                for j in range(d):
                    pref[j + 1] = pref[j] * math.tanh(0.5 * t[j])
                suff[d] = 1.0
                for j in range(d - 1, -1, -1):
                    suff[j] = suff[j + 1] * math.tanh(0.5 * t[j])
                for j in range(d):
                    p = pref[j] * suff[j + 1]
                    if p > _ATANH_GUARD_C:
                        p = _ATANH_GUARD_C
                    elif p < -_ATANH_GUARD_C:
                        p = -_ATANH_GUARD_C
                    r = 2.0 * math.atanh(p)
                    if r > llr_max:
                        r = llr_max
                    elif r < -llr_max:
                        r = -llr_max
                    L[row_cols[s + j]] = t[j] + r
                    R[s + j] = r
        ok = True
        for v in range(n):
            hard[v] = 1 if L[v] < 0.0 else 0
        for c in range(m):
            par = 0
            for j in range(row_ptr[c], row_ptr[c + 1]):
                par ^= hard[row_cols[j]]
            if par == 1:
                ok = False
                break
        if ok:
            return hard, True, it
    return hard, False, max_iters


def decode_serial_bp(
    h: ParityCheckMatrix,
    llrs,
    max_iters: int = 50,
    *,
    min_sum: bool = False,
    min_sum_scale: float = 0.8,
) -> tuple[np.ndarray, bool, int]:
    """Serial (check-by-check) belief propagation.

    Returns ``(hard_bits, converged, iterations)``.  Checks are swept in
    index order, each consuming the freshest posteriors; decoding stops as
    soon as the syndrome is zero.  The default check rule is sum-product in
    the tanh domain; ``min_sum=True`` switches to scaled min-sum.
    Deterministic for fixed inputs.
    """
    llr = np.ascontiguousarray(llrs, dtype=np.float64)
    if llr.shape != (h.n,):
        raise ValueError(f"llr length must be {h.n}, got {llr.shape}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    bits, converged, iters = _serial_bp_kernel(
        h.row_ptr, h.row_cols, llr, max_iters, LLR_MAX, 1 if min_sum else 0, min_sum_scale
    )
    return bits, bool(converged), int(iters)


def syndrome_weight(h: ParityCheckMatrix, bits) -> int:
    """Number of unsatisfied checks for a hard bit vector."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.shape != (h.n,):
        raise ValueError(f"bit vector length must be {h.n}, got {b.shape}")
    par = np.bitwise_xor.reduceat(b[h.row_cols], h.row_ptr[:-1])
    return int(par.sum())
