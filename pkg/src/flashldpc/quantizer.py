"""Threshold quantization of read channels.

Builds the discrete memoryless channel induced by a set of read thresholds,
evaluates its mutual information, and searches for threshold sets that
maximize it, either unconstrained or under a constant-ratio constraint on
the adjacent conditional pdfs.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import logsumexp

from .channel import ReadChannelModel, qfunc

_LN2 = math.log(2.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0

#: grid points per free variable in the coarse search stage
_COARSE_GRID = 64
#: absolute voltage tolerance of the refinement stage
_REFINE_TOL = 1e-6
#: mutual-information gain below which coordinate passes stop
_PASS_TOL = 1e-9


class ThresholdSearchError(RuntimeError):
    """A threshold/ratio search could not bracket its target."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class ThresholdSet:
    """Strictly increasing, finite read voltages."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) == 0:
            raise ValueError("a threshold set cannot be empty")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("thresholds must be finite")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("thresholds must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def as_array(self) -> np.ndarray:
        return np.array(self.values)


def _coerce_thresholds(thresholds) -> ThresholdSet:
    if isinstance(thresholds, ThresholdSet):
        return thresholds
    return ThresholdSet(tuple(thresholds))


@dataclass(frozen=True, eq=False)
class Dmc:
    """Row-stochastic transition matrix of the quantized read channel."""

    rows: np.ndarray  # (levels, outputs)
    input_priors: np.ndarray  # (levels,)
    output_labels: tuple[str, ...]

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        priors = np.array(self.input_priors, dtype=float)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if priors.shape != (rows.shape[0],):
            raise ValueError("input_priors length must match the number of rows")
        if len(self.output_labels) != rows.shape[1]:
            raise ValueError("output_labels length must match the number of columns")
        if np.any(rows < 0.0):
            raise ValueError("transition probabilities must be nonnegative")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("each row must sum to 1")
        if np.any(priors < 0.0) or abs(priors.sum() - 1.0) > 1e-9:
            raise ValueError("input priors must be a probability vector")
        rows.setflags(write=False)
        priors.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "input_priors", priors)
        object.__setattr__(self, "output_labels", tuple(self.output_labels))

    @property
    def num_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.rows.shape[1]

    def output_distribution(self) -> np.ndarray:
        return self.input_priors @ self.rows


def build_dmc(model: ReadChannelModel, thresholds) -> Dmc:
    """Quantize ``model`` with the given thresholds.

    Row l, column j is the probability mass of level l between thresholds
    q_j and q_{j+1} (with q_0 = -inf and q_{K+1} = +inf).
    """
    thr = _coerce_thresholds(thresholds)
    t = thr.as_array
    L = model.num_levels
    cdf = np.stack([d.cdf(t) for d in model.distributions])
    bounds = np.concatenate([np.zeros((L, 1)), cdf, np.ones((L, 1))], axis=1)
    rows = np.clip(np.diff(bounds, axis=1), 0.0, 1.0)
    labels = tuple(f"y{j}" for j in range(len(thr) + 1))
    return Dmc(rows, model.priors_array, labels)


def _entropy_bits(p: np.ndarray, axis=-1) -> np.ndarray:
    """Shannon entropy in bits along ``axis`` with the 0*log0 = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return -plogp.sum(axis=axis)


def mutual_information(dmc: Dmc) -> float:
    """I(X;Y) = H(Y) - H(Y|X) in bits, using the dmc's input priors."""
    p_y = dmc.output_distribution()
    h_y = float(_entropy_bits(p_y))
    h_y_given_x = float(np.dot(dmc.input_priors, _entropy_bits(dmc.rows, axis=1)))
    return max(h_y - h_y_given_x, 0.0)


def _mi_batch(model: ReadChannelModel, tsets: np.ndarray) -> np.ndarray:
    """Mutual information of many threshold sets at once; tsets is (B, K)."""
    means = model.means
    sigmas = model.sigmas
    priors = model.priors_array
    # (B, L, K) conditional cdfs; all supported shapes are Gaussian
    z = (means[None, :, None] - tsets[:, None, :]) / sigmas[None, :, None]
    cdf = np.clip(qfunc(z), 0.0, 1.0)
    B, L, K = cdf.shape
    bounds = np.concatenate([np.zeros((B, L, 1)), cdf, np.ones((B, L, 1))], axis=2)
    rows = np.clip(np.diff(bounds, axis=2), 0.0, 1.0)
    p_y = np.einsum("l,blk->bk", priors, rows)
    h_y = _entropy_bits(p_y, axis=1)
    h_y_x = np.einsum("l,bl->b", priors, _entropy_bits(rows, axis=2))
    return h_y - h_y_x


def full_soft_mi(model: ReadChannelModel, tol: float = 1e-9) -> float:
    """Mutual information of the unquantized (continuous-output) channel.

    Integrates the nonnegative information density of the level mixture by
    adaptive quadrature; upper-bounds the MI of any finite threshold set.
    """
    means = model.means
    sigmas = model.sigmas
    log_priors = np.log(model.priors_array)
    lo = float(np.min(means - 12.0 * sigmas))
    hi = float(np.max(means + 12.0 * sigmas))
    dists = model.distributions

    def integrand(v: float) -> float:
        lp = np.array([d.logpdf(v) for d in dists])
        lw = lp + log_priors
        lmix = logsumexp(lw)
        w = np.exp(lw)
        terms = np.where(w > 0.0, w * (lp - lmix), 0.0)
        return float(terms.sum() / _LN2)

    interior = [float(m) for m in means if lo < m < hi]
    value, err = quad(integrand, lo, hi, points=interior, limit=200, epsabs=1e-12, epsrel=1e-11)
    if err > tol:
        raise QuadratureError(f"soft-information quadrature error {err:.2e} exceeds {tol:.0e}")
    return max(value, 0.0)


def _golden_max(f, lo: float, hi: float, tol: float = _REFINE_TOL) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [lo, hi]."""
    a, b = float(lo), float(hi)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = a + _INV_PHI2 * h
    d = a + _INV_PHI * h
    fc, fd = f(c), f(d)
    while h > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INV_PHI * h
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def _search_bracket(model: ReadChannelModel) -> tuple[float, float]:
    means = model.means
    smax = float(np.max(model.sigmas))
    return float(means[0] - 4.0 * smax), float(means[-1] + 4.0 * smax)


def _symmetric_thresholds(center: float, offsets: np.ndarray, odd: bool) -> np.ndarray:
    parts = [center - offsets[::-1], center + offsets]
    if odd:
        parts.insert(1, np.array([center]))
    return np.concatenate(parts)


def _optimize_symmetric(model: ReadChannelModel, num_reads: int) -> tuple[ThresholdSet, float]:
    center = model.center
    lo, hi = _search_bracket(model)
    span = hi - center
    if span <= 0:
        raise ThresholdSearchError("degenerate model: empty search bracket")
    npairs = num_reads // 2
    odd = bool(num_reads % 2)

    if npairs == 0:
        thr = ThresholdSet((center,))
        return thr, mutual_information(build_dmc(model, thr))

    def mi_of_offsets(u: np.ndarray) -> float:
        return float(_mi_batch(model, _symmetric_thresholds(center, u, odd)[None, :])[0])

    grid = np.linspace(span / _COARSE_GRID, span, _COARSE_GRID)
    if npairs <= 3:
        combos = np.array(list(itertools.combinations(grid, npairs)))
    else:
        # too many combinations; seed from evenly spread offsets instead
        combos = np.linspace(span / (npairs + 1), span * npairs / (npairs + 1), npairs)[None, :]
    tsets = np.stack([_symmetric_thresholds(center, u, odd) for u in combos])
    mis = _mi_batch(model, tsets)
    if not np.all(np.isfinite(mis)):
        raise ThresholdSearchError("non-finite mutual information on the coarse grid")
    best = int(np.argmax(mis))
    offsets = np.array(combos[best], dtype=float)
    best_mi = float(mis[best])

    eps = 1e-12 * max(span, 1.0)
    for _ in range(60):
        improved = best_mi
        for i in range(npairs):
            left = offsets[i - 1] + eps if i > 0 else eps
            right = offsets[i + 1] - eps if i < npairs - 1 else span

            def f(u, i=i):
                trial = offsets.copy()
                trial[i] = u
                return mi_of_offsets(trial)

            u_star, mi_star = _golden_max(f, left, right)
            if mi_star > best_mi:
                offsets[i] = u_star
                best_mi = mi_star
            offsets.sort()
        if best_mi - improved < _PASS_TOL:
            break

    thr = ThresholdSet(tuple(_symmetric_thresholds(center, offsets, odd)))
    return thr, mutual_information(build_dmc(model, thr))


def _mixture_quantiles(model: ReadChannelModel, k: int, lo: float, hi: float) -> np.ndarray:
    """Thresholds splitting the prior-weighted mixture into k+1 equal masses."""
    priors = model.priors_array
    dists = model.distributions

    def mix_cdf(v: float) -> float:
        return float(sum(p * d.cdf(v) for p, d in zip(priors, dists)))

    out = np.empty(k)
    for j in range(1, k + 1):
        target = j / (k + 1)
        a, b = lo, hi
        for _ in range(200):
            m = 0.5 * (a + b)
            if mix_cdf(m) < target:
                a = m
            else:
                b = m
            if b - a < 1e-12 * max(abs(hi - lo), 1.0):
                break
        out[j - 1] = 0.5 * (a + b)
    return out


def _optimize_general(model: ReadChannelModel, num_reads: int) -> tuple[ThresholdSet, float]:
    lo, hi = _search_bracket(model)
    if hi <= lo:
        raise ThresholdSearchError("degenerate model: empty search bracket")
    thr = _mixture_quantiles(model, num_reads, lo, hi)
    eps = 1e-9 * max(hi - lo, 1.0)

    def mi_at(values: np.ndarray) -> float:
        return float(_mi_batch(model, values[None, :])[0])

    best_mi = mi_at(thr)
    if not math.isfinite(best_mi):
        raise ThresholdSearchError("non-finite mutual information at the seed point")

    for _ in range(60):
        improved = best_mi
        for i in range(num_reads):
            left = thr[i - 1] + eps if i > 0 else lo
            right = thr[i + 1] - eps if i < num_reads - 1 else hi
            if right <= left:
                continue
            cand = np.linspace(left, right, _COARSE_GRID)
            tsets = np.repeat(thr[None, :], _COARSE_GRID, axis=0)
            tsets[:, i] = cand
            mis = _mi_batch(model, tsets)
            j = int(np.argmax(mis))
            step = (right - left) / (_COARSE_GRID - 1)
            g_lo = max(left, cand[j] - step)
            g_hi = min(right, cand[j] + step)

            def f(v, i=i):
                trial = thr.copy()
                trial[i] = v
                return mi_at(trial)

            v_star, mi_star = _golden_max(f, g_lo, g_hi)
            if mi_star > best_mi:
                thr[i] = v_star
                best_mi = mi_star
            thr.sort()
        if best_mi - improved < _PASS_TOL:
            break

    tset = ThresholdSet(tuple(thr))
    return tset, mutual_information(build_dmc(model, tset))


def optimize_thresholds(
    model: ReadChannelModel, num_reads: int, symmetric: bool = False
) -> tuple[ThresholdSet, float]:
    """Search for thresholds maximizing the quantized mutual information.

    With ``symmetric=True`` (mirror-symmetric models only) the search runs
    over offsets mirrored about the constellation center; otherwise a
    mixture-quantile seed is refined coordinate-wise, with a 64-point grid
    and golden-section polish per coordinate.
    """
    if num_reads < 1:
        raise ValueError("num_reads must be at least 1")
    if symmetric:
        if not model.is_mirror_symmetric():
            raise ValueError("symmetric search requires a mirror-symmetric model")
        return _optimize_symmetric(model, num_reads)
    return _optimize_general(model, num_reads)


def _log_ratio(model: ReadChannelModel, boundary: int):
    lo_dist = model.distributions[boundary]
    hi_dist = model.distributions[boundary + 1]

    def g(v: float) -> float:
        return float(lo_dist.logpdf(v) - hi_dist.logpdf(v))

    return g


def _bisect_decreasing(g, lo: float, hi: float, target: float) -> float:
    """Root of g(v) = target for g monotone decreasing on [lo, hi]."""
    a, b = lo, hi
    for _ in range(200):
        m = 0.5 * (a + b)
        if g(m) > target:
            a = m
        else:
            b = m
        if b - a <= 1e-14 * max(abs(a), abs(b), 1.0):
            break
    return 0.5 * (a + b)


def _boundary_crossing(model: ReadChannelModel, boundary: int) -> float:
    g = _log_ratio(model, boundary)
    lo = model.distributions[boundary].mean
    hi = model.distributions[boundary + 1].mean
    if not (g(lo) > 0.0 > g(hi)):
        raise ThresholdSearchError(
            f"no pdf crossing between levels {boundary} and {boundary + 1}"
        )
    return _bisect_decreasing(g, lo, hi, 0.0)


def hard_decision_thresholds(model: ReadChannelModel) -> ThresholdSet:
    """One threshold per adjacent level pair, at the pdf crossing point."""
    return ThresholdSet(
        tuple(_boundary_crossing(model, b) for b in range(model.num_levels - 1))
    )


def _march_to_level(g, start: float, step: float, target: float, direction: int) -> float:
    """Walk from ``start`` until g passes ``target``; g must move monotonically.

    ``direction`` is -1 to walk left (g rising toward +target) or +1 to walk
    right (g falling toward -target).  Raises if g reverses before reaching
    the target, which signals a non-monotone ratio or an unreachable level.
    """
    prev = g(start)
    x = start
    for _ in range(400):
        xn = x + direction * step
        gn = g(xn)
        if direction < 0:
            if gn >= target:
                return xn
            if gn <= prev:
                raise ThresholdSearchError(
                    "pdf ratio is not monotone before reaching the requested level"
                )
        else:
            if gn <= target:
                return xn
            if gn >= prev:
                raise ThresholdSearchError(
                    "pdf ratio is not monotone before reaching the requested level"
                )
        prev = gn
        x = xn
    raise ThresholdSearchError("ratio point falls outside the search bracket")


def cr_thresholds(model: ReadChannelModel, ratio: float) -> ThresholdSet:
    """Constant-ratio thresholds: per adjacent level pair, the two voltages
    where the larger conditional pdf is exactly ``ratio`` times the smaller.

    The pair straddles the hard-decision crossing, leaving an erasure-like
    region around it; a four-level model therefore yields six thresholds.
    Each point is found by bisection on the log-pdf ratio.
    """
    if not ratio > 1.0:
        raise ValueError("ratio must be greater than 1")
    log_r = math.log(ratio)
    values: list[float] = []
    for b in range(model.num_levels - 1):
        g = _log_ratio(model, b)
        crossing = _boundary_crossing(model, b)
        step = 0.25 * min(model.distributions[b].sigma, model.distributions[b + 1].sigma)
        left_edge = _march_to_level(g, crossing, step, log_r, direction=-1)
        right_edge = _march_to_level(g, crossing, step, -log_r, direction=+1)
        values.append(_bisect_decreasing(g, left_edge, crossing, log_r))
        values.append(_bisect_decreasing(g, crossing, right_edge, -log_r))
    values.sort()
    if any(y <= x for x, y in zip(values, values[1:])):
        raise ThresholdSearchError("ratio thresholds from adjacent boundaries overlap")
    return ThresholdSet(tuple(values))


def optimize_ratio(model: ReadChannelModel, r_grid) -> tuple[float, float]:
    """Grid argmax of the constant-ratio mutual information.

    Ties break toward the smaller ratio to minimize read-voltage spread.
    """
    grid = [float(r) for r in r_grid]
    if not grid:
        raise ValueError("r_grid must be nonempty")
    if any(r <= 1.0 for r in grid):
        raise ValueError("all ratios must be greater than 1")
    best_r = None
    best_mi = -1.0
    for r in sorted(grid):
        mi = mutual_information(build_dmc(model, cr_thresholds(model, r)))
        if mi > best_mi:
            best_r, best_mi = r, mi
    return best_r, best_mi
