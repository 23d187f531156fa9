"""Irregular LDPC construction and structural analysis.

Degree distributions are realized exactly (largest-remainder rounding plus
an edge-balance repair), matrices are grown edge by edge PEG-style with an
ACE screen on every cycle the new edge would close, and small absorbing
sets can be enumerated for desk-scale codes.
"""

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import format_kv, load_kv
from .ldpc import ParityCheckMatrix

_INF = np.int32(1 << 30)


class ConstructionError(RuntimeError):
    """Edge placement failed for every retry."""


@dataclass(frozen=True)
class DegreeDistribution:
    """Node-perspective degree fractions for variable and check nodes.

    Fractions are advisory up to rounding: realization rounds node counts by
    largest remainder and then repairs individual check degrees so the two
    sides imply the same edge count.
    """

    var_fractions: tuple[tuple[int, float], ...]
    chk_fractions: tuple[tuple[int, float], ...]
    n: int
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "var_fractions", _normalize_fractions(self.var_fractions))
        object.__setattr__(self, "chk_fractions", _normalize_fractions(self.chk_fractions))
        if self.n <= 0:
            raise ValueError("n must be positive")
        if not 0.0 < self.rate < 1.0:
            raise ValueError("rate must be in (0, 1)")

    @property
    def num_checks(self) -> int:
        return int(round(self.n * (1.0 - self.rate)))

    @property
    def max_var_degree(self) -> int:
        return max(d for d, _ in self.var_fractions)

    def var_counts(self) -> dict[int, int]:
        return _largest_remainder(self.var_fractions, self.n)

    def num_edges(self) -> int:
        return sum(d * c for d, c in self.var_counts().items())

    def realize(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact per-node degrees: (variable degrees ascending, check capacities)."""
        var_counts = self.var_counts()
        var_degrees = np.repeat(
            sorted(var_counts), [var_counts[d] for d in sorted(var_counts)]
        ).astype(np.int32)
        edges = int(var_degrees.sum())
        m = self.num_checks
        chk_counts = _largest_remainder(self.chk_fractions, m)
        caps = np.repeat(
            sorted(chk_counts), [chk_counts[d] for d in sorted(chk_counts)]
        ).astype(np.int64)
        # repair so check capacities absorb exactly the variable-side edges
        diff = edges - int(caps.sum())
        i_lo, i_hi = 0, m - 1
        while diff > 0:
            caps[i_lo] += 1
            diff -= 1
            i_lo = (i_lo + 1) % m
        while diff < 0:
            order = np.argsort(caps)
            j = order[-1]
            if caps[j] <= 1:
                raise ValueError("check capacities cannot absorb the edge deficit")
            caps[j] -= 1
            diff += 1
        caps.sort()
        return var_degrees, caps.astype(np.int32)

    def to_config(self, path: str | os.PathLike) -> None:
        pairs: dict[str, object] = {"n": self.n, "rate": repr(float(self.rate))}
        for d, f in self.var_fractions:
            pairs[f"var_degree_{d}"] = repr(float(f))
        for d, f in self.chk_fractions:
            pairs[f"chk_degree_{d}"] = repr(float(f))
        with open(path, "w", encoding="utf-8") as f:
            f.write(format_kv(pairs, header="degree distribution"))

    @classmethod
    def from_config(cls, path: str | os.PathLike) -> "DegreeDistribution":
        kv = load_kv(path)
        try:
            n = int(kv.pop("n"))
            rate = float(kv.pop("rate"))
        except KeyError as exc:
            raise ValueError(f"distribution config missing key {exc}") from None
        var: dict[int, float] = {}
        chk: dict[int, float] = {}
        for key, value in kv.items():
            if key.startswith("var_degree_"):
                var[int(key.removeprefix("var_degree_"))] = float(value)
            elif key.startswith("chk_degree_"):
                chk[int(key.removeprefix("chk_degree_"))] = float(value)
            else:
                raise ValueError(f"unknown distribution config key {key!r}")
        return cls(tuple(var.items()), tuple(chk.items()), n, rate)


def _normalize_fractions(fractions) -> tuple[tuple[int, float], ...]:
    if isinstance(fractions, dict):
        items = fractions.items()
    else:
        items = fractions
    out = tuple(sorted((int(d), float(f)) for d, f in items if f > 0.0))
    if not out:
        raise ValueError("degree fractions are empty")
    if any(d < 1 for d, _ in out):
        raise ValueError("degrees must be at least 1")
    if len({d for d, _ in out}) != len(out):
        raise ValueError("duplicate degree in fractions")
    total = sum(f for _, f in out)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"fractions must sum to 1, got {total}")
    return tuple((d, f / total) for d, f in out)


def _largest_remainder(fractions, total: int) -> dict[int, int]:
    raw = [(d, f * total) for d, f in fractions]
    counts = {d: int(math.floor(x)) for d, x in raw}
    left = total - sum(counts.values())
    remainders = sorted(raw, key=lambda df: (df[1] - math.floor(df[1]), -df[0]), reverse=True)
    for d, _ in remainders[:left]:
        counts[d] += 1
    return {d: c for d, c in counts.items() if c > 0}


def _concentrated_checks(var_fractions, n: int, rate: float) -> dict[int, float]:
    counts = _largest_remainder(_normalize_fractions(var_fractions), n)
    edges = sum(d * c for d, c in counts.items())
    m = int(round(n * (1.0 - rate)))
    base = edges // m
    rem = edges - base * m
    out = {base: (m - rem) / m}
    if rem:
        out[base + 1] = rem / m
    return out


# Stock high-rate profiles (illustrative shapes, not taken from any published
# matrix): "d19" mixes heavy degree-3 mass under a max degree of 19, "d24"
# raises the max degree to 24.  The degree-3-free variant is derived with
# preclude_degree3().
_STOCK_VAR_FRACTIONS = {
    "d19": {2: 0.06, 3: 0.55, 4: 0.17, 6: 0.10, 19: 0.12},
    "d24": {2: 0.06, 3: 0.55, 4: 0.17, 6: 0.10, 24: 0.12},
}


def reference_distribution(name: str, n: int = 9118, rate: float = 0.9021) -> DegreeDistribution:
    """Built-in rate-0.9021-style profiles: 'd19', 'd19-precluded', 'd24'."""
    base = name.removesuffix("-precluded")
    if base not in _STOCK_VAR_FRACTIONS:
        raise ValueError(f"unknown distribution {name!r}; choose from "
                         f"{sorted(_STOCK_VAR_FRACTIONS) + [k + '-precluded' for k in sorted(_STOCK_VAR_FRACTIONS)]}")
    var = _STOCK_VAR_FRACTIONS[base]
    dist = DegreeDistribution(
        tuple(var.items()),
        tuple(_concentrated_checks(var, n, rate).items()),
        n,
        rate,
    )
    if name.endswith("-precluded"):
        dist = preclude_degree3(dist)
    return dist


def regular_distribution(dv: int, dc: int, n: int) -> DegreeDistribution:
    """(dv, dc)-regular code; n*dv must be divisible by dc."""
    if (n * dv) % dc:
        raise ValueError("n*dv must be divisible by dc")
    rate = 1.0 - dv / dc
    return DegreeDistribution(((dv, 1.0),), ((dc, 1.0),), n, rate)


def preclude_degree3(dist: DegreeDistribution) -> DegreeDistribution:
    """Move all degree-3 variable mass to degree 4.

    The check-degree profile shifts up to absorb the extra edges so the
    design rate (check count) is unchanged.
    """
    var = dict(dist.var_fractions)
    f3 = var.pop(3, 0.0)
    if f3 == 0.0:
        return dist
    var[4] = var.get(4, 0.0) + f3
    m = dist.num_checks
    delta = f3 * dist.n / m  # added edges per check node
    whole = int(math.floor(delta))
    frac = delta - whole
    chk = {d + whole: f for d, f in dist.chk_fractions}
    remaining = frac
    for d in sorted(chk):
        take = min(chk[d], remaining)
        if take <= 0.0:
            break
        chk[d] -= take
        chk[d + 1] = chk.get(d + 1, 0.0) + take
        remaining -= take
        if remaining <= 1e-15:
            break
    chk = {d: f for d, f in chk.items() if f > 0.0}
    return DegreeDistribution(tuple(var.items()), tuple(chk.items()), dist.n, dist.rate)


@njit(cache=True)
def _peg_ace_core(var_deg, chk_cap, var_ptr, chk_base, hop_budget, eta, rand_stream,
                  var_adj, chk_adj):
    """Grow the bipartite graph edge by edge.

    For every edge of every variable node (processed in the given order) the
    kernel prefers the check farthest in the current graph; any check whose
    selection would close a cycle within the hop budget must have a minimum
    path ACE of at least eta.  Returns 0 on success, 1 if a node ran out of
    admissible checks.
    """
    n = var_deg.size
    m = chk_cap.size
    chk_cnt = np.zeros(m, np.int32)
    var_cnt = np.zeros(n, np.int32)

    # versioned scratch: a slot is valid only when its stamp matches
    c_cost = np.zeros(m, np.int64)
    v_cost = np.zeros(n, np.int64)
    c_cost_st = np.full(m, -1, np.int64)
    v_cost_st = np.full(n, -1, np.int64)
    c_dist = np.zeros(m, np.int32)
    c_dist_st = np.full(m, -1, np.int64)
    adj_st = np.full(m, -1, np.int64)
    cq_st = np.full(m, -1, np.int64)
    vq_st = np.full(n, -1, np.int64)
    vq = np.empty(n, np.int32)
    cq = np.empty(m, np.int32)

    version = 0
    layer = 0
    rp = 0
    nrand = rand_stream.size

    for v in range(n):
        dv = var_deg[v]
        w0 = np.int64(dv - 2)
        for j in range(dv):
            version += 1
            for jj in range(j):
                adj_st[var_adj[var_ptr[v] + jj]] = version

            if j > 0:
                # bounded min-ACE relaxation from v over the current graph
                v_cost[v] = w0
                v_cost_st[v] = version
                vq[0] = v
                vlen = 1
                hop = 0
                while hop < hop_budget and vlen > 0:
                    # variables -> checks
                    hop += 1
                    layer += 1
                    clen = 0
                    for qi in range(vlen):
                        u = vq[qi]
                        cost = v_cost[u]
                        for e in range(var_ptr[u], var_ptr[u] + var_cnt[u]):
                            c = var_adj[e]
                            if c_cost_st[c] != version or cost < c_cost[c]:
                                c_cost[c] = cost
                                c_cost_st[c] = version
                                if cq_st[c] != layer:
                                    cq_st[c] = layer
                                    cq[clen] = c
                                    clen += 1
                            if c_dist_st[c] != version:
                                c_dist[c] = hop
                                c_dist_st[c] = version
                    if hop >= hop_budget or clen == 0:
                        break
                    # checks -> variables
                    hop += 1
                    layer += 1
                    vlen = 0
                    for qi in range(clen):
                        c = cq[qi]
                        cost = c_cost[c]
                        for e in range(chk_base[c], chk_base[c] + chk_cnt[c]):
                            u = chk_adj[e]
                            w = np.int64(var_deg[u] - 2)
                            nc = cost + w
                            if v_cost_st[u] != version or nc < v_cost[u]:
                                v_cost[u] = nc
                                v_cost_st[u] = version
                                if vq_st[u] != layer:
                                    vq_st[u] = layer
                                    vq[vlen] = u
                                    vlen += 1

            # pick among admissible checks: farthest first, then most
            # remaining capacity; ties broken by reservoir sampling
            best_dist = np.int32(-1)
            best_rem = np.int32(-1)
            best_c = -1
            ties = 0
            for c in range(m):
                rem = chk_cap[c] - chk_cnt[c]
                if rem <= 0 or adj_st[c] == version:
                    continue
                if c_dist_st[c] == version:
                    dist = c_dist[c]
                    if c_cost[c] < eta:
                        continue  # would close a low-ACE cycle
                else:
                    dist = _INF
                if dist > best_dist or (dist == best_dist and rem > best_rem):
                    best_dist = dist
                    best_rem = rem
                    best_c = c
                    ties = 1
                elif dist == best_dist and rem == best_rem:
                    ties += 1
                    r = rand_stream[rp]
                    rp += 1
                    if rp == nrand:
                        rp = 0
                    if r * ties < 1.0:
                        best_c = c
            if best_c < 0:
                return 1
            var_adj[var_ptr[v] + j] = best_c
            chk_adj[chk_base[best_c] + chk_cnt[best_c]] = v
            chk_cnt[best_c] += 1
            var_cnt[v] += 1
    return 0


def construct(
    dist: DegreeDistribution,
    seed: int = 0,
    ace_depth: int = 9,
    ace_eta: int = 4,
    max_retries: int = 12,
) -> ParityCheckMatrix:
    """Build a parity-check matrix realizing ``dist`` exactly.

    Edges grow progressively, low-degree variable nodes first, always toward
    the farthest check reachable; candidate checks that would close a cycle
    of length at most 2*ace_depth with summed variable-degree excess below
    ``ace_eta`` are rejected.  Deterministic for a fixed seed; distinct seeds
    give distinct graphs with the same degree histograms.
    """
    var_degrees, chk_caps = dist.realize()
    n = var_degrees.size
    m = chk_caps.size
    edges = int(var_degrees.sum())
    var_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(var_degrees, out=var_ptr[1:])
    chk_base = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(chk_caps.astype(np.int64), out=chk_base[1:])
    hop_budget = 2 * ace_depth - 1

    for attempt in range(max_retries):
        rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(attempt)]))
        rand_stream = rng.random(max(4 * edges, 1024))
        var_adj = np.full(edges, -1, dtype=np.int32)
        chk_adj = np.full(edges, -1, dtype=np.int32)
        status = _peg_ace_core(
            var_degrees, chk_caps, var_ptr, chk_base[:-1], hop_budget, ace_eta,
            rand_stream, var_adj, chk_adj,
        )
        if status == 0:
            variables = np.repeat(np.arange(n, dtype=np.int64), var_degrees)
            return ParityCheckMatrix.from_edges(n, m, var_adj.astype(np.int64), variables)
    raise ConstructionError(
        f"no admissible edge placement after {max_retries} attempts "
        f"(n={n}, m={m}, ace_depth={ace_depth}, ace_eta={ace_eta})"
    )


@dataclass(frozen=True)
class AbsorbingSet:
    """Variable-node set where every node sees more satisfied than
    unsatisfied checks; ``b`` counts the unsatisfied (odd-degree) checks."""

    variables: tuple[int, ...]
    unsatisfied_checks: tuple[int, ...]

    @property
    def a(self) -> int:
        return len(self.variables)

    @property
    def b(self) -> int:
        return len(self.unsatisfied_checks)


@dataclass(frozen=True)
class AbsorbingSearchResult:
    sets: tuple[AbsorbingSet, ...]
    truncated: bool


def _subset_profile(h: ParityCheckMatrix, subset: tuple[int, ...]):
    """(per-node condition holds, unsatisfied checks) for a variable subset."""
    touch: dict[int, int] = {}
    for v in subset:
        for c in h.col_rows[h.col_ptr[v] : h.col_ptr[v + 1]]:
            touch[int(c)] = touch.get(int(c), 0) + 1
    unsat = {c for c, k in touch.items() if k & 1}
    for v in subset:
        checks = h.col_rows[h.col_ptr[v] : h.col_ptr[v + 1]]
        bad = sum(1 for c in checks if int(c) in unsat)
        if 2 * bad >= len(checks):
            return False, ()
    return True, tuple(sorted(unsat))


def find_small_absorbing_candidates(
    h: ParityCheckMatrix,
    max_a: int = 5,
    max_b: int = 2,
    *,
    max_var_degree: int = 4,
    budget: int = 200_000,
) -> AbsorbingSearchResult:
    """Enumerate absorbing sets with at most ``max_a`` variables (drawn from
    nodes of degree <= max_var_degree) and at most ``max_b`` unsatisfied
    checks.

    Connected candidates are enumerated exhaustively (ESU-style, each subset
    visited once); disconnected absorbing sets are recovered by combining
    check-disjoint connected pieces.  When the step budget runs out a
    partial result is returned with ``truncated`` set.
    """
    if max_a < 1 or max_b < 0:
        raise ValueError("need max_a >= 1 and max_b >= 0")
    degs = h.column_degrees
    pool = [v for v in range(h.n) if degs[v] <= max_var_degree]
    pool_set = set(pool)
    # variable adjacency via shared checks, restricted to the pool
    nbrs: dict[int, set[int]] = {v: set() for v in pool}
    for v in pool:
        for c in h.col_rows[h.col_ptr[v] : h.col_ptr[v + 1]]:
            for u in h.row_cols[h.row_ptr[c] : h.row_ptr[c + 1]]:
                u = int(u)
                if u != v and u in pool_set:
                    nbrs[v].add(u)

    steps = 0
    truncated = False
    pieces: list[tuple[tuple[int, ...], frozenset, tuple[int, ...]]] = []

    def visit(subset: list[int], extension: set[int]) -> bool:
        """Returns False when the budget is exhausted."""
        nonlocal steps, truncated
        steps += 1
        if steps > budget:
            truncated = True
            return False
        sub = tuple(sorted(subset))
        ok, unsat = _subset_profile(h, sub)
        if ok:
            checkset = frozenset(
                int(c) for v in sub for c in h.col_rows[h.col_ptr[v] : h.col_ptr[v + 1]]
            )
            pieces.append((sub, checkset, unsat))
        if len(subset) == max_a:
            return True
        ext = sorted(extension)
        for i, u in enumerate(ext):
            new_ext = {w for w in nbrs[u] if w > subset[0] and w not in subset}
            new_ext.update(ext[i + 1 :])
            new_ext.discard(u)
            if not visit(subset + [u], new_ext):
                return False
        return True

    for root in pool:
        if not visit([root], {u for u in nbrs[root] if u > root}):
            break

    # combine check-disjoint pieces into (possibly disconnected) candidates
    results: dict[tuple[int, ...], AbsorbingSet] = {}

    def emit(vars_: tuple[int, ...], unsat: tuple[int, ...]):
        results[vars_] = AbsorbingSet(vars_, unsat)

    usable = [p for p in pieces if len(p[2]) <= max_b]
    for sub, _, unsat in usable:
        emit(sub, unsat)

    def combine(idx: int, vars_: tuple[int, ...], checks: frozenset, unsat: tuple[int, ...]):
        nonlocal steps, truncated
        for i in range(idx, len(usable)):
            sub, cs, us = usable[i]
            steps += 1
            if steps > budget:
                truncated = True
                return
            if len(vars_) + len(sub) > max_a or len(unsat) + len(us) > max_b:
                continue
            if checks & cs:
                continue
            merged = tuple(sorted(vars_ + sub))
            merged_unsat = tuple(sorted(unsat + us))
            emit(merged, merged_unsat)
            combine(i + 1, merged, checks | cs, merged_unsat)

    if not truncated:
        for i, (sub, cs, us) in enumerate(usable):
            combine(i + 1, sub, cs, us)

    ordered = tuple(sorted(results.values(), key=lambda s: (s.a, s.b, s.variables)))
    return AbsorbingSearchResult(ordered, truncated)
