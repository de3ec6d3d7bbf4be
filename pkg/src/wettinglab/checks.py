"""Positive-association and stochastic-domination verifiers.

All checks here are exhaustive at oracle scale: the FKG-lattice
condition over every config pair, stochastic domination over every
up-set of a small product space (enumerated through antichains of
minimal elements), and, for non-product posets of pair configs, the
Strassen coupling feasibility LP.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .gibbs import FiniteDistribution, MeasureSpec, OracleGraph, enumerate_measure
from .lattice import UnionFind, build_domain
from .params import params_from_q


# ---------------------------------------------------------------------------
# FKG lattice condition
# ---------------------------------------------------------------------------

def lattice_condition_slack(keys, logw) -> float:
    """min over config pairs of lw(x|y) + lw(x&y) - lw(x) - lw(y).

    Pairs whose right side is -inf are vacuous.  The support must be
    closed under join/meet (missing configs count as -inf on the left,
    which would make the condition fail loudly).
    """
    table = {int(k): float(w) for k, w in zip(keys, logw)}
    ks = sorted(table)
    worst = math.inf
    for x in ks:
        wx = table[x]
        if not math.isfinite(wx):
            continue
        for y in ks:
            wy = table[y]
            if not math.isfinite(wy):
                continue
            a = table.get(x | y, -math.inf)
            b = table.get(x & y, -math.inf)
            worst = min(worst, a + b - wx - wy)
    return worst


def matrc_oracle_logweights(q: float):
    """The 4-edge oracle instance of the modified pair measure.

    Path 0-1-2-3-4; end edges are boundary-ring, middle edges live; the
    K^1 view glues the two far endpoints.  Every factor of the weight
    (live/ring open counts, discrepancy, both cluster counts) is active.
    Keys pack tau in bits 0..3 and tautau in bits 4..7.
    """
    pr = params_from_q(q)
    edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
    live = (1, 2)
    ring = (0, 3)

    def kappa(bits, glue):
        uf = UnionFind(5)
        for i, (u, v) in enumerate(edges):
            if (bits >> i) & 1:
                uf.union(u, v)
        if glue:
            uf.union(0, 4)
        return uf.count

    keys, logw = [], []
    for tau in range(16):
        for tautau in range(16):
            if tau & ~tautau:
                continue
            disc = tautau & ~tau
            if any((disc >> i) & 1 for i in ring):
                continue
            n_live = sum((tau >> i) & 1 for i in live)
            n_ring = sum((tau >> i) & 1 for i in ring)
            n_disc = bin(disc).count("1")
            lw = (n_live * math.log(2.0)
                  + n_ring * math.log(2.0 / (pr.c_b - 1.0))
                  + n_disc * math.log(pr.c - 2.0)
                  + (kappa(tau, False) + kappa(tautau, True)) * math.log(2.0))
            keys.append(tau | (tautau << 4))
            logw.append(lw)
    return np.array(keys), np.array(logw)


def matrc_fkg_slack(q: float) -> float:
    keys, logw = matrc_oracle_logweights(q)
    return lattice_condition_slack(keys, logw)


# ---------------------------------------------------------------------------
# up-sets and stochastic domination
# ---------------------------------------------------------------------------

def iter_upsets(k: int):
    """All up-sets of {0,1}^k as boolean masks over the 2^k states.

    Enumerated through their antichains of minimal elements; Dedekind
    numbers grow fast, so k <= 5.
    """
    if k > 5:
        raise ValueError("up-set enumeration limited to 5 bits")
    n = 1 << k
    states = list(range(n))

    def comparable(a, b):
        return (a & b) == a or (a & b) == b

    def rec(start, chosen):
        mask = np.zeros(n, dtype=bool)
        for c in chosen:
            for s in states:
                if (s & c) == c:
                    mask[s] = True
        yield mask
        for s in range(start, n):
            if all(not comparable(s, c) for c in chosen):
                yield from rec(s + 1, chosen + [s])

    yield from rec(0, [])


def dominates_upsets(dist_hi: FiniteDistribution, dist_lo: FiniteDistribution,
                     n_bits: int) -> tuple[bool, float]:
    """Exhaustive ge_st check for distributions on {0,1}^n_bits.

    Returns (holds, worst margin): min over up-sets U of hi(U) - lo(U).
    """
    n = 1 << n_bits
    p_hi = np.zeros(n)
    p_lo = np.zeros(n)
    for k, p in zip(dist_hi.keys, dist_hi.probs):
        p_hi[int(k)] += p
    for k, p in zip(dist_lo.keys, dist_lo.probs):
        p_lo[int(k)] += p
    worst = math.inf
    for mask in iter_upsets(n_bits):
        worst = min(worst, float(p_hi[mask].sum() - p_lo[mask].sum()))
    return worst >= -1e-12, worst


def dominates_coupling_lp(keys_hi, probs_hi, keys_lo, probs_lo, leq) -> tuple[bool, float]:
    """Strassen test: a monotone coupling exists iff the LP is feasible.

    leq(a, b) decides the partial order.  Returns (holds, slack) where
    slack is the negative of the largest marginal violation at the LP
    optimum (0 for a perfect coupling).
    """
    from scipy.optimize import linprog

    hi = [(int(k), float(p)) for k, p in zip(keys_hi, probs_hi) if p > 0]
    lo = [(int(k), float(p)) for k, p in zip(keys_lo, probs_lo) if p > 0]
    pairs = [(i, j) for i, (a, _) in enumerate(hi) for j, (b, _) in enumerate(lo)
             if leq(b, a)]
    if not pairs:
        return False, -1.0
    n_var = len(pairs)
    rows = []
    rhs = []
    for i in range(len(hi)):
        row = np.zeros(n_var)
        for v, (pi, pj) in enumerate(pairs):
            if pi == i:
                row[v] = 1.0
        rows.append(row)
        rhs.append(hi[i][1])
    for j in range(len(lo)):
        row = np.zeros(n_var)
        for v, (pi, pj) in enumerate(pairs):
            if pj == j:
                row[v] = 1.0
        rows.append(row)
        rhs.append(lo[j][1])
    res = linprog(c=np.zeros(n_var), A_eq=np.array(rows), b_eq=np.array(rhs),
                  bounds=[(0, None)] * n_var, method="highs")
    if res.status == 0:
        resid = float(np.abs(np.array(rows) @ res.x - np.array(rhs)).max())
        return resid <= 1e-9, -resid
    return False, -1.0


def pair_key_to_order_key(key: int, n_edges: int) -> int:
    """Convert (tau | disc<<n) packing to (tau | tautau<<n) for order tests."""
    tau = key & ((1 << n_edges) - 1)
    disc = key >> n_edges
    return tau | ((tau | disc) << n_edges)


# ---------------------------------------------------------------------------
# concrete instances
# ---------------------------------------------------------------------------

def stoch_dom_star(q: float) -> tuple[bool, float]:
    """qFK^{b1,b2;1,qb} >= qFK^{b1 u b2; qb} on a 4-edge star, all up-sets."""
    pr = params_from_q(q)
    g_split = OracleGraph(5, ((0, 1), (0, 2), (0, 3), (0, 4)), b1=(1, 2), b2=(3, 4))
    g_merged = OracleGraph(5, ((0, 1), (0, 2), (0, 3), (0, 4)), b1=(1, 2, 3, 4))
    hi = enumerate_measure(MeasureSpec(kind="qFK", q=q, graph=g_split,
                                       q1=1.0, q2=pr.qb_wired))
    lo = enumerate_measure(MeasureSpec(kind="qFK", q=q, graph=g_merged,
                                       q1=pr.qb_wired, q2=pr.qb_wired))
    return dominates_upsets(hi, lo, 4)


def repulsiveness_k00(q: float) -> tuple[bool, float]:
    """Open-path conditioning repels the pair below it, on the smallest window.

    gamma is the straight v_L -> v_R path; compare the conditioned and
    unconditioned pair laws restricted to the edges below gamma: the
    tau-marginal exhaustively over up-sets, the joint by the coupling LP.
    """
    dom = build_domain(0, 0)
    spec = MeasureSpec(kind="mATRC", q=q, nm=(0, 0))
    spec._domain = dom
    dist = enumerate_measure(spec)

    gamma = [i for i, c in enumerate(dom.edge_center) if c[1] == 0]
    below = [i for i, c in enumerate(dom.edge_center) if c[1] < 0]
    assert len(gamma) == 2 and len(below) == 5

    gmask = 0
    for i in gamma:
        gmask |= 1 << i
    keep = (dist.keys & np.uint64(gmask)) == np.uint64(gmask)
    cond = dist.condition(keep)

    bit_positions = below + [dom.n_edges + i for i in below]
    marg_hi = cond.marginal(bit_positions)
    marg_lo = dist.marginal(bit_positions)

    # tau-marginal: exhaustive up-set check on 5 bits
    tau_hi = marg_hi.marginal(range(len(below)))
    tau_lo = marg_lo.marginal(range(len(below)))
    ok1, margin = dominates_upsets(tau_hi, tau_lo, len(below))

    # joint pair law: Strassen coupling LP in the (tau, tautau) order
    k = len(below)

    def leq(b, a):
        oa = pair_key_to_order_key(a, k)
        ob = pair_key_to_order_key(b, k)
        return (oa & ob) == ob

    ok2, _ = dominates_coupling_lp(marg_hi.keys, marg_hi.probs,
                                   marg_lo.keys, marg_lo.probs, leq)
    return ok1 and ok2, margin
