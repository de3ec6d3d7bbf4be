"""Gibbs measures on bond configurations: FK, quasi-FK, Ashkin-Teller
random-cluster pairs (plain and modified), and Potts spins.

Exact enumeration is the oracle for everything else: distributions on
<= 2^26 configs are tabulated from log-weights with log-sum-exp
normalization.  Samplers are single-edge (or paired-edge) heat-bath
chains; at integer q the Dobrushin-conditioned FK measure is also
reachable through Potts spins plus a bond draw, which is what the large
wetting runs use.

Weight conventions (unnormalized, log scale):

    FK       p^{|w|} (1-p)^{|E\\w|} q^{kappa_V(w)}
    qFK      p^{|w|} (1-p)^{|E\\w|} q^{kappa_i} q1^{kappa_b1} q2^{kappa_b2}
    ATRC     1[wt <= wtt] w_tau^{|wt|} w_tautau^{|wtt\\wt|} 2^{k(wt)+k(wtt)}
    mATRC    1[wt <= wtt] 1[wtt\\wt in live] 2^{|wt_live|}
             (2/(c_b-1))^{|wt_ring|} (c-2)^{|wtt\\wt|} 2^{k_K(wt)+k_K1(wtt)}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _kernels
from .lattice import DobrushinDomain, UnionFind, build_domain
from .params import CriticalParams, params_from_q

NEG_INF = float("-inf")


# ---------------------------------------------------------------------------
# small custom graphs for oracle runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleGraph:
    """Tiny explicit graph: vertex count, edge list, boundary parts."""

    n_verts: int
    edges: tuple[tuple[int, int], ...]
    b1: tuple[int, ...] = ()
    b2: tuple[int, ...] = ()

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def kappa_triple(self, open_bits) -> tuple[int, int, int]:
        """(interior, b1-touching, b2-not-b1-touching) cluster counts."""
        uf = UnionFind(self.n_verts)
        for i, (u, v) in enumerate(self.edges):
            if open_bits[i]:
                uf.union(u, v)
        roots: dict[int, int] = {}  # root -> 0 interior / 1 b1 / 2 b2
        b1 = set(self.b1)
        b2 = set(self.b2)
        for v in range(self.n_verts):
            r = uf.find(v)
            cls = roots.get(r, 0)
            if v in b1:
                cls = max(cls, 2)
            elif v in b2:
                cls = max(cls, 1)
            roots[r] = cls
        ki = sum(1 for c in roots.values() if c == 0)
        kb2 = sum(1 for c in roots.values() if c == 1)
        kb1 = sum(1 for c in roots.values() if c == 2)
        return ki, kb1, kb2


def path_graph(n_edges: int, b1=(), b2=()) -> OracleGraph:
    return OracleGraph(n_edges + 1, tuple((i, i + 1) for i in range(n_edges)), tuple(b1), tuple(b2))


def star_graph(n_leaves: int, b1=(), b2=()) -> OracleGraph:
    return OracleGraph(n_leaves + 1, tuple((0, i + 1) for i in range(n_leaves)), tuple(b1), tuple(b2))


# ---------------------------------------------------------------------------
# measure specification
# ---------------------------------------------------------------------------

@dataclass
class MeasureSpec:
    """What to weigh: model kind, parameters, graph, boundary, conditioning.

    kind: FK | qFK | ATRC | mATRC | Potts
    graph: (n, m) selects a Dobrushin domain; an OracleGraph selects a
    small explicit graph.  boundary applies to FK/ATRC ('free', 'wired',
    'wired-wired') and Potts ('order-order').  conditioning is 'none',
    'no-updown' (upper and lower exterior not joined) or 'crossings'
    (v_L<->v_R in omega_tau, v'_L<->v'_R in the dual of omega_tautau).
    """

    kind: str
    q: float
    p: float | None = None
    nm: tuple[int, int] | None = None
    graph: OracleGraph | None = None
    boundary: str = "free"
    q1: float = 1.0
    q2: float = 1.0
    conditioning: str = "none"

    _domain: DobrushinDomain | None = field(default=None, repr=False, compare=False)
    _params: CriticalParams | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("FK", "qFK", "ATRC", "mATRC", "Potts"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if (self.nm is None) == (self.graph is None):
            raise ValueError("exactly one of nm / graph must be given")
        if self.kind == "qFK" and self.graph is not None:
            if not (set(self.graph.b1).isdisjoint(self.graph.b2)):
                raise ValueError("b1 and b2 must be disjoint")

    @property
    def p_eff(self) -> float:
        if self.p is not None:
            return self.p
        return math.sqrt(self.q) / (1.0 + math.sqrt(self.q))

    @property
    def domain(self) -> DobrushinDomain:
        if self.nm is None:
            raise ValueError("spec has no domain")
        if self._domain is None:
            self._domain = build_domain(*self.nm)
        return self._domain

    @property
    def params(self) -> CriticalParams:
        if self._params is None:
            self._params = params_from_q(self.q)
        return self._params

    def to_json(self) -> str:
        d = {
            "kind": self.kind, "q": self.q, "p": self.p, "nm": self.nm,
            "boundary": self.boundary, "q1": self.q1, "q2": self.q2,
            "conditioning": self.conditioning,
        }
        if self.graph is not None:
            d["graph"] = {"n_verts": self.graph.n_verts, "edges": [list(e) for e in self.graph.edges],
                          "b1": list(self.graph.b1), "b2": list(self.graph.b2)}
        return json.dumps(d, sort_keys=True)

    @staticmethod
    def from_json(s: str) -> "MeasureSpec":
        d = json.loads(s)
        g = None
        if "graph" in d:
            gd = d.pop("graph")
            g = OracleGraph(gd["n_verts"], tuple(tuple(e) for e in gd["edges"]),
                            tuple(gd["b1"]), tuple(gd["b2"]))
        nm = tuple(d["nm"]) if d.get("nm") else None
        return MeasureSpec(kind=d["kind"], q=d["q"], p=d["p"], nm=nm, graph=g,
                           boundary=d["boundary"], q1=d["q1"], q2=d["q2"],
                           conditioning=d["conditioning"])

    def spec_hash(self) -> str:
        import hashlib
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# log-weights
# ---------------------------------------------------------------------------

def _bits_from_key(key: int, n: int) -> np.ndarray:
    return np.array([(key >> i) & 1 for i in range(n)], dtype=bool)


def log_weight(config, spec: MeasureSpec, config2=None) -> float:
    """Unnormalized log-weight; -inf for hard-constraint violations.

    For ATRC kinds pass (omega_tau, omega_tautau) as (config, config2).
    """
    if spec.kind == "FK":
        return _log_weight_fk(np.asarray(config, dtype=bool), spec)
    if spec.kind == "qFK":
        return _log_weight_qfk(np.asarray(config, dtype=bool), spec)
    if spec.kind == "ATRC":
        return _log_weight_atrc(np.asarray(config, dtype=bool), np.asarray(config2, dtype=bool), spec)
    if spec.kind == "mATRC":
        return _log_weight_matrc(np.asarray(config, dtype=bool), np.asarray(config2, dtype=bool), spec)
    if spec.kind == "Potts":
        return _log_weight_potts(np.asarray(config, dtype=np.int64), spec)
    raise ValueError(spec.kind)


def _log_weight_fk(bits, spec):
    p, q = spec.p_eff, spec.q
    if spec.nm is not None:
        if spec.boundary != "wired-wired":
            raise ValueError("domain FK uses the wired-wired split boundary")
        dom = spec.domain
        if bits.shape[0] != dom.n_live:
            raise ValueError("FK config lives on the live edges")
        nv, eu, ev, xu, xv = dom.view_graph("G-wired")
        uf = UnionFind(nv)
        for i in np.nonzero(bits)[0]:
            uf.union(int(eu[i]), int(ev[i]))
        for a, b in zip(xu, xv):
            uf.union(int(a), int(b))
        if spec.conditioning == "no-updown" and uf.find(nv - 2) == uf.find(nv - 1):
            return NEG_INF
        kappa = uf.count
        n_open = int(bits.sum())
        return n_open * math.log(p) + (dom.n_live - n_open) * math.log(1 - p) + kappa * math.log(q)
    g = spec.graph
    ki, kb1, kb2 = g.kappa_triple(bits)
    if spec.boundary == "free":
        kappa = ki + kb1 + kb2
        extra = 0.0
    elif spec.boundary == "wired":
        # wired = all of b1 glued: weight q per cluster not touching b1,
        # single weight q for the b1 cluster
        kappa = ki + kb2 + 1
        extra = 0.0
        if not g.b1:
            raise ValueError("wired oracle boundary needs b1")
    else:
        raise ValueError(f"oracle FK boundary {spec.boundary!r}")
    n_open = int(bits.sum())
    return n_open * math.log(p) + (g.n_edges - n_open) * math.log(1 - p) + kappa * math.log(spec.q) + extra


def _log_weight_qfk(bits, spec):
    g = spec.graph
    if g is None:
        raise ValueError("qFK oracle runs use explicit graphs")
    p = spec.p_eff
    ki, kb1, kb2 = g.kappa_triple(bits)
    n_open = int(bits.sum())
    return (n_open * math.log(p) + (g.n_edges - n_open) * math.log(1 - p)
            + ki * math.log(spec.q) + kb1 * math.log(spec.q1) + kb2 * math.log(spec.q2))


def _log_weight_atrc(tau, tautau, spec):
    if not np.all(tau <= tautau):
        return NEG_INF
    g = spec.graph
    if g is None:
        raise ValueError("plain ATRC is an oracle-scale measure here")
    pr = spec.params
    wired = spec.boundary == "wired"
    def kap(bits):
        uf = UnionFind(g.n_verts)
        for i, (u, v) in enumerate(g.edges):
            if bits[i]:
                uf.union(u, v)
        if wired:
            b = list(g.b1)
            for x in b[1:]:
                uf.union(b[0], x)
        return uf.count
    n_t = int(tau.sum())
    n_d = int((tautau & ~tau).sum())
    return (n_t * math.log(pr.w_tau) + n_d * math.log(pr.w_tautau)
            + (kap(tau) + kap(tautau)) * math.log(2.0))


def _log_weight_matrc(tau, tautau, spec):
    dom = spec.domain
    pr = spec.params
    if tau.shape[0] != dom.n_edges or tautau.shape[0] != dom.n_edges:
        raise ValueError("mATRC configs live on all edges of the augmented domain")
    if not np.all(tau <= tautau):
        return NEG_INF
    disc = tautau & ~tau
    if disc[dom.n_live:].any():
        return NEG_INF
    if spec.conditioning == "crossings":
        if not dom.connected(tau, dom.v_L, dom.v_R, "K"):
            return NEG_INF
        if not dom.connected(~tautau, dom.vp_L, dom.vp_R, "dual-K"):
            return NEG_INF
    n_live_open = int(tau[: dom.n_live].sum())
    n_ring_open = int(tau[dom.n_live:].sum())
    n_disc = int(disc.sum())
    kK = dom.cluster_count(tau, "K")
    kK1 = dom.cluster_count(tautau, "K1")
    return (n_live_open * math.log(2.0)
            + n_ring_open * math.log(2.0 / (pr.c_b - 1.0))
            + n_disc * math.log(pr.c - 2.0)
            + (kK + kK1) * math.log(2.0))


def _log_weight_potts(colors, spec):
    """Potts on B_{n,m} with order-order Dobrushin boundary values."""
    dom = spec.domain
    n, m = spec.nm
    beta = math.log(1.0 + math.sqrt(spec.q))
    if colors.shape != (2 * m + 1, 2 * n + 1):
        raise ValueError("colors is a (2m+1, 2n+1) grid over B")
    padded = _pad_dobrushin(colors, n, m)
    agree = 0
    agree += int((padded[1:, :] == padded[:-1, :]).sum())
    agree += int((padded[:, 1:] == padded[:, :-1]).sum())
    return beta * agree


def _pad_dobrushin(colors: np.ndarray, n: int, m: int) -> np.ndarray:
    """Surround the B-grid with one ring of Dobrushin values (1 up, 2 down)."""
    H, W = colors.shape
    out = np.empty((H + 2, W + 2), dtype=colors.dtype)
    out[1:-1, 1:-1] = colors
    # row index 0 <-> y = -m-1 ... row H+1 <-> y = m+1
    ys = np.arange(-m - 1, m + 2)
    ring = np.where(ys >= 0, 1, 2)
    out[0, :] = ring[0]
    out[-1, :] = ring[-1]
    out[:, 0] = ring
    out[:, -1] = ring
    return out


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------

@dataclass
class FiniteDistribution:
    """Sparse distribution over packed uint64 config keys."""

    n_bits: int
    keys: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        order = np.argsort(self.keys)
        self.keys = np.asarray(self.keys, dtype=np.uint64)[order]
        self.probs = np.asarray(self.probs, dtype=np.float64)[order]

    @property
    def support_size(self) -> int:
        return len(self.keys)

    def prob_of(self, key: int) -> float:
        i = np.searchsorted(self.keys, np.uint64(key))
        if i < len(self.keys) and self.keys[i] == np.uint64(key):
            return float(self.probs[i])
        return 0.0

    def tv(self, other: "FiniteDistribution") -> float:
        keys = np.union1d(self.keys, other.keys)
        pa = np.zeros(len(keys))
        pb = np.zeros(len(keys))
        ia = np.searchsorted(keys, self.keys)
        pa[ia] = self.probs
        ib = np.searchsorted(keys, other.keys)
        pb[ib] = other.probs
        return 0.5 * float(np.abs(pa - pb).sum())

    def marginal(self, bit_positions) -> "FiniteDistribution":
        bit_positions = list(bit_positions)
        sub = np.zeros(len(self.keys), dtype=np.uint64)
        for j, b in enumerate(bit_positions):
            sub |= (((self.keys >> np.uint64(b)) & np.uint64(1)) << np.uint64(j))
        uk, inv = np.unique(sub, return_inverse=True)
        pr = np.bincount(inv, weights=self.probs, minlength=len(uk))
        return FiniteDistribution(len(bit_positions), uk, pr)

    def condition(self, keep_mask: np.ndarray) -> "FiniteDistribution":
        k = self.keys[keep_mask]
        p = self.probs[keep_mask]
        tot = p.sum()
        if tot <= 0:
            raise ValueError("conditioning event has zero mass")
        return FiniteDistribution(self.n_bits, k, p / tot)


def _normalize_logw(keys, logw) -> FiniteDistribution:
    logw = np.asarray(logw, dtype=np.float64)
    keys = np.asarray(keys, dtype=np.uint64)
    keep = np.isfinite(logw)
    keys, logw = keys[keep], logw[keep]
    mx = logw.max()
    w = np.exp(logw - mx)
    return FiniteDistribution(0, keys, w / w.sum())


ENUM_LIMIT = 1 << 26


def enumerate_measure(spec: MeasureSpec) -> FiniteDistribution:
    """Exact normalized distribution by full enumeration."""
    if spec.kind == "FK" and spec.nm is not None:
        return _enumerate_fk_domain(spec)
    if spec.kind in ("FK", "qFK"):
        return _enumerate_oracle(spec)
    if spec.kind == "ATRC":
        return _enumerate_atrc(spec)
    if spec.kind == "mATRC":
        return _enumerate_matrc(spec)
    raise ValueError(f"no enumeration for kind {spec.kind}")


def _enumerate_fk_domain(spec) -> FiniteDistribution:
    dom = spec.domain
    k = dom.n_live
    if 1 << k > ENUM_LIMIT:
        raise CapacityErrorFor(k)
    nv, eu, ev, xu, xv = dom.view_graph("G-wired")
    p = spec.p_eff
    logw = _kernels.fk_weight_table(
        nv, eu, ev, xu, xv, k, math.log(p), math.log(1 - p), math.log(spec.q),
        nv - 2, nv - 1, spec.conditioning == "no-updown")
    dist = _normalize_logw(np.arange(1 << k, dtype=np.uint64), logw)
    dist.n_bits = k
    return dist


def _enumerate_oracle(spec) -> FiniteDistribution:
    g = spec.graph
    k = g.n_edges
    if 1 << k > ENUM_LIMIT:
        raise CapacityErrorFor(k)
    logw = np.array([log_weight(_bits_from_key(c, k), spec) for c in range(1 << k)])
    dist = _normalize_logw(np.arange(1 << k, dtype=np.uint64), logw)
    dist.n_bits = k
    return dist


def _enumerate_atrc(spec) -> FiniteDistribution:
    g = spec.graph
    k = g.n_edges
    if 4 ** k > ENUM_LIMIT:
        raise CapacityErrorFor(2 * k)
    keys, logw = [], []
    for a in range(1 << k):
        for b in range(1 << k):
            if a & ~b:
                continue
            w = log_weight(_bits_from_key(a, k), spec, _bits_from_key(b, k))
            keys.append(a | (b << k))
            logw.append(w)
    dist = _normalize_logw(np.array(keys, dtype=np.uint64), np.array(logw))
    dist.n_bits = 2 * k
    return dist


def matrc_structure(dom: DobrushinDomain, require_crossings: bool):
    """Exponent vectors of every valid mATRC pair (numba bulk scan).

    Keys pack tau in the low n_edges bits and the discrepancy set above.
    """
    k_nv, k_eu, k_ev, _, _ = dom.view_graph("K")
    k1_nv, k1_eu, k1_ev, k1_xu, k1_xv = dom.view_graph("K1")
    d_nv, d_eu, d_ev, _, _ = dom.view_graph("dual-K")
    if 2 * dom.n_edges > 63:
        raise CapacityErrorFor(2 * dom.n_edges)
    return _kernels.matrc_enumerate(
        dom.n_live, dom.n_edges,
        k_nv, k_eu, k_ev,
        k1_nv, k1_eu, k1_ev, k1_xu, k1_xv,
        d_nv, d_eu, d_ev,
        dom.vert_index[dom.v_L], dom.vert_index[dom.v_R],
        dom.dual_vert_index[dom.vp_L], dom.dual_vert_index[dom.vp_R],
        require_crossings)


def _enumerate_matrc(spec) -> FiniteDistribution:
    dom = spec.domain
    pr = spec.params
    keys, stats = matrc_structure(dom, spec.conditioning == "crossings")
    lw = (stats[:, 0] * math.log(2.0)
          + stats[:, 1] * math.log(2.0 / (pr.c_b - 1.0))
          + stats[:, 2] * math.log(pr.c - 2.0)
          + (stats[:, 3] + stats[:, 4]).astype(np.float64) * math.log(2.0))
    dist = _normalize_logw(keys, lw)
    dist.n_bits = 2 * dom.n_edges
    return dist


class CapacityErrorFor(Exception):
    def __init__(self, bits):
        super().__init__(f"enumeration over {bits} bits exceeds the 2^26 limit")


# ---------------------------------------------------------------------------
# heat-bath
# ---------------------------------------------------------------------------

def heatbath_conditional(config, e: int, spec: MeasureSpec) -> float:
    """Exact P(edge e open | all other edges), via the weight ratio."""
    bits = np.asarray(config, dtype=bool).copy()
    bits[e] = True
    lw_open = log_weight(bits, spec)
    bits[e] = False
    lw_closed = log_weight(bits, spec)
    if lw_open == NEG_INF:
        return 0.0
    if lw_closed == NEG_INF:
        return 1.0
    return 1.0 / (1.0 + math.exp(lw_closed - lw_open))


def heatbath_conditional_pair(tau, tautau, e: int, spec: MeasureSpec):
    """Joint conditional over the admissible states of (tau(e), tautau(e)).

    Returns (states, probs): three states (1,1),(0,0),(0,1) on live edges,
    two states (1,1),(0,0) where the pair is constrained to agree.
    """
    tau = np.asarray(tau, dtype=bool).copy()
    tautau = np.asarray(tautau, dtype=bool).copy()
    if spec.kind == "mATRC":
        live = e < spec.domain.n_live
    else:
        live = True
    states = [(1, 1), (0, 0)] + ([(0, 1)] if live else [])
    lws = []
    for (a, b) in states:
        tau[e], tautau[e] = bool(a), bool(b)
        lws.append(log_weight(tau, spec, tautau))
    lws = np.array(lws)
    mx = lws.max()
    w = np.exp(lws - mx)
    return states, w / w.sum()


def sample_mcmc(spec: MeasureSpec, sweeps: int, seed: int,
                constraint_mode: str = "free", samples_every: int = 0,
                init=None):
    """Heat-bath chain; returns (final_config, samples as uint64 masks).

    constraint_mode='reject-violating-flips' keeps a decreasing
    conditioning event true at every step (supported: 'no-updown').
    The chain is deterministic given (spec, seed, sweeps).
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    if spec.kind in ("FK", "qFK"):
        return _sample_fk_like(spec, sweeps, rng, constraint_mode, samples_every, init)
    if spec.kind in ("ATRC", "mATRC"):
        return _sample_pair(spec, sweeps, rng, samples_every, init)
    raise ValueError(f"no sampler for kind {spec.kind}")


def _sample_fk_like(spec, sweeps, rng, constraint_mode, samples_every, init):
    # assemble flat arrays: swept edges first, then frozen wiring
    if spec.nm is not None:
        dom = spec.domain
        nv, eu, ev, xu, xv = dom.view_graph("G-wired")
        n_sweep = dom.n_live
        eu_all = np.concatenate([eu, xu]).astype(np.int32)
        ev_all = np.concatenate([ev, xv]).astype(np.int32)
        state = np.zeros(len(eu_all), dtype=bool)
        state[n_sweep:] = True
        grp = np.full(nv, -1, dtype=np.int32)
        q1 = q2 = spec.q
        forbid_u = nv - 2 if (spec.conditioning == "no-updown") else -1
        forbid_v = nv - 1 if (spec.conditioning == "no-updown") else -1
        if spec.conditioning == "no-updown" and constraint_mode != "reject-violating-flips":
            raise ValueError("domain FK conditioning needs reject-violating-flips")
    else:
        g = spec.graph
        nv = g.n_verts
        n_sweep = g.n_edges
        eu_all = np.array([e[0] for e in g.edges], dtype=np.int32)
        ev_all = np.array([e[1] for e in g.edges], dtype=np.int32)
        state = np.zeros(n_sweep, dtype=bool)
        grp = np.full(nv, -1, dtype=np.int32)
        if spec.kind == "qFK":
            for v in g.b1:
                grp[v] = 0
            for v in g.b2:
                grp[v] = 1
            q1, q2 = spec.q1, spec.q2
        elif spec.boundary == "wired":
            for v in g.b1:
                grp[v] = 0
            q1, q2 = 1.0, spec.q
        else:
            q1 = q2 = spec.q
        forbid_u = forbid_v = -1
    if init is not None:
        state[:n_sweep] = np.asarray(init, dtype=bool)
    n_out = sweeps // samples_every if samples_every else 0
    out = np.zeros(max(n_out, 1), dtype=np.uint64)
    uniforms = rng.random((sweeps, n_sweep))
    _kernels.heatbath_sweeps(nv, eu_all, ev_all, grp, n_sweep,
                             state, spec.p_eff, spec.q, q1, q2,
                             sweeps, uniforms, forbid_u, forbid_v,
                             samples_every, out)
    return state[:n_sweep].copy(), (out[:n_out] if n_out else out[:0])


def _sample_pair(spec, sweeps, rng, samples_every, init):
    if spec.kind == "mATRC":
        n_edges = spec.domain.n_edges
    else:
        n_edges = spec.graph.n_edges
    if init is None:
        tau = np.zeros(n_edges, dtype=bool)
        tautau = np.zeros(n_edges, dtype=bool)
    else:
        tau, tautau = (np.asarray(x, dtype=bool).copy() for x in init)
    samples = []
    for s in range(sweeps):
        us = rng.random(n_edges)
        for e in range(n_edges):
            states, probs = heatbath_conditional_pair(tau, tautau, e, spec)
            c = np.searchsorted(np.cumsum(probs), us[e])
            a, b = states[min(c, len(states) - 1)]
            tau[e], tautau[e] = bool(a), bool(b)
        if samples_every and (s + 1) % samples_every == 0:
            key = _pack_pair(tau, tautau, n_edges)
            samples.append(key)
    return (tau, tautau), np.array(samples, dtype=np.uint64)


def _pack_pair(tau, tautau, n_edges) -> int:
    kt = 0
    kd = 0
    for i in range(n_edges):
        if tau[i]:
            kt |= 1 << i
        if tautau[i] and not tau[i]:
            kd |= 1 << i
    return kt | (kd << n_edges)


# ---------------------------------------------------------------------------
# Edwards-Sokal route: Potts spins <-> FK bonds under the split boundary
# ---------------------------------------------------------------------------

def potts_from_fk(live_bits, dom: DobrushinDomain, q: int, rng) -> np.ndarray:
    """Color the clusters of the wired-split FK config.

    Clusters touching the upper (lower) exterior get color 1 (2), all
    others i.i.d. uniform on 1..q.  Raises if the exteriors are joined.
    Returns a (2m+1, 2n+1) grid over B.
    """
    nv, eu, ev, xu, xv = dom.view_graph("G-wired")
    uf = UnionFind(nv)
    live_bits = np.asarray(live_bits, dtype=bool)
    for i in np.nonzero(live_bits)[0]:
        uf.union(int(eu[i]), int(ev[i]))
    for a, b in zip(xu, xv):
        uf.union(int(a), int(b))
    top, bot = nv - 2, nv - 1
    rt, rb = uf.find(top), uf.find(bot)
    if rt == rb:
        raise ValueError("configuration joins the upper and lower exteriors")
    colors = {rt: 1, rb: 2}
    n, m = dom.n, dom.m
    grid = np.zeros((2 * m + 1, 2 * n + 1), dtype=np.int64)
    for y in range(-m, m + 1):
        for x in range(-n, n + 1):
            vid = dom.vert_index[(2 * x, 2 * y)]
            r = uf.find(int(dom._g_map[vid]))
            if r not in colors:
                colors[r] = int(rng.integers(1, q + 1))
            grid[y + m, x + n] = colors[r]
    return grid


def fk_from_potts(grid: np.ndarray, dom: DobrushinDomain, p: float, rng) -> np.ndarray:
    """Bond draw given spins: open agreeing live edges with probability p.

    A monochromatic open path cannot join the two boundary colors, so the
    no-updown conditioning holds automatically for any Dobrushin coloring.
    """
    n, m = dom.n, dom.m
    padded = _pad_dobrushin(grid, n, m)

    def color_at(X, Y):
        return padded[Y // 2 + m + 1, X // 2 + n + 1]

    u = rng.random(dom.n_live)
    bits = np.zeros(dom.n_live, dtype=bool)
    for i in range(dom.n_live):
        (X0, Y0), (X1, Y1) = dom.edges[i]
        if color_at(X0, Y0) == color_at(X1, Y1):
            bits[i] = u[i] < p
    return bits


def potts_heatbath_sweeps(grid: np.ndarray, n: int, m: int, q: int, beta: float,
                          sweeps: int, rng) -> np.ndarray:
    """Single-site heat-bath on the Dobrushin-padded grid (numba kernel)."""
    padded = _pad_dobrushin(grid.astype(np.int64), n, m)
    for _ in range(sweeps):
        us = rng.random(grid.shape)
        _potts_sweep(padded, q, beta, us)
    return padded[1:-1, 1:-1].copy()


from numba import njit


@njit(cache=True)
def _potts_sweep(padded, q, beta, us):
    H, W = us.shape
    eb = np.exp(beta)
    for y in range(H):
        for x in range(W):
            c1 = padded[y, x + 1]
            c2 = padded[y + 2, x + 1]
            c3 = padded[y + 1, x]
            c4 = padded[y + 1, x + 2]
            # total weight: every color has weight 1 before boosts
            total = float(q)
            # boost factors per distinct neighbour color
            cols = np.empty(4, dtype=np.int64)
            cnts = np.empty(4, dtype=np.int64)
            k = 0
            for c in (c1, c2, c3, c4):
                found = False
                for j in range(k):
                    if cols[j] == c:
                        cnts[j] += 1
                        found = True
                        break
                if not found:
                    cols[k] = c
                    cnts[k] = 1
                    k += 1
            for j in range(k):
                total += eb ** cnts[j] - 1.0
            target = us[y, x] * total
            # walk colors: boosted ones first, then the uniform remainder
            acc = 0.0
            chosen = -1
            for j in range(k):
                acc += eb ** cnts[j]
                if target < acc:
                    chosen = cols[j]
                    break
            if chosen < 0:
                # uniformly among the q - k unboosted colors
                rem = target - acc
                idx = int(rem)  # each unboosted color has weight 1
                if idx > q - k - 1:
                    idx = q - k - 1
                c = 1
                cnt = 0
                while c <= q:
                    boosted = False
                    for j in range(k):
                        if cols[j] == c:
                            boosted = True
                            break
                    if not boosted:
                        if cnt == idx:
                            chosen = c
                            break
                        cnt += 1
                    c += 1
            padded[y + 1, x + 1] = chosen
    return padded
