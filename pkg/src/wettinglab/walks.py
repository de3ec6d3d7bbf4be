"""Directed cone-confined random walks.

Two modes.  The unit-step mode (dx = 1, dy = +-1) admits exact transfer
computations for everything: free and ordered synchronized kernels,
conditioned bridge samplers, and the ordered-bridge-pair (watermelon)
reference tables.  The general mode accepts any finite increment law
supported in the forward cone and falls back to hitting-conditioned
rejection.

For unit steps the pair walk decomposes exactly: with D = S - S' and
M = S + S', each time step moves exactly one of D, M by +-2, each with
probability 1/4, and the choices are i.i.d.  Ordering (equivalently
disjoint diamond envelopes) constrains only the D component, so ordered
pair kernels reduce to one-dimensional barrier walks plus binomial
counts; this is what makes n ~ 4096 exact tables cheap.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln


# ---------------------------------------------------------------------------
# increment laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IncrementDist:
    steps: tuple[tuple[int, int], ...]   # (dx, dy), dx >= 1, dx >= |dy|
    probs: tuple[float, ...]
    symmetric: bool = True

    def __post_init__(self):
        if abs(sum(self.probs) - 1.0) > 1e-14:
            raise ValueError("step probabilities must sum to 1 within 1e-14")
        for (dx, dy) in self.steps:
            if dx < 1 or dx < abs(dy):
                raise ValueError(f"step {(dx, dy)} leaves the forward cone")
        if self.symmetric:
            table = {s: p for s, p in zip(self.steps, self.probs)}
            for (dx, dy), p in table.items():
                if abs(table.get((dx, -dy), 0.0) - p) > 1e-14:
                    raise ValueError("declared symmetric but P(dx,dy) != P(dx,-dy)")

    @property
    def unit_step(self) -> bool:
        return all(dx == 1 for dx, _ in self.steps)

    def dist_hash(self) -> str:
        blob = json.dumps({"steps": [list(s) for s in self.steps], "probs": list(self.probs)})
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @staticmethod
    def unit_pm1() -> "IncrementDist":
        return IncrementDist(steps=((1, 1), (1, -1)), probs=(0.5, 0.5))

    def sample_steps(self, k: int, rng) -> np.ndarray:
        idx = rng.choice(len(self.steps), size=k, p=np.asarray(self.probs))
        return np.asarray(self.steps, dtype=np.int64)[idx]


# ---------------------------------------------------------------------------
# synchronization
# ---------------------------------------------------------------------------

@dataclass
class SyncWalk:
    """Synchronized triples (T_k, S_k, S'_k) of two directed walks."""

    T: np.ndarray
    S: np.ndarray
    Sp: np.ndarray

    @property
    def first_meet(self) -> int | None:
        """First synchronized index with S <= S' (None if never)."""
        hit = np.nonzero(self.S <= self.Sp)[0]
        return int(hit[0]) if len(hit) else None


def synchronize(path_a: np.ndarray, path_b: np.ndarray) -> SyncWalk:
    """Walks given as (k+1, 2) position arrays; synchronized at shared abscissas."""
    path_a = np.asarray(path_a)
    path_b = np.asarray(path_b)
    xa = {int(x): int(y) for x, y in path_a}
    xb = {int(x): int(y) for x, y in path_b}
    common = sorted(set(xa) & set(xb))
    if not common:
        raise ValueError("walks share no abscissa")
    T = np.array(common, dtype=np.int64)
    return SyncWalk(T=T, S=np.array([xa[t] for t in common], dtype=np.int64),
                    Sp=np.array([xb[t] for t in common], dtype=np.int64))


# ---------------------------------------------------------------------------
# exact kernels, unit-step mode
# ---------------------------------------------------------------------------

@dataclass
class SyncWalkKernels:
    """Exact tables q, q+ for a unit-step pair started at heights (i, i').

    q[n][j, j'] and q_plus[n][j, j'] are indexed by height offsets
    (window shifts stored in `lo`); q_plus_n[n] is the survival P(T > n).
    Time-reversed variants coincide for dy-symmetric laws and are stored
    explicitly.
    """

    i0: int
    i0p: int
    n_max: int
    lo: int
    q: dict
    q_plus: dict
    q_plus_n: np.ndarray
    q_rev: dict
    q_plus_rev: dict
    meta: dict = field(default_factory=dict)

    def save(self, path_prefix: str):
        order = sorted(self.q)
        body = np.concatenate([self.q[n].ravel() for n in order]
                              + [self.q_plus[n].ravel() for n in order])
        body.astype(np.float64).tofile(path_prefix + ".bin")
        index = {
            "i0": self.i0, "i0p": self.i0p, "n_max": self.n_max, "lo": self.lo,
            "ns": order, "shapes": {str(n): list(self.q[n].shape) for n in order},
            "meta": self.meta,
        }
        with open(path_prefix + ".json", "w") as f:
            json.dump(index, f, sort_keys=True)


def kernel_dp(dist: IncrementDist, n_max: int, window: int,
              i0: int = 0, i0p: int = 0, ns=None) -> SyncWalkKernels:
    """Forward joint DP over (abscissa, height, height') with the ordering
    barrier for q+ (absorb when S <= S').  Unit-step mode only.
    """
    if not dist.unit_step:
        raise ValueError("joint kernel tables require the unit-step mode")
    dys = [dy for _, dy in dist.steps]
    ps = list(dist.probs)
    lo = min(i0, i0p) - window
    hi = max(i0, i0p) + window
    W = hi - lo + 1
    ns = sorted(ns) if ns is not None else list(range(1, n_max + 1))

    def run(dy_sign):
        F = np.zeros((W, W))
        Fp = np.zeros((W, W))
        F[i0 - lo, i0p - lo] = 1.0
        if i0 > i0p:
            Fp[i0 - lo, i0p - lo] = 1.0
        q, qp = {}, {}
        qpn = np.zeros(n_max + 1)
        qpn[0] = Fp.sum()
        for n in range(1, n_max + 1):
            G = np.zeros_like(F)
            Gp = np.zeros_like(F)
            for dy1, p1 in zip(dys, ps):
                for dy2, p2 in zip(dys, ps):
                    s1, s2 = dy_sign * dy1, dy_sign * dy2
                    src = F[max(0, -s1): W - max(0, s1) or None,
                            max(0, -s2): W - max(0, s2) or None]
                    G[max(0, s1): W - max(0, -s1) or None,
                      max(0, s2): W - max(0, -s2) or None] += p1 * p2 * src
                    srcp = Fp[max(0, -s1): W - max(0, s1) or None,
                              max(0, -s2): W - max(0, s2) or None]
                    Gp[max(0, s1): W - max(0, -s1) or None,
                       max(0, s2): W - max(0, -s2) or None] += p1 * p2 * srcp
            # ordering barrier: absorb any mass with S <= S'
            a = np.arange(W)
            bad = a[:, None] <= a[None, :]
            Gp[bad] = 0.0
            F, Fp = G, Gp
            qpn[n] = Fp.sum()
            if n in ns:
                q[n] = F.copy()
                qp[n] = Fp.copy()
        return q, qp, qpn

    q, qp, qpn = run(+1)
    if dist.symmetric:
        q_rev, qp_rev = q, qp
    else:
        q_rev, qp_rev, _ = run(-1)
    return SyncWalkKernels(i0=i0, i0p=i0p, n_max=n_max, lo=lo,
                           q=q, q_plus=qp, q_plus_n=qpn,
                           q_rev=q_rev, q_plus_rev=qp_rev,
                           meta={"dist": dist.dist_hash(), "window": window})


def ordered_gap_survival(n_max: int, gap0: int, window: int | None = None) -> np.ndarray:
    """q+_{i,i'}(n) for i - i' = gap0 in unit-step mode, all n <= n_max.

    The difference walk D moves +-2 w.p. 1/4 and stays put w.p. 1/2;
    survival = P(D stays > 0).
    """
    if window is None:
        window = int(4 * math.sqrt(n_max) * max(math.log(n_max), 1.0)) + gap0 + 4
    W = window
    f = np.zeros(W + 1)
    if gap0 > 0:
        f[gap0] = 1.0
    out = np.zeros(n_max + 1)
    out[0] = f.sum()
    for n in range(1, n_max + 1):
        g = 0.5 * f
        g[2:] += 0.25 * f[:-2]
        g[:-2] += 0.25 * f[2:]
        g[0] = 0.0
        if g[-1] > 0:
            g[-1] = 0.0  # truncation guard; window must dominate sqrt(n) log n
        f = g
        f[f < 0] = 0.0
        f[: 1] = 0.0
        out[n] = f.sum()
    return out


def _stay_positive_table(d0: int, k_max: int, W: int, upper: int | None = None) -> np.ndarray:
    """A[k, d] = P(+-2 walk from d0 stays in (0, upper] for k steps, ends at d)."""
    A = np.zeros((k_max + 1, W + 1))
    A[0, d0] = 1.0
    for k in range(1, k_max + 1):
        prev = A[k - 1]
        cur = np.zeros(W + 1)
        cur[2:] += 0.5 * prev[:-2]
        cur[:-2] += 0.5 * prev[2:]
        cur[0] = 0.0
        if upper is not None and upper + 1 <= W:
            cur[upper + 1:] = 0.0
        A[k] = cur
    return A


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _free_bridge_prob(t, delta_half):
    """P(+-2 walk of t steps displaces by 2*delta_half), vectorized in t."""
    t = np.asarray(t, dtype=np.int64)
    u2 = t + delta_half
    ok = (u2 >= 0) & (u2 <= 2 * t) & (u2 % 2 == 0)
    u = np.where(ok, u2 // 2, 0)
    out = np.exp(_log_binom(t, u) - t * math.log(2.0))
    return np.where(ok, out, 0.0)


def ordered_pair_endpoint_kernel(n: int, i: int, ip: int, j: int, jp: int,
                                 window: int | None = None) -> float:
    """Exact q+_{i,i'}(n, j, j') in unit-step mode via the D/M split."""
    d0, d1 = i - ip, j - jp
    m0, m1 = i + ip, j + jp
    if d0 <= 0 or d1 <= 0:
        return 0.0
    if (d1 - d0) % 2 or (m1 - m0) % 2:
        return 0.0
    if window is None:
        window = d0 + 2 * n
    W = min(window, d0 + 2 * n) + 2
    A = _stay_positive_table(d0, n, W)
    ks = np.arange(n + 1)
    if d1 > W:
        return 0.0
    a_col = A[:, d1]
    log_choose = _log_binom(n, ks) - n * math.log(2.0)
    b = _free_bridge_prob(n - ks, (m1 - m0) // 2)
    return float(np.sum(np.exp(log_choose) * a_col * b))


# ---------------------------------------------------------------------------
# bridges
# ---------------------------------------------------------------------------

def sample_bridge(dist: IncrementDist, start, end, seed: int,
                  max_tries: int = 200000) -> np.ndarray:
    """Exact draw of a bridge path; positions array of shape (T+1, 2)."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    return _sample_bridge_rng(dist, start, end, rng, max_tries)


def _sample_bridge_rng(dist, start, end, rng, max_tries=200000):
    sx, sy = int(start[0]), int(start[1])
    ex, ey = int(end[0]), int(end[1])
    T = ex - sx
    dy_tot = ey - sy
    if dist.unit_step:
        if T < 0 or abs(dy_tot) > T or (T - abs(dy_tot)) % 2:
            raise ValueError("endpoint unreachable in unit-step mode")
        n_up = (T + dy_tot) // 2
        # uniform arrangement of up-steps = exact +-1 bridge
        ups = np.zeros(T, dtype=bool)
        ups[rng.permutation(T)[:n_up]] = True
        dys = np.where(ups, 1, -1)
        pos = np.empty((T + 1, 2), dtype=np.int64)
        pos[:, 0] = sx + np.arange(T + 1)
        pos[0, 1] = sy
        pos[1:, 1] = sy + np.cumsum(dys)
        return pos
    for _ in range(max_tries):
        pts = [(sx, sy)]
        x, y = sx, sy
        while x < ex:
            dx, dy = dist.steps[rng.choice(len(dist.steps), p=np.asarray(dist.probs))]
            x, y = x + dx, y + dy
            pts.append((x, y))
        if (x, y) == (ex, ey):
            return np.array(pts, dtype=np.int64)
    raise RuntimeError(f"bridge rejection budget exhausted after {max_tries} tries")


@dataclass
class BridgePair:
    path_a: np.ndarray
    path_b: np.ndarray
    mode: str
    tries: int = 1

    @property
    def acceptance_rate(self) -> float:
        return 1.0 / self.tries


def diamond_envelopes_disjoint(path_a: np.ndarray, path_b: np.ndarray) -> bool:
    """Whether the diamond envelopes of two cone walks are disjoint.

    In rotated coordinates (x+y, x-y) each diamond between consecutive
    points is an axis-aligned box, so the test is box-overlap.
    """
    def boxes(p):
        r = np.stack([p[:, 0] + p[:, 1], p[:, 0] - p[:, 1]], axis=1)
        a = np.minimum(r[:-1], r[1:])
        b = np.maximum(r[:-1], r[1:])
        return a, b
    a0, a1 = boxes(np.asarray(path_a))
    b0, b1 = boxes(np.asarray(path_b))
    # overlap if intervals intersect in both rotated axes
    inter_x = (a0[:, None, 0] <= b1[None, :, 0]) & (b0[None, :, 0] <= a1[:, None, 0])
    inter_y = (a0[:, None, 1] <= b1[None, :, 1]) & (b0[None, :, 1] <= a1[:, None, 1])
    return not bool((inter_x & inter_y).any())


def sample_nonintersecting_pair(dist: IncrementDist, starts, ends, mode: str,
                                seed: int, max_tries: int = 100000) -> BridgePair:
    """Exact draw of a conditioned bridge pair.

    mode 'none': independent bridges.  mode 'ordered' (unit-step):
    strict ordering of heights at every abscissa, which for unit steps
    is the same event as 'envelope-disjoint'; sampled exactly through
    the D/M decomposition.  General-mode 'envelope-disjoint' rejects
    from independent bridges.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    (ax, ay), (bx, by) = starts
    (cx, cy), (dx_, dy_) = ends
    if mode == "none":
        pa = _sample_bridge_rng(dist, (ax, ay), (cx, cy), rng)
        pb = _sample_bridge_rng(dist, (bx, by), (dx_, dy_), rng)
        return BridgePair(pa, pb, mode)
    if mode == "ordered" and dist.unit_step:
        if not (ax == bx and cx == dx_):
            raise ValueError("ordered mode expects aligned abscissas")
        n = cx - ax
        pa, pb = _sample_ordered_pair_unit(n, ay, by, cy, dy_, rng)
        pa[:, 0] += ax
        pb[:, 0] += ax
        return BridgePair(pa, pb, "ordered")
    if mode in ("ordered", "envelope-disjoint"):
        for t in range(1, max_tries + 1):
            pa = _sample_bridge_rng(dist, (ax, ay), (cx, cy), rng)
            pb = _sample_bridge_rng(dist, (bx, by), (dx_, dy_), rng)
            if mode == "ordered":
                sw = synchronize(pa, pb)
                ok = bool(np.all(sw.S > sw.Sp))
            else:
                ok = diamond_envelopes_disjoint(pa, pb)
            if ok:
                return BridgePair(pa, pb, mode, tries=t)
        raise RuntimeError(f"pair rejection budget exhausted after {max_tries} tries")
    raise ValueError(f"unknown mode {mode!r}")


def _sample_ordered_pair_unit(n, ay, by, cy, dy_, rng):
    """Exact ordered unit-step bridge pair via the D/M decomposition."""
    d0, d1 = ay - by, cy - dy_
    m0, m1 = ay + by, cy + dy_
    if d0 <= 0 or d1 <= 0 or (d1 - d0) % 2 or (m1 - m0) % 2:
        raise ValueError("ordered pair endpoints unreachable")
    W = d0 + 2 * n + 2
    A = _stay_positive_table(d0, n, W)
    ks = np.arange(n + 1)
    logw = _log_binom(n, ks) - n * math.log(2.0)
    a_col = A[:, d1] if d1 <= W else np.zeros(n + 1)
    b = _free_bridge_prob(n - ks, (m1 - m0) // 2)
    w = np.exp(logw) * a_col * b
    tot = w.sum()
    if tot <= 0:
        raise ValueError("ordered pair endpoints unreachable")
    K = int(rng.choice(n + 1, p=w / tot))

    # D path: backward table from the endpoint (symmetric +-2 kernel)
    R = _stay_positive_table(d1, K, W)
    d_path = [d0]
    cur = d0
    for s in range(K):
        t = K - s - 1  # steps remaining after this one
        p_up = 0.0
        if cur + 2 <= W:
            p_up = 0.5 * R[t, cur + 2]
        p_dn = 0.5 * R[t, cur - 2] if cur - 2 >= 1 else 0.0
        tot2 = p_up + p_dn
        cur = cur + 2 if rng.random() < p_up / tot2 else cur - 2
        d_path.append(cur)
    d_path = np.array(d_path, dtype=np.int64)

    # M path: free +-2 bridge of n-K steps = uniform up-step placement
    tM = n - K
    uM = (tM + (m1 - m0) // 2) // 2
    upsM = np.zeros(tM, dtype=bool)
    upsM[rng.permutation(tM)[:uM]] = True

    # interleaving: which abscissas are D-steps (uniform K-subset)
    is_d = np.zeros(n, dtype=bool)
    is_d[rng.permutation(n)[:K]] = True

    D = np.empty(n + 1, dtype=np.int64)
    M = np.empty(n + 1, dtype=np.int64)
    D[0], M[0] = d0, m0
    di = mi = 0
    for x in range(n):
        if is_d[x]:
            di += 1
            D[x + 1] = d_path[di]
            M[x + 1] = M[x]
        else:
            M[x + 1] = M[x] + (2 if upsM[mi] else -2)
            mi += 1
            D[x + 1] = D[x]
    S = (M + D) // 2
    Sp = (M - D) // 2
    xs = np.arange(n + 1)
    return (np.stack([xs, S], axis=1).astype(np.int64),
            np.stack([xs, Sp], axis=1).astype(np.int64))


# ---------------------------------------------------------------------------
# watermelon reference
# ---------------------------------------------------------------------------

@dataclass
class WatermelonTables:
    K: int
    gap0: int
    gap_support: np.ndarray       # rescaled midpoint gaps (units of 1/sqrt(K))
    gap_probs: np.ndarray
    upper_support: np.ndarray     # rescaled midpoint height of the upper path
    upper_probs: np.ndarray
    lower_support: np.ndarray
    lower_probs: np.ndarray
    maxgap_support: np.ndarray    # rescaled max gap values
    maxgap_cdf: np.ndarray

    @property
    def mean_gap(self) -> float:
        return float(np.sum(self.gap_support * self.gap_probs))


def watermelon_reference(K: int, gap0: int = 2) -> WatermelonTables:
    """Exact midpoint/maximum tables for ordered unit-step bridge pairs.

    Both walks are bridges over abscissa length K (upper: gap0 -> gap0,
    lower: 0 -> 0), conditioned on strict ordering; heights rescale by
    1/sqrt(K).  The default minimal endpoint gap is the diffusive-limit
    proxy: after rescaling the endpoints collapse at rate 1/sqrt(K), so
    two-resolution tables agree to a few percent in KS distance.  Gaps
    growing like ln^2 K stay macroscopic for any feasible K (ln^2 K /
    sqrt(K) ~ 1.5 even at K = 1024) and do NOT self-converge; pass gap0
    explicitly to study that regime.
    """
    if K < 4 or K % 2:
        raise ValueError("resolution K must be even and >= 4")
    n = K
    h = n // 2
    d0 = d1 = gap0
    W = d0 + 2 * n + 2

    A = _stay_positive_table(d0, h, W)          # left half, from d0
    ks = np.arange(h + 1)
    logc = _log_binom(h, ks)

    # joint over (d_mid, m_mid): left and right halves factorize given both;
    # D and M keep the parity of gap0 (all moves are +-2)
    d_start = 1 if d0 % 2 else 2
    d_vals = np.arange(d_start, W + 1, 2)
    m_span = int(4 * math.sqrt(n) * max(math.log(n), 1.0)) + abs(gap0) + 4
    m_span -= m_span % 2
    m_vals = gap0 + np.arange(-m_span, m_span + 1, 2)

    # L[d, m] = sum_k C(h,k) A_k(d0 -> d) B_{h-k}((m - m0)/2), m0 = gap0
    BL = _free_bridge_prob(h - ks[None, :], (m_vals[:, None] - gap0) // 2)  # (m, k)
    w_k = np.exp(logc - h * math.log(2.0))
    AL = A[:, d_vals]                            # (k, d)
    L = (BL * w_k[None, :]) @ AL                 # (m, d)

    # right half: paths d -> d1 staying positive have the same table by
    # reversal symmetry of the +-2 kernel
    Ar = _stay_positive_table(d1, h, W)
    AR = Ar[:, d_vals]
    R = (BL * w_k[None, :]) @ AR                 # (m, d), bridge back to m1 = gap0

    joint = L * R                                # (m, d) up to normalization
    tot = joint.sum()
    if tot <= 0:
        raise ValueError("empty ordered-pair ensemble; enlarge K or gap0")
    joint /= tot

    scale = 1.0 / math.sqrt(K)
    gap_probs = joint.sum(axis=0)
    upper_vals = (m_vals[:, None] + d_vals[None, :]) / 2.0
    lower_vals = (m_vals[:, None] - d_vals[None, :]) / 2.0
    upper_support, upper_probs = _aggregate(upper_vals * scale, joint)
    lower_support, lower_probs = _aggregate(lower_vals * scale, joint)

    # max-gap CDF by an upper barrier on the D component
    hs = []
    cdf = []
    prev = 0.0
    for hbar in range(d0, W + 1, 2):
        Ah = _stay_positive_table(d0, n, min(W, hbar + 2), upper=hbar)
        acol = Ah[:, d1] if d1 <= hbar else np.zeros(n + 1)
        kk = np.arange(n + 1)
        w = np.exp(_log_binom(n, kk) - n * math.log(2.0)) * acol \
            * _free_bridge_prob(n - kk, 0)
        hs.append(hbar * scale)
        cdf.append(float(w.sum()))
        if cdf[-1] > 0 and prev > 0 and abs(cdf[-1] - prev) < 1e-14 * cdf[-1]:
            break
        prev = cdf[-1]
    cdf = np.array(cdf)
    cdf /= cdf[-1]
    return WatermelonTables(K=K, gap0=gap0,
                            gap_support=d_vals * scale, gap_probs=gap_probs,
                            upper_support=upper_support, upper_probs=upper_probs,
                            lower_support=lower_support, lower_probs=lower_probs,
                            maxgap_support=np.array(hs), maxgap_cdf=cdf)


def _aggregate(values, weights):
    v = values.ravel()
    w = weights.ravel()
    uv, inv = np.unique(np.round(v, 12), return_inverse=True)
    pw = np.bincount(inv, weights=w, minlength=len(uv))
    keep = pw > 0
    return uv[keep], pw[keep]


def ks_distance(support_a, probs_a, support_b, probs_b, smooth: bool = False) -> float:
    """KS distance between two discrete distributions on the reals.

    With smooth=True the step CDFs are replaced by the piecewise-linear
    interpolation through the atoms (each lattice atom spread over its
    cell).  Two lattice laws with incommensurate spacings have a raw KS
    floor of half the largest atom even when they approximate the same
    continuum law; the smoothed distance is the right lattice-to-continuum
    comparison.
    """
    if not smooth:
        xs = np.union1d(support_a, support_b)
        ca = np.zeros(len(xs))
        cb = np.zeros(len(xs))
        ca[np.searchsorted(xs, support_a)] = probs_a
        cb[np.searchsorted(xs, support_b)] = probs_b
        return float(np.abs(np.cumsum(ca) - np.cumsum(cb)).max())
    xs = np.union1d(support_a, support_b)
    fa = np.interp(xs, support_a, np.cumsum(probs_a))
    fb = np.interp(xs, support_b, np.cumsum(probs_b))
    return float(np.abs(fa - fb).max())


# ---------------------------------------------------------------------------
# local limit and renewal checks
# ---------------------------------------------------------------------------

@dataclass
class LLTReport:
    n: int
    mu: float
    sigma2: float
    sup_rel_err: float
    n_points: int


def llt_check(offsets, probs, n: int, radius: float | None = None) -> LLTReport:
    """Exact n-fold convolution vs the Gaussian local formula.

    offsets/probs give a one-dimensional lattice law; requires
    aperiodicity (gcd of support differences = 1) and n <= 2000.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    if n > 2000:
        raise ValueError("exact convolution limited to n <= 2000")
    if len(offsets) < 2:
        raise ValueError("degenerate distribution is periodic")
    diffs = np.diff(np.sort(offsets))
    g = 0
    for d in diffs:
        g = math.gcd(g, int(d))
    if g != 1:
        raise ValueError(f"distribution has period {g} > 1")
    mu = float(np.sum(offsets * probs))
    sigma2 = float(np.sum((offsets - mu) ** 2 * probs))

    lo = int(offsets.min())
    pmf = np.zeros(int(offsets.max()) - lo + 1)
    for o, p in zip(offsets, probs):
        pmf[int(o) - lo] = p
    cur = np.array([1.0])
    cur_lo = 0
    for _ in range(n):
        cur = np.convolve(cur, pmf)
        cur_lo += lo
    if radius is None:
        radius = n ** (7.0 / 12.0)
    xs = np.arange(cur_lo, cur_lo + len(cur))
    sel = np.abs(xs - mu * n) <= radius
    exact = cur[sel]
    x = xs[sel].astype(float)
    gauss = np.exp(-((x - mu * n) ** 2) / (2 * n * sigma2)) / math.sqrt(2 * math.pi * n * sigma2)
    rel = np.abs(exact / gauss - 1.0)
    return LLTReport(n=n, mu=mu, sigma2=sigma2,
                     sup_rel_err=float(rel.max()), n_points=int(sel.sum()))


@dataclass
class RenewalReport:
    n: int
    mu_T: float
    sigma2_X: float
    sup_rel_err: float
    n_points: int


def renewal_hit_check(pairs, n: int, K: float = 1.0) -> RenewalReport:
    """P(some renewal lands exactly at (n, x)) vs (1/mu) x Gaussian.

    pairs: iterable of (t, dy, prob) steps with t >= 1.  Hypotheses
    checked: P(T=1) > 0, E(X | T=t) = 0 for all t, X aperiodic.
    """
    pairs = [(int(t), int(dy), float(p)) for (t, dy, p) in pairs]
    if abs(sum(p for _, _, p in pairs) - 1.0) > 1e-12:
        raise ValueError("step probabilities must sum to 1")
    if not any(t == 1 for t, _, _ in pairs):
        raise ValueError("requires P(T=1) > 0")
    by_t: dict[int, float] = {}
    for t, dy, p in pairs:
        by_t[t] = by_t.get(t, 0.0) + dy * p
    if any(abs(v) > 1e-12 for v in by_t.values()):
        raise ValueError("requires E(X | T=t) = 0 on the support")
    xs = sorted({dy for _, dy, _ in pairs})
    if len(xs) < 2:
        # deterministic displacement: |E e^{i theta X}| = 1 off zero
        raise ValueError("X distribution is periodic (deterministic)")

    mu = sum(t * p for t, _, p in pairs)
    sigma2 = sum(dy * dy * p for _, dy, p in pairs)
    span = n + 1
    f = np.zeros((n + 1, 2 * span + 1))
    f[0, span] = 1.0
    for t in range(1, n + 1):
        acc = np.zeros(2 * span + 1)
        for dt, dy, p in pairs:
            if t - dt < 0:
                continue
            src = f[t - dt]
            if dy >= 0:
                acc[dy:] += p * src[: 2 * span + 1 - dy]
            else:
                acc[: dy] += p * src[-dy:]
        f[t] = acc
    xs_grid = np.arange(-span, span + 1)
    sel = (np.abs(xs_grid) <= K * math.sqrt(n)) & (f[n] > 0)
    exact = f[n][sel]
    x = xs_grid[sel].astype(float)
    # lattice span of the reachable sites at time n: the (T, X) support can
    # generate a proper sublattice (e.g. t+x always even here), in which
    # case the local density doubles on the admissible coset
    reach = xs_grid[f[n] > 0]
    s_lat = 0
    for dxr in np.diff(np.sort(reach)):
        s_lat = math.gcd(s_lat, int(dxr))
    s_lat = max(s_lat, 1)
    # a renewal at time n has seen ~ n/mu steps, so the spatial variance is
    # n sigma2 / mu (the n sigma2 sometimes quoted is the mu = 1 case)
    var = n * sigma2 / mu
    gauss = s_lat * np.exp(-(x ** 2) / (2 * var)) / (mu * math.sqrt(2 * math.pi * var))
    rel = np.abs(exact / gauss - 1.0)
    return RenewalReport(n=n, mu_T=mu, sigma2_X=sigma2,
                         sup_rel_err=float(rel.max()), n_points=int(sel.sum()))


# ---------------------------------------------------------------------------
# total variation utilities
# ---------------------------------------------------------------------------

def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share a support index")
    return 0.5 * float(np.abs(p - q).sum())


def product_tv_bound(eps: float) -> float:
    """TV bound for products: d(mu x nu, mu' x nu') <= 2 eps."""
    return 2.0 * eps


def conditional_tv_bound(eps: float, delta: float) -> float:
    """TV bound after conditioning on an event of mass >= delta."""
    return eps * (1.0 / delta + 1.0 / delta ** 2)
