"""Order-order interface extraction and statistics.

Envelopes follow the displayed definitions: per color/interface an upper
envelope from a below-seeded flood fill and a lower envelope from an
above-seeded fill (diagonal connectivity on the from-above fills).  The
printed lower-interface formulas for the bond model are degenerate /
duplicated; they are reconstructed as the reflection through y = -1/2 of
the upper-interface ones (see the module tests against explicit
configurations).

Cone points use the opening-pi/2 cones Y< = {x1 >= |x2|}: v is a cone
point of V iff every u in V has |u.x - v.x| >= |u.y - v.y|, checked
against per-column extremes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .lattice import DobrushinDomain, UnionFind

FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
EIGHT = np.ones((3, 3), dtype=int)


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------

@dataclass
class Envelope:
    label: str
    n: int
    values: np.ndarray  # y(k) for k = -n..n

    def __getitem__(self, k: int) -> int:
        return int(self.values[k + self.n])

    def rescaled(self) -> "RescaledPath":
        return RescaledPath(self.n, self.values.astype(float))


@dataclass
class RescaledPath:
    """(1/sqrt(n)) linear interpolation of an envelope, on t in [0, 1]."""

    n: int
    values: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = 2.0 * t * self.n - self.n
        fl = np.floor(u)
        frac = u - fl
        i0 = np.clip(fl.astype(int) + self.n, 0, 2 * self.n)
        i1 = np.clip(np.ceil(u).astype(int) + self.n, 0, 2 * self.n)
        return ((1.0 - frac) * self.values[i0] + frac * self.values[i1]) / math.sqrt(self.n)


def _marked_from(mask: np.ndarray, seeds: np.ndarray, structure) -> np.ndarray:
    """Cells of `mask` connected to a seed cell (seeds must lie in mask)."""
    labels, _ = ndimage.label(mask, structure=structure)
    hit = np.unique(labels[seeds & mask])
    hit = hit[hit > 0]
    return np.isin(labels, hit)


def _ring_masks(H: int, W: int):
    ring = np.zeros((H, W), dtype=bool)
    ring[0, :] = ring[-1, :] = True
    ring[:, 0] = ring[:, -1] = True
    return ring


def potts_envelopes(colors: np.ndarray, n: int, m: int | None = None) -> dict[str, Envelope]:
    """Four envelopes of a Potts coloring of B_{n,m} under order-order values.

    colors is the (2m+1, 2n+1) grid; the Dobrushin extension (1 above the
    seam, 2 below) is added internally.  Row index y+m <-> height y.
    """
    from .gibbs import _pad_dobrushin
    if m is None:
        m = (colors.shape[0] - 1) // 2
    padded = _pad_dobrushin(colors.astype(np.int64), n, m)
    H, W = padded.shape
    ring = _ring_masks(H, W)
    ys = np.arange(-m - 1, m + 2)
    lower_ring = ring & (ys[:, None] < 0)
    upper_ring = ring & (ys[:, None] >= 0)

    def col_max(marked, shift):  # max y with (k, y - 1) marked, etc.
        out = np.empty(2 * n + 1, dtype=np.int64)
        for j in range(2 * n + 1):
            col = np.nonzero(marked[:, j + 1])[0]
            if len(col) == 0:
                raise ValueError("envelope fill found an empty column")
            out[j] = (col.max() - (m + 1)) + shift
        return out

    def col_min(marked, shift):
        out = np.empty(2 * n + 1, dtype=np.int64)
        for j in range(2 * n + 1):
            col = np.nonzero(marked[:, j + 1])[0]
            if len(col) == 0:
                raise ValueError("envelope fill found an empty column")
            out[j] = (col.min() - (m + 1)) + shift
        return out

    m1p = _marked_from(padded != 1, lower_ring, FOUR)
    m1m = _marked_from(padded == 1, upper_ring, EIGHT)
    m2p = _marked_from(padded == 2, lower_ring, FOUR)
    m2m = _marked_from(padded != 2, upper_ring, EIGHT)
    return {
        "1+": Envelope("1+", n, col_max(m1p, +1)),
        "1-": Envelope("1-", n, col_min(m1m, -1)),
        "2+": Envelope("2+", n, col_max(m2p, +1)),
        "2-": Envelope("2-", n, col_min(m2m, -1)),
    }


def fk_envelopes(live_bits, dom: DobrushinDomain) -> dict[str, Envelope]:
    """Envelopes of the two bond-model interfaces.

    1+ : highest reach of the seam dual cluster next to column k
    1- : lowest reach of the upper wired cluster, minus one
    2+ : highest reach of the lower wired cluster, plus one
    2- : lowest reach of the seam dual cluster next to column k
    """
    n, m = dom.n, dom.m
    full = dom.full_config(live_bits)

    # dual cluster of the left seam vertex (-n-1/2, -1/2)
    nv, eu, ev, _, _ = dom.view_graph("dual-K")
    uf = UnionFind(nv)
    dual_open = ~full
    for i in np.nonzero(dual_open)[0]:
        uf.union(int(eu[i]), int(ev[i]))
    seam = dom.dual_vert_index[(-2 * n - 1, -1)]
    seam_root = uf.find(seam)
    if uf.find(dom.dual_vert_index[(2 * n + 1, -1)]) != seam_root:
        raise ValueError("configuration violates the seam crossing event")
    in_cluster = np.array([uf.find(i) == seam_root for i in range(nv)])

    # primal clusters of the two wired exteriors
    nvp, eup, evp, xu, xv = dom.view_graph("G-wired")
    ufp = UnionFind(nvp)
    for i in np.nonzero(np.asarray(live_bits, dtype=bool))[0]:
        ufp.union(int(eup[i]), int(evp[i]))
    for a, b in zip(xu, xv):
        ufp.union(int(a), int(b))
    top_root = ufp.find(nvp - 2)
    bot_root = ufp.find(nvp - 1)
    if top_root == bot_root:
        raise ValueError("configuration joins the two exteriors")

    dual_cols: dict[int, list[int]] = {}
    for pt, i in dom.dual_vert_index.items():
        if in_cluster[i]:
            dual_cols.setdefault(pt[0], []).append(pt[1])

    up_cols: dict[int, list[int]] = {}
    low_cols: dict[int, list[int]] = {}
    for pt, i in dom.vert_index.items():
        g = int(dom._g_map[i])
        if g < 0:
            continue
        r = ufp.find(g)
        if r == top_root:
            up_cols.setdefault(pt[0], []).append(pt[1])
        elif r == bot_root:
            low_cols.setdefault(pt[0], []).append(pt[1])

    v1p = np.empty(2 * n + 1, dtype=np.int64)
    v1m = np.empty(2 * n + 1, dtype=np.int64)
    v2p = np.empty(2 * n + 1, dtype=np.int64)
    v2m = np.empty(2 * n + 1, dtype=np.int64)
    for j, k in enumerate(range(-n, n + 1)):
        dys = dual_cols.get(2 * k - 1, []) + dual_cols.get(2 * k + 1, [])
        if not dys:
            raise ValueError("seam dual cluster misses a column")
        # a dual member at doubled height Y sits at (k +- 1/2, Y/2); it
        # witnesses y = (Y+1)/2 for the 1+ formula and y = (Y-1)/2 for 2-
        v1p[j] = (max(dys) + 1) // 2
        v2m[j] = (min(dys) - 1) // 2
        ups = up_cols.get(2 * k, [])
        lows = low_cols.get(2 * k, [])
        if not ups or not lows:
            raise ValueError("wired cluster misses a column")
        v1m[j] = min(ups) // 2 - 1
        v2p[j] = max(lows) // 2 + 1
    return {
        "1+": Envelope("1+", n, v1p),
        "1-": Envelope("1-", n, v1m),
        "2+": Envelope("2+", n, v2p),
        "2-": Envelope("2-", n, v2m),
    }


# ---------------------------------------------------------------------------
# crossing clusters and extremal paths
# ---------------------------------------------------------------------------

@dataclass
class CrossingClusters:
    cluster: list            # doubled points of the v_L cluster in omega_tau
    dual_cluster: list       # doubled points of the v'_L cluster in omega_tautau*
    crosses: bool            # v_R in cluster
    dual_crosses: bool       # v'_R in dual cluster
    top_path: list | None    # topmost v_L -> v_R path (doubled points)
    bottom_path: list | None


def atrc_clusters(tau, tautau, dom: DobrushinDomain) -> CrossingClusters:
    tau = np.asarray(tau, dtype=bool)
    tautau = np.asarray(tautau, dtype=bool)

    nv, eu, ev, _, _ = dom.view_graph("K")
    uf = UnionFind(nv)
    for i in np.nonzero(tau)[0]:
        uf.union(int(eu[i]), int(ev[i]))
    rL = uf.find(dom.vert_index[dom.v_L])
    cluster = [pt for pt, i in dom.vert_index.items() if uf.find(i) == rL]
    crosses = uf.find(dom.vert_index[dom.v_R]) == rL

    nvd, eud, evd, _, _ = dom.view_graph("dual-K")
    ufd = UnionFind(nvd)
    dual_open = ~tautau
    for i in np.nonzero(dual_open)[0]:
        ufd.union(int(eud[i]), int(evd[i]))
    rLd = ufd.find(dom.dual_vert_index[dom.vp_L])
    dual_cluster = [pt for pt, i in dom.dual_vert_index.items() if ufd.find(i) == rLd]
    dual_crosses = ufd.find(dom.dual_vert_index[dom.vp_R]) == rLd

    top = bottom = None
    if crosses:
        adj = _adjacency(dom, tau, dual=False)
        top = extremal_path(adj, dom.v_L, dom.v_R, prefer_up=True)
    if dual_crosses:
        adjd = _adjacency(dom, dual_open, dual=True)
        bottom = extremal_path(adjd, dom.vp_L, dom.vp_R, prefer_up=False)
    return CrossingClusters(cluster, dual_cluster, crosses, dual_crosses, top, bottom)


def _adjacency(dom, open_bits, dual):
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    if dual:
        pts = dom.dual_verts
        eu, ev = dom.dual_edge_u, dom.dual_edge_v
    else:
        pts = dom.verts
        eu, ev = dom.edge_u, dom.edge_v
    for i in np.nonzero(np.asarray(open_bits, dtype=bool))[0]:
        a, b = pts[int(eu[i])], pts[int(ev[i])]
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    return adj


def extremal_path(adj, start, goal, prefer_up: bool) -> list:
    """Topmost (prefer_up) or bottom-most simple path via a wall-follow walk.

    The walk keeps the preferred side on its hand (try the preferred turn
    first, then straight, then the other turn, then back) and the visited
    trail is loop-erased; dead ends unwind automatically.
    """
    if prefer_up:
        order = ((0, 2), (2, 0), (0, -2), (-2, 0))  # relative to heading east
    else:
        order = ((0, -2), (2, 0), (0, 2), (-2, 0))

    def turns(d):
        # rotate the preference template from east to heading d
        out = []
        for t in order:
            if d == (2, 0):
                out.append(t)
            elif d == (0, 2):
                out.append((-t[1], t[0]))
            elif d == (-2, 0):
                out.append((-t[0], -t[1]))
            else:
                out.append((t[1], -t[0]))
        return out

    path = [start]
    index = {start: 0}
    heading = (2, 0)
    cur = start
    steps = 0
    limit = 16 * (len(adj) + 4) ** 2
    while cur != goal:
        steps += 1
        if steps > limit:
            raise RuntimeError("extremal path walk failed to terminate")
        nxt = None
        for d in turns(heading):
            cand = (cur[0] + d[0], cur[1] + d[1])
            if cand in adj.get(cur, ()):
                nxt = cand
                heading = d
                break
        if nxt is None:
            raise ValueError("no path exists from the start vertex")
        if nxt in index:
            k = index[nxt]
            for p in path[k + 1:]:
                del index[p]
            path = path[: k + 1]
        else:
            path.append(nxt)
            index[nxt] = len(path) - 1
        cur = nxt
    return path


# ---------------------------------------------------------------------------
# distances, cones, geometry
# ---------------------------------------------------------------------------

def hausdorff_one_sided(R, S) -> float:
    """sup over R of the d_infinity distance to S (asymmetric)."""
    R = np.asarray(list(R), dtype=float)
    S = np.asarray(list(S), dtype=float)
    if len(R) == 0 or len(S) == 0:
        raise ValueError("empty set in one-sided Hausdorff distance")
    best = 0.0
    for i in range(0, len(R), 256):
        chunk = R[i : i + 256]
        d = np.abs(chunk[:, None, :] - S[None, :, :]).max(axis=2).min(axis=1)
        best = max(best, float(d.max()))
    return best


def set_distance(A, B) -> float:
    """min over pairs of the d_infinity distance (distance between sets)."""
    A = np.asarray(list(A), dtype=float)
    B = np.asarray(list(B), dtype=float)
    if len(A) == 0 or len(B) == 0:
        return float("inf")
    best = float("inf")
    for i in range(0, len(A), 256):
        chunk = A[i : i + 256]
        d = np.abs(chunk[:, None, :] - B[None, :, :]).max(axis=2).min(axis=1)
        best = min(best, float(d.min()))
    return best


def in_forward_cone(p, v) -> bool:
    return p[0] - v[0] >= abs(p[1] - v[1])


def in_backward_cone(p, v) -> bool:
    return v[0] - p[0] >= abs(p[1] - v[1])


def diamond_contains(p, u, v) -> bool:
    return in_forward_cone(p, u) and in_backward_cone(p, v)


@dataclass
class ConeDecomposition:
    points: np.ndarray       # the input vertex set
    cone_points: np.ndarray  # sorted by x, shape (k, 2)

    def slab(self, a: float, b: float) -> np.ndarray:
        xs = self.cone_points[:, 0]
        return self.cone_points[(xs >= a) & (xs <= b)]

    def envelope_contains(self, p) -> bool:
        cps = self.cone_points
        for i in range(len(cps) - 1):
            if diamond_contains(p, cps[i], cps[i + 1]):
                return True
        return False

    def confined(self) -> bool:
        """Every vertex lies in the end-cones or the diamond envelope."""
        if len(self.cone_points) == 0:
            return True
        first, last = self.cone_points[0], self.cone_points[-1]
        for p in self.points:
            if in_backward_cone(p, first) or in_forward_cone(p, last):
                continue
            if not self.envelope_contains(p):
                return False
        return True

    def envelope_upper(self, x: float) -> float:
        """Upper boundary height of the diamond envelope at abscissa x."""
        cps = self.cone_points
        for i in range(len(cps) - 1):
            u, v = cps[i], cps[i + 1]
            if u[0] <= x <= v[0]:
                return min(u[1] + (x - u[0]), v[1] + (v[0] - x))
        raise ValueError("abscissa outside the envelope")

    def envelope_lower(self, x: float) -> float:
        cps = self.cone_points
        for i in range(len(cps) - 1):
            u, v = cps[i], cps[i + 1]
            if u[0] <= x <= v[0]:
                return max(u[1] - (x - u[0]), v[1] - (v[0] - x))
        raise ValueError("abscissa outside the envelope")


def cone_points(points) -> ConeDecomposition:
    """All cone points of a finite set, via per-column extremes."""
    pts = np.asarray(list(points), dtype=np.int64)
    if pts.ndim != 2 or len(pts) == 0:
        return ConeDecomposition(pts.reshape(0, 2), pts.reshape(0, 2))
    xs = pts[:, 0]
    ys = pts[:, 1]
    x0, x1 = xs.min(), xs.max()
    ncol = x1 - x0 + 1
    colmax = np.full(ncol, -(1 << 60), dtype=np.int64)
    colmin = np.full(ncol, 1 << 60, dtype=np.int64)
    np.maximum.at(colmax, xs - x0, ys)
    np.minimum.at(colmin, xs - x0, ys)
    occupied = colmax >= colmin
    cols = np.arange(x0, x1 + 1)
    out = []
    for (a, b) in pts:
        d = np.abs(cols - a)
        ok_up = np.all(colmax[occupied] <= b + d[occupied])
        ok_dn = np.all(colmin[occupied] >= b - d[occupied])
        if ok_up and ok_dn:
            out.append((a, b))
    out = sorted(set(map(tuple, out)))
    return ConeDecomposition(pts, np.array(out, dtype=np.int64).reshape(-1, 2))


def is_above(R, C, pad: int = 4) -> bool:
    """Whether R lies in the upper component of the plane minus C.

    C is a connected lattice set (doubled coordinates, primal or dual);
    it is extended by horizontal rays at its leftmost and rightmost
    points, then the complement is flood filled on a half-step grid.
    """
    C = [tuple(p) for p in C]
    R = [tuple(p) for p in R]
    allpts = C + R
    xs = [p[0] for p in allpts]
    ys = [p[1] for p in allpts]
    x0, x1 = min(xs) - pad, max(xs) + pad
    y0, y1 = min(ys) - pad, max(ys) + pad
    W, H = x1 - x0 + 1, y1 - y0 + 1
    blocked = np.zeros((H, W), dtype=bool)
    cset = set(C)
    for (X, Y) in C:
        blocked[Y - y0, X - x0] = True
        for dX, dY in ((2, 0), (0, 2)):
            if (X + dX, Y + dY) in cset:
                blocked[Y + dY // 2 - y0, X + dX // 2 - x0] = True
    minx = min(p[0] for p in C)
    maxx = max(p[0] for p in C)
    for (X, Y) in C:
        if X == minx:
            blocked[Y - y0, : X - x0] = True
        if X == maxx:
            blocked[Y - y0, X - x0:] = True
    free = ~blocked
    labels, _ = ndimage.label(free, structure=FOUR)
    top_label = labels[H - 1, 0] if free[H - 1, 0] else labels[H - 1, W // 2]
    if top_label == 0:
        raise ValueError("top reference point is blocked")
    for (X, Y) in R:
        if not free[Y - y0, X - x0] or labels[Y - y0, X - x0] != top_label:
            return False
    return True


# ---------------------------------------------------------------------------
# per-sample statistics
# ---------------------------------------------------------------------------

@dataclass
class StatsConfig:
    sc_exponent: float = 2.0       # sc_n = ceil(ln^sc_exponent n)
    margin_power: float = 1.0      # strip margin = sc_n ** margin_power
    rho: float = 0.05              # slab cone-point density threshold
    mdist_power: float = 2.0       # entropic repulsion scale: sc_n ** mdist_power

    def sc(self, n: int) -> int:
        return max(1, math.ceil(math.log(max(n, 2)) ** self.sc_exponent))

    def margin(self, n: int) -> int:
        return max(1, math.ceil(self.sc(n) ** self.margin_power))


@dataclass
class SampleStats:
    gap_inner: float
    gap_layer: float
    width_max: float
    mdist: float
    min_slab_cone_density: float
    gcl: bool
    crosses: bool


def sample_stats(envs: dict[str, Envelope], cc: CrossingClusters, n: int,
                 cfg: StatsConfig = StatsConfig()) -> SampleStats:
    gap_inner = envs["1-"][0] - envs["2+"][0]
    gap_layer = envs["1+"][0] - envs["2-"][0]
    width = 0.0
    for s in ("1", "2"):
        width = max(width, float(np.max(envs[s + "+"].values - envs[s + "-"].values)))

    sc = cfg.sc(n)
    margin = cfg.margin(n)
    crosses = cc.crosses and cc.dual_crosses

    mdist = float("nan")
    density = float("nan")
    gcl = False
    if crosses:
        # work in real (undoubled) coordinates
        C = np.array(cc.cluster, dtype=float) / 2.0
        Cp = np.array(cc.dual_cluster, dtype=float) / 2.0
        strip = lambda P: P[(P[:, 0] >= margin - n) & (P[:, 0] <= n - margin)]
        mdist = set_distance(strip(C), strip(Cp))

        dens = []
        for P in (cc.cluster, cc.dual_cluster):
            cd = cone_points(np.array(P, dtype=np.int64))
            xs = cd.cone_points[:, 0] / 2.0 if len(cd.cone_points) else np.array([])
            lo = sc - n
            counts = []
            while lo <= n - 2 * sc:
                counts.append(int(((xs >= lo) & (xs <= lo + sc)).sum()))
                lo += 1
            dens.append(min(counts) / sc if counts else 0.0)
        density = min(dens)

        inside = all(abs(p[1]) <= 2 * n for p in cc.cluster) and \
            all(abs(p[1]) <= 2 * n for p in cc.dual_cluster)
        gcl = (density >= cfg.rho) and (mdist >= sc ** cfg.mdist_power) and inside

    return SampleStats(gap_inner=float(gap_inner), gap_layer=float(gap_layer),
                       width_max=width, mdist=mdist,
                       min_slab_cone_density=float(density), gcl=gcl,
                       crosses=crosses)


def batch_means_ci(series, n_batches: int = 16):
    """(mean, half-width) with batch means: robust to autocorrelation."""
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 2 * n_batches:
        n_batches = max(2, len(x) // 2)
    if len(x) < 4:
        return float(np.mean(x)) if len(x) else float("nan"), float("inf")
    bs = len(x) // n_batches
    means = x[: bs * n_batches].reshape(n_batches, bs).mean(axis=1)
    m = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    return m, 1.96 * se


def integrated_autocorr(series) -> float:
    """Sokal-windowed integrated autocorrelation time estimate."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    N = len(x)
    if N < 8 or np.allclose(x, 0):
        return 1.0
    f = np.fft.rfft(x, n=2 * N)
    acf = np.fft.irfft(f * np.conj(f))[:N].real
    acf /= acf[0]
    tau = 1.0
    for t in range(1, N):
        tau += 2.0 * acf[t]
        if t >= 6.0 * max(tau, 1.0):
            break
    return max(tau, 1.0)


def fit_power_law(sizes, values):
    """(exponent, stderr) of a log-log least squares fit."""
    xs = np.log(np.asarray(sizes, dtype=float))
    ys = np.log(np.asarray(values, dtype=float))
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ys, rcond=None)
    slope = float(coef[0])
    if len(xs) > 2 and res.size:
        dof = len(xs) - 2
        s2 = float(res[0]) / dof
        sx = float(((xs - xs.mean()) ** 2).sum())
        return slope, math.sqrt(s2 / sx)
    return slope, float("nan")
