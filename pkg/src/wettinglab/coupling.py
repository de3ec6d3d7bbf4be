"""The coupling chain: bonds -> loops -> oriented loops -> six-vertex
spins -> (FK bonds, modified Ashkin-Teller pairs).

Geometry.  Every edge of the augmented window carries a lozenge tile; a
tile's four sides each join one primal and one dual corner, and each
side is crossed by exactly one loop arc.  An open primal edge pairs the
sides around each dual corner (arcs hug the edge), a closed one pairs
the sides around each primal corner.  Tracing these pairings across
tiles decomposes the picture into closed loops plus exactly two open
curves, the clipped seam paths.

Orientation.  Exterior loops (enclosing no window vertex: always the
minimal 4-arc loops around isolated far duals) are clockwise; the two
seam paths run from their right stub to their left stub; every interior
loop is clockwise with probability e^lam/sqrt(q), else counter-clockwise.
The stated per-loop threshold e^lam/c exceeds 1 for q > 4 and cannot be
a probability; the orientation weight ratio forces e^lam/sqrt(q), which
is what CouplingThresholds carries.

Spins.  A directed arc crossing a side with primal corner i and dual
corner u imposes sigma_bullet(i) = sigma_circ(u) exactly when i lies to
the left of the travel direction.  The relation graph over one window is
connected and anchored by the frozen half-plane values (+ above, - below),
with sigma_bullet((n+1, 0)) = +1.

Per-tile randomness then maps spins to bond pairs: where the dual spins
disagree the edge is (1,1); where the primal spins disagree it is (0,0);
where both agree, an interior tile draws (1,1)/(0,0)/(0,1) on
[0,1/c), [1/c,2/c), [2/c,1] and a boundary tile draws (1,1)/(0,0) on
[0,1/c_b), [1/c_b,1].  The reverse map to FK splits an agreeing interior
tile into two right-turning arcs when U' < e^{lam/2}/c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .gibbs import MeasureSpec, enumerate_measure, FiniteDistribution, _normalize_logw
from .lattice import DobrushinDomain, UnionFind
from .params import CriticalParams, params_from_q


class EventViolation(Exception):
    pass


@dataclass(frozen=True)
class CouplingThresholds:
    cw_prob: float       # P(interior loop clockwise)
    split_right: float   # P(right-turning split at agreeing interior tiles)
    t_open: float        # U' < t_open          -> (1,1) at interior tiles
    t_mid: float         # t_open <= U' < t_mid -> (0,0), above -> (0,1)
    t_bnd: float         # U' < t_bnd           -> (1,1) at boundary tiles

    @staticmethod
    def from_params(pr: CriticalParams) -> "CouplingThresholds":
        return CouplingThresholds(
            cw_prob=math.exp(pr.lam) / math.sqrt(pr.q),
            split_right=math.exp(pr.lam / 2.0) / pr.c,
            t_open=1.0 / pr.c,
            t_mid=2.0 / pr.c,
            t_bnd=1.0 / pr.c_b,
        )

    def corrupt(self, name: str, delta: float = 0.1) -> "CouplingThresholds":
        return replace(self, **{name: getattr(self, name) + delta})


# ---------------------------------------------------------------------------
# tile grid
# ---------------------------------------------------------------------------

def _cross(a, b) -> int:
    return a[0] * b[1] - a[1] * b[0]


class TileGrid:
    """Tiles of the augmented window plus one frozen ring around it.

    A tile is keyed by its doubled center.  Window tiles correspond to the
    domain's edges (same index); ring tiles carry the frozen wired-split
    state (open unless the primal edge crosses y = -1/2).
    """

    def __init__(self, dom: DobrushinDomain):
        self.dom = dom
        n, m = dom.n, dom.m
        self.centers: list[tuple[int, int]] = []
        self.edge_index: dict[tuple[int, int], int] = {}
        self.frozen_state: dict[tuple[int, int], bool] = {}
        for i, c in enumerate(dom.edge_center):
            self.centers.append(c)
            self.edge_index[c] = i
        # one ring out: edges of B_{n+2,m+2} not among the window edges
        N2, M2 = 2 * (n + 2), 2 * (m + 2)
        for Y in range(-M2, M2 + 1, 2):
            for X in range(-N2, N2 + 1, 2):
                for dX, dY in ((2, 0), (0, 2)):
                    X2, Y2 = X + dX, Y + dY
                    if abs(X2) > N2 or abs(Y2) > M2:
                        continue
                    c = ((X + X2) // 2, (Y + Y2) // 2)
                    if c in self.edge_index:
                        continue
                    # frozen: open unless it is a vertical edge crossing y=-1/2
                    seam = (dX == 0) and min(Y, Y2) == -2 and max(Y, Y2) == 0
                    if c not in self.frozen_state:
                        self.frozen_state[c] = not seam
                        self.centers.append(c)
        self.center_set = set(self.centers)
        # the two outer seam tiles where the clipped paths end
        self.left_stub = (-2 * (n + 2), -1)
        self.right_stub = (2 * (n + 2), -1)

    @staticmethod
    def corners(center):
        X, Y = center
        if Y % 2 == 0:  # horizontal primal edge
            p = ((X - 1, Y), (X + 1, Y))
            d = ((X, Y - 1), (X, Y + 1))
        else:           # vertical primal edge
            p = ((X, Y - 1), (X, Y + 1))
            d = ((X - 1, Y), (X + 1, Y))
        return p, d

    @staticmethod
    def sides(center):
        """Four (primal_corner, dual_corner) sides of the tile."""
        p, d = TileGrid.corners(center)
        return [(pi, dj) for pi in p for dj in d]

    def is_open(self, center, live_bits) -> bool:
        i = self.edge_index.get(center)
        if i is None:
            return self.frozen_state[center]
        dom = self.dom
        if i < dom.n_live:
            return bool(live_bits[i])
        return bool(dom.ring_state[i])


def _pair_within(center, side, open_edge):
    """The side paired with `side` by the tile's two arcs."""
    p, d = TileGrid.corners(center)
    pi, dj = side
    if open_edge:
        # arcs hug the primal edge: pair the sides sharing a dual corner
        other_p = p[1] if pi == p[0] else p[0]
        return (other_p, dj)
    other_d = d[1] if dj == d[0] else d[0]
    return (pi, other_d)


def _neighbor(center, side):
    pi, dj = side
    return (pi[0] + dj[0] - center[0], pi[1] + dj[1] - center[1])


@dataclass
class Curve:
    """One traced arc component: side crossings in traversal order.

    crossings[k] = (side, dir) with dir the doubled travel vector at the
    crossing.  Closed curves wrap around; open curves start and end at
    grid-boundary sides.
    """

    crossings: list
    closed: bool

    def reversed(self) -> "Curve":
        return Curve([(s, (-d[0], -d[1])) for (s, d) in reversed(self.crossings)], self.closed)

    def signed_area2(self) -> int:
        """Twice the shoelace area of the crossing-midpoint polygon
        (midpoints in quadrupled coordinates, so the value is scaled, but
        only the sign is used)."""
        pts = [(s[0][0] + s[1][0], s[0][1] + s[1][1]) for (s, _) in self.crossings]
        a = 0
        for i in range(len(pts)):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % len(pts)]
            a += x0 * y1 - x1 * y0
        return a

    def enclosed_vertex(self):
        """For 4-crossing loops: the unique enclosed lattice vertex (doubled)."""
        sx = sum(s[0][0] + s[1][0] for (s, _) in self.crossings)
        sy = sum(s[0][1] + s[1][1] for (s, _) in self.crossings)
        if sx % 8 or sy % 8:
            raise AssertionError("4-arc loop centroid is not a lattice vertex")
        return (sx // 8, sy // 8)


@dataclass
class LoopConfig:
    """Unoriented decomposition: closed loops plus the two seam paths."""

    grid: TileGrid
    live_bits: np.ndarray
    loops: list          # list[Curve], closed
    interior: list       # parallel bools: encloses a vertex of B u B'
    paths: list          # the two open curves, upper first

    @property
    def n_interior_loops(self) -> int:
        return int(sum(self.interior))


def loops_from_bonds(live_bits, grid: TileGrid) -> LoopConfig:
    """Trace the arc decomposition of a window config.

    Raises EventViolation when the two clipped seam paths do not run
    boundary-to-boundary (equivalently the two exteriors are joined).
    """
    dom = grid.dom
    live_bits = np.asarray(live_bits, dtype=bool)
    open_of = {c: grid.is_open(c, live_bits) for c in grid.centers}

    seen = set()
    loops, paths = [], []

    def walk_from(center, side):
        crossings = []
        start_key = (min(side[0], side[1]), max(side[0], side[1]))
        cur, s = center, side
        while True:
            seen.add((min(s[0], s[1]), max(s[0], s[1])))
            s2 = _pair_within(cur, s, open_of[cur])
            seen.add((min(s2[0], s2[1]), max(s2[0], s2[1])))
            nxt = _neighbor(cur, s2)
            d = (nxt[0] - cur[0], nxt[1] - cur[1])
            crossings.append((s2, d))
            if nxt not in grid.center_set:
                return crossings, False
            if (min(s2[0], s2[1]), max(s2[0], s2[1])) == start_key:
                # for closed loops the exit through the starting side ends the walk
                return crossings, True
            cur, s = nxt, s2

    # open curves first: start from each grid-boundary side, walking inward
    boundary_starts = []
    for c in grid.centers:
        for s in TileGrid.sides(c):
            if _neighbor(c, s) not in grid.center_set:
                boundary_starts.append((c, s))
    for c, s in boundary_starts:
        key = (min(s[0], s[1]), max(s[0], s[1]))
        if key in seen:
            continue
        seen.add(key)
        entry_dir = (c[0] - (s[0][0] + s[1][0] - c[0]), c[1] - (s[0][1] + s[1][1] - c[1]))
        crossings, closed = walk_from(c, s)
        if closed:
            raise AssertionError("boundary-started walk closed on itself")
        full = [(s, entry_dir)] + crossings
        paths.append(Curve(full, False))

    # remaining components are closed loops
    for c in grid.centers:
        for s in TileGrid.sides(c):
            key = (min(s[0], s[1]), max(s[0], s[1]))
            if key in seen:
                continue
            crossings, closed = walk_from(c, s)
            if not closed:
                raise AssertionError("interior-started walk escaped the grid")
            loops.append(Curve(crossings, True))

    # classify loops: a 4-arc loop is interior iff its enclosed vertex lies
    # in B u B'; longer loops always enclose window structure (the frozen
    # exterior only carries minimal loops around isolated far duals)
    interior = []
    n, m = dom.n, dom.m
    for lp in loops:
        if len(lp.crossings) == 4:
            X, Y = lp.enclosed_vertex()
            if X % 2 == 0:
                inside = abs(X) <= 2 * n and abs(Y) <= 2 * m
            else:
                inside = abs(X) <= 2 * n + 1 and abs(Y) <= 2 * m + 1
        else:
            inside = True
        interior.append(inside)

    # the two clipped seam paths run stub-to-stub; a path that U-turns back
    # to the same side signals an upper-lower exterior connection
    seam_paths = []
    for p in paths:
        s0 = _seam_end_sign(p.crossings[0][0], grid)
        s1 = _seam_end_sign(p.crossings[-1][0], grid)
        if s0 == 0 and s1 == 0:
            continue
        if s0 * s1 != -1:
            raise EventViolation("seam path does not run boundary to boundary")
        seam_paths.append(p)
    if len(seam_paths) != 2:
        raise EventViolation(
            f"expected 2 boundary-to-boundary seam paths, found {len(seam_paths)}")
    # orient both from the right stub to the left stub
    oriented = []
    for p in seam_paths:
        first_side = p.crossings[0][0]
        if (first_side[0][0] + first_side[1][0]) < 0:
            p = p.reversed()
        oriented.append(p)
    # upper path first (larger y at its right end)
    oriented.sort(key=lambda p: -(p.crossings[0][0][0][1] + p.crossings[0][0][1][1]))

    return LoopConfig(grid=grid, live_bits=live_bits, loops=loops,
                      interior=interior, paths=oriented)


def _tiles_of_side(side):
    """Centers of the two tiles sharing a side (one may be off-grid).

    The centers are the reflections of each other through the side
    midpoint, at (pi+dj +/- rot90(pi-dj))/2.
    """
    pi, dj = side
    dx, dy = pi[0] - dj[0], pi[1] - dj[1]
    mx, my = pi[0] + dj[0], pi[1] + dj[1]
    r1 = ((mx + dy) // 2, (my - dx) // 2)
    r2 = ((mx - dy) // 2, (my + dx) // 2)
    return (r1, r2)


def _seam_end_sign(curve_end_side, grid: TileGrid) -> int:
    """+1/-1 when a path end sits just beyond the right/left seam stub, else 0."""
    pi, dj = curve_end_side
    n = grid.dom.n
    if dj[1] == -1 and abs(dj[0]) == 2 * n + 5:
        return 1 if dj[0] > 0 else -1
    return 0


@dataclass
class OrientedLoops:
    loop_cfg: LoopConfig
    curves: list        # every curve (loops + paths) with direction resolved
    cw_flags: list      # for interior loops, in loop order: True = clockwise


def orient_loops(cfg: LoopConfig, uniforms, thresholds: CouplingThresholds) -> OrientedLoops:
    """Resolve directions: exterior loops clockwise, seam paths right-to-left,
    interior loop k clockwise iff uniforms[k] < cw_prob.

    `uniforms` may be an array (one entry per interior loop, in canonical
    loop order) or an explicit list of booleans via `cw_flags=`-style use
    in enumeration (pass a boolean array).
    """
    uniforms = np.asarray(uniforms)
    curves = []
    cw_flags = []
    ui = 0
    for lp, inside in zip(cfg.loops, cfg.interior):
        area = lp.signed_area2()
        traversal_ccw = area > 0
        if inside:
            if uniforms.dtype == bool:
                cw = bool(uniforms[ui])
            else:
                cw = bool(uniforms[ui] < thresholds.cw_prob)
            ui += 1
        else:
            cw = True
        cw_flags.append(cw)
        want_ccw = not cw
        curves.append(lp if traversal_ccw == want_ccw else lp.reversed())
    curves.extend(cfg.paths)  # already right-to-left
    return OrientedLoops(loop_cfg=cfg, curves=curves, cw_flags=cw_flags)


def canonical_loop_order(cfg: LoopConfig) -> list[int]:
    """Interior-loop indices sorted by their lexicographically minimal side."""
    items = []
    k = 0
    for i, (lp, inside) in enumerate(zip(cfg.loops, cfg.interior)):
        if inside:
            mn = min((s for (s, _) in lp.crossings))
            items.append((mn, k))
            k += 1
    items.sort()
    return [k for (_, k) in items]


# ---------------------------------------------------------------------------
# spins
# ---------------------------------------------------------------------------

@dataclass
class SpinPair:
    dom: DobrushinDomain
    primal: np.ndarray  # int8 over dom.verts
    dual: np.ndarray    # int8 over dom.dual_verts

    def key(self) -> int:
        k = 0
        for i, v in enumerate(self.primal):
            if v > 0:
                k |= 1 << i
        off = len(self.primal)
        for i, v in enumerate(self.dual):
            if v > 0:
                k |= 1 << (off + i)
        return k

    @staticmethod
    def from_key(key: int, dom: DobrushinDomain) -> "SpinPair":
        npr = dom.n_verts
        primal = np.array([1 if (key >> i) & 1 else -1 for i in range(npr)], dtype=np.int8)
        dual = np.array([1 if (key >> (npr + i)) & 1 else -1 for i in range(dom.n_dual_verts)], dtype=np.int8)
        return SpinPair(dom, primal, dual)

    def flipped(self) -> "SpinPair":
        return SpinPair(self.dom, -self.primal, -self.dual)


def frozen_spin(dom: DobrushinDomain, pt: tuple[int, int]) -> int | None:
    """The Dobrushin-frozen value at a doubled point, None if free."""
    X, Y = pt
    n, m = dom.n, dom.m
    if X % 2 == 0:
        if abs(X) <= 2 * n and abs(Y) <= 2 * m:
            return None
        return 1 if Y >= 0 else -1
    if abs(X) <= 2 * n + 1 and abs(Y) <= 2 * m + 1:
        return None
    return 1 if Y > 0 else -1


def spins_from_orientations(ol: OrientedLoops) -> SpinPair:
    """Propagate the left-of-arc relation; anchored by the frozen boundary."""
    dom = ol.loop_cfg.grid.dom
    win = set(dom.edge_center)
    relations = []  # (primal point, dual point, equal?)
    for curve in ol.curves:
        for (s, d) in curve.crossings:
            if not any(t in win for t in _tiles_of_side(s)):
                continue
            pi, dj = s
            equal = _cross(d, (pi[0] - dj[0], pi[1] - dj[1])) > 0
            relations.append((pi, dj, equal))

    primal = np.zeros(dom.n_verts, dtype=np.int8)
    dual = np.zeros(dom.n_dual_verts, dtype=np.int8)

    # node ids: primal then dual
    npr = dom.n_verts
    adj: dict[int, list[tuple[int, bool]]] = {}
    for pi, dj, eq in relations:
        a = dom.vert_index[pi]
        b = npr + dom.dual_vert_index[dj]
        adj.setdefault(a, []).append((b, eq))
        adj.setdefault(b, []).append((a, eq))

    val = np.zeros(npr + dom.n_dual_verts, dtype=np.int8)
    # seed every frozen vertex
    stack = []
    for pt, i in dom.vert_index.items():
        f = frozen_spin(dom, pt)
        if f is not None:
            val[i] = f
            stack.append(i)
    for pt, i in dom.dual_vert_index.items():
        f = frozen_spin(dom, pt)
        if f is not None:
            val[npr + i] = f
            stack.append(npr + i)
    while stack:
        x = stack.pop()
        for (y, eq) in adj.get(x, ()):  # noqa: B905
            want = val[x] if eq else -val[x]
            if val[y] == 0:
                val[y] = want
                stack.append(y)
            elif val[y] != want:
                raise AssertionError("inconsistent spin relations (ice rule broken)")
    if (val == 0).any():
        raise AssertionError("spin relation graph left free vertices undetermined")
    primal[:] = val[:npr]
    dual[:] = val[npr:]
    # root convention: the primal spin at (n+1, 0), frozen to +1, holds
    assert primal[dom.vert_index[dom.v_R]] == 1
    return SpinPair(dom, primal, dual)


def tile_agreements(sp: SpinPair):
    """(primal_agrees, dual_agrees) over the domain's edge/tile index."""
    dom = sp.dom
    pa = sp.primal[dom.edge_u] == sp.primal[dom.edge_v]
    da = sp.dual[dom.dual_edge_u] == sp.dual[dom.dual_edge_v]
    if not np.all(pa | da):
        raise ValueError("ice rule violated: both spin pairs disagree at a tile")
    return pa, da


_TYPE_BY_FLOWS = {
    # in/out pattern per compass side (NE, NW, SW, SE): True = outgoing
    (True, False, False, True): 1,   # both arcs rightward
    (False, True, True, False): 2,   # both leftward
    (True, True, False, False): 3,   # both upward
    (False, False, True, True): 4,   # both downward
    (True, False, True, False): 5,   # in NW & SE
    (False, True, False, True): 6,   # in NE & SW
}


def tile_types(sp: SpinPair) -> np.ndarray:
    """Six-vertex type (1..6) per tile, from the spin-induced arrow flows."""
    dom = sp.dom
    out = np.zeros(dom.n_edges, dtype=np.int8)
    for t in range(dom.n_edges):
        c = dom.edge_center[t]
        flows = _side_flows(sp, c)
        pattern = tuple(flows[q] for q in ("NE", "NW", "SW", "SE"))
        out[t] = _TYPE_BY_FLOWS[pattern]
    return out


def _side_vectors(sp: SpinPair, center):
    """Arc travel vector at each side of a tile, inferred from the spins.

    Equal spins across a side put the primal corner on the left of the
    travel direction; that pins the direction along +/-(other - center).
    """
    dom = sp.dom
    vecs = {}
    for s in TileGrid.sides(center):
        pi, dj = s
        equal = sp.primal[dom.vert_index[pi]] == sp.dual[dom.dual_vert_index[dj]]
        t1, t2 = _tiles_of_side(s)
        other = t1 if t2 == center else t2
        d_out = (other[0] - center[0], other[1] - center[1])
        left_of_out = _cross(d_out, (pi[0] - dj[0], pi[1] - dj[1])) > 0
        vecs[s] = d_out if (left_of_out == equal) else (-d_out[0], -d_out[1])
    return vecs


def _side_flows(sp: SpinPair, center) -> dict[str, bool]:
    """True = arc flows out of this tile, per compass side."""
    vecs = _side_vectors(sp, center)
    flows = {}
    for s, v in vecs.items():
        pi, dj = s
        t1, t2 = _tiles_of_side(s)
        other = t1 if t2 == center else t2
        outgoing = v == (other[0] - center[0], other[1] - center[1])
        mx = (pi[0] + dj[0]) - 2 * center[0]
        my = (pi[1] + dj[1]) - 2 * center[1]
        quad = ("N" if my > 0 else "S") + ("E" if mx > 0 else "W")
        flows[quad] = outgoing
    return flows


# ---------------------------------------------------------------------------
# spins -> bond pairs / bonds
# ---------------------------------------------------------------------------

def matrc_from_spins(sp: SpinPair, uniforms, thresholds: CouplingThresholds):
    """(omega_tau, omega_tautau) over all window edges.

    `uniforms` is indexed by tile = edge index; entries are consumed only
    at tiles where both spin pairs agree.
    """
    dom = sp.dom
    pa, da = tile_agreements(sp)
    tau = np.zeros(dom.n_edges, dtype=bool)
    tautau = np.zeros(dom.n_edges, dtype=bool)
    both = pa & da
    tau[~da] = tautau[~da] = True      # dual disagreement -> (1,1)
    # primal disagreement -> (0,0): already zeros
    for t in np.nonzero(both)[0]:
        u = uniforms[t]
        if t < dom.n_live:
            if u < thresholds.t_open:
                tau[t] = tautau[t] = True
            elif u < thresholds.t_mid:
                pass
            else:
                tautau[t] = True
        else:
            if u < thresholds.t_bnd:
                tau[t] = tautau[t] = True
    return tau, tautau


def fk_from_spins(sp: SpinPair, uniforms, thresholds: CouplingThresholds) -> np.ndarray:
    """Reconstruct the live FK config; boundary tiles must match the frozen ring."""
    dom = sp.dom
    pa, da = tile_agreements(sp)
    out = np.zeros(dom.n_edges, dtype=bool)
    out[~da] = True
    for t in np.nonzero(pa & da)[0]:
        right = uniforms[t] < thresholds.split_right
        open_right = _open_pairing_turns_right(sp, t)
        if t >= dom.n_live:
            # frozen tiles take the forced pairing
            out[t] = dom.ring_state[t]
            continue
        out[t] = (right == open_right)
    if not np.array_equal(out[dom.n_live:], dom.ring_state[dom.n_live:]):
        raise AssertionError("reconstruction disagrees with the frozen ring")
    return out[: dom.n_live]


def _open_pairing_turns_right(sp: SpinPair, t: int) -> bool:
    """Whether the open-edge arc pairing at tile t turns right (clockwise).

    Only meaningful at tiles where both spin pairs agree (the two-valued
    split); there the two pairings are right- and left-turning and the
    two arcs of one pairing always turn the same way.
    """
    dom = sp.dom
    center = dom.edge_center[t]
    _, d = TileGrid.corners(center)
    vecs = _side_vectors(sp, center)

    def outgoing(s):
        t1, t2 = _tiles_of_side(s)
        other = t1 if t2 == center else t2
        return vecs[s] == (other[0] - center[0], other[1] - center[1])

    turns = []
    for dj in d:  # open pairing: arcs join the two sides at each dual corner
        group = [s for s in vecs if s[1] == dj]
        outs = [outgoing(s) for s in group]
        if outs[0] == outs[1]:
            raise AssertionError("invalid flow pattern within a pairing group")
        s_in = group[1] if outs[0] else group[0]
        s_out = group[0] if outs[0] else group[1]
        turns.append(_cross(vecs[s_in], vecs[s_out]))
    if turns[0] == 0 or (turns[0] > 0) != (turns[1] > 0):
        raise AssertionError("pairing arcs disagree on turn direction")
    return turns[0] < 0


# ---------------------------------------------------------------------------
# exact chain enumeration and verification
# ---------------------------------------------------------------------------

def spin_measure(dom: DobrushinDomain, pr: CriticalParams) -> FiniteDistribution:
    """Exact six-vertex spin law under double Dobrushin conditions.

    Enumerates the free spins (primal on B, dual on B'), imposes the ice
    rule on all window tiles, and weighs c^{#56 interior} c_b^{#56 ring}.
    """
    n, m = dom.n, dom.m
    free_primal = [i for pt, i in dom.vert_index.items() if frozen_spin(dom, pt) is None]
    free_dual = [i for pt, i in dom.dual_vert_index.items() if frozen_spin(dom, pt) is None]
    base_p = np.zeros(dom.n_verts, dtype=np.int8)
    base_d = np.zeros(dom.n_dual_verts, dtype=np.int8)
    for pt, i in dom.vert_index.items():
        f = frozen_spin(dom, pt)
        base_p[i] = f if f is not None else 0
    for pt, i in dom.dual_vert_index.items():
        f = frozen_spin(dom, pt)
        base_d[i] = f if f is not None else 0

    kp, kd = len(free_primal), len(free_dual)
    keys, logw = [], []
    lc, lcb = math.log(pr.c), math.log(pr.c_b)
    for bits in range(1 << (kp + kd)):
        primal = base_p.copy()
        dual = base_d.copy()
        for j, i in enumerate(free_primal):
            primal[i] = 1 if (bits >> j) & 1 else -1
        for j, i in enumerate(free_dual):
            dual[i] = 1 if (bits >> (kp + j)) & 1 else -1
        sp = SpinPair(dom, primal, dual)
        try:
            pa, da = tile_agreements(sp)
        except ValueError:
            continue
        both = pa & da
        n56i = int(both[: dom.n_live].sum())
        n56b = int(both[dom.n_live:].sum())
        keys.append(sp.key())
        logw.append(n56i * lc + n56b * lcb)
    dist = _normalize_logw(np.array(keys, dtype=np.uint64), np.array(logw))
    dist.n_bits = dom.n_verts + dom.n_dual_verts
    return dist


def fk_source_measure(dom: DobrushinDomain, q: float) -> FiniteDistribution:
    spec = MeasureSpec(kind="FK", q=q, nm=(dom.n, dom.m),
                       boundary="wired-wired", conditioning="no-updown")
    spec._domain = dom
    return enumerate_measure(spec)


def chain_spin_distribution(dom: DobrushinDomain, q: float,
                            thresholds: CouplingThresholds | None = None,
                            fk_dist: FiniteDistribution | None = None) -> FiniteDistribution:
    """Pushforward of (FK conditioned) x orientation coins onto spin pairs."""
    pr = params_from_q(q)
    thr = thresholds or CouplingThresholds.from_params(pr)
    if fk_dist is None:
        fk_dist = fk_source_measure(dom, q)
    grid = TileGrid(dom)
    acc: dict[int, float] = {}
    for key, prob in zip(fk_dist.keys, fk_dist.probs):
        live = np.array([(int(key) >> i) & 1 for i in range(dom.n_live)], dtype=bool)
        cfg = loops_from_bonds(live, grid)
        L = cfg.n_interior_loops
        for orient_bits in range(1 << L):
            flags = np.array([(orient_bits >> i) & 1 == 1 for i in range(L)], dtype=bool)
            p_orient = 1.0
            for f in flags:
                p_orient *= thr.cw_prob if f else (1.0 - thr.cw_prob)
            ol = orient_loops(cfg, flags, thr)
            sp = spins_from_orientations(ol)
            k = sp.key()
            acc[k] = acc.get(k, 0.0) + float(prob) * p_orient
    keys = np.array(list(acc.keys()), dtype=np.uint64)
    probs = np.array([acc[int(k)] for k in keys])
    dist = FiniteDistribution(dom.n_verts + dom.n_dual_verts, keys, probs)
    return dist


def chain_fk_distribution(spin_dist: FiniteDistribution, dom: DobrushinDomain,
                          thresholds: CouplingThresholds) -> FiniteDistribution:
    """Pushforward of spins x split coins onto live FK configs."""
    acc: dict[int, float] = {}
    s = thresholds.split_right
    for key, prob in zip(spin_dist.keys, spin_dist.probs):
        sp = SpinPair.from_key(int(key), dom)
        pa, da = tile_agreements(sp)
        base = 0
        for t in np.nonzero(~da[: dom.n_live])[0]:
            base |= 1 << int(t)
        branch = []
        for t in np.nonzero((pa & da)[: dom.n_live])[0]:
            open_right = _open_pairing_turns_right(sp, int(t))
            bit_right = 1 << int(t) if open_right else 0
            bit_left = 0 if open_right else 1 << int(t)
            branch.append((bit_right, bit_left))
        keys = np.array([base], dtype=np.uint64)
        probs = np.array([float(prob)])
        for bit_right, bit_left in branch:
            keys = np.concatenate([keys | np.uint64(bit_right), keys | np.uint64(bit_left)])
            probs = np.concatenate([probs * s, probs * (1.0 - s)])
        for k, p in zip(keys, probs):
            acc[int(k)] = acc.get(int(k), 0.0) + float(p)
    keys = np.array(list(acc.keys()), dtype=np.uint64)
    probs = np.array([acc[int(k)] for k in keys])
    return FiniteDistribution(dom.n_live, keys, probs)


def chain_matrc_distribution(spin_dist: FiniteDistribution, dom: DobrushinDomain,
                             thresholds: CouplingThresholds) -> FiniteDistribution:
    """Pushforward of spins x tile coins onto (tau, tautau) pairs.

    Keys pack tau in the low n_edges bits, the discrepancy set above,
    matching the mATRC enumeration layout.
    """
    thr = thresholds
    all_keys = []
    all_probs = []
    for key, prob in zip(spin_dist.keys, spin_dist.probs):
        sp = SpinPair.from_key(int(key), dom)
        pa, da = tile_agreements(sp)
        base = 0
        for t in np.nonzero(~da)[0]:
            base |= 1 << int(t)
        keys = np.array([base], dtype=np.uint64)
        probs = np.array([float(prob)])
        for t in np.nonzero(pa & da)[0]:
            t = int(t)
            if t < dom.n_live:
                p11 = thr.t_open
                p00 = thr.t_mid - thr.t_open
                p01 = 1.0 - thr.t_mid
                keys = np.concatenate([
                    keys | np.uint64(1 << t),
                    keys,
                    keys | np.uint64(1 << (dom.n_edges + t)),
                ])
                probs = np.concatenate([probs * p11, probs * p00, probs * p01])
            else:
                keys = np.concatenate([keys | np.uint64(1 << t), keys])
                probs = np.concatenate([probs * thr.t_bnd, probs * (1.0 - thr.t_bnd)])
        all_keys.append(keys)
        all_probs.append(probs)
    keys = np.concatenate(all_keys)
    probs = np.concatenate(all_probs)
    uk, inv = np.unique(keys, return_inverse=True)
    pr_sum = np.bincount(inv, weights=probs, minlength=len(uk))
    return FiniteDistribution(2 * dom.n_edges, uk, pr_sum)


def verify_chain(n: int, m: int, q: float,
                 thresholds: CouplingThresholds | None = None) -> dict:
    """TV distance between each chain pushforward and its exact target.

    Targets: the six-vertex spin law, the conditioned FK law, and the
    crossing-conditioned modified ATRC law.  All three are at machine
    precision when the thresholds are the coupled ones.
    """
    from .lattice import build_domain
    dom = build_domain(n, m)
    pr = params_from_q(q)
    thr = thresholds or CouplingThresholds.from_params(pr)

    fk_dist = fk_source_measure(dom, q)
    spin_chain = chain_spin_distribution(dom, q, thr, fk_dist)
    spin_exact = spin_measure(dom, pr)
    tv_spin = spin_chain.tv(spin_exact)

    fk_back = chain_fk_distribution(spin_chain, dom, thr)
    tv_fk = fk_back.tv(fk_dist)

    matrc_chain = chain_matrc_distribution(spin_chain, dom, thr)
    spec = MeasureSpec(kind="mATRC", q=q, nm=(n, m), conditioning="crossings")
    spec._domain = dom
    matrc_exact = enumerate_measure(spec)
    tv_matrc = matrc_chain.tv(matrc_exact)

    return {
        "n": n, "m": m, "q": q,
        "thresholds": thr,
        "tv_spin": tv_spin,
        "tv_fk": tv_fk,
        "tv_matrc": tv_matrc,
        "spin_support": spin_chain.support_size,
        "matrc_support": matrc_chain.support_size,
    }


# ---------------------------------------------------------------------------
# sampling mode
# ---------------------------------------------------------------------------

@dataclass
class ChainSample:
    spins: SpinPair
    tau: np.ndarray
    tautau: np.ndarray


def sample_chain(live_bits, grid: TileGrid, thresholds: CouplingThresholds,
                 rng) -> ChainSample:
    """One pass of the coupled maps for a sampled FK config.

    Loop uniforms are consumed in canonical loop order (lexicographically
    minimal side), tile uniforms in canonical edge order, so the output
    is reproducible given (config, seed).
    """
    cfg = loops_from_bonds(live_bits, grid)
    L = cfg.n_interior_loops
    us = rng.random(L)
    order = canonical_loop_order(cfg)
    u_by_loop = np.empty(L)
    for rank, k in enumerate(order):
        u_by_loop[k] = us[rank]
    ol = orient_loops(cfg, u_by_loop, thresholds)
    sp = spins_from_orientations(ol)
    u_tiles = rng.random(grid.dom.n_edges)
    tau, tautau = matrc_from_spins(sp, u_tiles, thresholds)
    return ChainSample(spins=sp, tau=tau, tautau=tautau)
