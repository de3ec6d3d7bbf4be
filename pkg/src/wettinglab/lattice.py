"""Primal/dual square-lattice geometry and rectangular Dobrushin domains.

Coordinates are stored doubled (multiplied by 2) so that primal vertices
(both coordinates even), dual vertices (both odd) and tile centers (mixed
parity) share one exact integer type.  A point (X, Y) here is the plane
point (X/2, Y/2).

Domain conventions for given half-sides n, m:

    B      = {-n..n} x {-m..m}                       (primal box)
    E      = edges inside B plus edges leaving B     (the live edges)
    E_b    = boundary ring, edges of B_{n+1,m+1} not in E; frozen under
             the wired-wired split boundary condition (open except the
             two verticals crossing y = -1/2 at x = +-(n+1))
    Ebar   = E + E_b = all edges of B_{n+1,m+1}
    tiles  A <-> Ebar (interior tiles <-> E, boundary tiles <-> E_b)

Canonical edge indexing: the edges of E in row-major order of their
centers (Y then X, ascending), followed by the edges of E_b in the same
order.  Bit-vector configs are indexed by this ordering.

Graph views for cluster counting:

    K        spanning subgraph of B_{n+1,m+1}
    K1       K with the upper / lower inner-boundary rings each glued
             to a single vertex
    dual-K   spanning subgraph of the dual window (config bits are dual
             edge states, aligned with the primal edge index)
    dual-K1  same with the dual ring glued per half-plane
    G-wired  vertex set V_{n,m} = B + exterior neighbours, with the
             exterior neighbours in each half-plane wired together
             (computes kappa_V of the infinite-volume extension under
             the wired-wired boundary condition)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class CapacityError(Exception):
    pass


# ---------------------------------------------------------------------------
# union-find: path halving + union by size
# ---------------------------------------------------------------------------

class UnionFind:
    __slots__ = ("parent", "size", "count")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True


def is_primal(pt: tuple[int, int]) -> bool:
    return pt[0] % 2 == 0 and pt[1] % 2 == 0


def is_dual(pt: tuple[int, int]) -> bool:
    return pt[0] % 2 != 0 and pt[1] % 2 != 0


def dual_edge(e: tuple[tuple[int, int], tuple[int, int]]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Dual of an edge given by its doubled endpoint pair; an involution."""
    (x0, y0), (x1, y1) = e
    cx, cy = (x0 + x1) // 2, (y0 + y1) // 2
    if y0 == y1:  # horizontal -> vertical dual
        return ((cx, cy - 1), (cx, cy + 1))
    if x0 == x1:  # vertical -> horizontal dual
        return ((cx - 1, cy), (cx + 1, cy))
    raise ValueError(f"not an axis-aligned unit edge: {e}")


@dataclass
class DobrushinDomain:
    """Finite window for the wired-wired split boundary condition."""

    n: int
    m: int

    # primal vertices of B_{n+1,m+1}, doubled coords, row-major
    verts: list[tuple[int, int]] = field(default_factory=list, repr=False)
    vert_index: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)

    # edges of Ebar: endpoint vertex ids, centers, flags
    edge_u: np.ndarray = field(default=None, repr=False)
    edge_v: np.ndarray = field(default=None, repr=False)
    edge_center: list[tuple[int, int]] = field(default_factory=list, repr=False)
    edge_horizontal: np.ndarray = field(default=None, repr=False)
    edge_is_ring: np.ndarray = field(default=None, repr=False)     # in E_b
    ring_state: np.ndarray = field(default=None, repr=False)       # frozen xi_{1/1} on E_b edges (dtype bool, aligned with full index)

    # dual window
    dual_verts: list[tuple[int, int]] = field(default_factory=list, repr=False)
    dual_vert_index: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)
    dual_edge_u: np.ndarray = field(default=None, repr=False)
    dual_edge_v: np.ndarray = field(default=None, repr=False)

    # identification groups: group id per vertex, -1 = not identified
    k1_group: np.ndarray = field(default=None, repr=False)
    dual_k1_group: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n, m = self.n, self.m
        if n < 0 or m < 0:
            raise ValueError("n, m must be nonnegative")
        N, M = n + 1, m + 1

        verts = [(2 * x, 2 * y) for y in range(-M, M + 1) for x in range(-N, N + 1)]
        self.verts = verts
        self.vert_index = {v: i for i, v in enumerate(verts)}

        # all edges of B_{n+1,m+1}; split into E (live) and E_b (ring)
        live, ring = [], []
        for (X, Y) in verts:
            for (dX, dY) in ((2, 0), (0, 2)):
                X2, Y2 = X + dX, Y + dY
                if (X2, Y2) not in self.vert_index:
                    continue
                a_in = abs(X) <= 2 * n and abs(Y) <= 2 * m
                b_in = abs(X2) <= 2 * n and abs(Y2) <= 2 * m
                e = ((X, Y), (X2, Y2))
                (live if (a_in or b_in) else ring).append(e)
        key = lambda e: ((e[0][1] + e[1][1]), (e[0][0] + e[1][0]))
        live.sort(key=key)
        ring.sort(key=key)
        edges = live + ring
        self.n_live = len(live)

        self.edge_u = np.array([self.vert_index[e[0]] for e in edges], dtype=np.int32)
        self.edge_v = np.array([self.vert_index[e[1]] for e in edges], dtype=np.int32)
        self.edge_center = [((e[0][0] + e[1][0]) // 2, (e[0][1] + e[1][1]) // 2) for e in edges]
        self.edge_horizontal = np.array([e[0][1] == e[1][1] for e in edges], dtype=bool)
        self.edge_is_ring = np.zeros(len(edges), dtype=bool)
        self.edge_is_ring[self.n_live:] = True

        # frozen wired-wired states on the ring: open unless the edge
        # crosses y = -1/2 (the two seam verticals at x = +-(n+1))
        rs = np.zeros(len(edges), dtype=bool)
        for i in range(self.n_live, len(edges)):
            (X0, Y0), (X1, Y1) = edges[i]
            crosses_seam = (X0 == X1) and min(Y0, Y1) == -2 and max(Y0, Y1) == 0
            rs[i] = not crosses_seam
        self.ring_state = rs
        self.edges = edges

        # dual window: endpoints of the duals of Ebar
        dual_pts: dict[tuple[int, int], int] = {}
        du, dv = [], []
        for e in edges:
            a, b = dual_edge(e)
            for p in (a, b):
                if p not in dual_pts:
                    dual_pts[p] = len(dual_pts)
            du.append(dual_pts[a])
            dv.append(dual_pts[b])
        self.dual_vert_index = dual_pts
        self.dual_verts = [None] * len(dual_pts)
        for p, i in dual_pts.items():
            self.dual_verts[i] = p
        self.dual_edge_u = np.array(du, dtype=np.int32)
        self.dual_edge_v = np.array(dv, dtype=np.int32)

        # K^1 identifications: inner boundary of B_{n+1,m+1} split at y=-1/2
        g = np.full(len(verts), -1, dtype=np.int32)
        for (X, Y), i in self.vert_index.items():
            if abs(X) == 2 * N or abs(Y) == 2 * M:
                g[i] = 0 if Y >= 0 else 1
        self.k1_group = g

        # (K')^1 identifications: dual ring split at y = 0
        gd = np.full(len(dual_pts), -1, dtype=np.int32)
        for (X, Y), i in dual_pts.items():
            if abs(X) == 2 * N + 1 or abs(Y) == 2 * M + 1:
                gd[i] = 0 if Y > 0 else 1
        self.dual_k1_group = gd

        # marked vertices (doubled)
        self.v_L = (-2 * (n + 1), 0)
        self.v_R = (2 * (n + 1), 0)
        self.vp_L = (-2 * n - 3, -1)
        self.vp_R = (2 * n + 3, -1)

        # G-wired view: vertices of V_{n,m} plus two wired hubs
        inner = [i for i, (X, Y) in enumerate(verts) if self._in_V(X, Y)]
        self._g_map = np.full(len(verts), -1, dtype=np.int32)
        for j, i in enumerate(inner):
            self._g_map[i] = j
        self.n_V = len(inner)
        top, bot = self.n_V, self.n_V + 1
        self._g_edge_u = self._g_map[self.edge_u[: self.n_live]].astype(np.int32)
        self._g_edge_v = self._g_map[self.edge_v[: self.n_live]].astype(np.int32)
        if (self._g_edge_u < 0).any() or (self._g_edge_v < 0).any():
            raise AssertionError("live edge endpoint outside V_{n,m}")
        # wiring edges: exterior V-members glued to the hub of their half-plane
        wire_u, wire_v = [], []
        for i, (X, Y) in enumerate(verts):
            if self._g_map[i] >= 0 and not self._in_B(X, Y):
                wire_u.append(int(self._g_map[i]))
                wire_v.append(top if Y >= 0 else bot)
        self._g_wire_u = np.array(wire_u, dtype=np.int32)
        self._g_wire_v = np.array(wire_v, dtype=np.int32)

    def _in_B(self, X, Y) -> bool:
        return abs(X) <= 2 * self.n and abs(Y) <= 2 * self.m

    def _in_V(self, X, Y) -> bool:
        # V_{n,m} = B plus exterior endpoints of live edges
        if self._in_B(X, Y):
            return True
        for dX, dY in ((2, 0), (-2, 0), (0, 2), (0, -2)):
            if self._in_B(X + dX, Y + dY):
                return True
        return False

    # -- sizes ---------------------------------------------------------------
    @property
    def n_edges(self) -> int:
        return len(self.edge_center)

    @property
    def n_verts(self) -> int:
        return len(self.verts)

    @property
    def n_dual_verts(self) -> int:
        return len(self.dual_verts)

    def view_graph(self, view: str):
        """(n_vertices, u, v, extra_u, extra_v) for a cluster-count view.

        `extra` edges are always-on wiring (identifications, hubs).
        """
        if view == "K":
            return self.n_verts, self.edge_u, self.edge_v, None, None
        if view == "K1":
            eu, ev = _group_wiring(self.k1_group, self.n_verts)
            return self.n_verts + 2, self.edge_u, self.edge_v, eu, ev
        if view == "dual-K":
            return self.n_dual_verts, self.dual_edge_u, self.dual_edge_v, None, None
        if view == "dual-K1":
            eu, ev = _group_wiring(self.dual_k1_group, self.n_dual_verts)
            return self.n_dual_verts + 2, self.dual_edge_u, self.dual_edge_v, eu, ev
        if view == "dual-sphere":
            # whole dual ring glued to one vertex (the outer face)
            grp = np.where(self.dual_k1_group >= 0, 0, -1).astype(np.int32)
            eu, ev = _group_wiring(grp, self.n_dual_verts)
            return self.n_dual_verts + 1, self.dual_edge_u, self.dual_edge_v, eu, ev
        if view == "G-wired":
            return self.n_V + 2, self._g_edge_u, self._g_edge_v, self._g_wire_u, self._g_wire_v
        raise ValueError(f"unknown view {view!r}")

    def cluster_count(self, open_bits: np.ndarray, view: str = "K") -> int:
        """Number of components of the spanning subgraph in the given view.

        For dual views `open_bits[i]` is the state of the dual of edge i.
        For `G-wired` only the first n_live bits are consulted.
        """
        nv, eu, ev, xu, xv = self.view_graph(view)
        open_bits = np.asarray(open_bits, dtype=bool)
        k = len(eu)
        if view == "G-wired":
            open_bits = open_bits[: self.n_live]
        if open_bits.shape[0] != k:
            raise ValueError(f"config has {open_bits.shape[0]} bits, view expects {k}")
        uf = UnionFind(nv)
        for i in np.nonzero(open_bits)[0]:
            uf.union(int(eu[i]), int(ev[i]))
        if xu is not None:
            for a, b in zip(xu, xv):
                uf.union(int(a), int(b))
        return uf.count

    def connected(self, open_bits: np.ndarray, a: tuple[int, int], b: tuple[int, int], view: str = "K") -> bool:
        """Whether doubled points a, b are joined in the given view."""
        nv, eu, ev, xu, xv = self.view_graph(view)
        idx = self.dual_vert_index if view.startswith("dual") else self.vert_index
        open_bits = np.asarray(open_bits, dtype=bool)
        uf = UnionFind(nv)
        for i in np.nonzero(open_bits)[0]:
            uf.union(int(eu[i]), int(ev[i]))
        if xu is not None:
            for p, q in zip(xu, xv):
                uf.union(int(p), int(q))
        return uf.find(idx[a]) == uf.find(idx[b])

    def full_config(self, live_bits: np.ndarray) -> np.ndarray:
        """Extend a config on E by the frozen ring states to all of Ebar."""
        live_bits = np.asarray(live_bits, dtype=bool)
        if live_bits.shape[0] != self.n_live:
            raise ValueError("expected one bit per live edge")
        out = self.ring_state.copy()
        out[: self.n_live] = live_bits
        return out

    def to_json(self) -> str:
        desc = {
            "n": self.n,
            "m": self.m,
            "n_live_edges": self.n_live,
            "n_edges": self.n_edges,
            "edges": [[list(e[0]), list(e[1])] for e in self.edges],
            "marked": {
                "v_L": list(self.v_L),
                "v_R": list(self.v_R),
                "vp_L": list(self.vp_L),
                "vp_R": list(self.vp_R),
            },
        }
        return json.dumps(desc, sort_keys=True)

    @staticmethod
    def from_json(s: str) -> "DobrushinDomain":
        d = json.loads(s)
        dom = build_domain(d["n"], d["m"])
        if dom.to_json() != json.dumps(json.loads(s), sort_keys=True):
            raise ValueError("descriptor does not match canonical construction")
        return dom


def _group_wiring(group: np.ndarray, n: int):
    """Wiring edges gluing group g members to virtual vertex n+g."""
    us, vs = [], []
    for i, g in enumerate(group):
        if g >= 0:
            us.append(i)
            vs.append(n + int(g))
    return np.array(us, dtype=np.int32), np.array(vs, dtype=np.int32)


def build_domain(n: int, m: int, max_edges: int | None = None) -> DobrushinDomain:
    dom = DobrushinDomain(n, m)
    if max_edges is not None and dom.n_edges > max_edges:
        raise CapacityError(f"domain has {dom.n_edges} edges > limit {max_edges}")
    return dom


def euler_offset(dom: DobrushinDomain, open_bits: np.ndarray, view: str = "dual-sphere") -> int:
    """kappa_dual(omega*) - kappa_K(omega) - |omega| for one config.

    With the sphere gluing (whole dual ring = one outer vertex) this is a
    config-independent constant, -(|Vbar| - 1).  With the half-plane split
    gluing `dual-K1` it is constant only on configs whose dual leaves the
    two boundary hubs disconnected (e.g. under the left-right crossing).
    """
    open_bits = np.asarray(open_bits, dtype=bool)
    k_primal = dom.cluster_count(open_bits, "K")
    k_dual = dom.cluster_count(~open_bits, view)
    return k_dual - k_primal - int(open_bits.sum())
