"""Numba hot loops: bulk exact enumeration and heat-bath sweeps.

Everything here operates on flat int32 edge-endpoint arrays produced by
the lattice module.  Configs are packed into uint64 bitmasks (callers
guarantee <= 63 edges on enumeration paths).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _uf_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def _count_components(n_verts, eu, ev, mask):
    parent = np.empty(n_verts, dtype=np.int32)
    for i in range(n_verts):
        parent[i] = i
    count = n_verts
    for i in range(eu.shape[0]):
        if (mask >> np.uint64(i)) & np.uint64(1):
            ra = _uf_find(parent, eu[i])
            rb = _uf_find(parent, ev[i])
            if ra != rb:
                parent[rb] = ra
                count -= 1
    return count, parent


@njit(cache=True)
def _apply_wiring(parent, count, xu, xv):
    for i in range(xu.shape[0]):
        ra = _uf_find(parent, xu[i])
        rb = _uf_find(parent, xv[i])
        if ra != rb:
            parent[rb] = ra
            count -= 1
    return count


@njit(cache=True, parallel=True)
def fk_weight_table(n_verts, eu, ev, xu, xv, n_edges, log_p, log_1p, log_q,
                    top, bot, forbid_top_bot):
    """Log-weights of all 2^n_edges FK configs on the wired-split view.

    Entry is -inf when forbid_top_bot and the two hubs are connected.
    """
    total = 1 << n_edges
    out = np.empty(total, dtype=np.float64)
    for c in prange(total):
        mask = np.uint64(c)
        count, parent = _count_components(n_verts, eu, ev, mask)
        count = _apply_wiring(parent, count, xu, xv)
        if forbid_top_bot and _uf_find(parent, top) == _uf_find(parent, bot):
            out[c] = -np.inf
            continue
        n_open = 0
        for i in range(n_edges):
            if (mask >> np.uint64(i)) & np.uint64(1):
                n_open += 1
        out[c] = n_open * log_p + (n_edges - n_open) * log_1p + count * log_q
    return out


@njit(cache=True, parallel=True)
def matrc_enumerate(n_live, n_edges,
                    k_nv, k_eu, k_ev,
                    k1_nv, k1_eu, k1_ev, k1_xu, k1_xv,
                    d_nv, d_eu, d_ev,
                    vL, vR, vpL, vpR,
                    require_crossings):
    """Structural scan of all valid mATRC pairs on a small domain.

    A pair is encoded as tau (bits over all edges, ring free) plus a
    discrepancy set D subset of live closed edges; tautau = tau | D.
    Validity: tau subset tautau, discrepancy confined to live edges.

    Returns, per surviving config, the exponent vector needed for any q:
        (key, n_tau_live, n_tau_ring, n_disc, kappa_K(tau), kappa_K1(tautau))
    keys are tau | (D << n_edges) packed in uint64 (requires n_edges+n_live <= 63).

    When require_crossings, keeps only pairs with vL<->vR in tau and
    vpL<->vpR in the dual of tautau.
    """
    total_tau = 1 << n_edges
    n_keep = np.zeros(total_tau, dtype=np.int64)
    # first pass: count survivors per tau for allocation
    for c in prange(total_tau):
        tau = np.uint64(c)
        count_k, parent_k = _count_components(k_nv, k_eu, k_ev, tau)
        if require_crossings and _uf_find(parent_k, vL) != _uf_find(parent_k, vR):
            continue
        # closed live edges of tau
        closed = np.empty(n_live, dtype=np.int64)
        n_closed = 0
        for i in range(n_live):
            if not ((tau >> np.uint64(i)) & np.uint64(1)):
                closed[n_closed] = i
                n_closed += 1
        kept = 0
        for dsub in range(1 << n_closed):
            tautau = tau
            for b in range(n_closed):
                if (dsub >> b) & 1:
                    tautau |= np.uint64(1) << np.uint64(closed[b])
            if require_crossings:
                dual_mask = ~tautau
                cnt_d, parent_d = _count_components(d_nv, d_eu, d_ev, dual_mask)
                if _uf_find(parent_d, vpL) != _uf_find(parent_d, vpR):
                    continue
            kept += 1
        n_keep[c] = kept

    offsets = np.zeros(total_tau + 1, dtype=np.int64)
    for c in range(total_tau):
        offsets[c + 1] = offsets[c] + n_keep[c]
    n_total = offsets[total_tau]

    keys = np.empty(n_total, dtype=np.uint64)
    stats = np.empty((n_total, 5), dtype=np.int32)

    for c in prange(total_tau):
        if n_keep[c] == 0:
            continue
        tau = np.uint64(c)
        count_k, parent_k = _count_components(k_nv, k_eu, k_ev, tau)
        n_tau_live = 0
        for i in range(n_live):
            if (tau >> np.uint64(i)) & np.uint64(1):
                n_tau_live += 1
        n_tau_ring = 0
        for i in range(n_live, n_edges):
            if (tau >> np.uint64(i)) & np.uint64(1):
                n_tau_ring += 1
        closed = np.empty(n_live, dtype=np.int64)
        n_closed = 0
        for i in range(n_live):
            if not ((tau >> np.uint64(i)) & np.uint64(1)):
                closed[n_closed] = i
                n_closed += 1
        pos = offsets[c]
        for dsub in range(1 << n_closed):
            tautau = tau
            n_disc = 0
            for b in range(n_closed):
                if (dsub >> b) & 1:
                    tautau |= np.uint64(1) << np.uint64(closed[b])
                    n_disc += 1
            if require_crossings:
                dual_mask = ~tautau
                cnt_d, parent_d = _count_components(d_nv, d_eu, d_ev, dual_mask)
                if _uf_find(parent_d, vpL) != _uf_find(parent_d, vpR):
                    continue
            cnt1, parent1 = _count_components(k1_nv, k1_eu, k1_ev, tautau)
            cnt1 = _apply_wiring(parent1, cnt1, k1_xu, k1_xv)
            dmask = np.uint64(0)
            for b in range(n_closed):
                if (dsub >> b) & 1:
                    dmask |= np.uint64(1) << np.uint64(closed[b])
            keys[pos] = tau | (dmask << np.uint64(n_edges))
            stats[pos, 0] = n_tau_live
            stats[pos, 1] = n_tau_ring
            stats[pos, 2] = n_disc
            stats[pos, 3] = count_k
            stats[pos, 4] = cnt1
            pos += 1

    return keys, stats


@njit(cache=True)
def heatbath_sweeps(n_verts, eu, ev, grp, n_sweep_edges,
                    state, p, q, q1, q2,
                    n_sweeps, uniforms, forbid_u, forbid_v,
                    samples_every, out_samples):
    """Single-edge heat-bath for FK / quasi-FK on a small graph.

    Edges beyond n_sweep_edges are frozen (their state is honoured in the
    connectivity but never resampled): boundary wiring lives there.
    grp: per-vertex boundary class (-1 interior, 0 -> b1, 1 -> b2).
    forbid_u/forbid_v: when >= 0, reject opening any edge that would join
    these two vertices (decreasing conditioning event, kept closed).
    uniforms has shape (n_sweeps, n_sweep_edges).  Every `samples_every`
    sweeps the live-config bitmask is written to out_samples.
    """
    n_edges = eu.shape[0]
    sample_i = 0
    for s in range(n_sweeps):
        for e in range(n_sweep_edges):
            # connectivity with edge e removed
            parent = np.empty(n_verts, dtype=np.int32)
            for i in range(n_verts):
                parent[i] = i
            for i in range(n_edges):
                if i != e and state[i]:
                    ra = _uf_find(parent, eu[i])
                    rb = _uf_find(parent, ev[i])
                    if ra != rb:
                        parent[rb] = ra
            x, y = eu[e], ev[e]
            rx = _uf_find(parent, x)
            ry = _uf_find(parent, y)
            if forbid_u >= 0:
                # would opening e join the forbidden pair?
                ru = _uf_find(parent, forbid_u)
                rv = _uf_find(parent, forbid_v)
                if ru != rv and ((rx == ru and ry == rv) or (rx == rv and ry == ru)):
                    state[e] = False
                    continue
            if rx == ry:
                p_open = p
            else:
                # boundary classes touched by the two clusters
                t1x = False
                t2x = False
                t1y = False
                t2y = False
                for i in range(n_verts):
                    g = grp[i]
                    if g < 0:
                        continue
                    r = _uf_find(parent, i)
                    if r == rx:
                        if g == 0:
                            t1x = True
                        else:
                            t2x = True
                    elif r == ry:
                        if g == 0:
                            t1y = True
                        else:
                            t2y = True
                if t1x and t1y:
                    qq = q1
                elif (t1x or t2x) and (t1y or t2y):
                    qq = q2
                else:
                    qq = q
                p_open = p / (p + (1.0 - p) * qq)
            state[e] = uniforms[s, e] < p_open
        if samples_every > 0 and (s + 1) % samples_every == 0:
            mask = np.uint64(0)
            for i in range(n_sweep_edges):
                if state[i]:
                    mask |= np.uint64(1) << np.uint64(i)
            out_samples[sample_i] = mask
            sample_i += 1
    return sample_i
