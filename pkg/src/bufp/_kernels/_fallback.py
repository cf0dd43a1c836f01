"""Pure-Python/numpy implementations of the tree kernels.

Same signatures and output-buffer conventions as the compiled ``_core``
module. The forward and backward sweeps are vectorized one depth level at
a time; the best-response passes are plain loops.
"""

from __future__ import annotations

import weakref

import numpy as np

CHANCE, DECISION, TERMINAL = 0, 1, 2

_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


class _Edges:
    def __init__(self, ft) -> None:
        n = ft.n_nodes
        parent = np.repeat(np.arange(n, dtype=np.int64), ft.n_children)
        child = ft.children.astype(np.int64)
        k = np.arange(len(child)) - ft.child_start[parent]
        is_chance = ft.kind[parent] == CHANCE
        self.parent, self.child, self.k = parent, child, k
        self.is_chance = is_chance
        self.iset = np.where(is_chance, 0, ft.infoset[parent])
        self.owner = np.where(is_chance, -1, ft.player[parent])
        depth = ft.depth[child]
        order = np.argsort(depth, kind="stable")
        bounds = np.searchsorted(depth[order], np.arange(depth.max() + 2))
        self.levels = [order[bounds[d] : bounds[d + 1]] for d in range(1, len(bounds) - 1)]
        self.decision = np.flatnonzero(~is_chance)
        self.terminal = np.flatnonzero(ft.kind == TERMINAL)

    def factor(self, ft, probs: np.ndarray, idx: np.ndarray) -> np.ndarray:
        f = np.empty(len(idx))
        ch = self.is_chance[idx]
        f[ch] = ft.edge_prob[idx[ch]]
        dec = idx[~ch]
        f[~ch] = probs[self.iset[dec], self.k[dec]]
        return f


def _edges(ft) -> _Edges:
    e = _cache.get(ft)
    if e is None:
        e = _cache[ft] = _Edges(ft)
    return e


def reach(ft, probs, out):
    ed = _edges(ft)
    out[:, 0] = 1.0
    for idx in ed.levels:
        p, c = ed.parent[idx], ed.child[idx]
        f = ed.factor(ft, probs, idx)
        owner = ed.owner[idx]
        out[0, c] = out[0, p] * np.where(owner == -1, f, 1.0)
        out[1, c] = out[1, p] * np.where(owner == 0, f, 1.0)
        out[2, c] = out[2, p] * np.where(owner == 1, f, 1.0)


def values(ft, probs, v):
    ed = _edges(ft)
    v[:] = 0.0
    v[ed.terminal] = ft.payoff[ed.terminal]
    for idx in reversed(ed.levels):
        contrib = ed.factor(ft, probs, idx) * v[ed.child[idx]]
        v += np.bincount(ed.parent[idx], weights=contrib, minlength=ft.n_nodes)


def action_values(ft, v, w, q):
    ed = _edges(ft)
    idx = ed.decision
    p = ed.parent[idx]
    sgn = np.where(ed.owner[idx] == 0, 1.0, -1.0)
    flat = ed.iset[idx] * ft.max_actions + ed.k[idx]
    q[:] = np.bincount(
        flat, weights=sgn * w[p] * v[ed.child[idx]], minlength=q.size
    ).reshape(q.shape)


def own_reach(ft, probs, x):
    pi, pa = ft.iset_parent_iset, ft.iset_parent_action
    for u in ft.iset_topo:
        x[u] = 1.0 if pi[u] < 0 else x[pi[u]] * probs[pi[u], pa[u]]


def propagate(ft, probs, responder, w, starts, ends):
    kind, player, infoset = ft.kind, ft.player, ft.infoset
    cstart, nch, children, eprob = ft.child_start, ft.n_children, ft.children, ft.edge_prob
    for lo, hi in zip(starts, ends):
        for i in range(lo, hi):
            if kind[i] == TERMINAL:
                continue
            e = cstart[i]
            for k in range(nch[i]):
                c = children[e + k]
                if kind[i] == CHANCE:
                    w[c] = w[i] * eprob[e + k]
                elif player[i] == responder:
                    w[c] = w[i]
                else:
                    w[c] = w[i] * probs[infoset[i], k]


def br_pass(ft, probs, responder, w, starts, ends, lo_level, hi_level,
            v, choice, q, stamp, stamp_id, noise, tol):
    kind, player, infoset = ft.kind, ft.player, ft.infoset
    cstart, nch, children, eprob = ft.child_start, ft.n_children, ft.children, ft.edge_prob
    payoff, levels = ft.payoff, ft.own_level[responder]
    mstart, members, nact = ft.member_start, ft.members, ft.iset_nact
    sgn = 1.0 if responder == 0 else -1.0
    for L in range(hi_level, lo_level - 1, -1):
        for lo, hi in zip(starts, ends):
            for i in range(hi - 1, lo - 1, -1):
                if levels[i] != L:
                    continue
                if kind[i] == TERMINAL:
                    v[i] = sgn * payoff[i]
                    continue
                e = cstart[i]
                kids = children[e : e + nch[i]]
                if kind[i] == CHANCE:
                    v[i] = float(np.dot(eprob[e : e + nch[i]], v[kids]))
                elif player[i] != responder:
                    v[i] = float(np.dot(probs[infoset[i], : nch[i]], v[kids]))
                else:
                    u = infoset[i]
                    if stamp[u] != stamp_id:
                        na = nact[u]
                        q[u, :na] = 0.0
                        for m in members[mstart[u] : mstart[u + 1]]:
                            q[u, :na] += w[m] * v[children[cstart[m] : cstart[m] + na]]
                        row = q[u, :na]
                        top = row.max()
                        tied = np.flatnonzero(row >= top - tol * (1.0 + abs(top)))
                        pick = 0
                        if noise[u] >= 0:
                            pick = min(int(noise[u] * len(tied)), len(tied) - 1)
                        choice[u] = tied[pick]
                        stamp[u] = stamp_id
                    v[i] = v[kids[choice[u]]]
