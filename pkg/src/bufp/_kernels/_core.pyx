# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree-traversal kernels. Mirrors ``_fallback`` function by function."""

from libc.stdint cimport int8_t, int32_t

cdef enum:
    CHANCE = 0
    DECISION = 1
    TERMINAL = 2


def reach(ft, double[:, ::1] probs, double[:, ::1] out):
    """Top-down pass: out[0] chance reach, out[1 + p] player p's own reach."""
    cdef int8_t[::1] kind = ft.kind
    cdef int32_t[::1] player = ft.player
    cdef int32_t[::1] infoset = ft.infoset
    cdef int32_t[::1] cstart = ft.child_start
    cdef int32_t[::1] nch = ft.n_children
    cdef int32_t[::1] children = ft.children
    cdef double[::1] eprob = ft.edge_prob
    cdef Py_ssize_t n = ft.n_nodes, i, k, c, e
    cdef int p, u
    cdef double f
    out[0, 0] = 1.0
    out[1, 0] = 1.0
    out[2, 0] = 1.0
    for i in range(n):
        if kind[i] == TERMINAL:
            continue
        e = cstart[i]
        if kind[i] == CHANCE:
            for k in range(nch[i]):
                c = children[e + k]
                out[0, c] = out[0, i] * eprob[e + k]
                out[1, c] = out[1, i]
                out[2, c] = out[2, i]
        else:
            p = player[i]
            u = infoset[i]
            for k in range(nch[i]):
                c = children[e + k]
                f = probs[u, k]
                out[0, c] = out[0, i]
                if p == 0:
                    out[1, c] = out[1, i] * f
                    out[2, c] = out[2, i]
                else:
                    out[1, c] = out[1, i]
                    out[2, c] = out[2, i] * f


def values(ft, double[:, ::1] probs, double[::1] v):
    """Bottom-up pass: player-0 expected payoff of every node."""
    cdef int8_t[::1] kind = ft.kind
    cdef int32_t[::1] infoset = ft.infoset
    cdef int32_t[::1] cstart = ft.child_start
    cdef int32_t[::1] nch = ft.n_children
    cdef int32_t[::1] children = ft.children
    cdef double[::1] eprob = ft.edge_prob
    cdef double[::1] payoff = ft.payoff
    cdef Py_ssize_t n = ft.n_nodes, i, k, e
    cdef int u
    cdef double acc
    for i in range(n - 1, -1, -1):
        if kind[i] == TERMINAL:
            v[i] = payoff[i]
            continue
        e = cstart[i]
        acc = 0.0
        if kind[i] == CHANCE:
            for k in range(nch[i]):
                acc += eprob[e + k] * v[children[e + k]]
        else:
            u = infoset[i]
            for k in range(nch[i]):
                acc += probs[u, k] * v[children[e + k]]
        v[i] = acc


def action_values(ft, double[::1] v, double[::1] w, double[:, ::1] q):
    """q[u, a] = sum over members m of w[m] * v_owner(child(m, a))."""
    cdef int32_t[::1] owner = ft.iset_owner
    cdef int32_t[::1] nact = ft.iset_nact
    cdef int32_t[::1] mstart = ft.member_start
    cdef int32_t[::1] members = ft.members
    cdef int32_t[::1] cstart = ft.child_start
    cdef int32_t[::1] children = ft.children
    cdef Py_ssize_t U = ft.n_infosets, u, j, k, m
    cdef double sgn, wm
    cdef Py_ssize_t A = q.shape[1]
    for u in range(U):
        sgn = 1.0 if owner[u] == 0 else -1.0
        for k in range(A):
            q[u, k] = 0.0
        for j in range(mstart[u], mstart[u + 1]):
            m = members[j]
            wm = w[m] * sgn
            for k in range(nact[u]):
                q[u, k] += wm * v[children[cstart[m] + k]]


def own_reach(ft, double[:, ::1] probs, double[::1] x):
    """x[u] = owner's realization weight of the sequence leading to u."""
    cdef int32_t[::1] topo = ft.iset_topo
    cdef int32_t[::1] pi = ft.iset_parent_iset
    cdef int32_t[::1] pa = ft.iset_parent_action
    cdef Py_ssize_t U = ft.n_infosets, j, u
    for j in range(U):
        u = topo[j]
        if pi[u] < 0:
            x[u] = 1.0
        else:
            x[u] = x[pi[u]] * probs[pi[u], pa[u]]


def propagate(ft, double[:, ::1] probs, int responder, double[::1] w,
              int32_t[::1] starts, int32_t[::1] ends):
    """Push weights w down each range; responder edges keep weight 1."""
    cdef int8_t[::1] kind = ft.kind
    cdef int32_t[::1] player = ft.player
    cdef int32_t[::1] infoset = ft.infoset
    cdef int32_t[::1] cstart = ft.child_start
    cdef int32_t[::1] nch = ft.n_children
    cdef int32_t[::1] children = ft.children
    cdef double[::1] eprob = ft.edge_prob
    cdef Py_ssize_t r, i, k, e
    for r in range(starts.shape[0]):
        for i in range(starts[r], ends[r]):
            if kind[i] == TERMINAL:
                continue
            e = cstart[i]
            for k in range(nch[i]):
                if kind[i] == CHANCE:
                    w[children[e + k]] = w[i] * eprob[e + k]
                elif player[i] == responder:
                    w[children[e + k]] = w[i]
                else:
                    w[children[e + k]] = w[i] * probs[infoset[i], k]


def br_pass(ft, double[:, ::1] probs, int responder, double[::1] w,
            int32_t[::1] starts, int32_t[::1] ends, int lo_level, int hi_level,
            double[::1] v, int32_t[::1] choice, double[:, ::1] q,
            int32_t[::1] stamp, int stamp_id, double[::1] noise, double tol):
    """Best-response values for ``responder`` over the given node ranges.

    Nodes are visited by decreasing responder level, then decreasing index,
    so every member of an infoset has its children evaluated before the
    infoset's action is fixed. ``w`` holds the weights used to aggregate
    members; ``v`` receives values from the responder's point of view.
    Actions within ``tol * (1 + |max|)`` of the best are tied; a tie goes
    to the lowest index, or is drawn with ``noise[u]`` when that is >= 0.
    """
    cdef int8_t[::1] kind = ft.kind
    cdef int32_t[::1] player = ft.player
    cdef int32_t[::1] infoset = ft.infoset
    cdef int32_t[::1] cstart = ft.child_start
    cdef int32_t[::1] nch = ft.n_children
    cdef int32_t[::1] children = ft.children
    cdef double[::1] eprob = ft.edge_prob
    cdef double[::1] payoff = ft.payoff
    cdef int32_t[:, ::1] levels = ft.own_level
    cdef int32_t[::1] mstart = ft.member_start
    cdef int32_t[::1] members = ft.members
    cdef int32_t[::1] nact = ft.iset_nact
    cdef Py_ssize_t r, i, k, e, j, m
    cdef int L, u, best, count, pick
    cdef double acc, top, cut, sgn = 1.0 if responder == 0 else -1.0
    for L in range(hi_level, lo_level - 1, -1):
        for r in range(starts.shape[0]):
            for i in range(ends[r] - 1, starts[r] - 1, -1):
                if levels[responder, i] != L:
                    continue
                if kind[i] == TERMINAL:
                    v[i] = sgn * payoff[i]
                    continue
                e = cstart[i]
                if kind[i] == CHANCE:
                    acc = 0.0
                    for k in range(nch[i]):
                        acc += eprob[e + k] * v[children[e + k]]
                    v[i] = acc
                elif player[i] != responder:
                    acc = 0.0
                    u = infoset[i]
                    for k in range(nch[i]):
                        acc += probs[u, k] * v[children[e + k]]
                    v[i] = acc
                else:
                    u = infoset[i]
                    if stamp[u] != stamp_id:
                        for k in range(nact[u]):
                            q[u, k] = 0.0
                        for j in range(mstart[u], mstart[u + 1]):
                            m = members[j]
                            for k in range(nact[u]):
                                q[u, k] += w[m] * v[children[cstart[m] + k]]
                        top = q[u, 0]
                        for k in range(1, nact[u]):
                            if q[u, k] > top:
                                top = q[u, k]
                        cut = top - tol * (1.0 + (top if top >= 0 else -top))
                        count = 0
                        for k in range(nact[u]):
                            if q[u, k] >= cut:
                                count += 1
                        pick = 0
                        if noise[u] >= 0:
                            pick = <int>(noise[u] * count)
                            if pick >= count:
                                pick = count - 1
                        best = -1
                        for k in range(nact[u]):
                            if q[u, k] >= cut:
                                if pick == 0:
                                    best = k
                                    break
                                pick -= 1
                        choice[u] = best
                        stamp[u] = stamp_id
                    v[i] = v[children[e + choice[u]]]
