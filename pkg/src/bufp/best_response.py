"""Expected payoffs, best responses and belief-weighted action values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import backend
from .game import GameTree
from .strategy import (
    BeliefTable,
    StrategyProfile,
    counterfactual_reach,
    normalize_by_infoset,
    reach_probabilities,
)

TIE_TOL = 1e-12


def node_values(tree: GameTree, profile: StrategyProfile) -> np.ndarray:
    """Player-0 expected payoff below every node under ``profile``."""
    v = np.empty(tree.flat.n_nodes)
    backend.values(tree.flat, profile.probs, v)
    return v


def expected_payoff(tree: GameTree, profile: StrategyProfile) -> np.ndarray:
    v0 = node_values(tree, profile)[tree.root]
    return np.array([v0, -v0])


def argmax_rows(
    q: np.ndarray,
    mask: np.ndarray,
    noise: np.ndarray | None = None,
    tol: float = TIE_TOL,
) -> np.ndarray:
    """Row-wise argmax over legal actions.

    Actions within ``tol * (1 + |max|)`` of the row maximum count as tied.
    Ties go to the lowest index unless ``noise`` (uniform [0, 1) per row)
    is given, in which case one tied action is picked uniformly.
    """
    qm = np.where(mask, q, -np.inf)
    top = qm.max(axis=1, keepdims=True)
    tied = qm >= top - tol * (1.0 + np.abs(top))
    if noise is None:
        return np.argmax(tied, axis=1)
    count = tied.sum(axis=1)
    pick = np.minimum((noise * count).astype(np.int64), count - 1)
    rank = np.cumsum(tied, axis=1) - 1
    return np.argmax(tied & (rank == pick[:, None]), axis=1)


@dataclass(frozen=True)
class BestResponse:
    player: int
    choice: np.ndarray  # int32[U]; meaningful on the player's rows
    value: float  # chips, from the player's point of view
    profile: StrategyProfile  # input profile with the player's rows replaced


def _br_buffers(tree: GameTree):
    ft = tree.flat
    return (
        np.zeros(ft.n_nodes),
        np.zeros(ft.n_infosets, dtype=np.int32),
        np.zeros((ft.n_infosets, ft.max_actions)),
        np.full(ft.n_infosets, -1, dtype=np.int32),
    )


def _global_br(
    tree: GameTree,
    profile: StrategyProfile,
    player: int,
    weights: np.ndarray,
    noise: np.ndarray | None = None,
):
    ft = tree.flat
    v, choice, q, stamp = _br_buffers(tree)
    if noise is None:
        noise = np.full(ft.n_infosets, -1.0)
    backend.br_pass(
        ft,
        profile.probs,
        player,
        np.ascontiguousarray(weights),
        np.array([0], dtype=np.int32),
        np.array([ft.n_nodes], dtype=np.int32),
        0,
        int(ft.own_level[player].max()),
        v,
        choice,
        q,
        stamp,
        0,
        noise,
        0.0,
    )
    return v, choice, q


def best_response(tree: GameTree, profile: StrategyProfile, player: int) -> BestResponse:
    """Pure best response of ``player`` to the other rows of ``profile``.

    Ties are broken toward the lowest action index. The returned value is
    the responder's expected payoff in chips.
    """
    cf = counterfactual_reach(tree, reach_probabilities(tree, profile))
    v, choice, _ = _global_br(tree, profile, player, cf)
    probs = profile.probs.copy()
    rows = np.flatnonzero(tree.flat.iset_owner == player)
    probs[rows] = 0.0
    probs[rows, choice[rows]] = 1.0
    return BestResponse(player, choice, float(v[tree.root]), StrategyProfile(tree, probs))


def subgame_best_response_values(
    tree: GameTree,
    profile: StrategyProfile,
    beliefs: BeliefTable,
    infosets,
) -> np.ndarray:
    """Full best-response value at each listed infoset's counterfactual subgame.

    The owner of ``u`` is placed at the members of ``u`` with weights
    ``beliefs[u]``; opponents and chance follow ``profile`` below, and the
    owner re-optimizes every infoset of the subgame. Values are in chips
    from the owner's point of view and already normalized by the beliefs.
    """
    ft = tree.flat
    v, choice, q, stamp = _br_buffers(tree)
    w = np.zeros(ft.n_nodes)
    noise = np.full(ft.n_infosets, -1.0)
    out = np.empty(len(infosets))
    for j, u in enumerate(infosets):
        u = int(u)
        owner = int(ft.iset_owner[u])
        mem = ft.members[ft.member_start[u] : ft.member_start[u + 1]]
        starts = mem.astype(np.int32)
        ends = (mem + ft.subtree_size[mem]).astype(np.int32)
        w[mem] = beliefs.node_belief[mem]
        backend.propagate(ft, profile.probs, owner, w, starts, ends)
        lo = int(ft.own_level[owner, mem[0]])
        hi = max(int(ft.own_level[owner, s:e].max()) for s, e in zip(starts, ends))
        backend.br_pass(
            ft, profile.probs, owner, w, starts, ends, lo, hi, v, choice, q, stamp, j, noise, 0.0
        )
        out[j] = q[u, : ft.iset_nact[u]].max()
    return out


def subgame_best_responses(
    tree: GameTree,
    profile: StrategyProfile,
    beliefs: BeliefTable,
    noise: np.ndarray | None = None,
    tol: float = TIE_TOL,
) -> np.ndarray:
    """Action at every infoset of a full best response in its own subgame.

    Backward induction where each infoset aggregates its members with its
    belief vector and the owner follows the computed choices below. Where
    beliefs are proportional to counterfactual reach this coincides with
    :func:`best_response`; at unreached infosets the (uniform) beliefs
    still give a well-defined choice.
    """
    ft = tree.flat
    if noise is None:
        noise = np.full(ft.n_infosets, -1.0)
    out = np.zeros(ft.n_infosets, dtype=np.int64)
    for p in range(tree.players):
        v, choice, q, stamp = _br_buffers(tree)
        backend.br_pass(
            ft,
            profile.probs,
            p,
            beliefs.node_belief,
            np.array([0], dtype=np.int32),
            np.array([ft.n_nodes], dtype=np.int32),
            0,
            int(ft.own_level[p].max()),
            v,
            choice,
            q,
            stamp,
            0,
            noise,
            tol,
        )
        rows = ft.iset_owner == p
        out[rows] = choice[rows]
    return out


def fictitious_profile(tree: GameTree, profile: StrategyProfile, u: int) -> StrategyProfile:
    """Profile with the owner's own moves on the path to ``u`` forced to 1."""
    probs = profile.probs.copy()
    for u_prev, a in tree.infosets[u].sequence:
        probs[u_prev] = 0.0
        probs[u_prev, a] = 1.0
    return StrategyProfile(tree, probs)


def belief_action_values(
    tree: GameTree, profile: StrategyProfile, beliefs: BeliefTable, v: np.ndarray | None = None
) -> np.ndarray:
    """Q[u, a]: belief-weighted value of a one-step deviation to ``a`` at ``u``.

    Continuation below ``u`` follows ``profile``; values are in chips from
    the owner's point of view.
    """
    if v is None:
        v = node_values(tree, profile)
    q = np.zeros((tree.flat.n_infosets, tree.flat.max_actions))
    backend.action_values(tree.flat, v, beliefs.node_belief, q)
    return q


def local_br_action(
    tree: GameTree,
    profile: StrategyProfile,
    beliefs: BeliefTable,
    u: int,
    rng: np.random.Generator | None = None,
) -> int:
    """Best one-step deviation at ``u`` under the owner's beliefs."""
    ft = tree.flat
    v = node_values(tree, profile)
    mem = ft.members[ft.member_start[u] : ft.member_start[u + 1]]
    n = int(ft.iset_nact[u])
    sgn = 1.0 if ft.iset_owner[u] == 0 else -1.0
    q = np.zeros(n)
    for m in mem:
        q += beliefs.node_belief[m] * sgn * v[ft.children[ft.child_start[m] : ft.child_start[m] + n]]
    noise = None if rng is None else rng.random(1)
    return int(argmax_rows(q[None, :], np.ones((1, n), dtype=bool), noise)[0])


@dataclass(frozen=True)
class CounterfactualValues:
    """Per-infoset action values for one player, in two normalizations.

    ``q_cf``/``v_cf`` are weighted by counterfactual reach (CFR's regrets);
    ``q``/``v`` divide by ``norm`` (the belief-weighted form). Rows for
    other players' infosets are zero.
    """

    player: int
    q_cf: np.ndarray
    v_cf: np.ndarray
    norm: np.ndarray
    q: np.ndarray
    v: np.ndarray


def counterfactual_values(
    tree: GameTree, profile: StrategyProfile, player: int
) -> CounterfactualValues:
    ft = tree.flat
    reach = reach_probabilities(tree, profile)
    cf = counterfactual_reach(tree, reach)
    beliefs, norm = normalize_by_infoset(tree, cf)
    v = node_values(tree, profile)
    q_cf = np.zeros((ft.n_infosets, ft.max_actions))
    q = np.zeros_like(q_cf)
    backend.action_values(ft, v, cf, q_cf)
    backend.action_values(ft, v, beliefs, q)
    mine = (ft.iset_owner == player)[:, None]
    q_cf = np.where(mine, q_cf, 0.0)
    q = np.where(mine, q, 0.0)
    return CounterfactualValues(
        player=player,
        q_cf=q_cf,
        v_cf=(q_cf * profile.probs).sum(axis=1),
        norm=np.where(mine[:, 0], norm, 0.0),
        q=q,
        v=(q * profile.probs).sum(axis=1),
    )
