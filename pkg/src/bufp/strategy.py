"""Behavioral strategies, realization plans and belief tables."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import backend
from .game import GameTree

PROB_TOL = 1e-10

Sequence = tuple[tuple[int, int], ...]


class StrategyProfile:
    """Per-infoset action distributions for every player.

    Stored as a padded ``float64[n_infosets, max_actions]`` array whose
    unused slots stay zero. Row ``u`` is the distribution at infoset ``u``.
    """

    __slots__ = ("tree", "probs")

    def __init__(self, tree: GameTree, probs: np.ndarray) -> None:
        ft = tree.flat
        probs = np.ascontiguousarray(probs, dtype=np.float64)
        if probs.shape != (ft.n_infosets, ft.max_actions):
            raise ValueError(
                f"expected shape {(ft.n_infosets, ft.max_actions)}, got {probs.shape}"
            )
        self.tree = tree
        self.probs = probs

    def __getitem__(self, u: int) -> np.ndarray:
        return self.probs[u, : len(self.tree.infosets[u].actions)]

    def copy(self) -> StrategyProfile:
        return StrategyProfile(self.tree, self.probs.copy())

    def combine(self, other: StrategyProfile, player: int) -> StrategyProfile:
        """Copy of ``self`` with ``player``'s rows taken from ``other``."""
        out = self.probs.copy()
        rows = self.tree.flat.iset_owner == player
        out[rows] = other.probs[rows]
        return StrategyProfile(self.tree, out)

    def violations(self, tol: float = PROB_TOL) -> list[str]:
        ft = self.tree.flat
        bad = []
        if np.any(self.probs[ft.action_mask] < -tol):
            bad.append("negative probability")
        if np.any(self.probs[~ft.action_mask] != 0.0):
            bad.append("mass on padding slot")
        sums = self.probs.sum(axis=1)
        for u in np.flatnonzero(np.abs(sums - 1.0) > tol):
            bad.append(f"{self.tree.infosets[u].key} sums to {sums[u]}")
        return bad

    def to_dict(self) -> dict[str, dict[str, dict[str, float]]]:
        out: dict[str, dict[str, dict[str, float]]] = {
            f"p{p}": {} for p in range(self.tree.players)
        }
        for u, iset in enumerate(self.tree.infosets):
            out[f"p{iset.owner}"][iset.key] = {
                a: float(self.probs[u, k]) for k, a in enumerate(iset.actions)
            }
        return out

    @classmethod
    def from_dict(cls, tree: GameTree, data: dict) -> StrategyProfile:
        probs = np.zeros((len(tree.infosets), tree.max_actions))
        index = tree.infoset_index
        seen = set()
        for per_player in data.values():
            for key, dist in per_player.items():
                if key not in index:
                    raise ValueError(f"unknown infoset {key!r}")
                u = index[key]
                for label, p in dist.items():
                    probs[u, tree.action_index(u, label)] = float(p)
                seen.add(u)
        if len(seen) != len(tree.infosets):
            raise ValueError(f"dump covers {len(seen)} of {len(tree.infosets)} infosets")
        return cls(tree, probs)


def uniform_profile(tree: GameTree) -> StrategyProfile:
    ft = tree.flat
    probs = ft.action_mask / ft.iset_nact[:, None].astype(np.float64)
    return StrategyProfile(tree, probs)


def pure_profile(tree: GameTree, choice: np.ndarray) -> StrategyProfile:
    """One-hot profile playing action ``choice[u]`` at every infoset."""
    ft = tree.flat
    probs = np.zeros((ft.n_infosets, ft.max_actions))
    probs[np.arange(ft.n_infosets), choice] = 1.0
    return StrategyProfile(tree, probs)


def random_profile(tree: GameTree, rng: np.random.Generator, pure_frac: float = 0.0) -> StrategyProfile:
    """Dirichlet(1) distributions; a fraction of infosets made pure."""
    ft = tree.flat
    raw = rng.exponential(size=(ft.n_infosets, ft.max_actions)) * ft.action_mask
    if pure_frac > 0:
        pure = rng.random(ft.n_infosets) < pure_frac
        keep = np.argmax(raw, axis=1)
        raw[pure] = 0.0
        raw[pure, keep[pure]] = 1.0
    return StrategyProfile(tree, raw / raw.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class RealizationPlan:
    """Sequence-form weights x(sigma) for one player; ``()`` is the empty sequence."""

    player: int
    values: dict[Sequence, float]

    def __getitem__(self, seq: Sequence) -> float:
        return self.values[seq]

    def flow_violations(self, tree: GameTree, tol: float = PROB_TOL) -> list[int]:
        out = []
        if abs(self.values.get((), 0.0) - 1.0) > tol:
            out.append(-1)
        for u in tree.player_infosets[self.player]:
            iset = tree.infosets[u]
            parent = self.values[iset.sequence]
            kids = sum(self.values[iset.sequence + ((u, a),)] for a in range(len(iset.actions)))
            if abs(parent - kids) > tol:
                out.append(u)
        return out


def to_realization_plan(tree: GameTree, profile: StrategyProfile, player: int) -> RealizationPlan:
    values: dict[Sequence, float] = {(): 1.0}
    for u in tree.flat.iset_topo:
        iset = tree.infosets[u]
        if iset.owner != player:
            continue
        base = values[iset.sequence]
        for a in range(len(iset.actions)):
            values[iset.sequence + ((int(u), a),)] = base * profile.probs[u, a]
    return RealizationPlan(player, values)


def from_realization_plan(tree: GameTree, plan: RealizationPlan) -> np.ndarray:
    """Behavioral rows for ``plan.player``'s infosets; other rows are zero.

    Where the plan reaches an infoset with weight 0 the row is uniform.
    """
    ft = tree.flat
    probs = np.zeros((ft.n_infosets, ft.max_actions))
    for u in tree.player_infosets[plan.player]:
        iset = tree.infosets[u]
        base = plan[iset.sequence]
        n = len(iset.actions)
        if base > 0:
            for a in range(n):
                probs[u, a] = plan[iset.sequence + ((u, a),)] / base
        else:
            probs[u, :n] = 1.0 / n
    return probs


class BeliefTable:
    """Posterior over the member nodes of every information set.

    ``node_belief[n]`` is the belief mass of decision node ``n`` within its
    own infoset; :meth:`__getitem__` returns the vector in member order.
    """

    __slots__ = ("tree", "node_belief")

    def __init__(self, tree: GameTree, node_belief: np.ndarray) -> None:
        self.tree = tree
        self.node_belief = node_belief

    def __getitem__(self, u: int) -> np.ndarray:
        return self.node_belief[list(self.tree.infosets[u].members)]

    def violations(self, tol: float = PROB_TOL) -> list[str]:
        ft = self.tree.flat
        m = ft.members
        owner_of = np.repeat(np.arange(ft.n_infosets), np.diff(ft.member_start))
        sums = np.bincount(owner_of, weights=self.node_belief[m], minlength=ft.n_infosets)
        bad = []
        if np.any(self.node_belief[m] < -tol):
            bad.append("negative belief")
        for u in np.flatnonzero(np.abs(sums - 1.0) > tol):
            bad.append(f"{self.tree.infosets[u].key} sums to {sums[u]}")
        return bad

    def to_dict(self) -> dict[str, dict[str, float]]:
        nodes = self.tree.nodes
        return {
            iset.key: {nodes[m].label: float(self.node_belief[m]) for m in iset.members}
            for iset in self.tree.infosets
        }


def reach_probabilities(tree: GameTree, profile: StrategyProfile) -> np.ndarray:
    """``float64[3, n]``: chance reach, then each player's own reach."""
    out = np.empty((3, tree.flat.n_nodes))
    backend.reach(tree.flat, profile.probs, out)
    return out


def counterfactual_reach(tree: GameTree, reach: np.ndarray) -> np.ndarray:
    """Per node: chance reach times the reach of the player NOT acting there.

    At player-``i`` nodes this is reach with ``i``'s own probabilities set to
    one. At chance and terminal nodes the value is unused and left as chance
    reach times both players.
    """
    ft = tree.flat
    cf = reach[0] * reach[1] * reach[2]
    p0 = ft.player == 0
    p1 = ft.player == 1
    cf[p0] = reach[0, p0] * reach[2, p0]
    cf[p1] = reach[0, p1] * reach[1, p1]
    return cf


def normalize_by_infoset(tree: GameTree, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalize per-node weights within each infoset (uniform if all zero).

    Returns the normalized per-node array and the per-infoset totals.
    """
    ft = tree.flat
    m = ft.members
    counts = np.diff(ft.member_start)
    owner_of = np.repeat(np.arange(ft.n_infosets), counts)
    totals = np.bincount(owner_of, weights=weights[m], minlength=ft.n_infosets)
    out = np.zeros(ft.n_nodes)
    tot = totals[owner_of]
    out[m] = np.where(tot > 0, weights[m] / np.where(tot > 0, tot, 1.0), 1.0 / counts[owner_of])
    return out, totals


def compute_beliefs(tree: GameTree, profile: StrategyProfile) -> BeliefTable:
    """Beliefs proportional to counterfactual reach (owner's own moves at 1)."""
    reach = reach_probabilities(tree, profile)
    beliefs, _ = normalize_by_infoset(tree, counterfactual_reach(tree, reach))
    return BeliefTable(tree, beliefs)


def write_dump(
    path: str | Path,
    tree: GameTree,
    profile: StrategyProfile,
    iteration: int,
    beliefs: BeliefTable | None = None,
    **extra,
) -> None:
    """Write a strategy (and optional belief) dump as JSON.

    Probabilities are written with full ``repr`` precision so a reloaded
    profile evaluates bit-identically.
    """
    doc = {"game_id": tree.game_id, "iteration": int(iteration), **extra}
    doc["strategy"] = profile.to_dict()
    if beliefs is not None:
        doc["beliefs"] = beliefs.to_dict()
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n")


def read_dump(path: str | Path, tree: GameTree) -> tuple[StrategyProfile, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read strategy dump {path}: {exc}") from exc
    if not isinstance(doc, dict) or "strategy" not in doc or "game_id" not in doc:
        raise ValueError(f"malformed strategy dump {path}")
    if doc["game_id"] != tree.game_id:
        raise ValueError(
            f"game-id mismatch: dump {path} is for {doc['game_id']!r}, not {tree.game_id!r}"
        )
    return StrategyProfile.from_dict(tree, doc["strategy"]), doc
