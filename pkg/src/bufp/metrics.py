"""Exploitability, total exploitability and exact head-to-head evaluation.

All values are reported in mb/h: expected chips per hand times 1000,
divided by the ante.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import backend
from .best_response import _global_br, best_response, expected_payoff, node_values, subgame_best_response_values
from .game import GameTree
from .strategy import (
    BeliefTable,
    StrategyProfile,
    counterfactual_reach,
    normalize_by_infoset,
    reach_probabilities,
)


def to_mbh(tree: GameTree, chips: float) -> float:
    return chips * 1000.0 / tree.ante


def nash_conv(tree: GameTree, profile: StrategyProfile) -> float:
    """Sum of both players' best-response values, in chips."""
    return sum(best_response(tree, profile, p).value for p in range(tree.players))


def exploitability(tree: GameTree, profile: StrategyProfile) -> float:
    return to_mbh(tree, nash_conv(tree, profile) / 2.0)


@dataclass(frozen=True)
class InfosetGaps:
    """Per-infoset sequential-rationality gaps (chips) and chance weights."""

    gap: np.ndarray
    chance_weight: np.ndarray
    beliefs: BeliefTable


def infoset_gaps(tree: GameTree, profile: StrategyProfile, exact_subgames: bool = False) -> InfosetGaps:
    """Gain from a full best response in every infoset's counterfactual subgame.

    Where the infoset is reached with positive counterfactual weight, the
    global best response is already optimal inside the subgame, so its
    action values are reused. Zero-weight infosets get a dedicated subgame
    pass under their (uniform) beliefs. ``exact_subgames`` forces the
    dedicated pass everywhere.
    """
    ft = tree.flat
    reach = reach_probabilities(tree, profile)
    cf = counterfactual_reach(tree, reach)
    belief, norm = normalize_by_infoset(tree, cf)
    beliefs = BeliefTable(tree, belief)

    v_pi = node_values(tree, profile)
    q_pi = np.zeros((ft.n_infosets, ft.max_actions))
    backend.action_values(ft, v_pi, belief, q_pi)
    value_pi = (q_pi * profile.probs).sum(axis=1)

    br_value = np.empty(ft.n_infosets)
    for p in range(tree.players):
        rows = np.flatnonzero(ft.iset_owner == p)
        if exact_subgames:
            br_value[rows] = subgame_best_response_values(tree, profile, beliefs, rows)
            continue
        _, _, q_cf = _global_br(tree, profile, p, cf)
        pos = rows[norm[rows] > 0]
        best = np.where(ft.action_mask[pos], q_cf[pos], -np.inf).max(axis=1)
        br_value[pos] = best / norm[pos]
        zero = rows[norm[rows] <= 0]
        if len(zero):
            br_value[zero] = subgame_best_response_values(tree, profile, beliefs, zero)

    owner_of = np.repeat(np.arange(ft.n_infosets), np.diff(ft.member_start))
    cw = np.bincount(owner_of, weights=reach[0, ft.members], minlength=ft.n_infosets)
    return InfosetGaps(br_value - value_pi, cw, beliefs)


def total_exploitability(tree: GameTree, profile: StrategyProfile) -> float:
    """Chance-weighted sum of infoset gaps over all infosets, halved, in mb/h."""
    g = infoset_gaps(tree, profile)
    return to_mbh(tree, float(np.dot(g.chance_weight, g.gap)) / 2.0)


@dataclass(frozen=True)
class MatchResult:
    row: str
    col: str
    p1_mbh: float
    forced: bool


def forced_profile(tree: GameTree, profile: StrategyProfile, action: str) -> StrategyProfile:
    """Copy of ``profile`` with every player-0 root infoset playing ``action``.

    ``call`` is read as ``check`` where no bet is being faced.
    """
    probs = profile.probs.copy()
    for u in tree.root_infosets[0]:
        labels = tree.infosets[u].actions
        label = action
        if label not in labels and label == "call" and "check" in labels:
            label = "check"
        k = tree.action_index(u, label)
        probs[u] = 0.0
        probs[u, k] = 1.0
    return StrategyProfile(tree, probs)


def head_to_head(
    tree: GameTree,
    profile_p1: StrategyProfile,
    profile_p2: StrategyProfile,
    forced_root_action: str | None = None,
    row: str = "p1",
    col: str = "p2",
) -> MatchResult:
    """Exact expected winnings of seat 1 (player 0), in mb/h."""
    combined = profile_p1.combine(profile_p2, 1)
    if forced_root_action is not None:
        combined = forced_profile(tree, combined, forced_root_action)
    value = to_mbh(tree, float(expected_payoff(tree, combined)[0]))
    return MatchResult(row, col, value, forced_root_action is not None)


@dataclass(frozen=True)
class CrossTable:
    agents: tuple[str, ...]
    cells: tuple[tuple[MatchResult, ...], ...]  # [row][col]

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[c.p1_mbh for c in r] for r in self.cells])

    @property
    def p1_average(self) -> np.ndarray:
        return self.matrix.mean(axis=1)

    @property
    def p2_average(self) -> np.ndarray:
        return self.matrix.mean(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p1\\p2", *self.agents, "P1 Average"])
        m = self.matrix
        for i, name in enumerate(self.agents):
            w.writerow([name, *(fmt(x) for x in m[i]), fmt(self.p1_average[i])])
        w.writerow(["P2 Average", *(fmt(x) for x in self.p2_average), ""])
        return buf.getvalue()


def cross_table(
    tree: GameTree,
    agents: list[tuple[str, StrategyProfile]],
    forced_root_action: str | None = None,
) -> CrossTable:
    if len(agents) < 2:
        raise ValueError("need at least two agents")
    cells = tuple(
        tuple(
            head_to_head(tree, pa, pb, forced_root_action, row=a, col=b)
            for b, pb in agents
        )
        for a, pa in agents
    )
    return CrossTable(tuple(a for a, _ in agents), cells)


def fmt(x: float) -> str:
    """Locale-independent, 9 significant digits."""
    return format(float(x), ".9g")


def read_cross_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Parse a cross-table CSV back into agent ids and the P1 matrix."""
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    if len(rows) < 3 or rows[0][-1] != "P1 Average" or rows[-1][0] != "P2 Average":
        raise ValueError(f"malformed cross-table {path}")
    agents = rows[0][1:-1]
    body = rows[1:-1]
    if [r[0] for r in body] != agents:
        raise ValueError(f"row and column agents differ in {path}")
    return agents, np.array([[float(x) for x in r[1:-1]] for r in body])
