"""Vanilla CFR and Belief Update Fictitious Play with EF and X stepsizes.

All solvers update both players simultaneously from the same iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._kernels import backend
from .best_response import (
    argmax_rows,
    belief_action_values,
    node_values,
    subgame_best_responses,
)
from .game import GameTree
from .metrics import exploitability, total_exploitability
from .strategy import (
    BeliefTable,
    StrategyProfile,
    compute_beliefs,
    counterfactual_reach,
    reach_probabilities,
    uniform_profile,
)

ALGORITHMS = ("cfr", "bufp-ef", "bufp-x")
TIE_BREAK_MODES = ("deterministic", "random")
DEFAULT_RESPONSE = {"cfr": "local", "bufp-ef": "local", "bufp-x": "subgame"}


def canonical_algorithm(name: str) -> str:
    algo = name.lower().replace("_", "-")
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return algo


def effp_alpha(t: int, l: int) -> float:
    """Normal-form stepsize 1 - ((t-1)/t)**l induced by 1/t mixing over l levels."""
    if t < 1 or l < 1:
        raise ValueError("t and l must be positive")
    return 1.0 - ((t - 1) / t) ** l


@dataclass
class SolverState:
    algorithm: str
    tree: GameTree
    profile: StrategyProfile
    beliefs: BeliefTable | None = None
    t: int = 0
    regrets: np.ndarray | None = None
    avg_accumulator: np.ndarray | None = None
    seed: int = 0
    tie_break: str = "deterministic"
    response: str = "local"
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.rng = np.random.default_rng(self.seed)

    @classmethod
    def initial(
        cls,
        tree: GameTree,
        algorithm: str,
        seed: int = 0,
        tie_break: str = "deterministic",
        response: str | None = None,
    ) -> SolverState:
        algorithm = canonical_algorithm(algorithm)
        if tie_break not in TIE_BREAK_MODES:
            raise ValueError(f"unknown tie-break mode {tie_break!r}")
        profile = uniform_profile(tree)
        if response is None:
            response = DEFAULT_RESPONSE[algorithm]
        state = cls(algorithm, tree, profile, seed=seed, tie_break=tie_break, response=response)
        if algorithm == "cfr":
            shape = profile.probs.shape
            state.regrets = np.zeros(shape)
            state.avg_accumulator = np.zeros(shape)
        else:
            state.beliefs = compute_beliefs(tree, profile)
        return state

    def output_profile(self) -> StrategyProfile:
        """The strategy a run reports: CFR's average, BUFP's current iterate."""
        if self.algorithm == "cfr":
            return average_strategy(self.tree, self.avg_accumulator)
        return self.profile

    def step(self) -> None:
        if self.algorithm == "cfr":
            cfr_iteration(self)
        else:
            bufp_iteration(self, self.algorithm)


def _tie_noise(state: SolverState) -> np.ndarray | None:
    if state.tie_break == "random":
        return state.rng.random(state.tree.flat.n_infosets)
    return None


def local_best_responses(state: SolverState) -> np.ndarray:
    """b*(u) for every infoset against the current profile and beliefs."""
    tree = state.tree
    if state.response == "subgame":
        return subgame_best_responses(tree, state.profile, state.beliefs, _tie_noise(state))
    v = node_values(tree, state.profile)
    q = belief_action_values(tree, state.profile, state.beliefs, v)
    return argmax_rows(q, tree.flat.action_mask, _tie_noise(state))


def bufp_iteration(state: SolverState, mode: str) -> SolverState:
    """One simultaneous BUFP step; ``mode`` is ``bufp-ef`` or ``bufp-x``."""
    mode = canonical_algorithm(mode)
    if mode != state.algorithm or mode == "cfr":
        raise ValueError(f"state is {state.algorithm}, not {mode}")
    tree, ft = state.tree, state.tree.flat
    best = local_best_responses(state)
    onehot = np.zeros_like(state.profile.probs)
    onehot[np.arange(ft.n_infosets), best] = 1.0
    lam = 1.0 / (state.t + 1)
    probs = state.profile.probs
    if mode == "bufp-ef":
        new = (1.0 - lam) * probs + lam * onehot
    else:
        x_pi = np.empty(ft.n_infosets)
        x_b = np.empty(ft.n_infosets)
        backend.own_reach(ft, probs, x_pi)
        backend.own_reach(ft, onehot, x_b)
        den = (1.0 - lam) * x_pi + lam * x_b
        w = np.where(den > 0, lam * x_b / np.where(den > 0, den, 1.0), lam)
        new = probs + w[:, None] * (onehot - probs)
    state.profile = StrategyProfile(tree, new)
    state.beliefs = compute_beliefs(tree, state.profile)
    state.t += 1
    return state


def regret_matching(regrets: np.ndarray, mask: np.ndarray) -> np.ndarray:
    pos = np.where(mask, np.maximum(regrets, 0.0), 0.0)
    total = pos.sum(axis=1, keepdims=True)
    uniform = mask / mask.sum(axis=1, keepdims=True)
    return np.where(total > 0, pos / np.where(total > 0, total, 1.0), uniform)


def average_strategy(tree: GameTree, accumulator: np.ndarray) -> StrategyProfile:
    return StrategyProfile(tree, regret_matching(accumulator, tree.flat.action_mask))


def cfr_iteration(state: SolverState) -> SolverState:
    """One simultaneous vanilla-CFR step with regret matching."""
    if state.algorithm != "cfr":
        raise ValueError(f"state is {state.algorithm}, not cfr")
    tree, ft = state.tree, state.tree.flat
    probs = state.profile.probs
    cf = counterfactual_reach(tree, reach_probabilities(tree, state.profile))
    v = node_values(tree, state.profile)
    q_cf = np.zeros_like(probs)
    backend.action_values(ft, v, cf, q_cf)
    v_cf = (q_cf * probs).sum(axis=1, keepdims=True)
    state.regrets += np.where(ft.action_mask, q_cf - v_cf, 0.0)
    x = np.empty(ft.n_infosets)
    backend.own_reach(ft, probs, x)
    state.avg_accumulator += x[:, None] * probs
    state.profile = StrategyProfile(tree, regret_matching(state.regrets, ft.action_mask))
    state.t += 1
    return state


@dataclass(frozen=True)
class LogRow:
    iteration: int
    exploitability_mbh: float
    total_exploitability_mbh: float
    wall_ms: float


@dataclass
class ConvergenceLog:
    rows: list[LogRow] = field(default_factory=list)

    def append(self, row: LogRow) -> None:
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError("iterations must be strictly increasing")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


@dataclass(frozen=True)
class RunResult:
    profile: StrategyProfile
    beliefs: BeliefTable
    log: ConvergenceLog
    state: SolverState


def run(
    tree: GameTree,
    algorithm: str,
    iterations: int,
    eval_every: int = 100,
    seed: int = 0,
    tie_break: str = "deterministic",
    total: bool = True,
    response: str | None = None,
) -> RunResult:
    """Iterate a solver, logging both metrics every ``eval_every`` iterations.

    Set ``total=False`` to skip total exploitability (logged as NaN).
    """
    if iterations < 1 or eval_every < 1:
        raise ValueError("iterations and eval_every must be >= 1")
    state = SolverState.initial(tree, algorithm, seed, tie_break, response)
    log = ConvergenceLog()
    start = time.perf_counter()
    for _ in range(iterations):
        state.step()
        if state.t % eval_every == 0 or state.t == iterations:
            prof = state.output_profile()
            log.append(
                LogRow(
                    state.t,
                    exploitability(tree, prof),
                    total_exploitability(tree, prof) if total else float("nan"),
                    (time.perf_counter() - start) * 1000.0,
                )
            )
    prof = state.output_profile()
    beliefs = state.beliefs if state.algorithm != "cfr" else compute_beliefs(tree, prof)
    return RunResult(prof, beliefs, log, state)
