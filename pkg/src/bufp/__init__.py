"""Belief Update Fictitious Play and vanilla CFR for two-player zero-sum games."""

from ._kernels import BACKEND
from .game import GameTree, load_game, validate
from .metrics import cross_table, exploitability, head_to_head, total_exploitability
from .solvers import ALGORITHMS, effp_alpha, run
from .strategy import StrategyProfile, compute_beliefs, uniform_profile

__all__ = [
    "ALGORITHMS",
    "BACKEND",
    "GameTree",
    "StrategyProfile",
    "compute_beliefs",
    "cross_table",
    "effp_alpha",
    "exploitability",
    "head_to_head",
    "load_game",
    "run",
    "total_exploitability",
    "uniform_profile",
    "validate",
]
