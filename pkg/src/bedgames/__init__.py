"""Bayesian experimental design for information-seeking games.

Collaborative Battleship with a question language, a particle belief over
hidden boards, EIG-driven Captains, and a Guess Who? environment.
"""

from .belief import (
    ExactPosterior,
    ParticleBelief,
    binary_entropy,
    eig,
    eig_from_p,
    exact_posterior,
    hit_probability_grid,
    init_belief,
    update_answer,
    update_reveal,
    yes_probability,
)
from .board import (
    Board,
    BoardConfig,
    Coord,
    Depleted,
    InfeasibleConfig,
    PartialBoard,
    board_from_text,
    partial_from_text,
    reveal,
    sample_board,
    sample_boards,
    to_text,
)
from .engine import GameSeeds, Trajectory, run_game, step
from .metrics import GameMetrics, game_metrics, win_rate
from .questions import QuestionSyntaxError, answer_vector, enumerate_candidates, evaluate, parse, serialize
from .spotter import Spotter
from .strategy import CaptainPolicy, decide, preset

__version__ = "0.1.0"

__all__ = [
    "Board", "BoardConfig", "CaptainPolicy", "Coord", "Depleted", "ExactPosterior", "GameMetrics",
    "GameSeeds", "InfeasibleConfig", "PartialBoard", "ParticleBelief", "QuestionSyntaxError", "Spotter",
    "Trajectory", "answer_vector", "binary_entropy", "board_from_text", "decide", "eig", "eig_from_p",
    "enumerate_candidates", "evaluate", "exact_posterior", "game_metrics", "hit_probability_grid",
    "init_belief", "parse", "partial_from_text", "preset", "reveal", "run_game", "sample_board",
    "sample_boards", "serialize", "step", "to_text", "update_answer", "update_reveal", "win_rate",
    "yes_probability",
]
