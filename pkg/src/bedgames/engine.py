"""Collaborative Battleship game loop and trajectory records."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .belief import DEFAULT_EPSILON, DEFAULT_PARTICLES, hit_probability_grid, init_belief, update_answer, update_reveal
from .board import (
    Board,
    BoardConfig,
    Depleted,
    PartialBoard,
    reveal,
    sample_board,
    to_text,
)
from .metrics import game_metrics
from .questions import Question
from .spotter import Spotter
from .strategy import Budgets, CaptainPolicy, CaptainView, Decision, QuestionSource, decide

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class GameError(RuntimeError):
    pass


@dataclass(frozen=True)
class GameSeeds:
    board: int
    captain: int
    spotter: int

    @classmethod
    def from_master(cls, seed: int | list[int]) -> GameSeeds:
        a, b, c = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
        return cls(int(a), int(b), int(c))

    def to_dict(self) -> dict:
        return {"board": self.board, "captain": self.captain, "spotter": self.spotter}


@dataclass
class GameState:
    truth: Board
    partial: PartialBoard
    questions_left: int
    moves_left: int
    spotter: Spotter
    events: list[dict] = field(default_factory=list)
    outcome: str = "running"
    turn: int = 0
    sunk: list[str] = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.outcome != "running"


def new_game(config: BoardConfig, truth: Board, spotter: Spotter) -> GameState:
    return GameState(
        truth=truth,
        partial=PartialBoard.hidden(config.rows, config.cols),
        questions_left=config.question_budget,
        moves_left=config.move_budget,
        spotter=spotter,
    )


def step(state: GameState, decision: Decision) -> GameState:
    """Apply one decision in place and return the state.

    Questions never consume moves.
    """
    if state.done:
        raise GameError("game is over")
    state.turn += 1
    if decision.action == "ask":
        if state.questions_left <= 0:
            raise GameError("no questions left")
        q = decision.question
        state.questions_left -= 1
        state.events.append({
            "type": "question", "turn": state.turn, "text": str(q),
            "eig": decision.eig, "p_yes": decision.p_yes,
        })
        answer = state.spotter.answer(q, state.truth, state.partial)
        if state.spotter.last_fallback:
            state.events.append({"type": "fallback", "turn": state.turn, "reason": state.spotter.last_fallback})
        state.events.append({"type": "answer", "turn": state.turn, "value": bool(answer), "channel": state.spotter.channel})
        return state
    if decision.action != "fire":
        raise GameError(f"unknown action {decision.action!r}")
    target = decision.coord
    if state.moves_left <= 0:
        raise GameError("no moves left")
    if not target.in_bounds(*state.partial.shape):
        raise GameError(f"target {target} out of bounds")
    if state.partial[target] != -1:
        raise GameError(f"{target} was already revealed")
    state.moves_left -= 1
    state.partial, hit, sunk = reveal(state.truth, state.partial, target)
    if sunk:
        state.sunk.append(sunk)
    state.events.append({"type": "shot", "turn": state.turn, "coord": str(target), "hit": bool(hit), "sunk": sunk})
    if not (state.partial.cells[state.truth.cells > 0] == -1).any():
        state.outcome = "win"
    elif state.moves_left == 0:
        state.outcome = "loss"
    return state


@dataclass
class Trajectory:
    header: dict
    events: list[dict]

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in self.events]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> Trajectory:
        rows = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0].get("type") != "header":
            raise ValueError("trajectory must start with a header line")
        if rows[0].get("v") != SCHEMA_VERSION:
            raise ValueError(f"unsupported trajectory version {rows[0].get('v')}")
        return cls(rows[0], rows[1:])

    @classmethod
    def load(cls, path) -> Trajectory:
        return cls.from_jsonl(Path(path).read_text())

    @property
    def metrics(self) -> dict | None:
        end = [e for e in self.events if e["type"] == "end"]
        return end[-1]["metrics"] if end else None

    @property
    def outcome(self) -> str:
        end = [e for e in self.events if e["type"] == "end"]
        return end[-1]["outcome"] if end else "running"


def _view(config, state, history) -> CaptainView:
    return CaptainView(
        partial=state.partial,
        budgets=Budgets(state.questions_left, state.moves_left),
        lengths=config.lengths,
        sunk={c: c in state.sunk for c in config.colors},
        history=list(history),
    )


def run_game(
    config: BoardConfig,
    policy: CaptainPolicy,
    spotter: Spotter,
    seeds: GameSeeds,
    board: Board | None = None,
    board_id: str | None = None,
    n_particles: int = DEFAULT_PARTICLES,
    belief_epsilon: float = DEFAULT_EPSILON,
    question_source: QuestionSource | None = None,
    lm: Any = None,
    snapshots: bool = True,
    extra_header: dict | None = None,
) -> Trajectory:
    """Play one game to completion. Deterministic given ``seeds``.

    ``spotter`` should own its own rng (seeded from ``seeds.spotter``).
    """
    captain_rng = np.random.default_rng(seeds.captain)
    if board is None:
        board = sample_board(config, np.random.default_rng(seeds.board))
    header = {
        "v": SCHEMA_VERSION,
        "type": "header",
        "env": "battleship",
        "config": config.to_dict(),
        "seeds": seeds.to_dict(),
        "policy": policy.to_dict(),
        "spotter": {"kind": spotter.kind, "epsilon": spotter.epsilon},
        "belief": {"particles": n_particles, "epsilon": belief_epsilon} if policy.uses_belief else None,
        # LM-only captains never consult the belief; it just scores their questions
        "eig_source": _eig_source(policy),
        "lm": getattr(lm, "describe", lambda: "offline")() if lm is not None else "offline",
        "board_id": board_id or board_digest(board),
        "board": to_text(board),
        "ship_cells": int((board.cells > 0).sum()),
    }
    if extra_header:
        header.update(extra_header)

    state = new_game(config, board, spotter)
    belief = None
    history: list[tuple[str, bool]] = []
    try:
        if policy.uses_belief:
            belief = init_belief(config, None, n_particles, belief_epsilon, captain_rng, sunk=frozenset())
        while not state.done:
            view = _view(config, state, history) if lm is not None else None
            if view is not None and hasattr(lm, "observe"):
                lm.observe(view)
            d = decide(
                policy, belief, state.partial,
                Budgets(state.questions_left, state.moves_left),
                question_source, captain_rng, lm=lm, view=view,
            )
            for reason in d.fallbacks:
                state.events.append({"type": "fallback", "turn": state.turn + 1, "reason": reason})
            partial_before = state.partial
            step(state, d)
            last = state.events[-1]
            if d.action == "ask":
                history.append((str(d.question), last["value"]))
                if belief is not None:
                    belief = update_answer(belief, d.question, last["value"], partial_before, captain_rng)
            elif belief is not None:
                belief = update_reveal(
                    belief, d.coord, int(board[d.coord]), state.partial, captain_rng, sunk=frozenset(state.sunk),
                )
                if snapshots and not state.done:
                    last["hit_grid"] = np.round(hit_probability_grid(belief, state.partial), 4).tolist()
    except Depleted as e:
        logger.warning("belief depleted: %s", e)
        state.events.append({"type": "fallback", "turn": state.turn, "reason": f"aborted: {e}"})
        state.outcome = "error"

    end = {"type": "end", "outcome": state.outcome}
    state.events.append(end)
    end["metrics"] = game_metrics(Trajectory(header, state.events)).to_dict()
    return Trajectory(header, state.events)


def _eig_source(policy: CaptainPolicy) -> str | None:
    if not policy.uses_belief:
        return None
    bayes = policy.question == "bayes" or policy.move == "bayes" or policy.decision == "lookahead"
    return "captain" if bayes else "shadow"


def board_digest(board: Board) -> str:
    return "h" + hashlib.sha1(board.cells.tobytes()).hexdigest()[:10]


def question_from_event(event: dict, config: BoardConfig) -> Question:
    from .questions import parse

    return parse(event["text"], config.rows, config.cols)
