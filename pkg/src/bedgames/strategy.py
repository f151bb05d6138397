"""Captain policies: move-only baselines, EIG question selection, MAP moves,
and the discounted one-step lookahead that decides between asking and firing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .belief import ParticleBelief, answer_likelihood, eig_from_p, hit_probability_grid, _p_from_bits
from .board import HIDDEN, Coord, PartialBoard
from .questions import Candidates, Question, enumerate_candidates, template_pool

logger = logging.getLogger(__name__)

DECISION_RULES = ("move", "lm", "lookahead")
QUESTION_RULES = ("none", "lm", "bayes")
MOVE_RULES = ("random", "bayes", "lm")


@dataclass(frozen=True)
class CaptainPolicy:
    name: str
    decision: str = "move"
    question: str = "none"
    move: str = "random"
    gamma: float = 1.0
    k: int = 10

    def __post_init__(self):
        if self.decision not in DECISION_RULES:
            raise ValueError(f"unknown decision rule {self.decision!r}")
        if self.question not in QUESTION_RULES:
            raise ValueError(f"unknown question rule {self.question!r}")
        if self.move not in MOVE_RULES:
            raise ValueError(f"unknown move rule {self.move!r}")
        if self.decision == "move" and self.question != "none":
            raise ValueError("move-only policies cannot ask questions")
        if self.decision != "move" and self.question == "none":
            raise ValueError("a policy that may ask needs a question rule")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma out of range: {self.gamma}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def uses_belief(self) -> bool:
        return self.move == "bayes" or self.question != "none" or self.decision == "lookahead"

    def to_dict(self) -> dict:
        return {"name": self.name, "decision": self.decision, "question": self.question,
                "move": self.move, "gamma": self.gamma, "k": self.k}


PRESETS: dict[str, CaptainPolicy] = {
    "random": CaptainPolicy("random", "move", "none", "random"),
    "greedy": CaptainPolicy("greedy", "move", "none", "bayes"),
    "lm": CaptainPolicy("lm", "lm", "lm", "lm"),
    "bayes-q": CaptainPolicy("bayes-q", "lm", "bayes", "lm"),
    "bayes-m": CaptainPolicy("bayes-m", "lm", "lm", "bayes"),
    "bayes-qm": CaptainPolicy("bayes-qm", "lm", "bayes", "bayes"),
    "bayes-qmd": CaptainPolicy("bayes-qmd", "lookahead", "bayes", "bayes"),
}


def preset(name: str, **overrides) -> CaptainPolicy:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(PRESETS)}") from None
    if not overrides:
        return base
    return CaptainPolicy(**{**base.to_dict(), **overrides})


@dataclass(frozen=True)
class Budgets:
    questions: int
    moves: int


@dataclass
class Decision:
    action: str  # "ask" or "fire"
    question: Question | None = None
    coord: Coord | None = None
    eig: float | None = None
    p_yes: float | None = None
    p_hit: float | None = None
    expected_hit: float | None = None
    fallbacks: list[str] = field(default_factory=list)


@dataclass
class CaptainView:
    """What an external Captain model gets to see."""

    partial: PartialBoard
    budgets: Budgets
    lengths: tuple[int, ...]
    sunk: dict[str, bool]
    history: list[tuple[str, bool]]


class QuestionSourceError(RuntimeError):
    pass


QuestionSource = Callable[[ParticleBelief, PartialBoard, int, np.random.Generator], Sequence[Question]]


def symbolic_source(belief: ParticleBelief, partial: PartialBoard, k: int, rng: np.random.Generator) -> Candidates:
    return enumerate_candidates(
        partial, belief.config, k, belief.particles, rng,
        weights=belief.weights, ctx=belief.context(partial),
    )


# ---------------------------------------------------------------------------
# Bayes rules


def question_scores(belief: ParticleBelief, candidates: Sequence[Question], partial: PartialBoard) -> list[tuple[float, float]]:
    """``(eig, p_yes)`` for each candidate."""
    w = belief.weights
    out = []
    for q in candidates:
        p = _p_from_bits(w, belief.bits(q, partial))
        out.append((eig_from_p(p, belief.epsilon), p))
    return out


def select_question_bayes(belief: ParticleBelief, candidates: Sequence[Question], partial: PartialBoard) -> tuple[Question, float]:
    """Highest-EIG candidate; ties go to the smallest canonical text."""
    if not candidates:
        raise ValueError("empty candidate list")
    scores = question_scores(belief, candidates, partial)
    best = min(range(len(candidates)), key=lambda i: (-scores[i][0], str(candidates[i])))
    return candidates[best], scores[best][0]


def _best_hidden(grid: np.ndarray, partial: PartialBoard) -> tuple[Coord, float]:
    hidden = partial.cells == HIDDEN
    if not hidden.any():
        raise ValueError("no hidden cells")
    masked = np.where(hidden, grid, -1.0)
    flat = int(np.argmax(masked))  # first maximum is the row-major tie-break
    r, c = divmod(flat, grid.shape[1])
    return Coord(r, c), float(grid[r, c])


def select_move_bayes(belief: ParticleBelief, partial: PartialBoard) -> Coord:
    return _best_hidden(hit_probability_grid(belief, partial), partial)[0]


def expected_post_question_hit(belief: ParticleBelief, q: Question, partial: PartialBoard) -> float:
    """Expected best hit probability after hearing the (noisy) answer to ``q``.

    Each branch is the answer-weighted belief; its normalizer is the branch
    probability, so the sum needs no explicit division.
    """
    bits = belief.bits(q, partial)
    w = belief.weights
    ships = belief.ship_matrix()
    hidden = (partial.cells == HIDDEN).reshape(-1)
    if not hidden.any():
        return 0.0
    total = 0.0
    for answer in (True, False):
        joint = w * answer_likelihood(bits, answer, belief.epsilon)
        if joint.sum() <= 0.0:
            continue  # zero-probability branch
        total += float((joint @ ships)[hidden].max())
    return min(total, 1.0)


# ---------------------------------------------------------------------------
# decide


def _uniform_hidden(partial: PartialBoard, rng: np.random.Generator) -> Coord:
    cells = partial.hidden_coords()
    if not cells:
        raise ValueError("no hidden cells")
    return cells[int(rng.integers(len(cells)))]


def decide(
    policy: CaptainPolicy,
    belief: ParticleBelief | None,
    partial: PartialBoard,
    budgets: Budgets,
    question_source: QuestionSource | None,
    rng: np.random.Generator,
    lm: Any = None,
    view: CaptainView | None = None,
) -> Decision:
    """Choose the next action.

    Without an ``lm`` handle the LM slots use offline stand-ins: the decision
    asks while questions remain, the question is a uniform draw from the
    template pool, and the move is a uniform hidden cell.
    """
    if budgets.moves <= 0:
        raise ValueError("no moves left")
    if policy.uses_belief and belief is None:
        raise ValueError(f"policy {policy.name} needs a belief")
    source = question_source or symbolic_source
    fallbacks: list[str] = []

    if policy.decision == "move":
        return Decision("fire", coord=_pick_move(policy, belief, partial, rng, lm, view, fallbacks), fallbacks=fallbacks)

    can_ask = budgets.questions > 0
    if policy.decision == "lookahead":
        u_star, p_hit = _best_hidden(hit_probability_grid(belief, partial), partial)
        if can_ask:
            try:
                q = _pick_question(policy, belief, partial, source, rng, lm, view, fallbacks)
            except QuestionSourceError as e:
                fallbacks.append(f"question source: {e}")
                q = None
            if q is not None:
                eph = expected_post_question_hit(belief, q, partial)
                if policy.gamma * eph > p_hit:
                    d = _ask(belief, q, partial, fallbacks)
                    d.p_hit, d.expected_hit = p_hit, eph
                    return d
                return Decision("fire", coord=u_star, p_hit=p_hit, expected_hit=eph, fallbacks=fallbacks)
        return Decision("fire", coord=u_star, p_hit=p_hit, fallbacks=fallbacks)

    # external decision rule
    wants_question = can_ask
    if lm is not None and can_ask:
        try:
            wants_question = lm.captain_decision(view) == "question"
        except Exception as e:  # noqa: BLE001
            fallbacks.append(f"decision: {e}")
            wants_question = False
    if wants_question:
        try:
            q = _pick_question(policy, belief, partial, source, rng, lm, view, fallbacks)
            return _ask(belief, q, partial, fallbacks)
        except QuestionSourceError as e:
            fallbacks.append(f"question source: {e}")
            return Decision("fire", coord=select_move_bayes(belief, partial) if belief is not None
                            else _uniform_hidden(partial, rng), fallbacks=fallbacks)
    return Decision("fire", coord=_pick_move(policy, belief, partial, rng, lm, view, fallbacks), fallbacks=fallbacks)


def _ask(belief, q, partial, fallbacks) -> Decision:
    eig = p = None
    if belief is not None:
        p = _p_from_bits(belief.weights, belief.bits(q, partial))
        eig = eig_from_p(p, belief.epsilon)
    return Decision("ask", question=q, eig=eig, p_yes=p, fallbacks=fallbacks)


def _pick_question(policy, belief, partial, source, rng, lm, view, fallbacks) -> Question:
    if policy.question == "bayes":
        try:
            cands = list(source(belief, partial, policy.k, rng))
        except Exception as e:  # noqa: BLE001
            raise QuestionSourceError(str(e)) from e
        if not cands:
            raise QuestionSourceError("no candidate questions")
        return select_question_bayes(belief, cands, partial)[0]
    # "lm"
    if lm is not None:
        try:
            return lm.captain_question(view)
        except Exception as e:  # noqa: BLE001
            raise QuestionSourceError(str(e)) from e
    pool = template_pool(belief.config)
    return pool[int(rng.integers(len(pool)))]


def _pick_move(policy, belief, partial, rng, lm, view, fallbacks) -> Coord:
    if policy.move == "random":
        return _uniform_hidden(partial, rng)
    if policy.move == "bayes":
        return select_move_bayes(belief, partial)
    if lm is not None:
        try:
            c = lm.captain_move(view)
            if c.in_bounds(*partial.shape) and partial[c] == HIDDEN:
                return c
            fallbacks.append(f"move: {c} is not a hidden tile")
        except Exception as e:  # noqa: BLE001
            fallbacks.append(f"move: {e}")
        if belief is not None:
            return select_move_bayes(belief, partial)
    return _uniform_hidden(partial, rng)
