"""Answer channels: exact oracle, binary-symmetric noise, or an external model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .board import Board, PartialBoard
from .questions import Question, evaluate

logger = logging.getLogger(__name__)


class ExternalAnswerer(Protocol):
    def spotter_answer(self, q: Question, board: Board, partial: PartialBoard) -> bool: ...


class SpotterError(RuntimeError):
    pass


@dataclass
class Spotter:
    """One per game. ``kind`` is ``"oracle"``, ``"noisy"`` or ``"external"``."""

    kind: str = "noisy"
    epsilon: float = 0.1
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    adapter: Any = None
    fallback: bool = True
    last_fallback: str | None = field(default=None, init=False)

    def __post_init__(self):
        if self.kind not in ("oracle", "noisy", "external"):
            raise ValueError(f"unknown spotter kind {self.kind!r}")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon out of range: {self.epsilon}")
        if self.kind == "external" and self.adapter is None:
            raise ValueError("external spotter needs an adapter")

    @property
    def channel(self) -> str:
        if self.kind == "noisy":
            return f"noisy({self.epsilon:g})"
        return self.kind

    def answer(self, q: Question, board: Board, partial: PartialBoard) -> bool:
        return self.transmit(evaluate(q, board, partial), lambda: self.adapter.spotter_answer(q, board, partial))

    def transmit(self, truth: bool, external: Callable[[], bool] | None = None) -> bool:
        """Pass a true answer through this channel."""
        self.last_fallback = None
        truth = bool(truth)
        if self.kind == "oracle":
            return truth
        if self.kind == "noisy":
            # one draw per call keeps the stream aligned whatever epsilon is
            flip = self.rng.random() < self.epsilon
            return truth != flip
        try:
            if external is None:
                raise SpotterError("no external answer for this environment")
            return bool(external())
        except Exception as e:  # noqa: BLE001 - any adapter failure
            if not self.fallback:
                raise SpotterError(str(e)) from e
            logger.warning("external spotter failed, using oracle: %s", e)
            self.last_fallback = f"spotter: {e}"
            return truth


def oracle() -> Spotter:
    return Spotter(kind="oracle", epsilon=0.0)


def noisy(epsilon: float, rng: np.random.Generator) -> Spotter:
    return Spotter(kind="noisy", epsilon=epsilon, rng=rng)
