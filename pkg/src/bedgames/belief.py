"""Particle belief over hidden boards, noisy-answer updates, and EIG.

Weights are kept in log space. Answers pass through a binary symmetric
channel with flip probability ``epsilon``; tile reveals are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Collection

import numpy as np

from .board import (
    HIDDEN,
    PALETTE,
    BoardConfig,
    Coord,
    Depleted,
    PartialBoard,
    enumerate_boards,
    sample_boards,
)
from .questions import EvalContext, Question, answer_vector

DEFAULT_PARTICLES = 2000
DEFAULT_EPSILON = 0.1


# ---------------------------------------------------------------------------
# information theory


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) variable in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def binary_entropy_array(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p)
    return np.where((p <= 0.0) | (p >= 1.0), 0.0, h)


def eig_from_p(p: float, epsilon: float) -> float:
    """Expected information gain of a yes/no question with yes-probability
    ``p`` whose answer is flipped with probability ``epsilon``."""
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon out of range: {epsilon}")
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return max(0.0, binary_entropy(epsilon + (1.0 - 2.0 * epsilon) * p) - binary_entropy(epsilon))


def eig_ceiling(epsilon: float) -> float:
    return 1.0 - binary_entropy(epsilon)


def answer_likelihood(bits: np.ndarray, observed: bool, epsilon: float) -> np.ndarray:
    """Per-hypothesis probability of hearing ``observed`` given its true answer."""
    return np.where(np.asarray(bits, dtype=bool) == bool(observed), 1.0 - epsilon, epsilon)


def _log_lik(bits, observed, epsilon):
    with np.errstate(divide="ignore"):
        return np.log(answer_likelihood(bits, observed, epsilon))


# ---------------------------------------------------------------------------
# particle belief


@dataclass(frozen=True)
class LogEntry:
    """An absorbed answer, with the partial board it was asked against."""

    question: Question
    answer: bool
    partial: PartialBoard


@dataclass(frozen=True)
class ParticleBelief:
    config: BoardConfig
    particles: np.ndarray  # (N, rows, cols) int8
    log_weights: np.ndarray  # (N,)
    epsilon: float = DEFAULT_EPSILON
    replay_log: tuple[LogEntry, ...] = ()
    sunk: frozenset[str] | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    @property
    def weights(self) -> np.ndarray:
        w = self._cache.get("w")
        if w is None:
            lw = self.log_weights
            m = lw.max()
            if not np.isfinite(m):
                raise Depleted("depleted: all particle weights are zero")
            w = np.exp(lw - m)
            w /= w.sum()
            self._cache["w"] = w
        return w

    def ess(self) -> float:
        w = self.weights
        return float(1.0 / np.dot(w, w))

    def ship_matrix(self) -> np.ndarray:
        """``(N, rows*cols)`` float matrix of ship indicators."""
        m = self._cache.get("ships")
        if m is None:
            m = self._cache["ships"] = (self.particles > 0).reshape(self.n, -1).astype(np.float64)
        return m

    def context(self, partial: PartialBoard) -> EvalContext:
        key = ("ctx", partial)
        ctx = self._cache.get(key)
        if ctx is None:
            # one context per partial board; old ones are dropped
            for k in [k for k in self._cache if isinstance(k, tuple) and k[0] == "ctx"]:
                del self._cache[k]
            ctx = self._cache[key] = EvalContext(self.particles, partial)
        return ctx

    def bits(self, q: Question, partial: PartialBoard) -> np.ndarray:
        return self.context(partial).bits(q)


def _uniform_log(n):
    return np.full(n, -math.log(n))


def init_belief(
    config: BoardConfig,
    partial: PartialBoard | None,
    n: int,
    epsilon: float,
    rng: np.random.Generator,
    sunk: Collection[str] | None = None,
) -> ParticleBelief:
    if n < 1:
        raise ValueError("need at least one particle")
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon out of range: {epsilon}")
    particles = sample_boards(config, n, rng, partial=partial, sunk=sunk)
    particles.setflags(write=False)
    return ParticleBelief(
        config=config,
        particles=particles,
        log_weights=_uniform_log(n),
        epsilon=float(epsilon),
        sunk=None if sunk is None else frozenset(sunk),
    )


def resample(belief: ParticleBelief, rng: np.random.Generator) -> ParticleBelief:
    """Systematic resampling to N equally weighted particles."""
    n = belief.n
    cdf = np.cumsum(belief.weights)
    cdf[-1] = 1.0
    positions = (rng.random() + np.arange(n)) / n
    idx = np.searchsorted(cdf, positions, side="right")
    idx = np.minimum(idx, n - 1)
    particles = belief.particles[idx]
    particles.setflags(write=False)
    return replace(belief, particles=particles, log_weights=_uniform_log(n), _cache={})


def update_answer(
    belief: ParticleBelief,
    q: Question,
    observed: bool,
    partial: PartialBoard,
    rng: np.random.Generator | None = None,
) -> ParticleBelief:
    """Reweight by the channel likelihood of ``observed``.

    Raises ``Depleted`` when every particle contradicts a noiseless answer.
    Resamples when the effective sample size drops below N/2 and ``rng`` is given.
    """
    bits = belief.bits(q, partial)
    lw = belief.log_weights + _log_lik(bits, observed, belief.epsilon)
    if not np.isfinite(lw.max()):
        raise Depleted("depleted: the answer contradicts every particle")
    log = belief.replay_log + (LogEntry(q, bool(observed), partial),)
    new = replace(belief, log_weights=lw, replay_log=log, _cache=_carry(belief))
    if rng is not None and new.ess() < new.n / 2:
        new = resample(new, rng)
    return new


def _carry(belief):
    """Weight-independent cache entries survive a reweighting."""
    return {k: v for k, v in belief._cache.items() if k != "w"}


def replay_log_likelihood(boards: np.ndarray, log: Collection[LogEntry], epsilon: float) -> np.ndarray:
    out = np.zeros(boards.shape[0])
    for entry in log:
        out += _log_lik(answer_vector(entry.question, boards, entry.partial), entry.answer, epsilon)
    return out


def update_reveal(
    belief: ParticleBelief,
    target: Coord,
    observed_cell: int,
    partial_after: PartialBoard,
    rng: np.random.Generator,
    sunk: Collection[str] | None = None,
) -> ParticleBelief:
    """Condition on a shot's outcome (exact evidence).

    Particles disagreeing at ``target`` (or with the sunk-ship tracker, when
    given) are dropped. If the surviving ESS falls below N/2, fresh particles
    consistent with ``partial_after`` are drawn, weighted by the likelihood of
    the whole answer log, mixed with the survivors and resampled back to N.
    """
    sunk = belief.sunk if sunk is None else frozenset(sunk)
    n = belief.n
    agree = belief.particles[:, target.row, target.col] == observed_cell
    if sunk is not None:
        agree &= _tracker_agrees(belief.particles, partial_after, sunk, belief.config.colors)
    lw = np.where(agree, belief.log_weights, -np.inf)
    new = replace(belief, log_weights=lw, sunk=sunk, _cache={})
    alive = bool(np.isfinite(lw).any())
    surv_ess = new.ess() if alive else 0.0
    if surv_ess >= n / 2:
        return new
    return _rejuvenate(new, partial_after, rng, surv_ess if alive else 0.0)


def _tracker_agrees(particles, partial, sunk, colors):
    hidden = (partial.cells == HIDDEN)[None]
    ok = np.ones(particles.shape[0], dtype=bool)
    for color in colors:
        cm = particles == PALETTE[color]
        is_sunk = ~(cm & hidden).any(axis=(1, 2))
        ok &= is_sunk == (color in sunk)
    return ok


def _rejuvenate(belief: ParticleBelief, partial: PartialBoard, rng, surv_ess: float) -> ParticleBelief:
    n = belief.n
    fresh = sample_boards(belief.config, n, rng, partial=partial, sunk=belief.sunk)
    fresh_lw = replay_log_likelihood(fresh, belief.replay_log, belief.epsilon)
    if not np.isfinite(fresh_lw.max()):
        if surv_ess == 0.0:
            raise Depleted("depleted: no fresh particle explains the answer log")
        fresh_lw = None
    parts = []
    if surv_ess > 0.0:
        parts.append((belief.particles, belief.weights, surv_ess))
    if fresh_lw is not None:
        fw = np.exp(fresh_lw - fresh_lw.max())
        fw /= fw.sum()
        parts.append((fresh, fw, 1.0 / np.dot(fw, fw)))
    # each part is a self-normalized estimate of the same posterior;
    # mix them in proportion to their effective sizes
    total_ess = sum(p[2] for p in parts)
    particles = np.concatenate([p[0] for p in parts])
    weights = np.concatenate([p[1] * (p[2] / total_ess) for p in parts])
    with np.errstate(divide="ignore"):
        lw = np.log(weights)
    merged = ParticleBelief(
        config=belief.config,
        particles=particles,
        log_weights=lw,
        epsilon=belief.epsilon,
        replay_log=belief.replay_log,
        sunk=belief.sunk,
    )
    # systematic resampling back to n
    cdf = np.cumsum(merged.weights)
    cdf[-1] = 1.0
    idx = np.minimum(np.searchsorted(cdf, (rng.random() + np.arange(n)) / n, side="right"), len(cdf) - 1)
    out = particles[idx]
    out.setflags(write=False)
    return replace(merged, particles=out, log_weights=_uniform_log(n), _cache={})


# ---------------------------------------------------------------------------
# predictive quantities


def yes_probability(belief: ParticleBelief, q: Question, partial: PartialBoard) -> float:
    return _p_from_bits(belief.weights, belief.bits(q, partial))


def _p_from_bits(w, bits):
    yes = float(w[bits].sum())
    no = float(w[~bits].sum())
    if no == 0.0:
        return 1.0
    if yes == 0.0:
        return 0.0
    return yes / (yes + no)


def eig(belief: ParticleBelief, q: Question, partial: PartialBoard) -> float:
    return eig_from_p(yes_probability(belief, q, partial), belief.epsilon)


def hit_probability_grid(belief: ParticleBelief, partial: PartialBoard) -> np.ndarray:
    """Probability that each hidden cell holds a ship; revealed cells get 0."""
    grid = (belief.weights @ belief.ship_matrix()).reshape(partial.shape)
    grid = np.clip(grid, 0.0, 1.0)
    grid[partial.cells != HIDDEN] = 0.0
    return grid


# ---------------------------------------------------------------------------
# exact oracle


@dataclass(frozen=True)
class ExactPosterior:
    boards: np.ndarray  # (M, rows, cols)
    probs: np.ndarray  # (M,)

    def hit_grid(self, partial: PartialBoard) -> np.ndarray:
        grid = np.tensordot(self.probs, (self.boards > 0).astype(np.float64), axes=1)
        grid[partial.cells != HIDDEN] = 0.0
        return grid

    def yes_probability(self, q: Question, partial: PartialBoard) -> float:
        return _p_from_bits(self.probs, answer_vector(q, self.boards, partial))

    def eig(self, q: Question, partial: PartialBoard, epsilon: float) -> float:
        return eig_from_p(self.yes_probability(q, partial), epsilon)

    def update(self, q: Question, observed: bool, partial: PartialBoard, epsilon: float) -> ExactPosterior:
        p = self.probs * answer_likelihood(answer_vector(q, self.boards, partial), observed, epsilon)
        s = p.sum()
        if s == 0.0:
            raise Depleted("depleted: the answer contradicts every board")
        return ExactPosterior(self.boards, p / s)


def exact_posterior(
    config: BoardConfig,
    partial: PartialBoard | None,
    replay_log: Collection[LogEntry],
    epsilon: float,
    sunk: Collection[str] | None = None,
    limit: int = 10**6,
) -> ExactPosterior:
    """Enumerate every consistent board and weight it by the answer log."""
    boards = enumerate_boards(config, partial, sunk=sunk, limit=limit)
    if len(boards) == 0:
        raise Depleted("depleted: no board is consistent with the partial board")
    lw = replay_log_likelihood(boards, replay_log, epsilon)
    if not np.isfinite(lw.max()):
        raise Depleted("depleted: the answer log contradicts every board")
    p = np.exp(lw - lw.max())
    return ExactPosterior(boards, p / p.sum())
