import numpy as np
import pytest
from scipy import stats

from bedgames.board import Coord, PartialBoard, sample_board
from bedgames.questions import AnyShip, Row, TileShip, evaluate
from bedgames.spotter import Spotter, SpotterError, noisy, oracle

from conftest import SMALL


def test_flip_rate():
    s = noisy(0.1, np.random.default_rng(0))
    flips = np.array([s.transmit(True) is False for _ in range(10_000)])
    assert abs(flips.mean() - 0.1) < 0.01


def test_flips_are_independent():
    s = noisy(0.3, np.random.default_rng(1))
    flips = np.array([not s.transmit(False) for _ in range(5000)], dtype=int)
    # Wald-Wolfowitz runs test
    n1, n0 = flips.sum(), len(flips) - flips.sum()
    runs = 1 + int((flips[1:] != flips[:-1]).sum())
    mu = 2 * n1 * n0 / (n1 + n0) + 1
    var = (mu - 1) * (mu - 2) / (n1 + n0 - 1)
    z = (runs - mu) / np.sqrt(var)
    assert 2 * stats.norm.sf(abs(z)) > 0.001


def test_oracle_matches_evaluate(rng):
    board = sample_board(SMALL, rng)
    partial = PartialBoard.hidden(4, 4)
    s = oracle()
    for q in [TileShip(Coord(r, c)) for r in range(4) for c in range(4)] + [AnyShip(Row(2))]:
        assert s.answer(q, board, partial) == evaluate(q, board, partial)


def test_zero_noise_equals_oracle(rng):
    s = noisy(0.0, np.random.default_rng(5))
    assert all(s.transmit(t) == t for t in [True, False] * 100)


def test_channel_labels():
    assert oracle().channel == "oracle"
    assert noisy(0.1, np.random.default_rng(0)).channel == "noisy(0.1)"


def test_validation():
    with pytest.raises(ValueError):
        Spotter(kind="psychic")
    with pytest.raises(ValueError):
        Spotter(kind="noisy", epsilon=0.6)
    with pytest.raises(ValueError):
        Spotter(kind="external")


class _Adapter:
    def __init__(self, reply):
        self.reply = reply

    def spotter_answer(self, q, board, partial):
        if isinstance(self.reply, Exception):
            raise self.reply
        return self.reply


def test_external_answers_and_fallback(rng):
    board = sample_board(SMALL, rng)
    partial = PartialBoard.hidden(4, 4)
    q = AnyShip(Row(0))
    truth = evaluate(q, board, partial)
    s = Spotter(kind="external", adapter=_Adapter(not truth))
    assert s.answer(q, board, partial) == (not truth)
    assert s.last_fallback is None
    s = Spotter(kind="external", adapter=_Adapter(RuntimeError("timeout")))
    assert s.answer(q, board, partial) == truth
    assert "timeout" in s.last_fallback
    s = Spotter(kind="external", adapter=_Adapter(RuntimeError("timeout")), fallback=False)
    with pytest.raises(SpotterError):
        s.answer(q, board, partial)
