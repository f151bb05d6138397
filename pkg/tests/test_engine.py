import json

import numpy as np
import pytest

from bedgames.board import Board, BoardConfig, Coord, Depleted, board_from_text
from bedgames.engine import GameError, GameSeeds, Trajectory, new_game, run_game, step
from bedgames.questions import AnyShip, Row
from bedgames.spotter import noisy, oracle
from bedgames.strategy import Decision, preset

from conftest import SMALL

TINY = BoardConfig(rows=2, cols=3, ships=(("red", 2),), question_budget=2, move_budget=3)
TRUTH = board_from_text("1 1 0\n0 0 0")


def test_questions_do_not_consume_moves():
    s = new_game(TINY, TRUTH, oracle())
    step(s, Decision("ask", question=AnyShip(Row(0))))
    assert (s.questions_left, s.moves_left) == (1, 3)
    assert s.events[-1] == {"type": "answer", "turn": 1, "value": True, "channel": "oracle"}
    step(s, Decision("ask", question=AnyShip(Row(1))))
    with pytest.raises(GameError, match="no questions"):
        step(s, Decision("ask", question=AnyShip(Row(1))))


def test_win_and_no_double_fire():
    s = new_game(TINY, TRUTH, oracle())
    step(s, Decision("fire", coord=Coord(0, 0)))
    with pytest.raises(GameError, match="already revealed"):
        step(s, Decision("fire", coord=Coord(0, 0)))
    with pytest.raises(GameError, match="out of bounds"):
        step(s, Decision("fire", coord=Coord(5, 0)))
    step(s, Decision("fire", coord=Coord(0, 1)))
    assert s.outcome == "win" and s.sunk == ["red"]
    assert s.events[-1]["sunk"] == "red"
    with pytest.raises(GameError, match="over"):
        step(s, Decision("fire", coord=Coord(1, 1)))


def test_loss_when_moves_run_out():
    s = new_game(TINY, TRUTH, oracle())
    for c in (Coord(1, 0), Coord(1, 1), Coord(1, 2)):
        step(s, Decision("fire", coord=c))
    assert s.outcome == "loss" and s.moves_left == 0


@pytest.mark.parametrize("name", ["random", "greedy", "lm", "bayes-q", "bayes-m", "bayes-qm", "bayes-qmd"])
def test_every_preset_finishes(name):
    seeds = GameSeeds.from_master(3)
    t = run_game(SMALL, preset(name), noisy(0.1, np.random.default_rng(seeds.spotter)), seeds, n_particles=200)
    assert t.outcome in ("win", "loss")
    shots = [e for e in t.events if e["type"] == "shot"]
    assert len({e["coord"] for e in shots}) == len(shots)
    assert sum(e["type"] == "question" for e in t.events) <= SMALL.question_budget
    assert t.metrics["moves_used"] == len(shots)


def _play(seed, name="bayes-qmd"):
    seeds = GameSeeds.from_master(seed)
    return run_game(BoardConfig(), preset(name), noisy(0.1, np.random.default_rng(seeds.spotter)), seeds, n_particles=300)


def test_deterministic():
    assert _play(4).to_jsonl() == _play(4).to_jsonl()
    assert _play(4).to_jsonl() != _play(5).to_jsonl()


def test_jsonl_round_trip(tmp_path):
    t = _play(1, "bayes-qm")
    path = tmp_path / "g.jsonl"
    t.save(path)
    back = Trajectory.load(path)
    assert back.header == t.header and back.events == t.events
    assert back.to_jsonl() == path.read_text()
    head = json.loads(path.read_text().splitlines()[0])
    assert head["v"] == 1 and head["env"] == "battleship" and head["eig_source"] == "captain"


def test_version_check():
    t = _play(1, "random")
    lines = t.to_jsonl().splitlines()
    head = json.loads(lines[0])
    head["v"] = 99
    with pytest.raises(ValueError, match="version"):
        Trajectory.from_jsonl("\n".join([json.dumps(head)] + lines[1:]))
    with pytest.raises(ValueError, match="header"):
        Trajectory.from_jsonl("\n".join(lines[1:]))


def test_seed_streams_differ():
    s = GameSeeds.from_master(0)
    assert len({s.board, s.captain, s.spotter}) == 3
    assert GameSeeds.from_master([0, 1]) != GameSeeds.from_master([0, 2])


def test_depleted_belief_ends_in_error(monkeypatch):
    import bedgames.engine as engine

    def boom(*a, **k):
        raise Depleted("depleted: test")

    monkeypatch.setattr(engine, "update_answer", boom)
    seeds = GameSeeds.from_master(0)
    t = run_game(SMALL, preset("bayes-qm"), oracle(), seeds, n_particles=50)
    assert t.outcome == "error"
    assert any(e["type"] == "fallback" and "aborted" in e["reason"] for e in t.events)


def test_eig_source_labels():
    seeds = GameSeeds.from_master(0)
    assert run_game(SMALL, preset("random"), oracle(), seeds).header["eig_source"] is None
    t = run_game(SMALL, preset("lm"), oracle(), seeds, n_particles=100)
    assert t.header["eig_source"] == "shadow"
    assert all(e["eig"] is not None for e in t.events if e["type"] == "question")
