import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bedgames.belief import ParticleBelief, eig_from_p, exact_posterior, init_belief, update_answer
from bedgames.board import HIDDEN, BoardConfig, Coord, PartialBoard, enumerate_boards, sample_board
from bedgames.questions import AnyShip, CountShip, Rect, Row, TileShip, template_pool
from bedgames.strategy import (
    PRESETS,
    Budgets,
    CaptainPolicy,
    decide,
    expected_post_question_hit,
    preset,
    select_move_bayes,
    select_question_bayes,
)

from conftest import SMALL

HIDDEN4 = PartialBoard.hidden(4, 4)


def _exact_belief(config, partial=None, epsilon=0.1):
    boards = enumerate_boards(config, partial)
    boards.setflags(write=False)
    return ParticleBelief(config, boards, np.full(len(boards), -np.log(len(boards))), epsilon)


def test_eig_prefers_even_split():
    assert eig_from_p(0.5, 0.1) > eig_from_p(0.9, 0.1)


def test_single_candidate():
    b = _exact_belief(SMALL)
    q = TileShip(Coord(0, 0))
    assert select_question_bayes(b, [q], HIDDEN4)[0] == q
    with pytest.raises(ValueError):
        select_question_bayes(b, [], HIDDEN4)


def test_bayes_question_matches_brute_force():
    b = _exact_belief(SMALL)
    ex = exact_posterior(SMALL, None, [], 0.1)
    pool = template_pool(SMALL)
    best_eig = max(ex.eig(q, HIDDEN4, 0.1) for q in pool)
    q, g = select_question_bayes(b, pool, HIDDEN4)
    assert g == pytest.approx(best_eig, abs=1e-12)
    ties = sorted(str(x) for x in pool if abs(ex.eig(x, HIDDEN4, 0.1) - best_eig) < 1e-12)
    assert str(q) == ties[0]


def test_question_ties_break_on_text():
    b = _exact_belief(SMALL)
    # rows A and D are mirror images under the uniform prior
    q, _ = select_question_bayes(b, [AnyShip(Row(3)), AnyShip(Row(0))], HIDDEN4)
    assert str(q) == "(any-ship (row A))"


def test_map_move_is_argmax_and_row_major():
    b = _exact_belief(SMALL)
    ex = exact_posterior(SMALL, None, [], 0.1)
    grid = ex.hit_grid(HIDDEN4)
    c = select_move_bayes(b, HIDDEN4)
    best = grid.max()
    first = next((r, cc) for r in range(4) for cc in range(4) if abs(grid[r, cc] - best) < 1e-12)
    assert (c.row, c.col) == first


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_map_never_targets_revealed(seed):
    rng = np.random.default_rng(seed)
    truth = sample_board(SMALL, rng)
    shown = [Coord(r, c) for r in range(4) for c in range(4) if rng.random() < 0.6]
    partial = PartialBoard.from_board(truth, shown)
    if partial.n_hidden == 0:
        return
    b = init_belief(SMALL, partial, 200, 0.1, rng)
    c = select_move_bayes(b, partial)
    assert partial[c] == HIDDEN


def _eph_oracle(belief, q, partial):
    """Two-branch expectation computed from explicit posteriors."""
    w = belief.weights
    bits = belief.bits(q, partial)
    e = belief.epsilon
    ships = (belief.particles > 0).astype(float)
    hidden = partial.cells == HIDDEN
    total = 0.0
    for ans in (True, False):
        lik = np.where(bits == ans, 1 - e, e)
        pa = float(w @ lik)
        if pa == 0:
            continue
        post = w * lik / pa
        grid = np.tensordot(post, ships, axes=1)
        total += pa * grid[hidden].max()
    return total


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 0.5), st.integers(0, 15))
def test_expected_post_question_hit_oracle(seed, e, cell):
    b = _exact_belief(SMALL, epsilon=e)
    rng = np.random.default_rng(seed)
    q = template_pool(SMALL)[int(rng.integers(len(template_pool(SMALL))))]
    b = update_answer(b, TileShip(Coord(*divmod(cell, 4))), bool(rng.integers(2)), HIDDEN4)
    eph = expected_post_question_hit(b, q, HIDDEN4)
    assert eph == pytest.approx(_eph_oracle(b, q, HIDDEN4), abs=1e-9)
    p_hit = float(np.tensordot(b.weights, (b.particles > 0).astype(float), axes=1).max())
    assert eph >= p_hit - 1e-9  # information never lowers the expected best hit


def test_eph_uninformative_cases():
    b = _exact_belief(SMALL, epsilon=0.5)
    grid_max = float(np.tensordot(b.weights, (b.particles > 0).astype(float), axes=1).max())
    assert expected_post_question_hit(b, AnyShip(Row(0)), HIDDEN4) == pytest.approx(grid_max)
    # a question answered "yes" by every board changes nothing
    b = _exact_belief(SMALL, epsilon=0.1)
    sure = CountShip(Rect(Coord(0, 0), Coord(3, 3)), "=", 5)
    assert b.bits(sure, HIDDEN4).all()
    assert expected_post_question_hit(b, sure, HIDDEN4) == pytest.approx(grid_max)


def test_gamma_zero_never_asks(rng):
    pol = preset("bayes-qmd", gamma=0.0)
    b = init_belief(BoardConfig(), None, 300, 0.1, rng)
    for _ in range(5):
        d = decide(pol, b, PartialBoard.hidden(8, 8), Budgets(15, 40), None, rng)
        assert d.action == "fire"


def test_lookahead_asks_when_informative(rng):
    b = init_belief(BoardConfig(), None, 1000, 0.1, rng)
    d = decide(preset("bayes-qmd"), b, PartialBoard.hidden(8, 8), Budgets(15, 40), None, rng)
    assert d.action == "ask"
    assert d.expected_hit > d.p_hit


def test_no_questions_left_fires(rng):
    b = init_belief(SMALL, None, 200, 0.1, rng)
    for name in ("bayes-qmd", "bayes-qm", "lm"):
        d = decide(preset(name), b, HIDDEN4, Budgets(0, 5), None, rng)
        assert d.action == "fire"
    with pytest.raises(ValueError):
        decide(preset("random"), None, HIDDEN4, Budgets(3, 0), None, rng)


def test_offline_lm_asks_while_budget_remains(rng):
    b = init_belief(SMALL, None, 200, 0.1, rng)
    d = decide(preset("bayes-qm"), b, HIDDEN4, Budgets(2, 5), None, rng)
    assert d.action == "ask" and d.eig is not None


def test_decide_deterministic():
    outs = []
    for _ in range(2):
        rng = np.random.default_rng(11)
        b = init_belief(BoardConfig(), None, 300, 0.1, rng)
        d = decide(preset("bayes-qmd"), b, PartialBoard.hidden(8, 8), Budgets(15, 40), None, rng)
        outs.append((d.action, str(d.question), d.coord))
    assert outs[0] == outs[1]


def test_presets_and_validation():
    assert set(PRESETS) == {"random", "greedy", "lm", "bayes-q", "bayes-m", "bayes-qm", "bayes-qmd"}
    assert not PRESETS["random"].uses_belief and PRESETS["greedy"].uses_belief
    assert preset("bayes-qmd", k=3).k == 3
    with pytest.raises(ValueError):
        preset("nope")
    with pytest.raises(ValueError):
        CaptainPolicy("x", "move", "bayes", "random")
    with pytest.raises(ValueError):
        CaptainPolicy("x", "lookahead", "none", "bayes")
    with pytest.raises(ValueError):
        preset("bayes-qmd", gamma=1.5)


def test_bayes_selection_over_random_pools():
    rng = np.random.default_rng(0)
    pool = template_pool(SMALL)
    b = _exact_belief(SMALL)
    ex = exact_posterior(SMALL, None, [], 0.1)
    for _ in range(100):
        idx = rng.choice(len(pool), size=6, replace=False)
        cands = [pool[i] for i in idx]
        exact = [ex.eig(q, HIDDEN4, 0.1) for q in cands]
        q, g = select_question_bayes(b, cands, HIDDEN4)
        assert g == pytest.approx(max(exact), abs=1e-12)


def test_single_particle_map_hits():
    cfg = BoardConfig()
    board = sample_board(cfg, np.random.default_rng(3))
    parts = board.cells[None].copy()
    parts.setflags(write=False)
    b = ParticleBelief(cfg, parts, np.zeros(1), 0.1)
    assert board.cells[select_move_bayes(b, PartialBoard.hidden(8, 8)).row,
                       select_move_bayes(b, PartialBoard.hidden(8, 8)).col] > 0


def test_map_matches_exact_argmax():
    rng = np.random.default_rng(1)
    agree = 0
    for _ in range(100):
        truth = sample_board(SMALL, rng)
        shown = [Coord(r, c) for r in range(4) for c in range(4) if rng.random() < 0.3]
        partial = PartialBoard.from_board(truth, shown)
        if partial.n_hidden == 0 or not (partial.cells == HIDDEN)[truth.cells > 0].any():
            agree += 1
            continue
        b = init_belief(SMALL, partial, 5000, 0.1, rng)
        grid = exact_posterior(SMALL, partial, [], 0.1).hit_grid(partial)
        c = select_move_bayes(b, partial)
        agree += grid[c.row, c.col] >= grid[partial.cells == HIDDEN].max() - 0.01
    assert agree >= 95
