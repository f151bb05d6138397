import math

import mpmath
from scipy import stats
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bedgames.belief import (
    ParticleBelief,
    answer_likelihood,
    binary_entropy,
    binary_entropy_array,
    eig,
    eig_ceiling,
    eig_from_p,
    exact_posterior,
    hit_probability_grid,
    init_belief,
    resample,
    update_answer,
    update_reveal,
    yes_probability,
)
from bedgames.board import Board, BoardConfig, Coord, Depleted, PartialBoard, enumerate_boards, reveal, sample_board
from bedgames.questions import AnyShip, Col, Row, TileShip, answer_vector

from conftest import SMALL

probs = st.floats(0.0, 1.0, allow_nan=False)
eps = st.floats(0.0, 0.5, allow_nan=False)


def _hb_oracle(p):
    p = mpmath.mpf(p)
    return float(-p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2))


# ---------------------------------------------------------------------------
# channel and entropy


@pytest.mark.parametrize("e, match, miss", [(0.0, 1.0, 0.0), (0.1, 0.9, 0.1), (0.5, 0.5, 0.5)])
def test_answer_likelihood(e, match, miss):
    lik = answer_likelihood(np.array([True, False]), True, e)
    np.testing.assert_allclose(lik, [match, miss])


def test_epsilon_half_is_identity(small, rng):
    b = init_belief(small, None, 300, 0.5, rng)
    after = update_answer(b, AnyShip(Row(0)), True, PartialBoard.hidden(4, 4))
    np.testing.assert_allclose(after.weights, b.weights)


def test_binary_entropy_values():
    assert binary_entropy(0.1) == pytest.approx(0.46899, abs=1e-5)
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == binary_entropy(1.0) == 0.0
    for p in (0.25, 0.01, 0.7):
        assert binary_entropy(p) == pytest.approx(_hb_oracle(p), abs=1e-12)
    with pytest.raises(ValueError):
        binary_entropy(1.5)


@settings(max_examples=200)
@given(probs)
def test_entropy_array_matches_scalar(p):
    assert binary_entropy_array(np.array([p]))[0] == pytest.approx(binary_entropy(p), abs=1e-12)


def test_eig_values():
    assert eig_from_p(0.5, 0.1) == pytest.approx(0.531, abs=1e-3)
    assert eig_from_p(0.5, 0.0) == pytest.approx(1.0)
    assert eig_from_p(0.5, 0.5) == 0.0
    assert eig_from_p(0.0, 0.1) == eig_from_p(1.0, 0.1) == 0.0
    assert eig_ceiling(0.1) == pytest.approx(0.531, abs=1e-3)


@settings(max_examples=300)
@given(probs, eps)
def test_eig_symmetric_and_bounded(p, e):
    g = eig_from_p(p, e)
    assert g == pytest.approx(eig_from_p(1 - p, e), abs=1e-12)
    assert 0.0 <= g <= eig_ceiling(e) + 1e-12


@settings(max_examples=300)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), eps)
def test_eig_increases_towards_half(a, b, e):
    lo, hi = sorted((a, b))
    assert eig_from_p(lo, e) <= eig_from_p(hi, e) + 1e-12


@settings(max_examples=200)
@given(st.floats(0.01, 0.99), eps)
def test_eig_matches_mutual_information(p, e):
    # I(X;Y) = H(Y) - H(Y|X) computed from the joint table
    joint = np.array([[p * (1 - e), p * e], [(1 - p) * e, (1 - p) * (1 - e)]])
    py, px = joint.sum(0), joint.sum(1)
    mi = sum(
        joint[i, j] * math.log2(joint[i, j] / (px[i] * py[j]))
        for i in range(2) for j in range(2) if joint[i, j] > 0
    )
    assert eig_from_p(p, e) == pytest.approx(mi, abs=1e-9)


# ---------------------------------------------------------------------------
# particles


def test_init_uniform_and_consistent(small, rng):
    truth = sample_board(small, rng)
    partial = PartialBoard.from_board(truth, [Coord(0, 0), Coord(1, 1)])
    b = init_belief(small, partial, 500, 0.1, rng)
    assert b.n == 500
    np.testing.assert_allclose(b.weights, 1 / 500)
    assert b.ess() == pytest.approx(500)
    known = partial.cells != -1
    assert (b.particles[:, known] == partial.cells[known]).all()


def test_init_validation(small, rng):
    with pytest.raises(ValueError):
        init_belief(small, None, 0, 0.1, rng)
    with pytest.raises(ValueError):
        init_belief(small, None, 10, 0.7, rng)


def test_hit_grid_examples(rng):
    cfg = BoardConfig(rows=1, cols=3, ships=(("red", 2),))
    b = init_belief(cfg, None, 4000, 0.1, rng)
    grid = hit_probability_grid(b, PartialBoard.hidden(1, 3))
    np.testing.assert_allclose(grid, [[0.5, 1.0, 0.5]], atol=0.03)
    partial = PartialBoard(np.array([[0, -1, -1]], dtype=np.int8))
    b2 = update_reveal(b, Coord(0, 0), 0, partial, rng)
    grid = hit_probability_grid(b2, partial)
    np.testing.assert_allclose(grid, [[0.0, 1.0, 1.0]])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_resampling_unbiased(seed):
    rng = np.random.default_rng(seed)
    n = 10_000
    particles = rng.integers(0, 2, size=(n, 1, 1)).astype(np.int8)
    lw = np.log(rng.random(n) + 1e-3)
    b = ParticleBelief(SMALL, particles, lw, 0.1)
    before = float(b.weights @ particles[:, 0, 0])
    after = resample(b, rng)
    np.testing.assert_allclose(after.weights, 1 / n)
    assert abs(after.particles[:, 0, 0].mean() - before) < 0.01


def test_log_order_invariance(small, rng):
    b = init_belief(small, None, 400, 0.1, rng)
    p = PartialBoard.hidden(4, 4)
    q1, q2 = AnyShip(Row(0)), TileShip(Coord(2, 2))
    a = update_answer(update_answer(b, q1, True, p), q2, False, p)
    c = update_answer(update_answer(b, q2, False, p), q1, True, p)
    np.testing.assert_allclose(a.weights, c.weights, atol=1e-12)


def test_noiseless_contradiction_depletes(small, rng):
    b = init_belief(small, None, 50, 0.0, rng)
    q = AnyShip(Row(0))
    p = PartialBoard.hidden(4, 4)
    bits = b.bits(q, p)
    if bits.all():
        q, bits = TileShip(Coord(0, 0)), b.bits(TileShip(Coord(0, 0)), p)
    b = update_answer(b, q, False, p)
    with pytest.raises(Depleted):
        update_answer(b, q, True, p)


def test_resampling_triggers_below_half(small, rng):
    b = init_belief(small, None, 400, 0.01, rng)
    p = PartialBoard.hidden(4, 4)
    q = TileShip(Coord(0, 0))
    assert b.bits(q, p).mean() < 0.45
    # a confident yes to a minority answer drops ESS below N/2
    assert update_answer(b, q, True, p).ess() < 200
    after = update_answer(b, q, True, p, rng=rng)
    np.testing.assert_allclose(after.weights, 1 / 400)
    assert len(after.replay_log) == 1
    # a majority answer keeps ESS above N/2 and leaves weights alone
    kept = update_answer(b, q, False, p, rng=rng)
    assert kept.ess() >= 200 and not np.allclose(kept.weights, 1 / 400)


def test_reveal_renormalizes_and_rejuvenates(small, rng):
    truth = sample_board(small, rng)
    b = init_belief(small, None, 300, 0.1, rng)
    partial = PartialBoard.hidden(4, 4)
    for r in range(4):
        for c in range(4):
            coord = Coord(r, c)
            partial, _, _ = reveal(truth, partial, coord)
            b = update_reveal(b, coord, int(truth.cells[r, c]), partial, rng)
            assert b.weights.sum() == pytest.approx(1.0)
            assert b.n == 300
            known = partial.cells != -1
            live = b.weights > 0
            assert (b.particles[live][:, known] == partial.cells[known]).all()
    assert (b.particles == truth.cells).all()


# ---------------------------------------------------------------------------
# against exact enumeration


def test_smc_matches_exact_posterior(small):
    rng = np.random.default_rng(7)
    truth = sample_board(small, rng)
    partial = PartialBoard.from_board(truth, [Coord(0, 0), Coord(3, 3)])
    b = init_belief(small, partial, 6000, 0.1, rng)
    qs = [(AnyShip(Row(1)), True), (TileShip(Coord(2, 1)), False)]
    for q, a in qs:
        b = update_answer(b, q, a, partial, rng=rng)
    ex = exact_posterior(small, partial, b.replay_log, 0.1)
    diff = np.abs(hit_probability_grid(b, partial) - ex.hit_grid(partial)).max()
    assert diff < 0.05
    q = AnyShip(Col(2))
    assert yes_probability(b, q, partial) == pytest.approx(ex.yes_probability(q, partial), abs=0.05)
    assert eig(b, q, partial) == pytest.approx(ex.eig(q, partial, 0.1), abs=0.05)


def test_exact_posterior_matches_bayes_by_hand(small):
    boards = enumerate_boards(small)
    p = PartialBoard.hidden(4, 4)
    q = AnyShip(Row(0))
    bits = answer_vector(q, boards, p)
    ex = exact_posterior(small, p, [], 0.1).update(q, True, p, 0.1)
    k = bits.sum()
    m = len(boards)
    manual_yes = 0.9 * k / (0.9 * k + 0.1 * (m - k))
    assert ex.probs[bits].sum() == pytest.approx(manual_yes)


def test_exact_depleted(small):
    boards = enumerate_boards(small)
    p = PartialBoard.hidden(4, 4)
    ex = exact_posterior(small, p, [], 0.0)
    with pytest.raises(Depleted):
        ex.update(AnyShip(Row(0)), True, p, 0.0).update(AnyShip(Row(0)), False, p, 0.0)
    assert len(ex.probs) == len(boards)


def test_reveal_matching_every_particle_keeps_weights(small, rng):
    truth = sample_board(small, rng)
    partial = PartialBoard.from_board(truth, [Coord(0, 0)])
    b = init_belief(small, partial, 300, 0.1, rng)
    b = update_answer(b, AnyShip(Row(1)), True, partial)
    target = Coord(0, 0)
    after = update_reveal(b, target, int(truth.cells[0, 0]), partial, rng)
    np.testing.assert_allclose(after.weights, b.weights)


def test_reveal_water_keeps_the_other_half(rng):
    cfg = BoardConfig(rows=1, cols=3, ships=(("red", 2),))
    b = init_belief(cfg, None, 1000, 0.1, rng)
    partial = PartialBoard(np.array([[-1, -1, 0]], dtype=np.int8))
    after = update_reveal(b, Coord(0, 2), 0, partial, rng)
    live = after.weights > 0
    assert (after.particles[live][:, 0, :2] == 1).all()
    np.testing.assert_allclose(after.weights[live], 1 / live.sum())


def test_particle_frequencies_match_uniform_feasible_set(small, rng):
    b = init_belief(small, None, 5000, 0.1, rng)
    boards = enumerate_boards(small)
    index = {x.tobytes(): i for i, x in enumerate(boards)}
    counts = np.bincount([index[p.tobytes()] for p in b.particles], minlength=len(boards))
    # joint frequencies: goodness of fit (a TV bound on 528 cells would need N >> 5000)
    assert stats.chisquare(counts).pvalue > 1e-3
    marg = np.abs(hit_probability_grid(b, PartialBoard.hidden(4, 4))
                  - exact_posterior(small, None, [], 0.1).hit_grid(PartialBoard.hidden(4, 4))).max()
    assert marg < 0.05
