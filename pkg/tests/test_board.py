import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bedgames.board import (
    HIDDEN,
    Board,
    BoardConfig,
    Coord,
    Depleted,
    InfeasibleConfig,
    PartialBoard,
    board_from_text,
    board_violations,
    enumerate_boards,
    is_consistent,
    is_valid,
    partial_from_text,
    placements,
    reveal,
    sample_board,
    sample_board_consistent,
    sample_boards,
    sunk_colors,
    to_text,
)



def _brute_force_boards(config: BoardConfig) -> set[bytes]:
    """Independent oracle: every placement combination, checked cell by cell."""
    rows, cols = config.rows, config.cols
    spans = {}
    for n in set(config.lengths):
        out = []
        for r in range(rows):
            for c in range(cols):
                if c + n <= cols:
                    out.append([(r, c + i) for i in range(n)])
                if r + n <= rows:
                    out.append([(r + i, c) for i in range(n)])
        spans[n] = out
    assignments = set(itertools.permutations(config.lengths)) if config.permute_lengths else {config.lengths}
    found = set()
    for lengths in assignments:
        for combo in itertools.product(*(spans[n] for n in lengths)):
            grid = np.zeros((rows, cols), dtype=np.int8)
            ok = True
            for sym, cells in zip(config.symbols, combo):
                for r, c in cells:
                    if grid[r, c]:
                        ok = False
                    grid[r, c] = sym
            if ok and not config.allow_touching:
                for r in range(rows):
                    for c in range(cols):
                        for dr, dc in ((0, 1), (1, 0)):
                            rr, cc = r + dr, c + dc
                            if rr < rows and cc < cols and grid[r, c] and grid[rr, cc] and grid[r, c] != grid[rr, cc]:
                                ok = False
            if ok:
                found.add(grid.tobytes())
    return found


def test_default_config_matches_rules():
    cfg = BoardConfig()
    assert (cfg.rows, cfg.cols) == (8, 8)
    assert sorted(cfg.lengths) == [2, 3, 4, 5]
    assert (cfg.question_budget, cfg.move_budget) == (15, 40)
    assert cfg.allow_touching


@pytest.mark.parametrize("kwargs", [
    {"rows": 2, "cols": 2, "ships": (("red", 3),)},
    {"ships": (("red", 1),)},
    {"ships": (("red", 2), ("red", 3))},
    {"question_budget": -1},
    {"ships": (("pink", 2),)},
])
def test_invalid_configs(kwargs):
    with pytest.raises(ValueError):
        BoardConfig(**kwargs)


def test_sampling_is_deterministic():
    cfg = BoardConfig()
    a = sample_board(cfg, np.random.default_rng(7))
    b = sample_board(cfg, np.random.default_rng(7))
    assert a == b
    assert is_valid(a, cfg)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_sampled_boards_are_valid(seed):
    cfg = BoardConfig()
    board = sample_board(cfg, np.random.default_rng(seed))
    assert board_violations(board, cfg) == []


def test_many_sampled_boards_valid():
    cfg = BoardConfig()
    boards = sample_boards(cfg, 10_000, np.random.default_rng(1))
    for cells in boards[::7]:
        assert is_valid(Board(cells), cfg)
    # every board has each ship exactly once with one of the fleet lengths
    counts = np.stack([(boards == s).sum(axis=(1, 2)) for s in cfg.symbols], axis=1)
    assert (np.sort(counts, axis=1) == np.array(sorted(cfg.lengths))).all()


def test_no_touching_flag():
    cfg = BoardConfig(allow_touching=False)
    for cells in sample_boards(cfg, 500, np.random.default_rng(3)):
        assert board_violations(Board(cells), cfg) == []
        assert not _touching(cells)


def _touching(cells):
    a, b = cells[:, :-1], cells[:, 1:]
    c, d = cells[:-1, :], cells[1:, :]
    return bool(((a > 0) & (b > 0) & (a != b)).any() or ((c > 0) & (d > 0) & (c != d)).any())


def test_two_by_two_uniformity():
    cfg = BoardConfig(rows=2, cols=2, ships=(("red", 2),))
    boards = sample_boards(cfg, 100_000, np.random.default_rng(11))
    keys, counts = np.unique(boards.reshape(len(boards), -1), axis=0, return_counts=True)
    assert len(keys) == 4
    np.testing.assert_allclose(counts / counts.sum(), 0.25, atol=0.02)


def test_enumeration_matches_brute_force(small):
    enumerated = enumerate_boards(small)
    keys = {b.tobytes() for b in enumerated}
    assert len(keys) == len(enumerated)
    assert keys == _brute_force_boards(small)


def test_enumeration_matches_brute_force_no_touching():
    cfg = BoardConfig(rows=4, cols=4, ships=(("red", 2), ("green", 3)), allow_touching=False)
    assert {b.tobytes() for b in enumerate_boards(cfg)} == _brute_force_boards(cfg)


def _chi2_uniform(samples, support):
    index = {b.tobytes(): i for i, b in enumerate(support)}
    counts = np.zeros(len(support))
    for s in samples:
        counts[index[s.tobytes()]] += 1
    return stats.chisquare(counts).pvalue


def test_small_config_chi_square(small):
    support = enumerate_boards(small)
    samples = sample_boards(small, 50 * len(support), np.random.default_rng(5))
    assert _chi2_uniform(samples, support) > 0.01


def test_consistent_sampling_chi_square(small):
    truth = Board(enumerate_boards(small)[17])
    partial = PartialBoard.from_board(truth, [Coord(0, 0), Coord(1, 1), Coord(2, 3)])
    support = enumerate_boards(small, partial)
    brute = [b for b in enumerate_boards(small) if is_consistent(Board(b), partial)]
    assert len(support) == len(brute)
    samples = sample_boards(small, 200 * len(support), np.random.default_rng(9), partial=partial)
    assert all(is_consistent(Board(s), partial) for s in samples[:200])
    assert _chi2_uniform(samples, support) > 0.01


def test_consistency_counts_by_filter(small):
    boards = enumerate_boards(small)
    rng = np.random.default_rng(0)
    for _ in range(10):
        truth = Board(boards[rng.integers(len(boards))])
        cells = [Coord(int(r), int(c)) for r, c in zip(rng.integers(0, 4, 3), rng.integers(0, 4, 3))]
        partial = PartialBoard.from_board(truth, cells)
        brute = sum(is_consistent(Board(b), partial) for b in boards)
        assert len(enumerate_boards(small, partial)) == brute


def test_sunk_tracker_conditioning(small):
    boards = enumerate_boards(small)
    truth = Board(boards[3])
    red = [Coord(int(r), int(c)) for r, c in zip(*np.nonzero(truth.cells == 1))]
    partial = PartialBoard.from_board(truth, red)
    assert sunk_colors(truth, partial) == {"red"}
    for cells in sample_boards(small, 200, np.random.default_rng(2), partial=partial, sunk={"red"}):
        assert ((cells == 1) == (truth.cells == 1)).all()


def test_is_consistent_examples():
    board = board_from_text("1 1\n0 0")
    assert is_consistent(board, PartialBoard.hidden(2, 2))
    assert not is_consistent(board, partial_from_text("0 -1\n-1 -1"))
    with pytest.raises(ValueError):
        is_consistent(board, PartialBoard.hidden(3, 3))


@pytest.mark.parametrize("permute", [True, False])
def test_full_ship_revealed_is_in_every_sample(permute):
    # with shuffled lengths only the sunk tracker pins the ship's extent
    cfg = BoardConfig(permute_lengths=permute)
    truth = sample_board(cfg, np.random.default_rng(4))
    ship = [Coord(int(r), int(c)) for r, c in zip(*np.nonzero(truth.cells == 4))]
    partial = PartialBoard.from_board(truth, ship)
    sunk = {"orange"} if permute else None
    for seed in range(20):
        b = sample_board_consistent(cfg, partial, np.random.default_rng(seed), sunk=sunk)
        assert ((b.cells == 4) == (truth.cells == 4)).all()


def test_inconsistent_partial_is_depleted(small):
    partial = partial_from_text("1 -1 -1 1\n-1 -1 -1 -1\n-1 -1 -1 -1\n-1 -1 -1 -1")
    with pytest.raises(Depleted):
        sample_board_consistent(small, partial, np.random.default_rng(0))


def test_infeasible_config_raises():
    cfg = BoardConfig(rows=3, cols=3, ships=(("red", 3), ("green", 3), ("purple", 3)), allow_touching=False)
    with pytest.raises(InfeasibleConfig):
        sample_board(cfg, np.random.default_rng(0))


def test_reveal_examples():
    board = board_from_text("1 1 0\n0 0 0\n2 2 2")
    p = PartialBoard.hidden(3, 3)
    p, hit, sunk = reveal(board, p, Coord(1, 1))
    assert (hit, sunk) == (False, None) and p[Coord(1, 1)] == 0
    p, hit, sunk = reveal(board, p, Coord(0, 0))
    assert (hit, sunk) == (True, None)
    p, hit, sunk = reveal(board, p, Coord(0, 1))
    assert (hit, sunk) == (True, "red")
    with pytest.raises(ValueError):
        reveal(board, p, Coord(5, 0))


def test_forty_reveals_leave_twenty_four_hidden():
    cfg = BoardConfig()
    board = sample_board(cfg, np.random.default_rng(8))
    p = PartialBoard.hidden(8, 8)
    order = np.random.default_rng(8).permutation(64)[:40]
    for i in order:
        before = p.cells.copy()
        p, _, _ = reveal(board, p, Coord(*divmod(int(i), 8)))
        changed = np.argwhere(before != p.cells)
        assert len(changed) == 1 and tuple(changed[0]) == divmod(int(i), 8)
        assert is_consistent(board, p)
    assert p.n_hidden() == 24


def test_codec_examples():
    assert to_text(board_from_text("0 0\n0 0")) == "0 0\n0 0"
    p = PartialBoard.hidden(2, 2)
    assert to_text(p).split()[0] == "-1"
    with pytest.raises(ValueError, match="ragged"):
        partial_from_text("0 0\n0")
    with pytest.raises(ValueError, match="symbol"):
        partial_from_text("0 9\n0 0")
    with pytest.raises(ValueError):
        board_from_text("0 -1\n0 0")


def test_codec_round_trip():
    cfg = BoardConfig()
    boards = sample_boards(cfg, 1000, np.random.default_rng(6))
    for cells in boards:
        b = Board(cells)
        assert board_from_text(to_text(b)) == b
    mask = np.random.default_rng(1).random((8, 8)) < 0.5
    p = PartialBoard(np.where(mask, boards[0], HIDDEN))
    assert partial_from_text(to_text(p)) == p


def test_coord_text():
    assert str(Coord.parse("E7")) == "E7"
    assert Coord.parse("a1") == Coord(0, 0)
    with pytest.raises(ValueError):
        Coord.parse("7E")


def test_placements_count():
    # horizontal: rows*(cols-n+1); vertical: (rows-n+1)*cols
    assert len(placements(8, 8, 5)) == 2 * 8 * 4
    assert len(placements(4, 4, 2)) == 2 * 4 * 3


@pytest.mark.parametrize("kwargs", [
    {},
    {"allow_touching": False},
    {"rows": 4, "cols": 4, "ships": (("red", 2), ("green", 3))},
])
def test_backends_agree(kwargs):
    cfg = BoardConfig(**kwargs)
    out = {b: sample_boards(cfg, 300, np.random.default_rng(21), backend=b) for b in ("numba", "numpy", "python")}
    np.testing.assert_array_equal(out["numba"], out["numpy"])
    np.testing.assert_array_equal(out["numba"], out["python"])


def test_backends_agree_conditioned():
    cfg = BoardConfig()
    truth = sample_board(cfg, np.random.default_rng(2))
    partial = PartialBoard.from_board(truth, [Coord(r, c) for r in range(0, 8, 2) for c in range(8)])
    out = [sample_boards(cfg, 200, np.random.default_rng(3), partial=partial, backend=b) for b in ("numba", "numpy", "python")]
    np.testing.assert_array_equal(out[0], out[1])
    np.testing.assert_array_equal(out[0], out[2])


def test_disable_numba_flag():
    import os
    import subprocess
    import sys

    code = ("from bedgames._accel import HAVE_NUMBA; from bedgames.board import *; import numpy as np; "
            "print(HAVE_NUMBA, sample_boards(BoardConfig(), 3, np.random.default_rng(0)).sum())")
    outs = {}
    for flag in ("0", "1"):
        env = {**os.environ, "BEDGAMES_DISABLE_NUMBA": flag}
        outs[flag] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                    text=True, check=True).stdout.split()
    assert outs["1"][0] == "False"
    assert outs["0"][1] == outs["1"][1]  # same boards either way
