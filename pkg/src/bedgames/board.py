"""Boards, partial boards, the uniform board prior and its conditionals.

Cells are stored as ``int8`` grids using the game's symbol table::

    -1 hidden   0 water   1 red   2 green   3 purple   4 orange

Internally coordinates are 0-indexed ``(row, col)``; text uses ``A1`` style.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Collection, Iterable

import numpy as np

from ._kernels import sample_kernel

HIDDEN = -1
WATER = 0
PALETTE: dict[str, int] = {"red": 1, "green": 2, "purple": 3, "orange": 4}
COLOR_NAMES: dict[int, str] = {v: k for k, v in PALETTE.items()}
DEFAULT_SHIPS: tuple[tuple[str, int], ...] = (("red", 2), ("green", 3), ("purple", 4), ("orange", 5))
ROW_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

PRIOR_MAX_TRIES = 10**6
CONSISTENT_MAX_TRIES = 10**5


class InfeasibleConfig(ValueError):
    """No board satisfies the configuration (or rejection gave up)."""


class Depleted(RuntimeError):
    """No consistent hypothesis could be found or kept."""


# ---------------------------------------------------------------------------
# coordinates


@dataclass(frozen=True, order=True)
class Coord:
    row: int
    col: int

    @classmethod
    def parse(cls, text: str) -> Coord:
        m = re.fullmatch(r"\s*([A-Za-z])\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"bad coordinate {text!r}")
        return cls(ROW_LETTERS.index(m.group(1).upper()), int(m.group(2)) - 1)

    def in_bounds(self, rows: int, cols: int) -> bool:
        return 0 <= self.row < rows and 0 <= self.col < cols

    def __str__(self) -> str:
        return f"{ROW_LETTERS[self.row]}{self.col + 1}"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class BoardConfig:
    """Board geometry, fleet, and game budgets.

    With ``permute_lengths`` the fleet's lengths are shuffled across colors
    on every board, so the Captain does not know which color has which length.
    """

    rows: int = 8
    cols: int = 8
    ships: tuple[tuple[str, int], ...] = DEFAULT_SHIPS
    permute_lengths: bool = True
    allow_touching: bool = True
    question_budget: int = 15
    move_budget: int = 40

    def __post_init__(self):
        object.__setattr__(self, "ships", tuple((str(c).lower(), int(n)) for c, n in self.ships))
        if self.rows < 1 or self.cols < 1 or self.rows > len(ROW_LETTERS):
            raise ValueError(f"bad board size {self.rows}x{self.cols}")
        if not self.ships:
            raise ValueError("at least one ship is required")
        colors = [c for c, _ in self.ships]
        if len(set(colors)) != len(colors):
            raise ValueError("ship colors must be distinct")
        for c, n in self.ships:
            if c not in PALETTE:
                raise ValueError(f"unknown ship color {c!r}")
            if n < 2:
                raise ValueError(f"ship {c} has length {n} < 2")
            if n > max(self.rows, self.cols):
                raise ValueError(f"ship {c} of length {n} does not fit")
        if self.rows * self.cols < sum(n for _, n in self.ships):
            raise ValueError("ships do not fit on the board")
        if self.question_budget < 0 or self.move_budget < 0:
            raise ValueError("budgets must be non-negative")

    @property
    def colors(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.ships)

    @property
    def symbols(self) -> tuple[int, ...]:
        return tuple(PALETTE[c] for c, _ in self.ships)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(n for _, n in self.ships)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def n_ship_cells(self) -> int:
        return sum(self.lengths)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "ships": [[c, n] for c, n in self.ships],
            "permute_lengths": self.permute_lengths,
            "allow_touching": self.allow_touching,
            "question_budget": self.question_budget,
            "move_budget": self.move_budget,
        }

    @classmethod
    def from_dict(cls, d: dict) -> BoardConfig:
        d = dict(d)
        if "ships" in d:
            d["ships"] = tuple(tuple(s) for s in d["ships"])
        return cls(**d)


# ---------------------------------------------------------------------------
# grids


class _Grid:
    __slots__ = ("cells",)
    _allowed_min = WATER

    def __init__(self, cells):
        arr = np.array(cells, dtype=np.int8)
        if arr.ndim != 2:
            raise ValueError("grid must be 2-D")
        if arr.size and (arr.min() < self._allowed_min or arr.max() > max(PALETTE.values())):
            raise ValueError("grid contains an unknown symbol")
        arr.setflags(write=False)
        self.cells = arr

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def __getitem__(self, coord: Coord) -> int:
        return int(self.cells[coord.row, coord.col])

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((type(self).__name__, self.cells.shape, self.cells.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}(\n{to_text(self)}\n)"

    def ship_cells(self, color: str) -> list[Coord]:
        rr, cc = np.nonzero(self.cells == PALETTE[color])
        return [Coord(int(r), int(c)) for r, c in zip(rr, cc)]


class Board(_Grid):
    """A full hidden board: water or a ship color in every cell."""

    __slots__ = ()

    def ship_length(self, color: str) -> int:
        return int((self.cells == PALETTE[color]).sum())


class PartialBoard(_Grid):
    """The Captain's view: hidden cells carry ``-1``."""

    __slots__ = ()
    _allowed_min = HIDDEN

    @classmethod
    def hidden(cls, rows: int, cols: int) -> PartialBoard:
        return cls(np.full((rows, cols), HIDDEN, dtype=np.int8))

    @classmethod
    def from_board(cls, board: Board, revealed: Iterable[Coord]) -> PartialBoard:
        cells = np.full(board.shape, HIDDEN, dtype=np.int8)
        for c in revealed:
            cells[c.row, c.col] = board.cells[c.row, c.col]
        return cls(cells)

    @property
    def hidden_mask(self) -> np.ndarray:
        return self.cells == HIDDEN

    def hidden_coords(self) -> list[Coord]:
        rr, cc = np.nonzero(self.cells == HIDDEN)
        return [Coord(int(r), int(c)) for r, c in zip(rr, cc)]

    def n_hidden(self) -> int:
        return int((self.cells == HIDDEN).sum())


# ---------------------------------------------------------------------------
# text codec


def to_text(grid: _Grid | np.ndarray) -> str:
    cells = grid.cells if isinstance(grid, _Grid) else np.asarray(grid)
    return "\n".join(" ".join(str(int(v)) for v in row) for row in cells)


def _parse_cells(text: str) -> np.ndarray:
    # lines starting with '#' are comments
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty board text")
    width = len(lines[0])
    for i, ln in enumerate(lines):
        if len(ln) != width:
            raise ValueError(f"ragged row {i + 1}: expected {width} cells, got {len(ln)}")
    try:
        vals = [[int(v) for v in ln] for ln in lines]
    except ValueError as e:
        raise ValueError(f"unknown symbol: {e}") from None
    arr = np.array(vals, dtype=np.int64)
    if arr.min() < HIDDEN or arr.max() > max(PALETTE.values()):
        raise ValueError("unknown symbol in board text")
    return arr.astype(np.int8)


def board_from_text(text: str) -> Board:
    arr = _parse_cells(text)
    if (arr == HIDDEN).any():
        raise ValueError("a full board cannot contain hidden cells")
    return Board(arr)


def partial_from_text(text: str) -> PartialBoard:
    return PartialBoard(_parse_cells(text))


# ---------------------------------------------------------------------------
# validity and consistency


def board_violations(board: Board, config: BoardConfig, lengths: dict[str, int] | None = None) -> list[str]:
    """Every invariant the board breaks; empty when valid.

    ``lengths`` fixes the color→length map; by default the configured one, or
    any permutation of it when the config permutes lengths.
    """
    problems = []
    if board.shape != config.shape:
        return [f"shape {board.shape} != {config.shape}"]
    cells = board.cells
    present = set(np.unique(cells).tolist()) - {WATER}
    if present - set(config.symbols):
        problems.append(f"unexpected ship symbols {sorted(present - set(config.symbols))}")
    seen_lengths = {}
    for color in config.colors:
        rr, cc = np.nonzero(cells == PALETTE[color])
        n = len(rr)
        seen_lengths[color] = n
        if n == 0:
            problems.append(f"{color} missing")
            continue
        if len(set(rr)) == 1:
            span = cc.max() - cc.min() + 1
        elif len(set(cc)) == 1:
            span = rr.max() - rr.min() + 1
        else:
            problems.append(f"{color} not in a straight line")
            continue
        if span != n:
            problems.append(f"{color} not contiguous")
    if lengths is None and not config.permute_lengths:
        lengths = dict(config.ships)
    if lengths is not None:
        for color, n in lengths.items():
            if seen_lengths.get(color) != n:
                problems.append(f"{color} has length {seen_lengths.get(color)}, expected {n}")
    elif sorted(seen_lengths.values()) != sorted(config.lengths):
        problems.append(f"ship lengths {sorted(seen_lengths.values())} != {sorted(config.lengths)}")
    if not config.allow_touching:
        a, b = cells[:, :-1], cells[:, 1:]
        c, d = cells[:-1, :], cells[1:, :]
        if ((a != 0) & (b != 0) & (a != b)).any() or ((c != 0) & (d != 0) & (c != d)).any():
            problems.append("ships touch")
    return problems


def is_valid(board: Board, config: BoardConfig) -> bool:
    return not board_violations(board, config)


def is_consistent(board: Board, partial: PartialBoard) -> bool:
    """True iff every revealed cell of ``partial`` matches ``board``."""
    if board.shape != partial.shape:
        raise ValueError(f"dimension mismatch: {board.shape} vs {partial.shape}")
    shown = partial.cells != HIDDEN
    return bool(np.array_equal(board.cells[shown], partial.cells[shown]))


def sunk_colors(board: Board, partial: PartialBoard) -> frozenset[str]:
    """Colors whose every cell is revealed in ``partial``."""
    out = []
    for sym in np.unique(board.cells):
        if sym == WATER:
            continue
        ship = board.cells == sym
        if not (partial.cells[ship] == HIDDEN).any():
            out.append(COLOR_NAMES[int(sym)])
    return frozenset(out)


def tracker_consistent(board: Board, partial: PartialBoard, sunk: Collection[str]) -> bool:
    """Consistency with the revealed cells and with the public sunk-ship tracker."""
    return is_consistent(board, partial) and sunk_colors(board, partial) == frozenset(sunk)


# ---------------------------------------------------------------------------
# reveal


def reveal(board: Board, partial: PartialBoard, target: Coord) -> tuple[PartialBoard, bool, str | None]:
    """Shoot ``target``: returns the new partial, whether it hit, and the color
    sunk by this shot (``None`` unless this reveal completed a ship)."""
    if board.shape != partial.shape:
        raise ValueError("dimension mismatch")
    if not target.in_bounds(*board.shape):
        raise ValueError(f"target {target} out of bounds")
    value = board[target]
    hit = value != WATER
    if partial[target] != HIDDEN:
        return partial, hit, None
    cells = partial.cells.copy()
    cells[target.row, target.col] = value
    new = PartialBoard(cells)
    sunk = None
    if hit and not (new.cells[board.cells == value] == HIDDEN).any():
        sunk = COLOR_NAMES[value]
    return new, hit, sunk


# ---------------------------------------------------------------------------
# placements and the sampler


@lru_cache(maxsize=None)
def placements(rows: int, cols: int, length: int) -> np.ndarray:
    """All in-bounds placements of a ship as flat cell indices, shape ``(P, length)``.

    Horizontal placements first, then vertical, each in row-major origin order.
    """
    out = []
    for r in range(rows):
        for c in range(cols - length + 1):
            out.append([r * cols + c + i for i in range(length)])
    for r in range(rows - length + 1):
        for c in range(cols):
            out.append([(r + i) * cols + c for i in range(length)])
    arr = np.array(out, dtype=np.int64).reshape(-1, length)
    arr.setflags(write=False)
    return arr


def _length_assignments(config: BoardConfig) -> list[tuple[int, ...]]:
    if not config.permute_lengths:
        return [config.lengths]
    return sorted(set(itertools.permutations(config.lengths)))


def _compatible(config: BoardConfig, partial: PartialBoard | None, sunk: Collection[str] | None, color: str, length: int) -> np.ndarray:
    """Placements of ``color`` with ``length`` that agree with the evidence."""
    plc = placements(config.rows, config.cols, length)
    if partial is None:
        return plc
    sym = PALETTE[color]
    flat = partial.cells.reshape(-1)
    vals = flat[plc]
    ok = ((vals == HIDDEN) | (vals == sym)).all(axis=1)
    inside = (vals == sym).sum(axis=1)
    ok &= inside == int((flat == sym).sum())
    if sunk is not None:
        if color in sunk:
            ok &= inside == length
        else:
            ok &= inside < length
    return plc[ok]


@dataclass
class _Proposal:
    cdf: np.ndarray
    ptab: np.ndarray
    offs: np.ndarray
    cells: np.ndarray
    lens: np.ndarray
    sym: np.ndarray
    assignments: list[tuple[int, ...]] = field(default_factory=list)
    tables: list[np.ndarray] = field(default_factory=list)


def _proposal(config: BoardConfig, partial: PartialBoard | None, sunk: Collection[str] | None) -> _Proposal:
    """Independent per-ship proposal restricted to evidence-compatible placements.

    A length assignment is drawn with probability proportional to the product
    of its per-ship compatible counts, then each ship's placement uniformly
    from its list. Every admissible board therefore has the same proposal
    probability, and rejecting overlaps leaves the uniform conditional.
    """
    if partial is not None and partial.shape != config.shape:
        raise ValueError(f"dimension mismatch: {partial.shape} vs {config.shape}")
    if sunk is not None:
        sunk = frozenset(sunk)
    distinct = sorted(set(config.lengths))
    n_ships = len(config.ships)
    tables = []
    counts = np.zeros((n_ships, len(distinct)), dtype=np.float64)
    for s, color in enumerate(config.colors):
        for li, length in enumerate(distinct):
            tab = _compatible(config, partial, sunk, color, length)
            tables.append(tab)
            counts[s, li] = len(tab)
    assignments = _length_assignments(config)
    ptab = np.array([[s * len(distinct) + distinct.index(n) for s, n in enumerate(a)] for a in assignments], dtype=np.int64)
    weights = np.array([np.prod([counts[s, distinct.index(n)] for s, n in enumerate(a)]) for a in assignments])
    if weights.sum() == 0:
        raise InfeasibleConfig("infeasible config: no placement agrees with the evidence")
    max_len = max(distinct)
    offs = np.zeros(len(tables) + 1, dtype=np.int64)
    offs[1:] = np.cumsum([len(t) for t in tables])
    cells = np.full((max(int(offs[-1]), 1), max_len), -1, dtype=np.int64)
    lens = np.zeros(len(tables), dtype=np.int64)
    for i, tab in enumerate(tables):
        cells[offs[i] : offs[i + 1], : tab.shape[1]] = tab
        lens[i] = distinct[i % len(distinct)]
    return _Proposal(
        cdf=np.cumsum(weights),
        ptab=ptab,
        offs=offs,
        cells=cells,
        lens=lens,
        sym=np.array(config.symbols, dtype=np.int8),
        assignments=assignments,
        tables=tables,
    )


def sample_boards(
    config: BoardConfig,
    n: int,
    rng: np.random.Generator,
    partial: PartialBoard | None = None,
    sunk: Collection[str] | None = None,
    max_tries: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Draw ``n`` boards uniformly from those consistent with the evidence.

    Returns an ``(n, rows, cols)`` int8 array. ``max_tries`` bounds the run of
    consecutive rejections; exceeding it raises ``InfeasibleConfig`` for the
    bare prior and ``Depleted`` when conditioning on a partial board.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    conditioned = partial is not None or sunk is not None
    if max_tries is None:
        max_tries = CONSISTENT_MAX_TRIES if conditioned else PRIOR_MAX_TRIES
    try:
        prop = _proposal(config, partial, sunk)
    except InfeasibleConfig:
        if conditioned:
            raise Depleted("depleted: no consistent completion exists") from None
        raise
    n_cells = config.rows * config.cols
    out = np.empty((n, n_cells), dtype=np.int8)
    k, run = 0, 0
    while k < n:
        remaining = n - k
        batch = int(min(max(2 * remaining, 256), 1 << 16))
        u = rng.random((batch, 1 + len(config.ships)))
        k, _, run = sample_kernel(
            u, prop.cdf, prop.ptab, prop.offs, prop.cells, prop.lens, prop.sym,
            config.rows, config.cols, config.allow_touching, out, k, run, max_tries,
            backend=backend,
        )
        if run >= max_tries:
            if conditioned:
                raise Depleted(f"depleted: {max_tries} consecutive rejections")
            raise InfeasibleConfig(f"infeasible config: {max_tries} consecutive rejections")
    return out.reshape(n, config.rows, config.cols)


def sample_board(config: BoardConfig, rng: np.random.Generator, backend: str | None = None) -> Board:
    return Board(sample_boards(config, 1, rng, backend=backend)[0])


def sample_board_consistent(
    config: BoardConfig,
    partial: PartialBoard,
    rng: np.random.Generator,
    max_tries: int = CONSISTENT_MAX_TRIES,
    sunk: Collection[str] | None = None,
) -> Board:
    return Board(sample_boards(config, 1, rng, partial=partial, sunk=sunk, max_tries=max_tries)[0])


# ---------------------------------------------------------------------------
# exhaustive enumeration (small boards only)


def enumerate_boards(
    config: BoardConfig,
    partial: PartialBoard | None = None,
    sunk: Collection[str] | None = None,
    limit: int = 10**6,
) -> np.ndarray:
    """Every board consistent with the evidence, shape ``(M, rows, cols)``.

    Raises ``ValueError`` when the count would exceed ``limit``.
    """
    try:
        prop = _proposal(config, partial, sunk)
    except InfeasibleConfig:
        return np.zeros((0, config.rows, config.cols), dtype=np.int8)
    n_cells = config.rows * config.cols
    distinct = sorted(set(config.lengths))
    results = []
    total = 0
    for assignment in prop.assignments:
        grids = np.zeros((1, n_cells), dtype=np.int8)
        for s, length in enumerate(assignment):
            tab = prop.tables[s * len(distinct) + distinct.index(length)]
            if len(grids) * len(tab) > 50 * limit:
                raise ValueError("enumeration-size guard exceeded")
            g = np.repeat(grids, len(tab), axis=0)
            t = np.tile(tab, (len(grids), 1))
            rows_idx = np.arange(len(g))[:, None]
            free = (g[rows_idx, t] == 0).all(axis=1)
            g, t = g[free], t[free]
            g[np.arange(len(g))[:, None], t] = prop.sym[s]
            grids = g
        if not config.allow_touching and len(grids):
            b = grids.reshape(-1, config.rows, config.cols)
            x, y = b[:, :, :-1], b[:, :, 1:]
            bad = ((x != 0) & (y != 0) & (x != y)).any(axis=(1, 2))
            x, y = b[:, :-1, :], b[:, 1:, :]
            bad |= ((x != 0) & (y != 0) & (x != y)).any(axis=(1, 2))
            grids = grids[~bad]
        total += len(grids)
        if total > limit:
            raise ValueError(f"enumeration-size guard exceeded ({total} > {limit})")
        results.append(grids)
    out = np.concatenate(results) if results else np.zeros((0, n_cells), dtype=np.int8)
    return out.reshape(-1, config.rows, config.cols)
