"""Executable yes/no questions about a Battleship board.

Questions are small s-expression programs::

    question := atom | (not q) | (and q q+) | (or q q+)
    atom     := (tile-ship E7) | (tile-color E7 red) | (any-ship REGION)
              | (count-ship REGION >= 2) | (ship-len red = 3)
              | (ship-horizontal red) | (ships-touching red green)
              | (any-unrevealed-ship REGION) | (ship-sunk red)
    REGION   := (rect A1 C3) | (row C) | (col 4) | (tiles A1 B2 ...)

Evaluation is vectorized: a question maps an ``(N, rows, cols)`` stack of
boards plus the current partial board to ``N`` truth values. Only
``any-unrevealed-ship`` and ``ship-sunk`` look at the partial board.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .board import HIDDEN, PALETTE, ROW_LETTERS, Board, BoardConfig, Coord, PartialBoard

CMPS = {"=": operator.eq, "<": operator.lt, ">": operator.gt, "<=": operator.le, ">=": operator.ge}


class QuestionSyntaxError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        super().__init__(message if pos is None else f"{message} (at position {pos})")


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Rect:
    a: Coord
    b: Coord

    def __post_init__(self):
        lo = Coord(min(self.a.row, self.b.row), min(self.a.col, self.b.col))
        hi = Coord(max(self.a.row, self.b.row), max(self.a.col, self.b.col))
        object.__setattr__(self, "a", lo)
        object.__setattr__(self, "b", hi)

    def mask(self, rows, cols):
        m = np.zeros((rows, cols), dtype=bool)
        m[self.a.row : self.b.row + 1, self.a.col : self.b.col + 1] = True
        return m

    def __str__(self):
        return f"(rect {self.a} {self.b})"


@dataclass(frozen=True)
class Row:
    row: int

    def mask(self, rows, cols):
        m = np.zeros((rows, cols), dtype=bool)
        m[self.row, :] = True
        return m

    def __str__(self):
        return f"(row {ROW_LETTERS[self.row]})"


@dataclass(frozen=True)
class Col:
    col: int

    def mask(self, rows, cols):
        m = np.zeros((rows, cols), dtype=bool)
        m[:, self.col] = True
        return m

    def __str__(self):
        return f"(col {self.col + 1})"


@dataclass(frozen=True)
class Tiles:
    tiles: tuple[Coord, ...]

    def __post_init__(self):
        if not self.tiles:
            raise ValueError("tiles region needs at least one coordinate")
        object.__setattr__(self, "tiles", tuple(sorted(set(self.tiles))))

    def mask(self, rows, cols):
        m = np.zeros((rows, cols), dtype=bool)
        for t in self.tiles:
            m[t.row, t.col] = True
        return m

    def __str__(self):
        return "(tiles " + " ".join(str(t) for t in self.tiles) + ")"


Region = Rect | Row | Col | Tiles


# ---------------------------------------------------------------------------
# AST


class Question:
    """Base class; subclasses are frozen dataclasses."""

    def children(self) -> tuple[Question, ...]:
        return ()

    def colors(self) -> list[str]:
        return []

    def is_stateful(self) -> bool:
        return any(c.is_stateful() for c in self.children())

    def _bits(self, ctx: EvalContext) -> np.ndarray:
        raise NotImplementedError

    def __lt__(self, other: Question) -> bool:
        return str(self) < str(other)


@dataclass(frozen=True)
class TileShip(Question):
    at: Coord

    def _bits(self, ctx):
        return ctx.ships[:, self.at.row, self.at.col]

    def __str__(self):
        return f"(tile-ship {self.at})"


@dataclass(frozen=True)
class TileColor(Question):
    at: Coord
    color: str

    def colors(self):
        return [self.color]

    def _bits(self, ctx):
        return ctx.boards[:, self.at.row, self.at.col] == PALETTE[self.color]

    def __str__(self):
        return f"(tile-color {self.at} {self.color})"


@dataclass(frozen=True)
class AnyShip(Question):
    region: Region

    def _bits(self, ctx):
        m = ctx.region_mask(self.region).reshape(-1)
        return ctx.ships_flat[:, m].any(axis=1)

    def __str__(self):
        return f"(any-ship {self.region})"


@dataclass(frozen=True)
class CountShip(Question):
    region: Region
    cmp: str
    k: int

    def _bits(self, ctx):
        m = ctx.region_mask(self.region).reshape(-1)
        return CMPS[self.cmp](ctx.ships_flat[:, m].sum(axis=1), self.k)

    def __str__(self):
        return f"(count-ship {self.region} {self.cmp} {self.k})"


@dataclass(frozen=True)
class ShipLen(Question):
    color: str
    cmp: str
    k: int

    def colors(self):
        return [self.color]

    def _bits(self, ctx):
        return CMPS[self.cmp](ctx.color_count(self.color), self.k)

    def __str__(self):
        return f"(ship-len {self.color} {self.cmp} {self.k})"


@dataclass(frozen=True)
class ShipHorizontal(Question):
    color: str

    def colors(self):
        return [self.color]

    def _bits(self, ctx):
        return ctx.color_mask(self.color).sum(axis=2).max(axis=1) > 1

    def __str__(self):
        return f"(ship-horizontal {self.color})"


@dataclass(frozen=True)
class ShipsTouching(Question):
    a: str
    b: str

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("ships-touching needs two different colors")
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    def colors(self):
        return [self.a, self.b]

    def _bits(self, ctx):
        ma, mb = ctx.color_mask(self.a), ctx.color_mask(self.b)
        out = (ma[:, :, :-1] & mb[:, :, 1:]).any(axis=(1, 2))
        out |= (mb[:, :, :-1] & ma[:, :, 1:]).any(axis=(1, 2))
        out |= (ma[:, :-1, :] & mb[:, 1:, :]).any(axis=(1, 2))
        out |= (mb[:, :-1, :] & ma[:, 1:, :]).any(axis=(1, 2))
        return out

    def __str__(self):
        return f"(ships-touching {self.a} {self.b})"


@dataclass(frozen=True)
class AnyUnrevealedShip(Question):
    region: Region

    def is_stateful(self):
        return True

    def _bits(self, ctx):
        m = (ctx.region_mask(self.region) & ctx.hidden).reshape(-1)
        return ctx.ships_flat[:, m].any(axis=1)

    def __str__(self):
        return f"(any-unrevealed-ship {self.region})"


@dataclass(frozen=True)
class ShipSunk(Question):
    color: str

    def colors(self):
        return [self.color]

    def is_stateful(self):
        return True

    def _bits(self, ctx):
        cm = ctx.color_mask(self.color).reshape(ctx.n, -1)
        present = cm.any(axis=1)
        hidden_part = (cm & ctx.hidden.reshape(1, -1)).any(axis=1)
        return present & ~hidden_part

    def __str__(self):
        return f"(ship-sunk {self.color})"


@dataclass(frozen=True)
class Not(Question):
    q: Question

    def children(self):
        return (self.q,)

    def _bits(self, ctx):
        return ~ctx.bits(self.q)

    def __str__(self):
        return f"(not {self.q})"


def _canonical_children(items) -> tuple[Question, ...]:
    items = tuple(items)
    if len(items) < 2:
        raise ValueError("and/or need at least two operands")
    return tuple(sorted(items, key=str))


@dataclass(frozen=True)
class And(Question):
    items: tuple[Question, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", _canonical_children(self.items))

    def children(self):
        return self.items

    def _bits(self, ctx):
        out = ctx.bits(self.items[0]).copy()
        for q in self.items[1:]:
            out &= ctx.bits(q)
        return out

    def __str__(self):
        return "(and " + " ".join(str(q) for q in self.items) + ")"


@dataclass(frozen=True)
class Or(Question):
    items: tuple[Question, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", _canonical_children(self.items))

    def children(self):
        return self.items

    def _bits(self, ctx):
        out = ctx.bits(self.items[0]).copy()
        for q in self.items[1:]:
            out |= ctx.bits(q)
        return out

    def __str__(self):
        return "(or " + " ".join(str(q) for q in self.items) + ")"


def serialize(q: Question) -> str:
    return str(q)


# ---------------------------------------------------------------------------
# evaluation


class EvalContext:
    """Shared, memoized per-board features for a particle stack.

    Atom results are cached by the atom itself, so a pool of compound
    questions costs one pass per distinct atom.
    """

    def __init__(self, boards: np.ndarray, partial: PartialBoard):
        boards = np.asarray(boards)
        if boards.ndim == 2:
            boards = boards[None]
        if boards.shape[1:] != partial.shape:
            raise ValueError(f"dimension mismatch: {boards.shape[1:]} vs {partial.shape}")
        self.boards = boards
        self.n = boards.shape[0]
        self.rows, self.cols = partial.shape
        self.partial = partial
        self.hidden = partial.cells == HIDDEN
        self.ships = boards > 0
        self.ships_flat = self.ships.reshape(self.n, -1)
        self._color: dict[str, np.ndarray] = {}
        self._count: dict[str, np.ndarray] = {}
        self._regions: dict = {}
        self._cache: dict[Question, np.ndarray] = {}

    def color_mask(self, color: str) -> np.ndarray:
        m = self._color.get(color)
        if m is None:
            m = self._color[color] = self.boards == PALETTE[color]
        return m

    def color_count(self, color: str) -> np.ndarray:
        c = self._count.get(color)
        if c is None:
            c = self._count[color] = self.color_mask(color).reshape(self.n, -1).sum(axis=1)
        return c

    def region_mask(self, region) -> np.ndarray:
        m = self._regions.get(region)
        if m is None:
            m = self._regions[region] = region.mask(self.rows, self.cols)
        return m

    def bits(self, q: Question) -> np.ndarray:
        b = self._cache.get(q)
        if b is None:
            b = self._cache[q] = np.asarray(q._bits(self), dtype=bool)
        return b


def answer_vector(q: Question, particles, partial: PartialBoard) -> np.ndarray:
    """Bit ``j`` is the answer to ``q`` on ``particles[j]``.

    ``particles`` may be an ``(N, rows, cols)`` array or a list of boards.
    """
    if isinstance(particles, (list, tuple)):
        if not particles:
            raise ValueError("no particles")
        particles = np.stack([p.cells if isinstance(p, Board) else np.asarray(p) for p in particles])
    return EvalContext(particles, partial).bits(q).copy()


def evaluate(q: Question, board: Board, partial: PartialBoard) -> bool:
    return bool(answer_vector(q, board.cells[None], partial)[0])


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise QuestionSyntaxError("unexpected character", pos)
        tok = m.group(1) or m.group(2) or m.group(3)
        out.append((tok.lower(), m.start(m.lastindex)))
        pos = m.end()
    return out


def _read(tokens, i):
    if i >= len(tokens):
        raise QuestionSyntaxError("unexpected end of input", None)
    tok, pos = tokens[i]
    if tok == "(":
        items = []
        i += 1
        while True:
            if i >= len(tokens):
                raise QuestionSyntaxError("unclosed parenthesis", pos)
            if tokens[i][0] == ")":
                return (items, pos), i + 1
            item, i = _read(tokens, i)
            items.append(item)
    if tok == ")":
        raise QuestionSyntaxError("unexpected ')'", pos)
    return (tok, pos), i + 1


class _Builder:
    def __init__(self, rows: int, cols: int):
        self.rows, self.cols = rows, cols

    def coord(self, node) -> Coord:
        tok, pos = node
        if not isinstance(tok, str):
            raise QuestionSyntaxError("expected a coordinate", pos)
        m = re.fullmatch(r"([a-z])(\d+)", tok)
        if not m:
            raise QuestionSyntaxError(f"bad coordinate {tok!r}", pos)
        c = Coord(ROW_LETTERS.index(m.group(1).upper()), int(m.group(2)) - 1)
        if not c.in_bounds(self.rows, self.cols):
            raise QuestionSyntaxError(f"coordinate {tok.upper()} out of bounds", pos)
        return c

    def color(self, node) -> str:
        tok, pos = node
        if not isinstance(tok, str) or tok not in PALETTE:
            raise QuestionSyntaxError(f"unknown color {tok!r}", pos)
        return tok

    def integer(self, node) -> int:
        tok, pos = node
        if not isinstance(tok, str) or not re.fullmatch(r"-?\d+", tok):
            raise QuestionSyntaxError(f"expected an integer, got {tok!r}", pos)
        return int(tok)

    def cmp(self, node) -> str:
        tok, pos = node
        if tok not in CMPS:
            raise QuestionSyntaxError(f"unknown comparison {tok!r}", pos)
        return tok

    def region(self, node):
        items, pos = node
        if not isinstance(items, list) or not items:
            raise QuestionSyntaxError("expected a region", pos)
        head, hpos = items[0]
        args = items[1:]
        if head == "rect" and len(args) == 2:
            return Rect(self.coord(args[0]), self.coord(args[1]))
        if head == "row" and len(args) == 1:
            tok, apos = args[0]
            if not isinstance(tok, str) or len(tok) != 1 or not tok.isalpha():
                raise QuestionSyntaxError(f"bad row {tok!r}", apos)
            r = ROW_LETTERS.index(tok.upper())
            if r >= self.rows:
                raise QuestionSyntaxError(f"row {tok.upper()} out of bounds", apos)
            return Row(r)
        if head == "col" and len(args) == 1:
            c = self.integer(args[0]) - 1
            if not 0 <= c < self.cols:
                raise QuestionSyntaxError(f"column {c + 1} out of bounds", args[0][1])
            return Col(c)
        if head == "tiles" and args:
            return Tiles(tuple(self.coord(a) for a in args))
        raise QuestionSyntaxError(f"bad region {head!r}", hpos)

    def question(self, node) -> Question:
        items, pos = node
        if not isinstance(items, list) or not items:
            raise QuestionSyntaxError("expected a parenthesized question", pos)
        head, hpos = items[0]
        args = items[1:]
        n = len(args)
        if head == "not" and n == 1:
            return Not(self.question(args[0]))
        if head in ("and", "or"):
            if n < 2:
                raise QuestionSyntaxError(f"{head} needs at least two operands", hpos)
            sub = tuple(self.question(a) for a in args)
            return And(sub) if head == "and" else Or(sub)
        if head == "tile-ship" and n == 1:
            return TileShip(self.coord(args[0]))
        if head == "tile-color" and n == 2:
            return TileColor(self.coord(args[0]), self.color(args[1]))
        if head == "any-ship" and n == 1:
            return AnyShip(self.region(args[0]))
        if head == "count-ship" and n == 3:
            return CountShip(self.region(args[0]), self.cmp(args[1]), self.integer(args[2]))
        if head == "ship-len" and n == 3:
            return ShipLen(self.color(args[0]), self.cmp(args[1]), self.integer(args[2]))
        if head == "ship-horizontal" and n == 1:
            return ShipHorizontal(self.color(args[0]))
        if head == "ships-touching" and n == 2:
            a, b = self.color(args[0]), self.color(args[1])
            if a == b:
                raise QuestionSyntaxError("ships-touching needs two different colors", hpos)
            return ShipsTouching(a, b)
        if head == "any-unrevealed-ship" and n == 1:
            return AnyUnrevealedShip(self.region(args[0]))
        if head == "ship-sunk" and n == 1:
            return ShipSunk(self.color(args[0]))
        raise QuestionSyntaxError(f"unknown form {head!r} with {n} argument(s)", hpos)


def parse(text: str, rows: int = 8, cols: int = 8) -> Question:
    """Parse a question; coordinates are checked against ``rows`` x ``cols``."""
    tokens = _tokenize(text)
    if not tokens:
        raise QuestionSyntaxError("empty question", 0)
    node, i = _read(tokens, 0)
    if i != len(tokens):
        raise QuestionSyntaxError("trailing input", tokens[i][1])
    return _Builder(rows, cols).question(node)


# ---------------------------------------------------------------------------
# candidate generation


class Candidates(list):
    """Candidate questions; ``degenerate`` is set when every candidate has a
    constant answer over the current particles (zero information)."""

    degenerate: bool = False


@lru_cache(maxsize=32)
def template_atoms(config: BoardConfig) -> tuple[Question, ...]:
    rows, cols = config.rows, config.cols
    hr, hc = rows // 2, cols // 2
    quads = []
    if rows >= 2 and cols >= 2:
        quads = [
            Rect(Coord(0, 0), Coord(hr - 1, hc - 1)),
            Rect(Coord(0, hc), Coord(hr - 1, cols - 1)),
            Rect(Coord(hr, 0), Coord(rows - 1, hc - 1)),
            Rect(Coord(hr, hc), Coord(rows - 1, cols - 1)),
        ]
    regions = [Row(r) for r in range(rows)] + [Col(c) for c in range(cols)] + quads
    atoms: list[Question] = [AnyShip(r) for r in regions]
    atoms += [AnyUnrevealedShip(r) for r in regions]
    for color in config.colors:
        for n in sorted(set(config.lengths)):
            if config.permute_lengths:
                atoms.append(ShipLen(color, "=", n))
        atoms.append(ShipHorizontal(color))
        atoms.append(ShipSunk(color))
    seen, out = set(), []
    for a in atoms:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return tuple(out)


@lru_cache(maxsize=32)
def template_pool(config: BoardConfig) -> tuple[Question, ...]:
    """Atoms, their negations, and pairwise conjunctions/disjunctions."""
    atoms = template_atoms(config)
    pool: list[Question] = list(atoms)
    pool += [Not(a) for a in atoms]
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            pool.append(And((atoms[i], atoms[j])))
            pool.append(Or((atoms[i], atoms[j])))
    return tuple(pool)


def enumerate_candidates(
    partial: PartialBoard,
    config: BoardConfig,
    k: int,
    particles: np.ndarray,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
    pool: Sequence[Question] | None = None,
    ctx: EvalContext | None = None,
) -> Candidates:
    """Sample up to ``k`` semantically distinct questions from the template pool.

    The pool is walked in a random order; a question is kept unless its
    answer vector (restricted to particles with positive weight) repeats an
    earlier one or is constant. Constant questions are only returned when the
    whole pool is constant, and the result is then flagged ``degenerate``.
    Because the walk order depends only on ``rng``, the result for ``k`` is a
    prefix of the result for any larger ``k`` under the same seed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pool = template_pool(config) if pool is None else pool
    if ctx is None:
        ctx = EvalContext(particles, partial)
    live = slice(None) if weights is None else np.asarray(weights) > 0
    order = rng.permutation(len(pool))
    kept = Candidates()
    constants: list[Question] = []
    seen: set[bytes] = set()
    for idx in order:
        q = pool[idx]
        bits = ctx.bits(q)[live]
        if bits.size == 0 or bits.all() or not bits.any():
            if len(constants) < k:
                constants.append(q)
            continue
        key = np.packbits(bits).tobytes()
        if key in seen:
            continue
        seen.add(key)
        kept.append(q)
        if len(kept) >= k:
            break
    if not kept:
        kept.extend(constants)
        kept.degenerate = True
    return kept
