"""Guess Who?: identify a hidden character with a fixed budget of yes/no
questions and a single guess, using an exact belief over the roster.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .belief import answer_likelihood, binary_entropy_array, eig_from_p
from .board import Depleted
from .spotter import Spotter

ROSTERS = {"classic24": "classic24.json", "generated100": "generated100.json"}


# ---------------------------------------------------------------------------
# roster


@dataclass(frozen=True)
class Entity:
    name: str
    attributes: dict[str, str | frozenset[str]]

    def __hash__(self):
        return hash(self.name)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        for k, v in self.attributes.items():
            out[k] = sorted(v) if isinstance(v, frozenset) else v
        return out


def _entity(d: dict) -> Entity:
    if "name" not in d:
        raise ValueError("character without a name")
    attrs = {}
    for k, v in d.items():
        if k == "name":
            continue
        if isinstance(v, list):
            attrs[k] = frozenset(str(x).lower() for x in v)
        elif isinstance(v, str):
            attrs[k] = v.lower()
        else:
            raise ValueError(f"{d['name']}.{k}: values must be strings or string arrays")
    return Entity(str(d["name"]), attrs)


def validate_roster(roster: list[Entity]) -> None:
    names = [e.name for e in roster]
    if len(set(names)) != len(names):
        raise ValueError("character names must be unique")
    seen = {}
    for e in roster:
        key = tuple(sorted((k, tuple(sorted(v)) if isinstance(v, frozenset) else v) for k, v in e.attributes.items()))
        if key in seen:
            raise ValueError(f"{e.name} and {seen[key]} are indistinguishable")
        seen[key] = e.name


def load_roster(source: str | Path) -> list[Entity]:
    """Load a roster from a JSON file or a bundled name (``classic24``, ``generated100``)."""
    if str(source) in ROSTERS:
        text = resources.files("bedgames").joinpath("data").joinpath(ROSTERS[str(source)]).read_text()
    else:
        text = Path(source).read_text()
    roster = [_entity(d) for d in json.loads(text)]
    validate_roster(roster)
    return roster


# ---------------------------------------------------------------------------
# questions


class AttributeQuestion:
    def evaluate(self, e: Entity) -> bool:
        raise NotImplementedError

    def __lt__(self, other):
        return str(self) < str(other)


def _value(e: Entity, key: str):
    try:
        return e.attributes[key]
    except KeyError:
        raise KeyError(f"unknown attribute {key!r} for {e.name}") from None


@dataclass(frozen=True)
class AttrEq(AttributeQuestion):
    key: str
    value: str

    def evaluate(self, e):
        v = _value(e, self.key)
        return self.value in v if isinstance(v, frozenset) else v == self.value

    def __str__(self):
        return f"(attr-eq {self.key} {self.value})"


@dataclass(frozen=True)
class AttrHas(AttributeQuestion):
    key: str
    value: str

    def evaluate(self, e):
        v = _value(e, self.key)
        return self.value in v if isinstance(v, frozenset) else v == self.value

    def __str__(self):
        return f"(attr-has {self.key} {self.value})"


@dataclass(frozen=True)
class GNot(AttributeQuestion):
    q: AttributeQuestion

    def evaluate(self, e):
        return not self.q.evaluate(e)

    def __str__(self):
        return f"(not {self.q})"


@dataclass(frozen=True)
class GAnd(AttributeQuestion):
    items: tuple[AttributeQuestion, ...]

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("and needs at least two operands")
        object.__setattr__(self, "items", tuple(sorted(self.items, key=str)))

    def evaluate(self, e):
        return all(q.evaluate(e) for q in self.items)

    def __str__(self):
        return "(and " + " ".join(map(str, self.items)) + ")"


@dataclass(frozen=True)
class GOr(AttributeQuestion):
    items: tuple[AttributeQuestion, ...]

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("or needs at least two operands")
        object.__setattr__(self, "items", tuple(sorted(self.items, key=str)))

    def evaluate(self, e):
        return any(q.evaluate(e) for q in self.items)

    def __str__(self):
        return "(or " + " ".join(map(str, self.items)) + ")"


def eval_entity(q: AttributeQuestion, e: Entity) -> bool:
    return bool(q.evaluate(e))


def parse_attribute_question(text: str, roster: list[Entity] | None = None) -> AttributeQuestion:
    """Parse ``(attr-eq key value)``, ``(attr-has key value)`` and not/and/or.

    With a roster, keys must belong to its schema.
    """
    from .questions import QuestionSyntaxError, _read, _tokenize

    keys = set().union(*(e.attributes for e in roster)) if roster else None
    tokens = _tokenize(text)
    if not tokens:
        raise QuestionSyntaxError("empty question", 0)
    node, i = _read(tokens, 0)
    if i != len(tokens):
        raise QuestionSyntaxError("trailing input", tokens[i][1])

    def build(node):
        items, pos = node
        if not isinstance(items, list) or not items:
            raise QuestionSyntaxError("expected a parenthesized question", pos)
        head = items[0][0]
        args = items[1:]
        if head in ("attr-eq", "attr-has") and len(args) == 2:
            k, v = args[0][0], args[1][0]
            if not isinstance(k, str) or not isinstance(v, str):
                raise QuestionSyntaxError("expected key and value", pos)
            if keys is not None and k not in keys:
                raise QuestionSyntaxError(f"unknown attribute {k!r}", args[0][1])
            return AttrEq(k, v) if head == "attr-eq" else AttrHas(k, v)
        if head == "not" and len(args) == 1:
            return GNot(build(args[0]))
        if head in ("and", "or") and len(args) >= 2:
            sub = tuple(build(a) for a in args)
            return GAnd(sub) if head == "and" else GOr(sub)
        raise QuestionSyntaxError(f"unknown form {head!r}", items[0][1])

    return build(node)


def attribute_atoms(roster: list[Entity]) -> list[AttributeQuestion]:
    values: dict[str, set[str]] = {}
    multi: set[str] = set()
    for e in roster:
        for k, v in e.attributes.items():
            if isinstance(v, frozenset):
                multi.add(k)
                values.setdefault(k, set()).update(v)
            else:
                values.setdefault(k, set()).add(v)
    atoms = []
    for k in sorted(values):
        for v in sorted(values[k]):
            atoms.append(AttrHas(k, v) if k in multi else AttrEq(k, v))
    return atoms


# ---------------------------------------------------------------------------
# belief


@dataclass(frozen=True)
class EntityBelief:
    probs: np.ndarray
    epsilon: float = 0.0

    @classmethod
    def uniform(cls, n: int, epsilon: float = 0.0) -> EntityBelief:
        return cls(np.full(n, 1.0 / n), epsilon)


def update_entity(belief: EntityBelief, q: AttributeQuestion, observed: bool, roster: list[Entity]) -> EntityBelief:
    bits = np.array([q.evaluate(e) for e in roster])
    return _update_bits(belief, bits, observed)


def _update_bits(belief, bits, observed):
    p = belief.probs * answer_likelihood(bits, observed, belief.epsilon)
    s = p.sum()
    if s <= 0.0:
        raise Depleted("depleted: the answer contradicts every character")
    return EntityBelief(p / s, belief.epsilon)


def entity_eig(belief: EntityBelief, q: AttributeQuestion, roster: list[Entity]) -> float:
    bits = np.array([q.evaluate(e) for e in roster])
    return eig_from_p(_p(belief.probs, bits), belief.epsilon)


def _p(w, bits):
    yes, no = float(w[bits].sum()), float(w[~bits].sum())
    if no == 0.0:
        return 1.0
    if yes == 0.0:
        return 0.0
    return yes / (yes + no)


@dataclass
class QuestionPool:
    """All atoms plus pairwise and/or combinations, sorted by canonical text."""

    roster: list[Entity]
    atoms: list[AttributeQuestion] = field(init=False)
    atom_bits: np.ndarray = field(init=False)
    questions: list[AttributeQuestion] = field(init=False)
    bits: np.ndarray = field(init=False)

    def __post_init__(self):
        self.atoms = attribute_atoms(self.roster)
        a = np.array([[q.evaluate(e) for e in self.roster] for q in self.atoms], dtype=bool)
        self.atom_bits = a
        iu, ju = np.triu_indices(len(self.atoms), k=1)
        qs = list(self.atoms)
        qs += [GAnd((self.atoms[i], self.atoms[j])) for i, j in zip(iu, ju)]
        qs += [GOr((self.atoms[i], self.atoms[j])) for i, j in zip(iu, ju)]
        bits = np.concatenate([a, a[iu] & a[ju], a[iu] | a[ju]])
        order = sorted(range(len(qs)), key=lambda i: str(qs[i]))
        self.questions = [qs[i] for i in order]
        self.bits = bits[order]

    def candidates(self, belief: EntityBelief) -> tuple[list[AttributeQuestion], np.ndarray, np.ndarray]:
        """Non-constant candidates, deduplicated by answer vector over the
        characters still carrying probability, with their yes-probabilities."""
        live = belief.probs > 0
        sub = self.bits[:, live]
        nonconst = np.flatnonzero(sub.any(axis=1) & ~sub.all(axis=1))
        if not len(nonconst):
            return [], np.zeros(0), np.zeros((0, len(self.roster)), dtype=bool)
        packed = np.packbits(sub[nonconst], axis=1)
        _, first = np.unique(packed, axis=0, return_index=True)
        keep = nonconst[np.sort(first)]
        kept_bits = self.bits[keep]
        p = np.clip(kept_bits.astype(np.float64) @ belief.probs, 0.0, 1.0)
        return [self.questions[i] for i in keep], p, kept_bits


def select_question(pool: QuestionPool, belief: EntityBelief):
    """Argmax-EIG question over the pool (ties: smallest canonical text)."""
    qs, p, bits = pool.candidates(belief)
    if not qs:
        return None, 0.0, None
    eps = belief.epsilon
    gains = binary_entropy_array(eps + (1 - 2 * eps) * p)
    # candidates are sorted by text, so argmax picks the tie-break winner
    i = int(np.argmax(np.round(gains, 12)))
    return qs[i], eig_from_p(float(p[i]), eps), bits[i]


# ---------------------------------------------------------------------------
# game

GW_PRESETS = {
    "lm": ("lm", "lm"),
    "bayes-q": ("bayes", "lm"),
    "bayes-m": ("lm", "bayes"),
    "bayes-qm": ("bayes", "bayes"),
}


@dataclass
class GuessWhoOutcome:
    win: bool
    target: str
    guess: str
    questions: list[dict]
    events: list[dict]
    header: dict = field(default_factory=dict)

    def trajectory(self):
        from .engine import Trajectory

        return Trajectory(self.header, self.events)

    @property
    def mean_eig(self) -> float | None:
        e = [q["eig"] for q in self.questions if q["eig"] is not None]
        return sum(e) / len(e) if e else None


def map_guess(belief: EntityBelief, roster: list[Entity]) -> Entity:
    """Most probable character; ties go to the alphabetically first name."""
    top = np.flatnonzero(belief.probs >= belief.probs.max() - 1e-12)
    return min((roster[i] for i in top), key=lambda e: e.name)


def run_guesswho(
    roster: list[Entity],
    policy: str,
    spotter: Spotter,
    budget: int = 8,
    rng: np.random.Generator | None = None,
    target: Entity | None = None,
    epsilon: float | None = None,
    lm: Any = None,
    pool: QuestionPool | None = None,
) -> GuessWhoOutcome:
    """Ask ``budget`` questions, then make exactly one guess.

    ``epsilon`` is the belief's channel noise (defaults to the spotter's).
    Offline LM stand-ins: questions drawn uniformly from the pool, guesses
    uniform over characters consistent with every answer taken literally.
    """
    if policy not in GW_PRESETS:
        raise ValueError(f"unknown policy {policy!r}; choose from {', '.join(GW_PRESETS)}")
    q_rule, g_rule = GW_PRESETS[policy]
    rng = rng or np.random.default_rng()
    if target is None:
        target = roster[int(rng.integers(len(roster)))]
    eps = spotter.epsilon if epsilon is None else epsilon
    pool = pool or QuestionPool(roster)
    belief = EntityBelief.uniform(len(roster), eps)
    literal = np.ones(len(roster), dtype=bool)
    events: list[dict] = []
    questions: list[dict] = []
    history: list[tuple[str, bool]] = []

    for turn in range(1, budget + 1):
        q = bits = None
        if q_rule == "bayes":
            q, _, bits = select_question(pool, belief)
        elif lm is not None:
            try:
                q = lm.guesswho_question(roster, history, budget - turn + 1)
            except Exception as e:  # noqa: BLE001
                events.append({"type": "fallback", "turn": turn, "reason": f"question: {e}"})
                q, _, bits = select_question(pool, belief)
        if q is None:
            q = pool.questions[int(rng.integers(len(pool.questions)))]
        if bits is None:
            bits = np.array([q.evaluate(e) for e in roster])
        eig = eig_from_p(_p(belief.probs, bits), eps)
        truth = q.evaluate(target)
        answer = spotter.transmit(truth)
        questions.append({"text": str(q), "eig": eig, "answer": answer})
        events.append({"type": "question", "turn": turn, "text": str(q), "eig": eig})
        events.append({"type": "answer", "turn": turn, "value": answer, "channel": spotter.channel})
        history.append((str(q), answer))
        belief = _update_bits(belief, bits, answer)
        literal &= bits == answer

    if g_rule == "bayes":
        guess = map_guess(belief, roster)
    else:
        guess = None
        if lm is not None:
            try:
                name = lm.guesswho_guess(roster, history)
                guess = next(e for e in roster if e.name.lower() == name.lower())
            except Exception as e:  # noqa: BLE001
                events.append({"type": "fallback", "turn": budget + 1, "reason": f"guess: {e}"})
                guess = map_guess(belief, roster)
        if guess is None:
            options = np.flatnonzero(literal) if literal.any() else np.arange(len(roster))
            guess = roster[int(options[int(rng.integers(len(options)))])]
    win = guess.name == target.name
    events.append({"type": "guess", "turn": budget + 1, "name": guess.name, "correct": win})
    events.append({"type": "end", "outcome": "win" if win else "loss"})
    header = {
        "v": 1,
        "type": "header",
        "env": "guesswho",
        "policy": policy,
        "budget": budget,
        "spotter": {"kind": spotter.kind, "epsilon": spotter.epsilon},
        "belief": {"epsilon": eps},
        "lm": getattr(lm, "describe", lambda: "offline")() if lm is not None else "offline",
        "roster": [e.name for e in roster],
        "target": target.name,
    }
    return GuessWhoOutcome(win, target.name, guess.name, questions, events, header)
