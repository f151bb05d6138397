"""Chat-completion adapter so language models can play as Captain or Spotter.

Requests use the OpenAI-compatible ``/chat/completions`` shape. A cassette
file of request/response pairs lets every call be recorded once and replayed
offline. Model questions must be written in the question language; free-text
questions would need code execution to score, which is out of scope.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import httpx
import numpy as np

from .board import PALETTE, ROW_LETTERS, Board, BoardConfig, Coord, PartialBoard
from .questions import Question, parse

logger = logging.getLogger(__name__)

PROMPT_VERSION = "v1"
DEFAULT_KEY_ENV = "BEDGAMES_API_KEY"


class AdapterError(RuntimeError):
    pass


class ParseError(AdapterError):
    pass


class CassetteMiss(AdapterError):
    pass


# ---------------------------------------------------------------------------
# transport


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach a model. The API key is read from the
    environment variable named by ``api_key_env`` and never stored."""

    base_url: str
    model: str
    api_key_env: str = DEFAULT_KEY_ENV
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float | None = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)

    def to_dict(self) -> dict:
        # the key itself is deliberately absent
        return {
            "base_url": self.base_url, "model": self.model, "api_key_env": self.api_key_env,
            "timeout": self.timeout, "max_retries": self.max_retries, "temperature": self.temperature,
        }


class RateLimiter:
    """Shared minimum spacing between requests, safe across threads."""

    def __init__(self, per_second: float | None):
        self.interval = 1.0 / per_second if per_second else 0.0
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            time.sleep(slot - now)


@dataclass
class Cassette:
    """Request/response store. ``mode`` is ``record``, ``replay`` or ``auto``
    (replay when present, otherwise call and record)."""

    path: Path
    mode: str = "auto"
    entries: dict[str, str] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.mode not in ("record", "replay", "auto"):
            raise ValueError(f"unknown cassette mode {self.mode!r}")
        self.path = Path(self.path)
        if self.path.exists() and self.mode != "record":
            self.entries = json.loads(self.path.read_text())["interactions"]

    @staticmethod
    def key(request: dict) -> str:
        return hashlib.sha256(json.dumps(request, sort_keys=True).encode()).hexdigest()

    def get(self, request: dict) -> str | None:
        return self.entries.get(self.key(request))

    def put(self, request: dict, content: str) -> None:
        with self._lock:
            self.entries[self.key(request)] = content
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps({"version": 1, "interactions": self.entries}, indent=1, sort_keys=True))


class ChatClient:
    def __init__(
        self,
        endpoint: EndpointConfig,
        cassette: Cassette | None = None,
        transport: httpx.BaseTransport | None = None,
        limiter: RateLimiter | None = None,
    ):
        self.endpoint = endpoint
        self.cassette = cassette
        self.limiter = limiter or RateLimiter(None)
        self._http = None if cassette is not None and cassette.mode == "replay" else httpx.Client(
            base_url=endpoint.base_url.rstrip("/"), timeout=endpoint.timeout, transport=transport,
        )
        self.calls = 0

    def request_body(self, messages: list[dict]) -> dict:
        body: dict[str, Any] = {"model": self.endpoint.model, "messages": messages}
        if self.endpoint.temperature is not None:
            body["temperature"] = self.endpoint.temperature
        return body

    def complete(self, messages: list[dict]) -> str:
        body = self.request_body(messages)
        if self.cassette is not None:
            hit = self.cassette.get(body)
            if hit is not None:
                return hit
            if self.cassette.mode == "replay":
                raise CassetteMiss("request not found in cassette")
        content = self._post(body)
        if self.cassette is not None:
            self.cassette.put(body, content)
        return content

    def _post(self, body: dict) -> str:
        headers = {}
        key = self.endpoint.api_key
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last: Exception | None = None
        for attempt in range(self.endpoint.max_retries + 1):
            if attempt:
                time.sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            self.limiter.wait()
            self.calls += 1
            try:
                r = self._http.post("/chat/completions", json=body, headers=headers)
            except httpx.TransportError as e:
                last = e
                logger.warning("request failed (attempt %d): %s", attempt + 1, type(e).__name__)
                continue
            if r.status_code == 429 or r.status_code >= 500:
                last = AdapterError(f"HTTP {r.status_code}")
                logger.warning("request failed (attempt %d): HTTP %d", attempt + 1, r.status_code)
                continue
            if r.status_code >= 400:
                raise AdapterError(f"HTTP {r.status_code}: {r.text[:200]}")
            try:
                return r.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise AdapterError(f"malformed completion response: {e}") from e
        raise AdapterError(f"endpoint unreachable after {self.endpoint.max_retries + 1} attempts: {last}")

    def close(self) -> None:
        if self._http is not None:
            self._http.close()


# ---------------------------------------------------------------------------
# prompts


def load_prompt(name: str, version: str = PROMPT_VERSION) -> str:
    path = resources.files("bedgames").joinpath("prompts").joinpath(version).joinpath(f"{name}.txt")
    return path.read_text().rstrip("\n")


def render(template: str, **values: Any) -> str:
    """Fill ``{{name}}`` slots; unknown slots are an error."""

    def sub(m):
        key = m.group(1)
        if key not in values:
            raise KeyError(f"missing prompt value {key!r}")
        return str(values[key])

    return re.sub(r"\{\{(\w+)\}\}", sub, template)


def board_array_text(cells: np.ndarray) -> str:
    return np.array2string(np.asarray(cells, dtype=int), separator=" ")


_NUMBER_WORDS = {1: "one", 2: "two", 3: "three", 4: "four", 5: "five", 6: "six"}


def game_setup_text(config: BoardConfig, partial: PartialBoard, sunk: dict[str, bool], lengths: dict[str, int] | None = None) -> str:
    """Shared setup block. ``lengths`` maps sunk colors to their true length."""
    names = [c.capitalize() for c in config.colors]
    trackers = []
    lengths = lengths or {}
    for color, n in zip(config.colors, config.lengths):
        if sunk.get(color):
            trackers.append(render(load_prompt("tracker_sunk"), length=lengths.get(color, n),
                                   ship_color_name=color.capitalize()))
        else:
            trackers.append(render(load_prompt("tracker_unsunk"), length=n))
    symbols = "\n".join(f"{PALETTE[c]}: {c.capitalize()} ship" for c in config.colors)
    return render(
        load_prompt("game_setup"),
        rows=config.rows, cols=config.cols,
        row_letters=", ".join(ROW_LETTERS[: config.rows]),
        col_numbers=", ".join(str(c + 1) for c in range(config.cols)),
        n_ships=_NUMBER_WORDS.get(len(names), str(len(names))),
        ship_names=", ".join(names[:-1]) + f", and {names[-1]}" if len(names) > 2 else " and ".join(names),
        min_length=min(config.lengths), max_length=max(config.lengths),
        symbol_lines=symbols,
        board=board_array_text(partial.cells),
        lengths=", ".join(str(n) for n in sorted(config.lengths)),
        ship_tracker=" ".join(trackers),
    )


def dsl_addendum(config: BoardConfig) -> str:
    return render(load_prompt("dsl_addendum"), colors=", ".join(config.colors))


def _history_text(history: list[tuple[str, bool]]) -> str:
    if not history:
        return ""
    lines = [f"Captain (question): {q}\nSpotter (answer): {'Yes' if a else 'No'}" for q, a in history]
    return "Game history:\n" + "\n".join(lines) + "\n\n"


# ---------------------------------------------------------------------------
# parsers

_ANSWER = re.compile(r"<answer>(.*?)</answer>", re.DOTALL | re.IGNORECASE)


def parse_answer_tag(text: str) -> str:
    """Content of the last ``<answer>`` tag; reasoning before it is ignored."""
    found = _ANSWER.findall(text or "")
    if not found:
        raise ParseError("no <answer></answer> tags in completion")
    return found[-1].strip()


def parse_decision(text: str) -> str:
    a = parse_answer_tag(text).strip("[]'\" .").lower()
    if a in ("question", "move"):
        return a
    raise ParseError(f"expected Question or Move, got {a!r}")


def parse_move(text: str, rows: int = 8, cols: int = 8) -> Coord:
    a = parse_answer_tag(text).strip("[]'\" .")
    try:
        c = Coord.parse(a)
    except ValueError as e:
        raise ParseError(f"bad coordinate {a!r}") from e
    if not c.in_bounds(rows, cols):
        raise ParseError(f"coordinate {a} out of bounds")
    return c


def parse_question(text: str, rows: int = 8, cols: int = 8) -> Question:
    a = parse_answer_tag(text)
    try:
        return parse(a, rows, cols)
    except ValueError as e:
        raise ParseError(f"not a valid question: {e}") from e


def parse_question_batch(text: str, rows: int = 8, cols: int = 8, parser=None) -> tuple[list, list[str]]:
    """Parse a numbered JSON mapping of questions.

    Returns the distinct parseable questions in key order and a warning for
    each dropped entry. Raises when nothing usable remains.
    """
    parser = parser or (lambda s: parse(s, rows, cols))
    raw = parse_answer_tag(text)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"answer is not JSON: {e}") from e
    if not isinstance(data, dict):
        raise ParseError("answer must be a JSON object with numbered keys")

    def order(k):
        return (0, int(k)) if str(k).isdigit() else (1, str(k))

    out, seen, warnings = [], set(), []
    for k in sorted(data, key=order):
        try:
            q = parser(str(data[k]))
        except ValueError as e:
            warnings.append(f"entry {k}: {e}")
            continue
        if str(q) in seen:
            warnings.append(f"entry {k}: duplicate of an earlier question")
            continue
        seen.add(str(q))
        out.append(q)
    for w in warnings:
        logger.warning("question batch: %s", w)
    if not out:
        raise ParseError("no parseable questions in batch")
    return out, warnings


def parse_yes_no(text: str) -> bool:
    a = parse_answer_tag(text).strip("[]'\" .").lower()
    if a == "yes":
        return True
    if a == "no":
        return False
    raise ParseError(f"expected Yes or No, got {a!r}")


# ---------------------------------------------------------------------------
# players


class _Player:
    def __init__(self, client: ChatClient, parse_retries: int | None = None):
        self.client = client
        self.parse_retries = client.endpoint.max_retries if parse_retries is None else parse_retries
        self.warnings: list[str] = []

    def describe(self) -> dict:
        return {"endpoint": self.client.endpoint.to_dict(), "prompts": PROMPT_VERSION}

    def _ask(self, prompt: str, parser):
        messages = [{"role": "user", "content": prompt}]
        last: Exception | None = None
        for _ in range(self.parse_retries + 1):
            text = self.client.complete(messages)
            try:
                return parser(text)
            except ParseError as e:
                last = e
                # the follow-up also keeps retried requests distinct in a cassette
                messages = messages + [
                    {"role": "assistant", "content": text},
                    {"role": "user", "content": f"Your reply could not be used ({e}). Please try again."},
                ]
        raise ParseError(f"unparseable after {self.parse_retries + 1} attempts: {last}")


class LMCaptain(_Player):
    """Captain backed by a chat model. The engine hands it a view of the
    public game state before every turn via ``observe``."""

    def __init__(self, client: ChatClient, config: BoardConfig, parse_retries: int | None = None):
        super().__init__(client, parse_retries)
        self.config = config
        self.view = None

    def observe(self, view) -> None:
        self.view = view

    def _prompt(self, view, task: str) -> str:
        sunk = view.sunk
        status = ", ".join(f"{c.capitalize()}: {'sunk' if s else 'not sunk'}" for c, s in sunk.items())
        return render(
            load_prompt("captain"),
            game_setup=game_setup_text(self.config, view.partial, sunk),
            board=board_array_text(view.partial.cells),
            task=task,
            questions_remaining=view.budgets.questions,
            moves_remaining=view.budgets.moves,
            sunk_status=status,
            history=_history_text(view.history),
        )

    def captain_decision(self, view) -> str:
        self.view = view
        return self._ask(self._prompt(view, load_prompt("task_decision")), parse_decision)

    def captain_move(self, view) -> Coord:
        self.view = view
        r, c = self.config.shape
        return self._ask(self._prompt(view, load_prompt("task_move")), lambda t: parse_move(t, r, c))

    def captain_question(self, view) -> Question:
        self.view = view
        r, c = self.config.shape
        task = load_prompt("task_question") + "\n" + dsl_addendum(self.config)
        return self._ask(self._prompt(view, task), lambda t: parse_question(t, r, c))

    def question_batch(self, view, k: int) -> list[Question]:
        if k < 1:
            raise ValueError("k must be >= 1")
        r, c = self.config.shape
        task = render(load_prompt("task_question_batch"), k=k) + "\n" + dsl_addendum(self.config)

        def parser(text):
            qs, warnings = parse_question_batch(text, r, c)
            self.warnings.extend(warnings)
            return qs

        return self._ask(self._prompt(view, task), parser)

    def question_source(self):
        """Question source for Bayes-Q that draws candidates from the model."""

        def source(belief, partial, k, rng):
            if self.view is None:
                raise AdapterError("no game view observed yet")
            return self.question_batch(self.view, k)

        return source

    # Guess Who

    def _gw_context(self, roster, history, budget) -> str:
        hist = "\n".join(f"Q: {q}\nA: {'Yes' if a else 'No'}" for q, a in history)
        chars = "\n".join(json.dumps(e.to_dict()) for e in roster)
        return render(load_prompt("gw_system"), budget=budget, history=hist, characters=chars)

    def guesswho_question(self, roster, history, remaining):
        from .guesswho import parse_attribute_question

        keys = sorted(set().union(*(e.attributes for e in roster)))
        prompt = render(
            load_prompt("gw_question"),
            context=self._gw_context(roster, history, len(history) + remaining),
            remaining_questions=remaining,
            dsl=render(load_prompt("gw_dsl_addendum"), keys=", ".join(keys)),
        )

        def parser(text):
            try:
                return parse_attribute_question(parse_answer_tag(text), roster)
            except ValueError as e:
                raise ParseError(str(e)) from e

        return self._ask(prompt, parser)

    def guesswho_guess(self, roster, history) -> str:
        names = {e.name.lower(): e.name for e in roster}
        prompt = render(load_prompt("gw_guess"), context=self._gw_context(roster, history, len(history)))

        def parser(text):
            a = parse_answer_tag(text).strip("[] '\".")
            if a.lower() not in names:
                raise ParseError(f"{a!r} is not on the roster")
            return names[a.lower()]

        return self._ask(prompt, parser)


class LMSpotter(_Player):
    """Direct-answer Spotter (plug into ``Spotter(kind="external", adapter=...)``)."""

    def __init__(self, client: ChatClient, config: BoardConfig, reasoning: str = "cot", parse_retries: int | None = None):
        super().__init__(client, parse_retries)
        if reasoning not in ("cot", "direct"):
            raise ValueError("reasoning must be 'cot' or 'direct'")
        self.config = config
        self.reasoning = reasoning

    def spotter_answer(self, q: Question, board: Board, partial: PartialBoard) -> bool:
        from .board import sunk_colors

        sunk = {c: c in sunk_colors(board, partial) for c in self.config.colors}
        lengths = {c: board.ship_length(c) for c in self.config.colors}
        prompt = render(
            load_prompt("spotter"),
            game_setup=game_setup_text(self.config, partial, sunk, lengths),
            partial_board=board_array_text(partial.cells),
            true_board=board_array_text(board.cells),
            variant=load_prompt("spotter_direct"),
            reasoning=load_prompt(f"reasoning_{self.reasoning}"),
            question_text=str(q),
        )
        return self._ask(prompt, parse_yes_no)


def connect(
    base_url: str,
    model: str,
    cassette: str | Path | None = None,
    cassette_mode: str = "auto",
    rate: float | None = None,
    **endpoint: Any,
) -> ChatClient:
    cfg = EndpointConfig(base_url=base_url, model=model, **endpoint)
    cas = Cassette(Path(cassette), cassette_mode) if cassette else None
    return ChatClient(cfg, cas, limiter=RateLimiter(rate))
