"""Command-line interface.

Settings come from flags, then an optional INI config file (``--config``),
then built-in defaults, in that order of precedence. Exit status is 0 on
success, 1 on user error (bad flags, unreadable files, invalid input) and 2
on runtime failure (a game ending in error, an unreachable model endpoint).
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .belief import DEFAULT_EPSILON, DEFAULT_PARTICLES, LogEntry, eig_ceiling, exact_posterior, init_belief, update_answer
from .belief import eig as particle_eig
from .belief import yes_probability
from .board import (
    HIDDEN,
    ROW_LETTERS,
    BoardConfig,
    Coord,
    Depleted,
    board_from_text,
    partial_from_text,
    sample_board,
    to_text,
)
from .engine import GameSeeds, Trajectory, run_game
from .metrics import game_metrics, summarize, win_rate, write_summary
from .questions import parse
from .spotter import Spotter
from .strategy import PRESETS, preset

logger = logging.getLogger("bedgames")

EPILOG = """\
Settings precedence: command-line flags > config file > defaults.
The config file is INI; keys in [defaults] apply to every command and keys
in a section named after the command (e.g. [tournament]) override them.
Keys use the long flag names with dashes or underscores, e.g.

  [defaults]
  belief-epsilon = 0.1
  [tournament]
  policies = random,greedy,bayes-qmd
  boards = 18

The model API key is read from the environment variable named by
--api-key-env (default BEDGAMES_API_KEY) and never written anywhere.
Exit status: 0 ok, 1 user error, 2 runtime error.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    """Everything needed to reproduce an artifact; embedded in its header."""

    command: str
    environment: str
    policy: str | None = None
    policies: list[str] | None = None
    gamma: float | None = None
    k: int | None = None
    particles: int = DEFAULT_PARTICLES
    belief_epsilon: float = DEFAULT_EPSILON
    spotter: str = "noisy"
    channel_epsilon: float = 0.1
    seed: int = 0
    seeds: int = 1
    boards: int | None = None
    board_source: str | None = None
    board: dict | None = None
    roster: str | None = None
    budget: int | None = None
    games: int | None = None
    endpoint: dict | None = None

    def __post_init__(self):
        for name in ("belief_epsilon", "channel_epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name.replace('_', '-')} must be in [0, 0.5], got {v}")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.particles < 1:
            raise ValueError("particles must be >= 1")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _board_config(args) -> BoardConfig:
    ships = []
    for part in args.ships.split(","):
        try:
            color, n = part.split(":")
            ships.append((color.strip(), int(n)))
        except ValueError:
            raise ValueError(f"bad --ships entry {part!r}; expected color:length") from None
    return BoardConfig(
        rows=args.rows, cols=args.cols, ships=tuple(ships),
        permute_lengths=not args.fixed_lengths, allow_touching=not args.no_touching,
        question_budget=args.questions, move_budget=args.moves,
    )


def _overrides(args) -> dict:
    out = {}
    if args.gamma is not None:
        out["gamma"] = args.gamma
    if args.k is not None:
        out["k"] = args.k
    return out


def _endpoint(args) -> dict | None:
    if not getattr(args, "endpoint", None):
        return None
    if not args.model:
        raise ValueError("--endpoint requires --model")
    return {
        "base_url": args.endpoint, "model": args.model, "api_key_env": args.api_key_env,
        "timeout": args.timeout, "max_retries": args.max_retries, "temperature": args.temperature,
        "cassette": args.cassette, "rate": args.rate,
    }


def _run_config(args, **extra) -> RunConfig:
    belief_eps = getattr(args, "belief_epsilon", DEFAULT_EPSILON)
    if belief_eps is None:
        belief_eps = args.epsilon
    return RunConfig(
        command=args.command,
        environment="guesswho" if args.command == "guesswho" else "battleship",
        gamma=getattr(args, "gamma", None),
        k=getattr(args, "k", None),
        particles=getattr(args, "particles", DEFAULT_PARTICLES),
        belief_epsilon=belief_eps,
        spotter=getattr(args, "spotter", "noisy"),
        channel_epsilon=getattr(args, "epsilon", 0.1),
        seed=args.seed,
        endpoint=_endpoint(args),
        **extra,
    )


def _client(endpoint: dict | None):
    if endpoint is None:
        return None
    from .llm import connect

    ep = dict(endpoint)
    return connect(ep.pop("base_url"), ep.pop("model"), cassette=ep.pop("cassette"), rate=ep.pop("rate"), **ep)


def _players(endpoint, policy, spotter_kind, config):
    """Build the optional LM captain and the spotter factory inputs."""
    client = _client(endpoint)
    lm = spotter_adapter = None
    if client is not None:
        from .llm import LMCaptain, LMSpotter

        if policy.decision == "lm" or policy.question == "lm" or policy.move == "lm":
            lm = LMCaptain(client, config)
        if spotter_kind == "lm":
            spotter_adapter = LMSpotter(client, config)
    elif spotter_kind == "lm":
        raise ValueError("--spotter lm requires --endpoint and --model")
    return lm, spotter_adapter


def _spotter(kind: str, epsilon: float, seed: int, adapter=None) -> Spotter:
    rng = np.random.default_rng(seed)
    if kind == "oracle":
        return Spotter("oracle", 0.0, rng)
    if kind == "noisy":
        return Spotter("noisy", epsilon, rng)
    return Spotter("external", epsilon, rng, adapter=adapter)


# ---------------------------------------------------------------------------
# games


def _play_one(job: dict) -> tuple[str, dict]:
    """Run one game described by a picklable job; returns (jsonl, metrics)."""
    config = BoardConfig.from_dict(job["config"])
    policy = preset(job["policy"], **job["overrides"])
    seeds = GameSeeds(**job["seeds"])
    lm, adapter = _players(job["endpoint"], policy, job["spotter"], config)
    source = lm.question_source() if lm is not None and policy.question == "bayes" else None
    spotter = _spotter(job["spotter"], job["channel_epsilon"], seeds.spotter, adapter)
    board = board_from_text(job["board"]) if job.get("board") else None
    traj = run_game(
        config, policy, spotter, seeds, board=board, board_id=job.get("board_id"),
        n_particles=job["particles"], belief_epsilon=job["belief_epsilon"],
        question_source=source, lm=lm, extra_header={"run": job["run"]},
    )
    return traj.to_jsonl(), traj.metrics


def _job(run: RunConfig, config: BoardConfig, policy: str, overrides: dict, seeds: GameSeeds,
         board: str | None, board_id: str | None) -> dict:
    return {
        "config": config.to_dict(), "policy": policy, "overrides": overrides, "seeds": asdict(seeds),
        "endpoint": run.endpoint, "spotter": run.spotter, "channel_epsilon": run.channel_epsilon,
        "particles": run.particles, "belief_epsilon": run.belief_epsilon,
        "board": board, "board_id": board_id, "run": run.to_dict(),
    }


def _read_board(path) -> str:
    text = Path(path).read_text()
    board_from_text(text)
    return "\n".join(ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#"))


def cmd_sample_boards(args, out: TextIO) -> int:
    config = _board_config(args)
    run = _run_config(args, boards=args.n, board=config.to_dict())
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    header = "# " + json.dumps({"run": run.to_dict(), "index": None}, sort_keys=True)
    for i in range(args.n):
        board = sample_board(config, np.random.default_rng([args.seed, i]))
        meta = header.replace('"index": null', f'"index": {i}')
        (dest / f"board_{i:03d}.board").write_text(meta + "\n" + to_text(board) + "\n")
    print(f"wrote {args.n} boards to {dest}", file=out)
    return 0


def _rerun_job(path) -> tuple[RunConfig, dict]:
    """Rebuild a play job from the run settings embedded in a trajectory header."""
    header = Trajectory.load(path).header
    if header.get("env") != "battleship" or header.get("run", {}).get("command") != "play":
        raise ValueError(f"{path} was not written by 'play'")
    run = RunConfig(**header["run"])
    config = BoardConfig.from_dict(run.board)
    overrides = {k: v for k, v in (("gamma", run.gamma), ("k", run.k)) if v is not None}
    board = header["board"] if run.board_source else None
    return run, _job(run, config, run.policy, overrides, GameSeeds.from_master(run.seed), board, None)


def cmd_play(args, out: TextIO) -> int:
    if args.rerun:
        run, job = _rerun_job(args.rerun)
        text, metrics = _play_one(job)
        path = Path(args.out) if args.out else Path(f"game_{run.policy}_seed{run.seed}.jsonl")
        return _finish_play(text, metrics, path, out)
    config = _board_config(args)
    run = _run_config(args, policy=args.policy, board=config.to_dict(), board_source=args.board)
    overrides = _overrides(args)
    policy = preset(args.policy, **overrides)
    seeds = GameSeeds.from_master(args.seed)
    board = _read_board(args.board) if args.board else None
    if args.interactive:
        return _play_interactive(args, run, config, seeds, board, out)
    text, metrics = _play_one(_job(run, config, policy.name, overrides, seeds, board, None))
    path = Path(args.out) if args.out else Path(f"game_{args.policy}_seed{args.seed}.jsonl")
    return _finish_play(text, metrics, path, out)


def _finish_play(text: str, metrics: dict, path: Path, out: TextIO) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"{metrics['outcome']}: f1={metrics['f1']:.3f} moves={metrics['moves_used']} "
          f"questions={metrics['questions_used']} -> {path}", file=out)
    return 2 if metrics["outcome"] == "error" else 0


def cmd_tournament(args, out: TextIO) -> int:
    config = _board_config(args)
    names = [p.strip() for p in args.policies.split(",") if p.strip()]
    for n in names:
        if n not in PRESETS:
            raise ValueError(f"unknown policy {n!r}; choose from {', '.join(PRESETS)}")
    if args.board_dir:
        files = sorted(Path(args.board_dir).glob("*.board"))
        if not files:
            raise ValueError(f"no .board files in {args.board_dir}")
        boards = [(f.stem, _read_board(f)) for f in files]
    else:
        boards = [(f"b{i:03d}", to_text(sample_board(config, np.random.default_rng([args.seed, i]))))
                  for i in range(args.boards)]
    run = _run_config(args, policies=names, seeds=args.seeds, boards=len(boards),
                      board=config.to_dict(), board_source=args.board_dir)
    overrides = _overrides(args)
    jobs, keys = [], []
    for name in names:
        for b, (bid, text) in enumerate(boards):
            for s in range(args.seeds):
                # the same game seeds for every policy: paired comparisons
                seeds = GameSeeds.from_master([args.seed, b, s])
                jobs.append(_job(run, config, name, overrides, seeds, text, bid))
                keys.append((name, bid, s))

    dest = Path(args.out)
    workers = max(1, args.workers or os.cpu_count() or 1)
    results = _map(_play_one, jobs, workers)
    trajs: dict[str, list[Trajectory]] = {n: [] for n in names}
    for (name, bid, s), (text, _) in zip(keys, results):
        path = dest / "trajectories" / name / f"{bid}_s{s}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        trajs[name].append(Trajectory.from_jsonl(text))

    rows = {n: summarize([game_metrics(t) for t in trajs[n]]) for n in names}
    matrix = {a: {b: (0.5 if a == b else win_rate(trajs[a], trajs[b])) for b in names} for a in names}
    write_summary(dest / "summary.csv", dest / "summary.json", rows, matrix)
    meta = json.loads((dest / "summary.json").read_text())
    meta["run"] = run.to_dict()
    (dest / "summary.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for n in names:
        r = rows[n]
        print(f"{n:>10}: f1={r['f1']:.3f} moves={r['moves_used']:.1f} questions={r['questions_used']:.1f} "
              f"wins={r['wins']}/{r['games']}", file=out)
    print(f"{len(jobs)} trajectories written to {dest}", file=out)
    return 2 if any(r["errors"] for r in rows.values()) else 0


def _map(fn, jobs, workers):
    if workers == 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # results come back in submission order, so files are written in order
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# ---------------------------------------------------------------------------
# interactive play


class HumanCaptain:
    """Reads questions and shots from a text stream. A line starting with
    '(' is a question; anything else is taken as a coordinate."""

    def __init__(self, config: BoardConfig, stdin: TextIO, out: TextIO):
        self.config = config
        self.stdin, self.out = stdin, out
        self.pending: Any = None

    def describe(self) -> str:
        return "human"

    def _show(self, view):
        print(_grid_text(view.partial.cells), file=self.out)
        sunk = ", ".join(c for c, s in view.sunk.items() if s) or "none"
        print(f"questions left {view.budgets.questions}, moves left {view.budgets.moves}, sunk: {sunk}", file=self.out)
        if view.history:
            q, a = view.history[-1]
            print(f"last answer: {q} -> {'Yes' if a else 'No'}", file=self.out)

    def captain_decision(self, view) -> str:
        self._show(view)
        while True:
            print("question (s-expression) or coordinate> ", end="", file=self.out, flush=True)
            line = self.stdin.readline()
            if not line:
                raise EOFError("input closed")
            line = line.strip()
            if not line:
                continue
            try:
                if line.startswith("("):
                    self.pending = parse(line, self.config.rows, self.config.cols)
                    return "question"
                c = Coord.parse(line)
                if not c.in_bounds(self.config.rows, self.config.cols) or view.partial[c] != HIDDEN:
                    raise ValueError(f"{line} is not a hidden tile")
                self.pending = c
                return "move"
            except ValueError as e:
                print(f"  {e}", file=self.out)

    def captain_question(self, view):
        return self.pending

    def captain_move(self, view):
        if not isinstance(self.pending, Coord):
            self._show(view)
            while True:
                print("coordinate> ", end="", file=self.out, flush=True)
                line = self.stdin.readline()
                if not line:
                    raise EOFError("input closed")
                try:
                    return Coord.parse(line.strip())
                except ValueError as e:
                    print(f"  {e}", file=self.out)
        c, self.pending = self.pending, None
        return c


def _play_interactive(args, run, config, seeds, board, out) -> int:
    human = HumanCaptain(config, sys.stdin, out)
    _, adapter = _players(run.endpoint, preset("random"), run.spotter, config)
    spotter = _spotter(run.spotter, run.channel_epsilon, seeds.spotter, adapter)
    traj = run_game(
        config, preset("lm"), spotter, seeds,
        board=board_from_text(board) if board else None,
        n_particles=run.particles, belief_epsilon=run.belief_epsilon,
        lm=human, extra_header={"run": run.to_dict()},
    )
    print(_grid_text(board_from_text(traj.header["board"]).cells), file=out)
    m = traj.metrics
    print(f"{m['outcome']}: f1={m['f1']:.3f} moves={m['moves_used']} questions={m['questions_used']}", file=out)
    if args.out:
        Path(args.out).write_text(traj.to_jsonl())
    return 2 if m["outcome"] == "error" else 0


# ---------------------------------------------------------------------------
# replay and eig


_SYMBOLS = {-1: ".", 0: "~", 1: "R", 2: "G", 3: "P", 4: "O"}


def _grid_text(cells) -> str:
    cells = np.asarray(cells)
    lines = ["   " + " ".join(f"{c + 1:>2}" for c in range(cells.shape[1]))]
    for r, row in enumerate(cells):
        lines.append(f"{ROW_LETTERS[r]:>2} " + " ".join(f"{_SYMBOLS[int(v)]:>2}" for v in row))
    return "\n".join(lines)


def _heat_text(grid) -> str:
    grid = np.asarray(grid)
    lines = ["   " + " ".join(f"{c + 1:>3}" for c in range(grid.shape[1]))]
    for r, row in enumerate(grid):
        lines.append(f"{ROW_LETTERS[r]:>2} " + " ".join(f"{round(100 * v):>3}" for v in row))
    return "\n".join(lines)


def cmd_replay(args, out: TextIO) -> int:
    traj = Trajectory.load(args.trajectory)
    h = traj.header
    if h.get("env") == "guesswho":
        print(f"Guess Who: policy {h['policy']}, target {h['target']}", file=out)
        for e in traj.events:
            if e["type"] == "question":
                print(f"  Q{e['turn']}: {e['text']}  (EIG {e['eig']:.3f})", file=out)
            elif e["type"] == "answer":
                print(f"      -> {'Yes' if e['value'] else 'No'}", file=out)
            elif e["type"] == "guess":
                print(f"  guess {e['name']}: {'correct' if e['correct'] else 'wrong'}", file=out)
        return 0
    pol = h["policy"]
    print(f"policy {pol['name']} (decision {pol['decision']}, question {pol['question']}, move {pol['move']}, "
          f"gamma {pol['gamma']}, k {pol['k']}); spotter {h['spotter']['kind']}; board {h['board_id']}", file=out)
    print(_grid_text(board_from_text(h["board"]).cells), file=out)
    for e in traj.events:
        t = e.get("turn", "")
        if e["type"] == "question":
            eig = "" if e.get("eig") is None else f"  EIG {e['eig']:.3f}"
            print(f"[{t:>2}] ask  {e['text']}{eig}", file=out)
        elif e["type"] == "answer":
            print(f"     -> {'Yes' if e['value'] else 'No'} ({e['channel']})", file=out)
        elif e["type"] == "shot":
            sunk = f", sunk {e['sunk']}" if e.get("sunk") else ""
            print(f"[{t:>2}] fire {e['coord']}: {'hit' if e['hit'] else 'miss'}{sunk}", file=out)
            if args.grids and "hit_grid" in e:
                print(_heat_text(e["hit_grid"]), file=out)
        elif e["type"] == "fallback":
            print(f"     fallback: {e['reason']}", file=out)
        elif e["type"] == "end":
            m = e["metrics"]
            print(f"end: {e['outcome']}  precision {m['precision']:.3f} recall {m['recall']:.3f} "
                  f"f1 {m['f1']:.3f} moves {m['moves_used']} questions {m['questions_used']}", file=out)
    return 0


def load_state(path) -> dict:
    """Saved Captain state: ``partial`` (board text), optional ``config``,
    ``sunk`` colors, ``epsilon`` and ``history`` of {question, answer,
    partial?} entries (partial defaults to the current one)."""
    d = json.loads(Path(path).read_text())
    if "partial" not in d:
        raise ValueError("state file needs a 'partial' board")
    return d


def cmd_eig(args, out: TextIO) -> int:
    state = load_state(args.state)
    config = BoardConfig.from_dict(state["config"]) if "config" in state else _board_config(args)
    partial = partial_from_text(state["partial"])
    if partial.shape != config.shape:
        raise ValueError(f"partial board is {partial.shape}, config is {config.shape}")
    eps = float(state.get("epsilon", args.belief_epsilon))
    sunk = frozenset(state.get("sunk", []))
    q = parse(args.question, config.rows, config.cols)
    log = []
    for item in state.get("history", []):
        hp = partial_from_text(item["partial"]) if "partial" in item else partial
        log.append(LogEntry(parse(item["question"], config.rows, config.cols), bool(item["answer"]), hp))
    if args.exact:
        post = exact_posterior(config, partial, log, eps, sunk=sunk)
        p, value = post.yes_probability(q, partial), post.eig(q, partial, eps)
    else:
        rng = np.random.default_rng(args.seed)
        belief = init_belief(config, partial, args.particles, eps, rng, sunk=sunk)
        for entry in log:
            belief = update_answer(belief, entry.question, entry.answer, entry.partial, rng)
        p, value = yes_probability(belief, q, partial), particle_eig(belief, q, partial)
    if args.json:
        print(json.dumps({"question": str(q), "eig": value, "p_yes": p, "epsilon": eps,
                          "ceiling": eig_ceiling(eps)}), file=out)
    else:
        print(f"{q}: EIG {value:.4f} bits (p_yes {p:.4f}, ceiling {eig_ceiling(eps):.4f})", file=out)
    return 0


# ---------------------------------------------------------------------------
# guess who


def cmd_guesswho(args, out: TextIO) -> int:
    from .guesswho import QuestionPool, load_roster, run_guesswho

    roster = load_roster(args.roster)
    run = _run_config(args, policy=args.policy, roster=args.roster, budget=args.budget, games=args.games)
    client = _client(run.endpoint)
    lm = None
    if client is not None:
        from .llm import LMCaptain

        lm = LMCaptain(client, BoardConfig())
    pool = QuestionPool(roster)
    dest = Path(args.out) if args.out else None
    wins = 0
    for g in range(args.games):
        seeds = GameSeeds.from_master([args.seed, g])
        spotter = _spotter("oracle" if args.spotter == "oracle" else "noisy", args.epsilon, seeds.spotter)
        outcome = run_guesswho(
            roster, args.policy, spotter, budget=args.budget, rng=np.random.default_rng(seeds.captain),
            epsilon=run.belief_epsilon, lm=lm, pool=pool,
        )
        wins += outcome.win
        if dest is not None:
            traj = outcome.trajectory()
            traj.header["run"] = run.to_dict()
            traj.header["seeds"] = asdict(seeds)
            dest.mkdir(parents=True, exist_ok=True)
            traj.save(dest / f"game_{g:03d}.jsonl")
    print(f"{args.policy}: {wins}/{args.games} correct ({wins / max(args.games, 1):.3f})", file=out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, board: bool = True, belief: bool = True):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("-v", "--verbose", action="store_true")
    if board:
        g = p.add_argument_group("board")
        g.add_argument("--rows", type=int, default=8)
        g.add_argument("--cols", type=int, default=8)
        g.add_argument("--ships", default="red:2,green:3,purple:4,orange:5", help="color:length list")
        g.add_argument("--fixed-lengths", action="store_true", help="do not shuffle lengths across colors")
        g.add_argument("--no-touching", action="store_true", help="forbid adjacent ships")
        g.add_argument("--questions", type=int, default=15, help="question budget")
        g.add_argument("--moves", type=int, default=40, help="move budget")
    if belief:
        g = p.add_argument_group("captain")
        g.add_argument("--gamma", type=float, help="lookahead discount in [0, 1] (default 1)")
        g.add_argument("--k", type=int, help="candidate questions per turn (default 10)")
        g.add_argument("--particles", type=int, default=DEFAULT_PARTICLES)
        g.add_argument("--belief-epsilon", type=float, default=DEFAULT_EPSILON, help="noise assumed by the belief")
        g.add_argument("--spotter", choices=["oracle", "noisy", "lm"], default="noisy")
        g.add_argument("--epsilon", type=float, default=0.1, help="noisy spotter flip rate")


def _endpoint_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("language model (optional)")
    g.add_argument("--endpoint", help="chat-completions base URL")
    g.add_argument("--model")
    g.add_argument("--api-key-env", default="BEDGAMES_API_KEY")
    g.add_argument("--timeout", type=float, default=60.0)
    g.add_argument("--max-retries", type=int, default=3)
    g.add_argument("--temperature", type=float)
    g.add_argument("--cassette", help="record/replay file for model calls")
    g.add_argument("--rate", type=float, help="max requests per second")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="bedgames", description=__doc__.splitlines()[0], epilog=EPILOG, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sample-boards", help="write sampled boards as .board files", epilog=EPILOG, formatter_class=fmt)
    _common(p, belief=False)
    p.add_argument("--n", type=int, default=18, help="number of boards")
    p.add_argument("--out", default="boards", help="output directory")

    p = sub.add_parser("play", help="play one game", epilog=EPILOG, formatter_class=fmt)
    _common(p)
    _endpoint_args(p)
    p.add_argument("--policy", default="bayes-qmd", choices=sorted(PRESETS))
    p.add_argument("--board", help=".board file (default: sampled from the seed)")
    p.add_argument("--out", help="trajectory file")
    p.add_argument("--interactive", action="store_true", help="you are the Captain")
    p.add_argument("--rerun", metavar="TRAJECTORY", help="replay the settings stored in a trajectory header")

    p = sub.add_parser("tournament", help="policies x boards x seeds", epilog=EPILOG, formatter_class=fmt)
    _common(p)
    _endpoint_args(p)
    p.add_argument("--policies", default="random,greedy,bayes-qm,bayes-qmd")
    p.add_argument("--boards", type=int, default=18, help="boards to sample (ignored with --board-dir)")
    p.add_argument("--board-dir", help="directory of .board files")
    p.add_argument("--seeds", type=int, default=3, help="games per board per policy")
    p.add_argument("--workers", type=int, help="worker processes (default: logical cores)")
    p.add_argument("--out", default="tournament", help="output directory")

    p = sub.add_parser("replay", help="pretty-print a trajectory", epilog=EPILOG, formatter_class=fmt)
    p.add_argument("trajectory")
    p.add_argument("--no-grids", dest="grids", action="store_false", help="hide hit-probability snapshots")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("eig", help="score a question against a saved state", epilog=EPILOG, formatter_class=fmt)
    _common(p)
    p.add_argument("--state", required=True, help="state JSON")
    p.add_argument("--question", required=True)
    p.add_argument("--exact", action="store_true", help="enumerate boards instead of sampling")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("guesswho", help="play Guess Who games", epilog=EPILOG, formatter_class=fmt)
    _common(p, board=False, belief=False)
    _endpoint_args(p)
    p.add_argument("--roster", default="generated100", help="classic24, generated100 or a JSON file")
    p.add_argument("--policy", default="bayes-qm", choices=["lm", "bayes-q", "bayes-m", "bayes-qm"])
    p.add_argument("--games", type=int, default=50)
    p.add_argument("--budget", type=int, default=8)
    p.add_argument("--spotter", choices=["oracle", "noisy"], default="oracle")
    p.add_argument("--epsilon", type=float, default=0.0, help="noisy spotter flip rate")
    p.add_argument("--belief-epsilon", type=float, help="noise assumed by the belief (default: --epsilon)")
    p.add_argument("--out", help="trajectory directory")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Turn config-file values into parser defaults, so flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as e:
        raise UsageError(f"bad config file: {e}") from None
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((a for a in argv if a in sub.choices), None)
    if cmd is None:
        return
    target = sub.choices[cmd]
    values = dict(cp["defaults"]) if cp.has_section("defaults") else {}
    if cp.has_section(cmd):
        values.update(cp[cmd])
    actions = {a.dest: a for a in target._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise UsageError(f"unknown config key {key!r} for {cmd}")
        a = actions[dest]
        if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[dest] = cp.getboolean(cmd if cp.has_option(cmd, key) else "defaults", key)
        else:
            try:
                defaults[dest] = a.type(raw) if a.type else raw
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
            if a.choices and defaults[dest] not in a.choices:
                raise UsageError(f"bad value for {key}: {raw!r}")
    target.set_defaults(**defaults)


COMMANDS = {
    "sample-boards": cmd_sample_boards,
    "play": cmd_play,
    "tournament": cmd_tournament,
    "replay": cmd_replay,
    "eig": cmd_eig,
    "guesswho": cmd_guesswho,
}


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"bedgames: error: {e}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(out)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ValueError, KeyError, FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"bedgames: error: {e}", file=sys.stderr)
        return 1
    except (Depleted, RuntimeError, OSError, EOFError) as e:
        print(f"bedgames: runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
