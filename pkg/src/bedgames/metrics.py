"""Game metrics: targeting F1, move/question counts, EIG, redundancy, win rate."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

REDUNDANT_EIG = 1e-9


@dataclass
class GameMetrics:
    precision: float
    recall: float
    f1: float
    moves_used: int
    questions_used: int
    mean_eig: float | None
    redundant_fraction: float | None
    outcome: str
    hits: int = 0
    ship_cells: int = 0
    no_shots: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _events(traj):
    return traj.events if hasattr(traj, "events") else traj["events"]


def _header(traj):
    return traj.header if hasattr(traj, "header") else traj["header"]


def targeting_scores(traj) -> tuple[float, float, float]:
    p, r, f, _ = _targeting(traj)
    return p, r, f


def _targeting(traj):
    shots = [e for e in _events(traj) if e["type"] == "shot"]
    hits = sum(1 for e in shots if e["hit"])
    total = _header(traj)["ship_cells"]
    if not shots:
        return 0.0, 0.0, 0.0, True
    precision = hits / len(shots)
    recall = hits / total if total else 0.0
    return precision, recall, f1_score(precision, recall), False


def eig_stats(traj) -> tuple[float | None, float | None]:
    """Mean EIG of asked questions and the fraction with (numerically) zero EIG.

    Both are ``None`` when no question was asked or none was scored.
    """
    eigs = [e["eig"] for e in _events(traj) if e["type"] == "question" and e.get("eig") is not None]
    if not eigs:
        return None, None
    return sum(eigs) / len(eigs), sum(1 for x in eigs if x < REDUNDANT_EIG) / len(eigs)


def game_metrics(traj) -> GameMetrics:
    events = _events(traj)
    precision, recall, f1, no_shots = _targeting(traj)
    mean_eig, redundant = eig_stats(traj)
    end = [e for e in events if e["type"] == "end"]
    outcome = end[-1]["outcome"] if end else "running"
    return GameMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        moves_used=sum(1 for e in events if e["type"] == "shot"),
        questions_used=sum(1 for e in events if e["type"] == "question"),
        mean_eig=mean_eig,
        redundant_fraction=redundant,
        outcome=outcome,
        hits=sum(1 for e in events if e["type"] == "shot" and e["hit"]),
        ship_cells=_header(traj)["ship_cells"],
        no_shots=no_shots,
    )


# ---------------------------------------------------------------------------
# win rate


def _pair_credit(a: GameMetrics, b: GameMetrics) -> float:
    a_won, b_won = a.outcome == "win", b.outcome == "win"
    if a_won and b_won:
        if a.moves_used != b.moves_used:
            return 1.0 if a.moves_used < b.moves_used else 0.0
    elif a_won != b_won:
        return 1.0 if a_won else 0.0
    if a.f1 != b.f1:
        return 1.0 if a.f1 > b.f1 else 0.0
    return 0.5


def win_rate(trajs_a: Iterable, trajs_b: Iterable) -> float:
    """Board-matched head-to-head credit of A over B.

    Every A game is paired with every B game on the same board: fewer moves
    to sink everything wins, a sole finisher wins, otherwise higher F1 wins,
    and exact ties split. Credits are averaged within each board, then
    across boards.
    """
    by_a, by_b = defaultdict(list), defaultdict(list)
    for t in trajs_a:
        by_a[_header(t)["board_id"]].append(game_metrics(t))
    for t in trajs_b:
        by_b[_header(t)["board_id"]].append(game_metrics(t))
    boards = sorted(set(by_a) & set(by_b))
    if not boards:
        raise ValueError("no overlapping boards")
    per_board = []
    for bid in boards:
        credits = [_pair_credit(a, b) for a in by_a[bid] for b in by_b[bid]]
        per_board.append(sum(credits) / len(credits))
    return sum(per_board) / len(per_board)


# ---------------------------------------------------------------------------
# summaries

def summarize(metrics: Sequence[GameMetrics]) -> dict:
    """Per-policy means of every GameMetrics field. ``outcome`` becomes the
    fraction of games won and ``no_shots`` the fraction with no shots."""
    n = len(metrics)

    def mean(xs):
        xs = [x for x in xs if x is not None]
        return sum(xs) / len(xs) if xs else None

    row: dict = {"games": n}
    for f in fields(GameMetrics):
        if f.name == "outcome":
            row["outcome"] = mean(float(m.outcome == "win") for m in metrics)
        else:
            row[f.name] = mean(None if getattr(m, f.name) is None else float(getattr(m, f.name)) for m in metrics)
    row["wins"] = sum(1 for m in metrics if m.outcome == "win")
    row["errors"] = sum(1 for m in metrics if m.outcome == "error")
    return row


SUMMARY_FIELDS = ["policy", "games"] + [f.name for f in fields(GameMetrics)] + ["wins", "errors"]


def write_summary(path_csv, path_json, rows: dict[str, dict], matrix: dict[str, dict[str, float]] | None = None):
    """One CSV/JSON row per policy, plus the win-rate matrix as extra columns."""
    names = list(rows)
    with open(path_csv, "w", newline="") as fh:
        fields = SUMMARY_FIELDS + ([f"win_rate_vs_{n}" for n in names] if matrix else [])
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for name, row in rows.items():
            out = {"policy": name, **{k: _fmt(v) for k, v in row.items()}}
            if matrix:
                for other in names:
                    out[f"win_rate_vs_{other}"] = _fmt(matrix[name].get(other))
            w.writerow(out)
    with open(path_json, "w") as fh:
        json.dump({"policies": rows, "win_rate": matrix or {}}, fh, indent=2, sort_keys=True)


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6f}"
    return "" if v is None else v
