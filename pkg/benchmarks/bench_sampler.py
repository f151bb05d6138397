"""Compare the numba and pure-numpy board samplers.

    python benchmarks/bench_sampler.py [--boards 2000] [--repeats 5]

Each case draws the same boards on both paths (checked for equality) and
reports the best wall time of several repeats. The last section plays a few
greedy games in a subprocess with ``BEDGAMES_DISABLE_NUMBA`` on and off, which
is how the switch is used in practice.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from bedgames.board import BoardConfig, Coord, PartialBoard, sample_board, sample_boards

GAME_SNIPPET = """
import time
import numpy as np
from bedgames.board import BoardConfig
from bedgames.engine import GameSeeds, run_game
from bedgames.spotter import noisy
from bedgames.strategy import preset
t = time.perf_counter()
for i in range({games}):
    s = GameSeeds.from_master(i)
    run_game(BoardConfig(), preset("greedy"), noisy(0.1, np.random.default_rng(s.spotter)), s)
print(time.perf_counter() - t)
"""


def cases():
    default = BoardConfig()
    truth = sample_board(default, np.random.default_rng(0))
    shown = [Coord(r, c) for r in range(8) for c in range(8) if (r + c) % 3 == 0]
    partial = PartialBoard.from_board(truth, shown)
    yield "prior, default 8x8", default, {}
    yield "conditioned on 22 reveals", default, {"partial": partial}
    yield "prior, no touching", BoardConfig(allow_touching=False), {}


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--boards", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--games", type=int, default=10)
    args = ap.parse_args()

    # compile once outside the timings
    sample_boards(BoardConfig(), 10, np.random.default_rng(0), backend="numba")

    print(f"{'case':<28} {'numba (s)':>10} {'numpy (s)':>10} {'speedup':>8}  same")
    for name, cfg, kw in cases():
        times, outs = {}, {}
        for backend in ("numba", "numpy"):
            times[backend], outs[backend] = best_time(
                lambda: sample_boards(cfg, args.boards, np.random.default_rng(1), backend=backend, **kw),
                args.repeats,
            )
        same = np.array_equal(outs["numba"], outs["numpy"])
        print(f"{name:<28} {times['numba']:>10.4f} {times['numpy']:>10.4f} "
              f"{times['numpy'] / times['numba']:>7.1f}x  {same}")

    print(f"\n{args.games} greedy games (2000 particles) in a fresh interpreter:")
    for flag in ("0", "1"):
        env = {**os.environ, "BEDGAMES_DISABLE_NUMBA": flag}
        res = subprocess.run([sys.executable, "-c", GAME_SNIPPET.format(games=args.games)],
                             env=env, capture_output=True, text=True, check=True)
        label = "numpy fallback" if flag == "1" else "numba"
        print(f"  {label:<15} {float(res.stdout.strip()):.2f} s")


if __name__ == "__main__":
    main()
