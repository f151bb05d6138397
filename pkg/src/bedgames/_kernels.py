"""Hot loops of the board sampler.

The sampler works on attempts. One attempt uses one row of ``u`` (shape
``(A, 1 + n_ships)``): column 0 picks a length assignment from ``cdf``, column
``1 + s`` picks a placement for ship ``s`` out of its compatible list. An
attempt is accepted when ships do not overlap and, if touching is forbidden,
no two ships share an edge. Accepted grids are written to ``out`` in attempt
order.

Both implementations return ``(k, used, run)``: boards written so far, rows of
``u`` consumed, and the current run of consecutive rejections. They stop early
once ``out`` is full or ``run`` reaches ``max_run``.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit


def _sample_py(u, cdf, ptab, offs, cells, lens, sym, rows, cols, touching, out, k, run, max_run):
    n_attempts, n_cols = u.shape
    n_ships = n_cols - 1
    n_perm = cdf.shape[0]
    n_cells = rows * cols
    total = cdf[n_perm - 1]
    grid = np.zeros(n_cells, dtype=np.int8)
    used = 0
    for a in range(n_attempts):
        if k >= out.shape[0] or run >= max_run:
            break
        used = a + 1
        x = u[a, 0] * total
        p = 0
        while p < n_perm - 1 and cdf[p] <= x:
            p += 1
        for c in range(n_cells):
            grid[c] = 0
        ok = True
        for s in range(n_ships):
            t = ptab[p, s]
            lo = offs[t]
            n = offs[t + 1] - lo
            j = int(u[a, 1 + s] * n)
            if j >= n:
                j = n - 1
            j += lo
            for i in range(lens[t]):
                c = cells[j, i]
                if grid[c] != 0:
                    ok = False
                    break
                grid[c] = sym[s]
            if not ok:
                break
        if ok and not touching:
            for r in range(rows):
                for c in range(cols):
                    g = grid[r * cols + c]
                    if g == 0:
                        continue
                    if c + 1 < cols:
                        h = grid[r * cols + c + 1]
                        if h != 0 and h != g:
                            ok = False
                    if r + 1 < rows:
                        h = grid[(r + 1) * cols + c]
                        if h != 0 and h != g:
                            ok = False
                if not ok:
                    break
        if ok:
            out[k, :] = grid
            k += 1
            run = 0
        else:
            run += 1
    return k, used, run


if HAVE_NUMBA:
    _sample_jit = njit(cache=True, nogil=True)(_sample_py)
else:
    _sample_jit = None


def _sample_np(u, cdf, ptab, offs, cells, lens, sym, rows, cols, touching, out, k, run, max_run):
    """Vectorized equivalent of the jitted loop: judge all attempts at once,
    then replay the accept/reject sequence to honour ``out`` and ``max_run``."""
    n_attempts, n_cols = u.shape
    n_ships = n_cols - 1
    n_cells = rows * cols
    if k >= out.shape[0] or run >= max_run or n_attempts == 0:
        return k, 0, run

    x = u[:, 0] * cdf[-1]
    p = np.minimum(np.searchsorted(cdf, x, side="right"), cdf.shape[0] - 1)
    t = ptab[p]  # (A, S)
    lo = offs[t]
    n = offs[t + 1] - lo
    j = np.minimum((u[:, 1:] * n).astype(np.int64), n - 1) + lo
    sel = cells[j]  # (A, S, maxL), padded with -1
    ship_len = lens[t]

    grid = np.zeros((n_attempts, n_cells + 1), dtype=np.int8)
    count = np.zeros((n_attempts, n_cells + 1), dtype=np.int16)
    rows_idx = np.arange(n_attempts)[:, None]
    max_len = sel.shape[2]
    for s in range(n_ships):
        valid = np.arange(max_len)[None, :] < ship_len[:, s][:, None]
        idx = np.where(valid, sel[:, s, :], n_cells)  # padding goes to a dummy column
        np.add.at(count, (np.broadcast_to(rows_idx, idx.shape), idx), 1)
        grid[np.broadcast_to(rows_idx, idx.shape), idx] = sym[s]
    ok = (count[:, :n_cells] <= 1).all(axis=1)
    if not touching:
        g = grid[:, :n_cells].reshape(n_attempts, rows, cols)
        a, b = g[:, :, :-1], g[:, :, 1:]
        bad = ((a != 0) & (b != 0) & (a != b)).any(axis=(1, 2))
        a, b = g[:, :-1, :], g[:, 1:, :]
        bad |= ((a != 0) & (b != 0) & (a != b)).any(axis=(1, 2))
        ok &= ~bad

    used = 0
    for a_i in range(n_attempts):
        if k >= out.shape[0] or run >= max_run:
            break
        used = a_i + 1
        if ok[a_i]:
            out[k, :] = grid[a_i, :n_cells]
            k += 1
            run = 0
        else:
            run += 1
    return k, used, run


def sample_kernel(*args, backend: str | None = None):
    """Dispatch to the numba kernel when available, else the numpy one.

    ``backend`` may be ``"numba"``, ``"numpy"`` or ``"python"`` to force a path.
    """
    if backend is None:
        backend = "numba" if HAVE_NUMBA else "numpy"
    if backend == "numba":
        if _sample_jit is None:
            raise RuntimeError("numba is unavailable or disabled")
        return _sample_jit(*args)
    if backend == "numpy":
        return _sample_np(*args)
    if backend == "python":
        return _sample_py(*args)
    raise ValueError(f"unknown backend {backend!r}")
