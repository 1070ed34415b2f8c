"""Brute-force references for small windows.

These enumerate paths or arrow configurations exhaustively and are meant
for windows of at most about 11 x 11 sites.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .lattice import Arrow, ArrowField, LatticeConfig
from .paths import LatticePath, leftmost_path, rightmost_path


def enumerate_arrow_paths(field: ArrowField, z, complete_only: bool = True) -> list:
    """All paths from ``z`` that follow available arrows, by depth-first search.

    With ``complete_only`` only paths reaching the top row are returned;
    otherwise paths stopped by a side edge are included (flagged tainted).
    """
    x0, t0 = int(z[0]), int(z[1])
    out = []
    stack = [(x0, t0, (x0,))]
    while stack:
        x, t, pos = stack.pop()
        if t == field.t_hi:
            out.append(LatticePath(t0, pos))
            continue
        m = int(field.mask[t - field.t_lo, x - field.x_lo])
        for bit, dx in ((Arrow.LEFT, -1), (Arrow.RIGHT, 1)):
            if m & bit:
                nx = x + dx
                if field.x_lo <= nx <= field.x_hi:
                    stack.append((nx, t + 1, pos + (nx,)))
                elif not complete_only:
                    out.append(LatticePath(t0, pos, tainted=True))
    return out


def all_step_sequences(z, steps: int) -> np.ndarray:
    """Every +-1 path of ``steps`` steps from ``z`` as rows of positions."""
    x0 = int(z[0])
    if steps == 0:
        return np.array([[x0]], dtype=np.int64)
    moves = np.array(list(itertools.product((-1, 1), repeat=steps)), dtype=np.int64)
    return np.concatenate([np.full((moves.shape[0], 1), x0), x0 + np.cumsum(moves, axis=1)],
                          axis=1)


def hop_closure(field: ArrowField, z) -> set:
    """Complete paths from ``z`` generated from extremal paths by hopping.

    A path from ``w`` is ``l_w`` or ``r_w`` (if complete), or a prefix of one
    of them up to a time ``t > sigma_w`` followed by a generated path from the
    point it occupies at ``t``.  Hopping onto a path at its own start time is
    the lattice stand-in for taking closures.  Returns position tuples.
    """
    t_hi = field.t_hi

    @lru_cache(maxsize=None)
    def generated(x, t):
        if t == t_hi:
            return frozenset({(x,)})
        result = set()
        for p in (leftmost_path(field, (x, t)), rightmost_path(field, (x, t))):
            pos = tuple(int(v) for v in p.positions)
            if p.end_time == t_hi and not p.tainted:
                result.add(pos)
            for k in range(1, len(pos)):
                for tail in generated(pos[k], t + k):
                    result.add(pos[:k] + tail)
        return frozenset(result)

    return set(generated(int(z[0]), int(z[1])))


def reachable_by_enumeration(field: ArrowField, s: int) -> np.ndarray:
    """Occupancy array of ``xi^(s)`` from the union of all enumerated paths."""
    occ = np.zeros((field.t_hi - s + 1, field.config.width), dtype=bool)
    for x in field.sites(s):
        for p in enumerate_arrow_paths(field, (int(x), s), complete_only=False):
            for k, xp in enumerate(p.positions):
                occ[k, int(xp) - field.x_lo] = True
    return occ


def admissible_max(field: ArrowField, z, dual_path) -> tuple:
    """Pointwise maximum of complete net paths from ``z`` staying left of ``dual_path``.

    Admissible means ``x <= dual(s) - 1`` at every integer time ``s`` up to
    the dual path's start time where it is defined.  Returns
    ``(max_positions or None, admissible_paths)``.
    """
    paths = []
    for p in enumerate_arrow_paths(field, z):
        ok = True
        for t, x in zip(p.times(), p.positions):
            if t > dual_path.start_time:
                break
            d = dual_path.at(int(t))
            if d is not None and x > d - 1:
                ok = False
                break
        if ok:
            paths.append(p)
    if not paths:
        return None, paths
    stacked = np.vstack([p.positions for p in paths])
    return stacked.max(axis=0), paths


def exact_window_count(config: LatticeConfig, limit: int = 1 << 20) -> float:
    """Expected ``|xi^(t_lo)_(t_hi)|`` in the window by enumerating arrow masks.

    Only rows ``t_lo .. t_hi - 1`` influence the count.  Raises ``ValueError``
    when the number of configurations exceeds ``limit``.
    """
    eps = config.epsilon
    outcomes = [(Arrow.LEFT, 0.5 * (1 - eps)), (Arrow.RIGHT, 0.5 * (1 - eps)),
                (Arrow.BOTH, eps)]
    outcomes = [(a, p) for a, p in outcomes if p > 0]
    cells = [(t, x) for t in range(config.t_lo, config.t_hi)
             for x in range(config.x_lo, config.x_hi + 1) if (x + t) % 2 == 0]
    total = len(outcomes) ** len(cells)
    if total > limit:
        raise ValueError(f"{total} configurations exceed the enumeration limit")
    width = config.width
    expected = 0.0
    for combo in itertools.product(outcomes, repeat=len(cells)):
        mask = np.zeros((config.height, width), dtype=np.uint8)
        prob = 1.0
        for (t, x), (a, p) in zip(cells, combo):
            mask[t - config.t_lo, x - config.x_lo] = a
            prob *= p
        occ = np.array([(x + config.t_lo) % 2 == 0 for x in range(config.x_lo, config.x_hi + 1)])
        for k in range(config.height - 1):
            row = mask[k]
            new = np.zeros(width, dtype=bool)
            src = occ & (row > 0)
            new[1:] |= (src & ((row & Arrow.RIGHT) > 0))[:-1]
            new[:-1] |= (src & ((row & Arrow.LEFT) > 0))[1:]
            occ = new
        expected += prob * occ.sum()
    return expected
