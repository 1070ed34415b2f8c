"""Lattice paths of an arrow field and the metrics on path space.

Forward paths live on sites ``x + t`` even and move forward in time; dual
paths live on ``x + t`` odd and move backward in time.  The dual left-most
path is left-most in the time-reversed (180 degree rotated) picture, which in
lab coordinates means it prefers the ``+x`` dual arrow.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ParityError, PreconditionError
from .lattice import Arrow, ArrowField

# step rules: vectorised over forward masks -------------------------------


def leftmost_step(mask):
    """``-1`` where a left arrow exists, else ``+1``."""
    return np.where(np.asarray(mask) & Arrow.LEFT, -1, 1)


def rightmost_step(mask):
    """``+1`` where a right arrow exists, else ``-1``."""
    return np.where(np.asarray(mask) & Arrow.RIGHT, 1, -1)


def dual_leftmost_step(mask):
    """Backward step of the dual left-most path at the dual site mirroring ``mask``.

    The dual ``+x`` arrow exists iff the forward site has a left arrow.
    """
    return np.where(np.asarray(mask) & Arrow.LEFT, 1, -1)


def dual_rightmost_step(mask):
    """Backward step of the dual right-most path (prefers the ``-x`` dual arrow)."""
    return np.where(np.asarray(mask) & Arrow.RIGHT, -1, 1)


# path types ----------------------------------------------------------------


class LatticePath:
    """Forward lattice path ``x_sigma, ..., x_T`` started at time ``sigma``.

    Parameters
    ----------
    start_time : int
        Starting time ``sigma``.
    positions : sequence of int
        Positions at times ``sigma, sigma + 1, ...``.
    tainted : bool
        Set when the path was cut short by the window edge.
    """

    parity = 0

    def __init__(self, start_time: int, positions: Sequence[int], tainted: bool = False):
        pos = np.asarray(positions, dtype=np.int64).ravel()
        if pos.size == 0:
            raise ValueError("a path needs at least one position")
        self.start_time = int(start_time)
        if (int(pos[0]) + self.start_time) % 2 != self.parity:
            raise ParityError("path starts on the wrong sublattice")
        if pos.size > 1 and np.any(np.abs(np.diff(pos)) != 1):
            raise ValueError("steps must be +-1")
        pos.setflags(write=False)
        self.positions = pos
        self.tainted = bool(tainted)

    def __len__(self):
        return self.positions.size

    @property
    def end_time(self) -> int:
        return self.start_time + self.positions.size - 1

    def times(self) -> np.ndarray:
        return np.arange(self.start_time, self.end_time + 1)

    def at(self, t: int) -> Optional[int]:
        """Position at integer time ``t`` or ``None`` outside the domain."""
        if self.start_time <= t <= self.end_time:
            return int(self.positions[t - self.start_time])
        return None

    def key(self) -> tuple:
        return (self.start_time, tuple(int(v) for v in self.positions))

    def truncated(self, end_time: int) -> "LatticePath":
        """Restriction to times ``<= end_time``."""
        n = end_time - self.start_time + 1
        if n < 1:
            raise ValueError("truncation before the start time")
        return type(self)(self.start_time, self.positions[:n], self.tainted)

    def __eq__(self, other):
        return type(self) is type(other) and self.key() == other.key()

    def __hash__(self):
        return hash((type(self).__name__,) + self.key())

    def __repr__(self):
        pos = ",".join(str(int(v)) for v in self.positions)
        flag = ", tainted" if self.tainted else ""
        return f"{type(self).__name__}(start={self.start_time}, [{pos}]{flag})"


class DualLatticePath(LatticePath):
    """Backward path on the odd lattice.

    ``positions[k]`` is the position at time ``start_time - k``.
    """

    parity = 1

    @property
    def end_time(self) -> int:
        return self.start_time - self.positions.size + 1

    def times(self) -> np.ndarray:
        return np.arange(self.start_time, self.end_time - 1, -1)

    def at(self, t: int) -> Optional[int]:
        if self.end_time <= t <= self.start_time:
            return int(self.positions[self.start_time - t])
        return None

    def truncated(self, end_time: int) -> "DualLatticePath":
        n = self.start_time - end_time + 1
        if n < 1:
            raise ValueError("truncation above the start time")
        return DualLatticePath(self.start_time, self.positions[:n], self.tainted)


@dataclass(frozen=True)
class CompactPoint:
    """Point of the compactified space-time plane (coordinates may be infinite)."""

    x: float
    t: float


# extraction ----------------------------------------------------------------


def _forward_trace(field: ArrowField, z, step_rule) -> LatticePath:
    x, t = int(z[0]), int(z[1])
    if not field.is_site(x, t):
        raise ParityError(f"({x}, {t}) is not a forward site of the window")
    out = [x]
    tainted = False
    mask = field.mask
    while t < field.t_hi:
        nx = x + int(step_rule(mask[t - field.t_lo, x - field.x_lo]))
        if nx < field.x_lo or nx > field.x_hi:
            tainted = True
            break
        x, t = nx, t + 1
        out.append(x)
    return LatticePath(int(z[1]), out, tainted)


def _dual_trace(field: ArrowField, z, step_rule) -> DualLatticePath:
    x, t = int(z[0]), int(z[1])
    if not field.is_dual_site(x, t):
        raise ParityError(f"({x}, {t}) is not a dual site of the window")
    out = [x]
    tainted = False
    mask = field.mask
    while t - 1 >= field.t_lo:
        nx = x + int(step_rule(mask[t - 1 - field.t_lo, x - field.x_lo]))
        if nx < field.x_lo or nx > field.x_hi:
            tainted = True
            break
        x, t = nx, t - 1
        out.append(x)
    return DualLatticePath(int(z[1]), out, tainted)


def leftmost_path(field: ArrowField, z) -> LatticePath:
    """Path from ``z`` taking the left arrow whenever one is available."""
    return _forward_trace(field, z, leftmost_step)


def rightmost_path(field: ArrowField, z) -> LatticePath:
    """Path from ``z`` taking the right arrow whenever one is available."""
    return _forward_trace(field, z, rightmost_step)


def dual_leftmost(field: ArrowField, z) -> DualLatticePath:
    """Dual left-most path from the dual site ``z`` down to the window bottom."""
    return _dual_trace(field, z, dual_leftmost_step)


def dual_rightmost(field: ArrowField, z) -> DualLatticePath:
    """Dual right-most path from the dual site ``z``."""
    return _dual_trace(field, z, dual_rightmost_step)


# membership, hopping, meeting -------------------------------------------------


def is_net_path(field: ArrowField, path: LatticePath) -> bool:
    """True iff every step of ``path`` follows an available arrow of ``field``.

    Paths leaving the window cannot be verified and are rejected.
    """
    if isinstance(path, DualLatticePath):
        return is_dual_net_path(field, path)
    x0, t0 = int(path.positions[0]), path.start_time
    if not field.is_site(x0, t0) or path.end_time > field.t_hi:
        return False
    pos = path.positions
    if pos.min() < field.x_lo or pos.max() > field.x_hi:
        return False
    if pos.size == 1:
        return True
    rows = np.arange(t0, path.end_time) - field.t_lo
    masks = field.mask[rows, pos[:-1] - field.x_lo]
    steps = np.diff(pos)
    need = np.where(steps > 0, Arrow.RIGHT, Arrow.LEFT)
    return bool(np.all(masks & need))


def is_dual_net_path(field: ArrowField, path: DualLatticePath) -> bool:
    """True iff every backward step follows an available dual arrow."""
    x0, t0 = int(path.positions[0]), path.start_time
    if not field.is_dual_site(x0, t0) or path.end_time < field.t_lo:
        return False
    pos = path.positions
    if pos.min() < field.x_lo or pos.max() > field.x_hi:
        return False
    if pos.size == 1:
        return True
    # dual site (x, s) mirrors forward (x, s - 1); the +x dual arrow needs a forward left arrow
    rows = np.arange(t0, path.end_time, -1) - 1 - field.t_lo
    masks = field.mask[rows, pos[:-1] - field.x_lo]
    steps = np.diff(pos)
    need = np.where(steps > 0, Arrow.LEFT, Arrow.RIGHT)
    return bool(np.all(masks & need))


def hop_concatenate(p1: LatticePath, p2: LatticePath, t_hop: int) -> LatticePath:
    """Follow ``p1`` up to ``t_hop`` and ``p2`` afterwards.

    Requires ``t_hop > max(sigma_1, sigma_2)`` and ``p1(t_hop) == p2(t_hop)``.
    """
    if not t_hop > max(p1.start_time, p2.start_time):
        raise PreconditionError("hopping time must exceed both start times")
    a, b = p1.at(t_hop), p2.at(t_hop)
    if a is None or b is None or a != b:
        raise PreconditionError(f"paths do not intersect at time {t_hop}")
    head = p1.positions[: t_hop - p1.start_time]
    tail = p2.positions[t_hop - p2.start_time:]
    return LatticePath(p1.start_time, np.concatenate([head, tail]), p2.tainted)


def first_meeting_time(p1: LatticePath, p2: LatticePath) -> Optional[int]:
    """First integer time after both starts at which the paths coincide.

    For two dual paths the search runs backward: the latest time below both
    start times.  Mixing a forward and a dual path raises :class:`ParityError`
    since they live on disjoint sublattices.
    """
    dual1, dual2 = isinstance(p1, DualLatticePath), isinstance(p2, DualLatticePath)
    if dual1 != dual2:
        raise ParityError("forward and dual paths live on disjoint sublattices")
    if dual1:
        hi = min(p1.start_time, p2.start_time) - 1
        lo = max(p1.end_time, p2.end_time)
        for t in range(hi, lo - 1, -1):
            if p1.at(t) == p2.at(t):
                return t
        return None
    lo = max(p1.start_time, p2.start_time) + 1
    hi = min(p1.end_time, p2.end_time)
    for t in range(lo, hi + 1):
        if p1.at(t) == p2.at(t):
            return t
    return None


# reflected right-most path -------------------------------------------------


@dataclass(frozen=True)
class ReflectedPath:
    """Result of :func:`reflected_rightmost`."""

    path: LatticePath
    reflection_times: frozenset

    def segments(self) -> list:
        """Start points of the right-most segments between reflections."""
        starts = [(self.path.at(self.path.start_time), self.path.start_time)]
        for s in sorted(self.reflection_times):
            if s + 1 <= self.path.end_time:
                starts.append((self.path.at(s + 1), s + 1))
        return starts


def reflected_rightmost(field: ArrowField, z, dual_path: DualLatticePath) -> ReflectedPath:
    """Maximal net path from ``z`` staying left of ``dual_path``.

    At each integer time where the dual path is defined (and not after its
    start time) the forward path must satisfy ``x <= dual - 1``.  The path
    takes the right arrow whenever that keeps the constraint and the left
    arrow otherwise.  Reflection times are the Both sites where the right
    arrow was refused.

    Raises
    ------
    DomainError
        If ``z`` is strictly right of the dual path, or the dual path leaves no
        admissible continuation (only possible when it is not a dual net path).
    """
    x, t = int(z[0]), int(z[1])
    if not field.is_site(x, t):
        raise ParityError(f"({x}, {t}) is not a forward site of the window")

    def bound(s):
        if s > dual_path.start_time:
            return None
        d = dual_path.at(s)
        return None if d is None else d - 1

    b0 = bound(t)
    if b0 is not None and x > b0:
        raise DomainError("start point lies strictly right of the dual path")
    out = [x]
    reflections = set()
    tainted = False
    while t < field.t_hi:
        m = int(field.mask[t - field.t_lo, x - field.x_lo])
        limit = bound(t + 1)
        if m & Arrow.RIGHT and (limit is None or x + 1 <= limit):
            nx = x + 1
        elif m & Arrow.LEFT and (limit is None or x - 1 <= limit):
            nx = x - 1
            if m & Arrow.RIGHT:
                reflections.add(t)
        else:
            raise DomainError(f"no admissible step at ({x}, {t})")
        if nx < field.x_lo or nx > field.x_hi:
            tainted = True
            break
        x, t = nx, t + 1
        out.append(x)
    return ReflectedPath(LatticePath(int(z[1]), out, tainted), frozenset(reflections))


# scaling and metrics ---------------------------------------------------------


def rescale(path: LatticePath, epsilon: float) -> list:
    """Apply ``(x, t) -> (eps x, eps^2 t)`` to every point of ``path``."""
    ts = path.times()
    return [CompactPoint(epsilon * float(x), epsilon * epsilon * float(t))
            for x, t in zip(path.positions, ts)]


@dataclass(frozen=True)
class ContinuousPath:
    """Piecewise-linear path through ``(times[i], values[i])``, constant after
    the last knot.  ``times[0]`` is the start time."""

    times: np.ndarray
    values: np.ndarray

    @property
    def start_time(self) -> float:
        return float(self.times[0])

    def __call__(self, t):
        # before the start the metric uses pi(sigma), np.interp clamps both ends
        return np.interp(t, self.times, self.values)


def as_continuous(path, epsilon: float = 1.0) -> ContinuousPath:
    """Continuous rescaled version of a forward lattice path (or pass-through)."""
    if isinstance(path, ContinuousPath):
        return path
    if isinstance(path, DualLatticePath):
        raise TypeError("the path metric is defined on forward paths")
    ts = path.times().astype(np.float64) * epsilon * epsilon
    xs = path.positions.astype(np.float64) * epsilon
    return ContinuousPath(ts, xs)


def rho(z1: CompactPoint, z2: CompactPoint) -> float:
    """Distance between points of the compactified plane.

    ``max(|tanh t1 - tanh t2|, |tanh(x1)/(1+|t1|) - tanh(x2)/(1+|t2|)|)``.
    """
    def spatial(p):
        if math.isinf(p.t):
            return 0.0
        return math.tanh(p.x) / (1.0 + abs(p.t))

    return max(abs(math.tanh(z1.t) - math.tanh(z2.t)), abs(spatial(z1) - spatial(z2)))


def _piece_sup(f, a: float, b: float, samples: int = 24) -> float:
    grid = np.linspace(a, b, samples)
    vals = f(grid)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, samples - 1)]
    if hi > lo:
        res = minimize_scalar(lambda s: -float(f(np.array([s]))[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12 * max(1.0, abs(hi))})
        best = max(best, -float(res.fun))
    return best


def path_distance(p1, p2, epsilon: float = 1.0) -> float:
    """Path-space distance between two forward paths.

    ``max(|tanh s1 - tanh s2|, sup_{t >= s1 ^ s2} |tanh p1(t v s1) -
    tanh p2(t v s2)| / (1 + |t|))`` with linear interpolation between knots
    and constant extension after the last knot.  Lattice paths are rescaled
    by ``epsilon`` first.
    """
    c1, c2 = as_continuous(p1, epsilon), as_continuous(p2, epsilon)
    s1, s2 = c1.start_time, c2.start_time
    start = min(s1, s2)
    start_term = abs(math.tanh(s1) - math.tanh(s2))

    def f(t):
        t = np.asarray(t, dtype=np.float64)
        diff = np.abs(np.tanh(c1(np.maximum(t, s1))) - np.tanh(c2(np.maximum(t, s2))))
        return diff / (1.0 + np.abs(t))

    last = max(float(c1.times[-1]), float(c2.times[-1]))
    knots = np.concatenate([c1.times, c2.times, [0.0, start, last]])
    knots = np.unique(knots[(knots >= start) & (knots <= last)])
    sup = float(np.max(f(knots)))
    for a, b in zip(knots[:-1], knots[1:]):
        sup = max(sup, _piece_sup(f, float(a), float(b)))
    # beyond the last knot the numerator is constant and 1/(1+|t|) decreases for t >= 0
    if last < 0:
        sup = max(sup, float(f(np.array([0.0]))[0]))
    return max(start_term, sup)


def hausdorff_distance(K1: Iterable, K2: Iterable, epsilon: float = 1.0) -> float:
    """Hausdorff distance between two finite path sets under :func:`path_distance`."""
    A, B = list(K1), list(K2)
    if not A and not B:
        return 0.0
    if not A or not B:
        return math.inf
    D = np.array([[path_distance(p, q, epsilon) for q in B] for p in A])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# dumps -------------------------------------------------------------------


def path_to_csv(path: LatticePath) -> str:
    rows = ["t,x"] + [f"{int(t)},{int(x)}" for t, x in zip(path.times(), path.positions)]
    return "\n".join(rows) + "\n"


def write_path_set(paths: Sequence[LatticePath], directory: str) -> str:
    """Write one CSV per path plus ``index.csv``; returns the index path."""
    os.makedirs(directory, exist_ok=True)
    index = ["file,kind,start_time,length,tainted"]
    for i, p in enumerate(paths):
        name = f"path_{i:05d}.csv"
        with open(os.path.join(directory, name), "w") as fh:
            fh.write(path_to_csv(p))
        kind = "dual" if isinstance(p, DualLatticePath) else "forward"
        index.append(f"{name},{kind},{p.start_time},{len(p)},{int(p.tainted)}")
    index_path = os.path.join(directory, "index.csv")
    with open(index_path, "w") as fh:
        fh.write("\n".join(index) + "\n")
    return index_path
