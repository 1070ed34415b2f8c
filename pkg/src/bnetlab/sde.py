"""Continuum-side simulators.

* sticky gap: the gap between a left-most and a right-most path, built as a
  time change of reflected Brownian motion with drift;
* reflection with a crossing clock: a drift +1 path pushed off a barrier by a
  Skorohod term that crosses once the term exceeds a mean-1/2 exponential;
* meeting triple: a second left-most path approaching a left-right pair.

Per-replicate kernels are compiled with numba and driven by numpy
``Generator`` objects, one per replicate, seeded by hashing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numba import njit

from .errors import PreconditionError
from .rng import replicate_generator
from .stats import EstimateReport, empty_report, mc_mean


# sticky gap -------------------------------------------------------------------


@dataclass
class StickyGapTrajectory:
    """Gap process on its time-changed grid.

    ``tau`` is the driving (diffusive) clock, ``times = tau + R/2`` the real
    clock, ``D`` the gap and ``R`` the reflection compensator (``-inf W``).
    On ``(times[k-1], times[k]]`` the gap equals ``D[k]``.
    """

    dt: float
    tau: np.ndarray
    times: np.ndarray
    D: np.ndarray
    R: np.ndarray
    W: np.ndarray

    def value_at(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="left"))
        return float(self.D[min(k, self.D.size - 1)])

    def zero_time(self, t: float) -> float:
        """Lebesgue time in ``[0, t]`` during which the gap is zero."""
        seg = np.diff(self.times)
        zero = self.D[1:] == 0
        ends = self.times[1:]
        full = ends <= t
        total = float(np.sum(seg[full & zero]))
        k = int(np.searchsorted(ends, t, side="left"))
        if k < ends.size and zero[k] and self.times[k] < t:
            total += t - self.times[k]
        return total


def simulate_sticky_gap(t_end: float, dt: float, rng: np.random.Generator,
                        drift: float = 2.0, reflect: bool = True) -> StickyGapTrajectory:
    """Simulate the sticky left-right gap up to real time ``t_end``.

    The driving walk is ``W = sqrt(2) B_tau + drift * tau`` on a grid of step
    ``dt``; reflection gives ``X = W + R`` with ``R = -min(0, inf W)`` and the
    real clock is ``tau + R / 2``.  Setting ``drift=0, reflect=False`` leaves
    ``sqrt(2) B``.

    Raises
    ------
    PreconditionError
        If ``dt`` exceeds ``t_end / 100``.
    """
    if dt <= 0 or dt > t_end / 100:
        raise PreconditionError("dt must be positive and at most t_end / 100")
    n = int(math.ceil(t_end / dt))
    inc = math.sqrt(2.0 * dt) * rng.standard_normal(n) + drift * dt
    W = np.concatenate([[0.0], np.cumsum(inc)])
    tau = dt * np.arange(n + 1)
    if reflect:
        R = -np.minimum(np.minimum.accumulate(W), 0.0)
        X = W + R
        # exact zero at new minima despite rounding in W + R
        X[R == -W] = 0.0
    else:
        R = np.zeros_like(W)
        X = W.copy()
    times = tau + 0.5 * R
    stop = int(np.searchsorted(times, t_end, side="left"))
    keep = slice(0, min(stop, n) + 1)
    return StickyGapTrajectory(dt, tau[keep], times[keep], X[keep], R[keep], W[keep])


@njit(cache=True)
def _sticky_kernel(gen, dt, probe_times, drift):
    """Zero occupation up to each probe time and the chance the gap is zero there.

    The driving walk's minimum inside each step is drawn exactly from the
    Brownian-bridge law given the endpoints, so the compensator and the real
    clock are exact on the grid.  Within a step, real time splits into ``dt``
    spent away from zero and ``dR / 2`` spent at zero; a probe falling inside
    the step is credited linearly and its zero indicator is replaced by the
    step's zero fraction.
    """
    n_probe = probe_times.size
    zero_time = np.zeros(n_probe)
    zero_at = np.zeros(n_probe)
    sd = math.sqrt(2.0 * dt)
    w = 0.0
    wmin = 0.0
    t = 0.0
    acc = 0.0
    j = 0
    while j < n_probe:
        b = w + sd * gen.standard_normal() + drift * dt
        gap = b - w
        low = 0.5 * (w + b - math.sqrt(gap * gap - 4.0 * dt * math.log(1.0 - gen.random())))
        dr = 0.0
        if low < wmin:
            dr = wmin - low
            wmin = low
        w = b
        step = dt + 0.5 * dr
        frac = 0.5 * dr / step
        t_new = t + step
        while j < n_probe and probe_times[j] <= t_new:
            zero_time[j] = acc + (probe_times[j] - t) * frac
            zero_at[j] = frac
            j += 1
        acc += 0.5 * dr
        t = t_new
    return zero_time, zero_at


def sticky_zero_statistics(probe_times: Sequence[float], dt: float, reps: int, seed: int = 0,
                           drift: float = 2.0) -> dict:
    """Per-replicate zero occupation and zero indicator at each probe time.

    Returns arrays of shape ``(reps, len(probe_times))`` under keys
    ``zero_time`` and ``zero_at`` (conditional probability of ``D = 0`` at
    the probe given the step it falls in).  The gap starts at 0, so the
    hitting time of zero is 0.
    """
    probes = np.asarray(sorted(probe_times), dtype=np.float64)
    zt = np.empty((reps, probes.size))
    za = np.empty((reps, probes.size))
    for i in range(reps):
        zt[i], za[i] = _sticky_kernel(replicate_generator(seed, i), dt, probes, drift)
    return {"probe_times": probes, "zero_time": zt, "zero_at": za}


def sticky_occupation_report(t: float, dt: float, reps: int, seed: int = 0) -> EstimateReport:
    """Mean fraction of ``[0, t]`` spent at zero after a zero start."""
    if reps <= 0:
        return empty_report("reps must be positive", 1.0)
    st = sticky_zero_statistics([t], dt, reps, seed)
    return mc_mean(st["zero_time"][:, 0] / t, 1.0)


# reflection with crossing clock --------------------------------------------------

Barrier = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


@dataclass
class ReflectCrossTrajectory:
    """Drift +1 path reflected off a barrier until an exponential clock rings.

    ``delta`` is the Skorohod term: before crossing the running maximum of
    ``W - barrier`` (floored at 0), after crossing the running maximum of
    ``barrier - W_shifted``.  ``delta_free`` is the pre-crossing formula
    continued over the whole horizon, used by the closed-form estimator.
    """

    dt: float
    times: np.ndarray
    W: np.ndarray
    barrier: np.ndarray
    delta: np.ndarray
    delta_free: np.ndarray
    r: np.ndarray
    clock: float
    crossed_at: Optional[float]
    side: int
    truncated: bool = False


def _barrier_values(barrier: Barrier, times: np.ndarray) -> tuple:
    if callable(barrier):
        return np.asarray(barrier(times), dtype=np.float64), False
    arr = np.asarray(barrier, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(times.size, float(arr)), False
    if arr.size < times.size:
        return arr, True
    return arr[: times.size], False


def reflect_cross_path(W: np.ndarray, b: np.ndarray, clock: float) -> tuple:
    """Skorohod reflection of ``W`` below ``b`` switching sides at the clock.

    Returns ``(r, delta, delta_free, crossed_index)``.  Crossing happens at
    the first index where the left-reflection term strictly exceeds
    ``clock``, so a zero clock crosses at first contact.
    """
    delta_free = np.maximum.accumulate(np.maximum(W - b, 0.0))
    over = np.flatnonzero(delta_free > clock)
    r = W - delta_free
    delta = delta_free.copy()
    if over.size == 0:
        return r, delta, delta_free, None
    k = int(over[0])
    # after crossing: restart from the barrier side, reflected to the right
    shifted = r[k] + (W[k:] - W[k])
    push = np.maximum.accumulate(np.maximum(b[k:] - shifted, 0.0))
    r = r.copy()
    r[k:] = shifted + push
    delta[k:] = push
    return r, delta, delta_free, k


def simulate_reflect_cross(barrier: Barrier, z: float, t_end: float, dt: float,
                           rng: np.random.Generator, clock: Optional[float] = None,
                           increments: Optional[np.ndarray] = None) -> ReflectCrossTrajectory:
    """Path with drift +1 started at ``z`` left of ``barrier``, crossing at a clock.

    Parameters
    ----------
    barrier : callable, array or float
        Barrier as a function of time, its values on the grid ``k * dt``, or
        a constant (``inf`` disables the constraint).
    z : float
        Start, must satisfy ``z <= barrier(0)``.
    clock : float, optional
        Crossing threshold; drawn as an exponential of mean 1/2 if omitted.
    increments : array, optional
        Brownian increments to use instead of fresh draws.

    Notes
    -----
    An array barrier shorter than the horizon truncates the run and sets
    ``truncated``.
    """
    n = int(round(t_end / dt))
    times = dt * np.arange(n + 1)
    b, truncated = _barrier_values(barrier, times)
    if truncated:
        times = times[: b.size]
        n = b.size - 1
    if z > b[0]:
        raise PreconditionError("start point lies right of the barrier")
    if clock is None:
        clock = rng.exponential(0.5)
    if increments is None:
        increments = math.sqrt(dt) * rng.standard_normal(n)
    W = z + np.concatenate([[0.0], np.cumsum(increments[:n])]) + times
    with np.errstate(invalid="ignore"):
        r, delta, delta_free, k = reflect_cross_path(W, b, clock)
    if np.all(np.isinf(b)):
        delta = np.zeros_like(W)
        delta_free = delta
        r = W.copy()
        k = None
    crossed = None if k is None else float(times[k])
    return ReflectCrossTrajectory(dt, times, W, b, delta, delta_free, r, float(clock), crossed, -1,
                                  truncated)


@dataclass
class CrossingEstimates:
    """Paired estimators of the crossing probability on shared samples."""

    indicator: EstimateReport
    closed_form: EstimateReport
    difference: EstimateReport

    def consistent(self, z_score: float = 3.0) -> bool:
        d = self.difference
        return abs(d.estimate) <= z_score * d.stderr + 1e-15


def paired_estimates(indicator: np.ndarray, closed: np.ndarray) -> CrossingEstimates:
    return CrossingEstimates(mc_mean(indicator), mc_mean(closed), mc_mean(indicator - closed))


def reflect_cross_estimate(barrier: Barrier, z: float, t_end: float, dt: float, reps: int,
                           seed: int = 0) -> CrossingEstimates:
    """``P[crossed by t_end]`` by the indicator and by ``E[1 - exp(-2 Delta)]``."""
    ind = np.empty(reps)
    closed = np.empty(reps)
    for i in range(reps):
        rng = replicate_generator(seed, i)
        traj = simulate_reflect_cross(barrier, z, t_end, dt, rng)
        ind[i] = traj.crossed_at is not None
        closed[i] = 1.0 - math.exp(-2.0 * traj.delta_free[-1])
    return paired_estimates(ind, closed)


# meeting triple -----------------------------------------------------------------


@dataclass
class TripleState:
    """Outcome of one meeting-triple run.

    ``X`` is the distance from the left-most path ``L`` to the newcomer
    ``L'``, ``Y = R - L``.  ``tau`` is the first time ``X <= Y`` on the grid;
    ``absorbed`` records ``Y_tau = 0``, meaning the detecting step visited
    zero or ``Y < sqrt(dt)`` there; ``censored`` is set when the horizon was
    reached first.
    """

    X: float
    Y: float
    tau: float
    absorbed: bool
    censored: bool


@njit(cache=True)
def _triple_kernel(gen, x0, dt, horizon, tol):
    # returns x, y, t, absorbed, censored
    sd = math.sqrt(2.0 * dt)
    side = math.sqrt(1.5 * dt)
    w = 0.0
    wmin = 0.0
    x = x0
    y = 0.0
    t = 0.0
    while t < horizon:
        xi = sd * gen.standard_normal()
        x += 0.5 * xi + side * gen.standard_normal()
        b = w + xi + 2.0 * dt
        low = 0.5 * (w + b - math.sqrt(xi * xi - 4.0 * dt * math.log(1.0 - gen.random())))
        w = b
        t += dt
        touched = False
        if low < wmin:
            # sticky part: real time advances by half the local-time increment
            dr = wmin - low
            wmin = low
            x += math.sqrt(dr) * gen.standard_normal()
            t += 0.5 * dr
            touched = True
        y = w - wmin
        if x <= y:
            return x, y, t, touched or y < tol, False
    return x, y, t, False, True


def simulate_meeting_triple(epsilon_start: float, dt: float, rng: np.random.Generator,
                            horizon: float = 10.0) -> TripleState:
    """Run the triple from ``(X, Y) = (epsilon_start, 0)`` until ``X <= Y``.

    While ``Y > 0`` the increments have ``Var dX = Var dY = 2 dt`` and
    covariance ``dt``.  At ``Y = 0`` the time change of the sticky gap is
    used for ``Y`` and ``X`` receives an independent Gaussian increment of
    variance equal to twice the elapsed real time.
    """
    if epsilon_start <= 0:
        raise PreconditionError("start distance must be positive")
    x, y, t, absorbed, censored = _triple_kernel(rng, float(epsilon_start), float(dt),
                                                 float(horizon), math.sqrt(dt))
    return TripleState(float(x), float(y), float(t), bool(absorbed), bool(censored))


def meeting_absorption_estimate(epsilon_start: float, dt: float, reps: int, seed: int = 0,
                                horizon: float = 10.0) -> EstimateReport:
    """``P[Y_tau = 0]`` from ``reps`` runs; censored runs count as not absorbed
    and mark the report tainted."""
    if reps <= 0:
        return empty_report("reps must be positive", 1.0)
    hits = np.empty(reps)
    censored = 0
    for i in range(reps):
        s = simulate_meeting_triple(epsilon_start, dt, replicate_generator(seed, i), horizon)
        hits[i] = s.absorbed
        censored += s.censored
    rep = mc_mean(hits, 1.0)
    return EstimateReport(rep.estimate, rep.stderr, rep.n, rep.reference, rep.ratio, censored > 0)


@njit(cache=True)
def _lyapunov_kernel(gen, x0, dt, probe_times):
    """Value of ``y/x + 8 sqrt(x)`` at probe times for the triple stopped on
    leaving ``{0 <= y < x/2, 0 < x < 1}``."""
    n_probe = probe_times.size
    out = np.empty(n_probe)
    sd = math.sqrt(2.0 * dt)
    side = math.sqrt(1.5 * dt)
    w = 0.0
    wmin = 0.0
    x = x0
    y = 0.0
    t = 0.0
    value = 8.0 * math.sqrt(x0)
    j = 0
    while j < n_probe and probe_times[j] <= 0.0:
        out[j] = value
        j += 1
    stopped = False
    while j < n_probe:
        if not stopped:
            xi = sd * gen.standard_normal()
            x += 0.5 * xi + side * gen.standard_normal()
            w += xi + 2.0 * dt
            t += dt
            if w < wmin:
                dr = wmin - w
                wmin = w
                x += math.sqrt(dr) * gen.standard_normal()
                t += 0.5 * dr
                y = 0.0
            else:
                y = w - wmin
            if x <= 0.0:
                # only reachable with y = 0 on this grid: the function vanishes there
                value = y / x + 8.0 * math.sqrt(x) if y > 0.0 and x > 0.0 else 0.0
                stopped = True
            else:
                value = y / x + 8.0 * math.sqrt(x)
                if not (y < 0.5 * x and x < 1.0):
                    stopped = True
        else:
            t = probe_times[n_probe - 1]
        while j < n_probe and probe_times[j] <= t:
            out[j] = value
            j += 1
    return out


def lyapunov_profile(epsilon_start: float, dt: float, probe_times: Sequence[float], reps: int,
                     seed: int = 0) -> np.ndarray:
    """Stopped values of ``y/x + 8 sqrt(x)`` at ``probe_times`` for each replicate."""
    probes = np.asarray(sorted(probe_times), dtype=np.float64)
    out = np.empty((reps, probes.size))
    for i in range(reps):
        out[i] = _lyapunov_kernel(replicate_generator(seed, i), float(epsilon_start), float(dt),
                                  probes)
    return out
