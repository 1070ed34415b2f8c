"""Excursions of reflected Brownian motion.

Two questions are answered by simulation:

* the intensity of excursion durations per unit compensator, whose tail is
  ``nu([h, inf)) = sqrt(2 / (pi h))``;
* the thinning probability ``rho(h)`` that a drift path reflected off the
  boundary built from an excursion of duration ``h`` crosses it before the
  excursion ends, reported as ``rho(h) / sqrt(h)``.

Long walks use an adaptive kernel: coarse Gaussian steps are refined into an
exact discrete Brownian bridge on the fine grid only when the coarse step
could plausibly reach a new minimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .rng import replicate_generator
from .sde import paired_estimates, simulate_reflect_cross, CrossingEstimates
from .stats import EstimateReport, empty_report, excursion_tail, mc_mean, ratio_estimate

# refine a coarse step when the chance its bridge dips below the running
# minimum exceeds exp(-BRIDGE_SKIP_EXPONENT), about 1e-12
BRIDGE_SKIP_EXPONENT = 27.631


@dataclass
class ReflectedWalk:
    """Brownian samples ``B`` with compensator ``-inf B`` and ``X = B + compensator``."""

    dt: float
    B: np.ndarray
    compensator: np.ndarray
    X: np.ndarray

    @classmethod
    def from_samples(cls, B, dt: float) -> "ReflectedWalk":
        B = np.asarray(B, dtype=np.float64)
        comp = -np.minimum(np.minimum.accumulate(B), 0.0)
        X = B + comp
        X[comp == -B] = 0.0
        return cls(float(dt), B, comp, X)

    @property
    def horizon(self) -> float:
        return self.dt * (self.B.size - 1)

    def rescaled(self, c: float) -> "ReflectedWalk":
        """Image under ``(x, t) -> (c x, c^2 t)``."""
        return ReflectedWalk.from_samples(c * self.B, c * c * self.dt)


def simulate_reflected_walk(t_end: float, dt: float, rng: np.random.Generator) -> ReflectedWalk:
    """Standard Brownian motion from 0 on a grid of step ``dt``, reflected at 0."""
    n = int(round(t_end / dt))
    B = np.concatenate([[0.0], np.cumsum(math.sqrt(dt) * rng.standard_normal(n))])
    return ReflectedWalk.from_samples(B, dt)


@dataclass(frozen=True)
class ExcursionRecord:
    """One excursion away from zero.

    ``start`` is the last contact time before it, ``duration`` runs to the
    next contact (or to the horizon when ``open``), ``level`` is the
    compensator at the start.
    """

    start: float
    duration: float
    level: float
    open: bool = False


def decompose_excursions(walk: ReflectedWalk, tol: float = 0.0) -> list:
    """Maximal grid intervals where ``X > tol``, bracketed by contacts.

    An excursion covering positive samples ``i .. j`` starts at ``(i-1) dt``
    and lasts ``(j - i + 2) dt``.  Grid intervals between two consecutive
    contacts are contact time, so excursion time plus contact time equals
    the horizon.
    """
    pos = walk.X > tol
    n = pos.size
    if n == 0:
        return []
    d = np.diff(np.concatenate([[False], pos, [False]]).astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    out = []
    for i, j in zip(starts, ends):
        begin = max(i - 1, 0)
        is_open = j == n - 1
        stop = n - 1 if is_open else j + 1
        out.append(ExcursionRecord(begin * walk.dt, (stop - begin) * walk.dt,
                                   float(walk.compensator[begin]), bool(is_open)))
    return out


def tail_intensity_estimate(records: Sequence[ExcursionRecord], local_time_total: float,
                            h: float) -> EstimateReport:
    """Excursions of duration at least ``h`` per unit compensator.

    Open excursions count once they already exceed ``h``.  The standard
    error treats the count as Poisson.
    """
    ref = excursion_tail(h)
    if local_time_total <= 0:
        return empty_report("no compensator accumulated", ref)
    count = sum(1 for r in records if r.duration >= h)
    return EstimateReport(count / local_time_total, math.sqrt(count) / local_time_total,
                          count).with_reference(ref)


# long-walk kernels -----------------------------------------------------------------


@njit(cache=True)
def _record(starts, durs, n_rec, s, d):
    if n_rec == starts.size:
        grow = starts.size * 2
        ns = np.empty(grow, dtype=np.int64)
        nd = np.empty(grow, dtype=np.int64)
        ns[:n_rec] = starts[:n_rec]
        nd[:n_rec] = durs[:n_rec]
        starts, durs = ns, nd
    starts[n_rec] = s
    durs[n_rec] = d
    return starts, durs, n_rec + 1


@njit(cache=True)
def _adaptive_kernel(gen, dt, K, n_coarse, cut_coarse, skip_exponent):
    """Contacts of a fine-grid walk simulated through coarse steps of ``K`` fine steps.

    Returns start and duration (in fine steps) of every excursion, the
    compensator when ``cut_coarse`` coarse steps have elapsed, the final
    compensator and the number of refined coarse steps.
    """
    sd_c = math.sqrt(K * dt)
    sd_f = math.sqrt(dt)
    coarse_var = K * dt
    w = 0.0
    m = 0.0
    last = np.int64(0)
    starts = np.empty(1024, dtype=np.int64)
    durs = np.empty(1024, dtype=np.int64)
    n_rec = 0
    comp_cut = 0.0
    refined = 0
    path = np.empty(K + 1)
    for c in range(n_coarse):
        if c == cut_coarse:
            comp_cut = -m
        b = w + sd_c * gen.standard_normal()
        if b <= m or 2.0 * (w - m) * (b - m) < skip_exponent * coarse_var:
            refined += 1
            path[0] = 0.0
            for j in range(1, K + 1):
                path[j] = path[j - 1] + sd_f * gen.standard_normal()
            shift = path[K] - (b - w)
            base = np.int64(c) * K
            for j in range(1, K + 1):
                v = w + path[j] - (j / K) * shift
                if v <= m:
                    m = v
                    idx = base + j
                    if idx - last >= 2:
                        starts, durs, n_rec = _record(starts, durs, n_rec, last, idx - last)
                    last = idx
        w = b
    if cut_coarse >= n_coarse:
        comp_cut = -m
    end = np.int64(n_coarse) * K
    open_dur = end - last
    return starts[:n_rec], durs[:n_rec], last, open_dur, comp_cut, -m, refined


@njit(cache=True)
def _direct_kernel(gen, dt, n_fine, cut_fine):
    """Fine-grid reference for :func:`_adaptive_kernel` (every step simulated)."""
    sd = math.sqrt(dt)
    w = 0.0
    m = 0.0
    last = np.int64(0)
    starts = np.empty(1024, dtype=np.int64)
    durs = np.empty(1024, dtype=np.int64)
    n_rec = 0
    comp_cut = 0.0
    for i in range(1, n_fine + 1):
        w += sd * gen.standard_normal()
        if w <= m:
            m = w
            if i - last >= 2:
                starts, durs, n_rec = _record(starts, durs, n_rec, last, i - last)
            last = i
        if i == cut_fine:
            comp_cut = -m
    return starts[:n_rec], durs[:n_rec], last, np.int64(n_fine) - last, comp_cut, -m, 0


@dataclass
class WalkSummary:
    """Excursion durations of one long walk, with compensator at the cut time."""

    dt: float
    cut_time: float
    end_time: float
    starts: np.ndarray
    durations: np.ndarray
    open_start: float
    open_duration: float
    compensator_cut: float
    compensator_end: float
    refined_steps: int = 0

    def count_at_least(self, h: float) -> int:
        """Excursions starting before the cut whose duration is at least ``h``."""
        early = self.starts < self.cut_time
        n = int(np.count_nonzero(early & (self.durations >= h - 0.5 * self.dt)))
        if self.open_start < self.cut_time and self.open_duration >= h - 0.5 * self.dt:
            n += 1
        return n


def simulate_long_walk(cut_time: float, extra_time: float, dt: float, rng: np.random.Generator,
                       coarse_factor: int = 1000, adaptive: bool = True) -> WalkSummary:
    """Excursion durations of a fine-grid reflected walk run to ``cut_time + extra_time``.

    Excursions are counted when they start before ``cut_time``; the extra
    time lets those straddling the cut resolve up to durations
    ``extra_time``.  With ``adaptive`` the exact bridge kernel is used,
    otherwise every fine step is simulated.
    """
    K = int(coarse_factor)
    if adaptive:
        coarse = K * dt
        n_coarse = int(math.ceil((cut_time + extra_time) / coarse))
        cut_c = int(round(cut_time / coarse))
        s, d, last, od, cc, ce, refined = _adaptive_kernel(rng, dt, K, n_coarse, cut_c,
                                                           BRIDGE_SKIP_EXPONENT)
        end = n_coarse * coarse
        cut = cut_c * coarse
    else:
        n_fine = int(math.ceil((cut_time + extra_time) / dt))
        cut_f = int(round(cut_time / dt))
        s, d, last, od, cc, ce, refined = _direct_kernel(rng, dt, n_fine, cut_f)
        end = n_fine * dt
        cut = cut_f * dt
    return WalkSummary(dt, cut, end, s * dt, d * dt, last * dt, od * dt, float(cc), float(ce),
                       int(refined))


def excursion_intensity_run(hs: Sequence[float], walks: int, cut_time: float, dt: float,
                            seed: int = 0, coarse_factor: int = 1000,
                            adaptive: bool = True) -> dict:
    """Tail intensity at each ``h`` pooled over independent walks.

    Returns ``{h: EstimateReport}``; each estimate is the ratio of summed
    counts to summed compensators at the cut time.
    """
    hs = sorted(float(h) for h in hs)
    extra = max(hs)
    counts = np.zeros((walks, len(hs)))
    comps = np.zeros(walks)
    for i in range(walks):
        w = simulate_long_walk(cut_time, extra, dt, replicate_generator(seed, i), coarse_factor,
                               adaptive)
        comps[i] = w.compensator_cut
        counts[i] = [w.count_at_least(h) for h in hs]
    return {h: ratio_estimate(counts[:, k], comps, excursion_tail(h)) for k, h in enumerate(hs)}


def duration_histogram(summaries: Sequence[WalkSummary], edges: Sequence[float]) -> list:
    """Rows ``(h_lo, h_hi, count, local_time, estimate, reference)`` per bucket.

    ``estimate`` is the count per unit compensator and ``reference`` the
    intensity ``nu([h_lo, h_hi))``.
    """
    edges = list(edges)
    local = float(sum(s.compensator_cut for s in summaries))
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        c = sum(s.count_at_least(lo) - s.count_at_least(hi) for s in summaries)
        ref = excursion_tail(lo) - excursion_tail(hi)
        rows.append((lo, hi, c, local, c / local if local > 0 else math.nan, ref))
    return rows


# crossing thinning --------------------------------------------------------------------


@njit(cache=True)
def _excursion_shape(gen, dt, lo_steps, hi_steps, max_attempts):
    """First excursion of a fine walk from a contact with length in ``[lo, hi)`` steps.

    Attempts longer than ``hi_steps`` are abandoned and restarted from a
    fresh contact, which leaves the law of later excursions unchanged.
    Returns the values (zero at both ends) and the number of attempts.
    """
    sd = math.sqrt(dt)
    buf = np.empty(hi_steps + 1)
    for attempt in range(1, max_attempts + 1):
        buf[0] = 0.0
        w = 0.0
        n = 0
        while True:
            w += sd * gen.standard_normal()
            n += 1
            if w <= 0.0:
                break
            if n >= hi_steps:
                break
            buf[n] = w
        if w <= 0.0 and n >= lo_steps:
            buf[n] = 0.0
            return buf[: n + 1].copy(), attempt
    return np.empty(0), max_attempts


def sample_excursion_shape(h: float, rng: np.random.Generator, grid: int = 1024,
                           max_attempts: int = 10_000_000) -> np.ndarray:
    """An excursion of duration in ``[h/2, 2h)`` rescaled to last exactly ``h``.

    The walk runs on step ``h / grid``; the accepted shape is mapped by
    Brownian scaling to duration ``h`` and returned on its own grid of
    ``len(shape) - 1`` equal steps.
    """
    dt = h / grid
    vals, _ = _excursion_shape(rng, dt, grid // 2, 2 * grid, max_attempts)
    if vals.size == 0:
        raise RuntimeError("no excursion in the duration bucket")
    duration = (vals.size - 1) * dt
    return vals * math.sqrt(h / duration)


@dataclass
class ThinningReport:
    """``rho(h)`` by both estimators and the scaled value ``rho(h) / sqrt(h)``."""

    h: float
    crossing: CrossingEstimates
    scaled: EstimateReport
    samples: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"h": self.h, "indicator": self.crossing.indicator.to_dict(),
                "closed_form": self.crossing.closed_form.to_dict(),
                "difference": self.crossing.difference.to_dict(),
                "scaled": self.scaled.to_dict(), "samples": self.samples}


def crossing_thinning_estimate(h: float, reps: int, seed: int = 0, grid: int = 1024,
                               clock: Optional[float] = None) -> ThinningReport:
    """Probability that the drift path crosses the excursion boundary before ``h``.

    For each replicate an excursion shape ``F_h`` is drawn from the bucket
    around ``h``, a barrier ``L(t) = B_t - t - F_h(t) / sqrt(2)`` is built
    from a fresh Brownian motion ``B``, and a path ``B'_t + t`` from 0 is
    reflected off ``L`` until its Skorohod term exceeds the mean-1/2 clock
    (or ``clock`` when given).  The indicator of crossing by ``h`` and
    ``1 - exp(-2 Delta_h)`` are computed on the same samples.
    """
    if reps <= 0:
        rep = empty_report("reps must be positive")
        return ThinningReport(h, CrossingEstimates(rep, rep, rep), rep)
    ind = np.empty(reps)
    closed = np.empty(reps)
    for i in range(reps):
        rng = replicate_generator(seed, i)
        shape = sample_excursion_shape(h, rng, grid)
        n = shape.size - 1
        step = h / n
        times = step * np.arange(n + 1)
        B = np.concatenate([[0.0], np.cumsum(math.sqrt(step) * rng.standard_normal(n))])
        barrier = B - times - shape / math.sqrt(2.0)
        traj = simulate_reflect_cross(barrier, 0.0, h, step, rng, clock=clock)
        ind[i] = traj.crossed_at is not None
        closed[i] = 1.0 - math.exp(-2.0 * traj.delta_free[-1])
    crossing = paired_estimates(ind, closed)
    root = math.sqrt(h)
    base = crossing.closed_form
    scaled = EstimateReport(base.estimate / root, base.stderr / root, base.n)
    return ThinningReport(h, crossing, scaled, reps)
